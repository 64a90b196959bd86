#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hdspec/linalg.hpp"
#include "hdspec/measures.hpp"
#include "hdspec/rng.hpp"

// Vector moving-average models: X_t = sum_k Psi_k eta_{t-k} with i.i.d.
// unit-variance innovations, plus transfer function / spectral density and
// the truncated and circular simulation variants used by the coupling
// experiments.

namespace hdspec::process {

enum class InnovationLaw { gaussian, rademacher, centered_uniform };

inline std::string to_string(InnovationLaw law) {
  switch (law) {
    case InnovationLaw::gaussian: return "gaussian";
    case InnovationLaw::rademacher: return "rademacher";
    case InnovationLaw::centered_uniform: return "centered_uniform";
  }
  throw std::invalid_argument("unknown innovation law");
}

inline InnovationLaw innovation_law_from_string(const std::string& s) {
  if (s == "gaussian") return InnovationLaw::gaussian;
  if (s == "rademacher") return InnovationLaw::rademacher;
  if (s == "centered_uniform") return InnovationLaw::centered_uniform;
  throw std::invalid_argument("unknown innovation law: " + s);
}

struct LinearProcessModel {
  int d = 0;
  std::vector<Eigen::MatrixXd> coeffs;  // Psi_0 .. Psi_Q
  InnovationLaw law = InnovationLaw::gaussian;
  // Present when the model was produced by make_rotating_ma.
  double decay = 0.0;
  std::uint64_t model_seed = 0;

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
};

inline void validate(const LinearProcessModel& model) {
  if (model.d < 1) throw std::invalid_argument("model: d must be >= 1");
  if (model.coeffs.empty()) throw std::invalid_argument("model: no coefficients");
  for (const auto& psi : model.coeffs) {
    if (psi.rows() != model.d || psi.cols() != model.d)
      throw std::invalid_argument("model: coefficient dimension mismatch");
    if (!psi.allFinite())
      throw std::invalid_argument("model: non-finite coefficient");
  }
}

struct ModelAssumptions {
  double alpha = 0.6;
  double gamma = 2.0;
  double K1 = 2.0;
  double K2 = 2.0;
  double c = 0.25;
};

struct SimulationOutput {
  Eigen::MatrixXd data;         // d x n, columns X_0 .. X_{n-1}
  Eigen::MatrixXd innovations;  // d x (n+Q), columns eta_{-Q} .. eta_{n-1}
  std::uint64_t seed = 0;
};

inline double innovation_value(std::uint64_t seed, std::int64_t t, std::int64_t i,
                               InnovationLaw law) {
  const std::uint64_t key =
      rng::key4(seed, rng::kInnovations, static_cast<std::uint64_t>(t),
                static_cast<std::uint64_t>(i));
  switch (law) {
    case InnovationLaw::gaussian: return rng::gaussian_from_key(key);
    case InnovationLaw::rademacher: return rng::rademacher_from_key(key);
    case InnovationLaw::centered_uniform:
      return rng::centered_uniform_from_key(key);
  }
  throw std::invalid_argument("unknown innovation law");
}

inline Eigen::MatrixXd innovation_block(const LinearProcessModel& model, long n,
                                        std::uint64_t seed) {
  const int q = model.order();
  Eigen::MatrixXd eta(model.d, n + q);
  for (long col = 0; col < n + q; ++col) {
    const std::int64_t t = col - q;
    for (int i = 0; i < model.d; ++i)
      eta(i, col) = innovation_value(seed, t, i, model.law);
  }
  return eta;
}

inline Eigen::MatrixXcd transfer_function(const LinearProcessModel& model,
                                          double theta) {
  validate(model);
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(model.d, model.d);
  for (std::size_t k = 0; k < model.coeffs.size(); ++k) {
    const std::complex<double> phase =
        std::exp(std::complex<double>(0.0, -static_cast<double>(k) * theta));
    g += phase * model.coeffs[k];
  }
  return g;
}

inline Eigen::MatrixXcd spectral_density(const LinearProcessModel& model,
                                         double theta) {
  const Eigen::MatrixXcd g = transfer_function(model, theta);
  return g * g.adjoint();
}

inline measures::DiscreteMeasure population_esd(const LinearProcessModel& model,
                                                double theta) {
  return measures::esd(spectral_density(model, theta));
}

namespace detail {

// Shared accumulation kernel. `source_col(t, k)` names the innovation column
// feeding lag k of X_t; materializing the shifted block keeps the GEMM shapes
// identical across the plain and circular variants, so the overlapping
// columns agree bit for bit.
template <typename SourceMap>
Eigen::MatrixXd accumulate_ma(const LinearProcessModel& model,
                              const Eigen::MatrixXd& eta, long n, int k_max,
                              SourceMap source_col) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(model.d, n);
  Eigen::MatrixXd shifted(model.d, n);
  for (int k = 0; k <= k_max; ++k) {
    for (long t = 0; t < n; ++t) shifted.col(t) = eta.col(source_col(t, k));
    x.noalias() += model.coeffs[static_cast<std::size_t>(k)] * shifted;
  }
  return x;
}

}  // namespace detail

inline SimulationOutput simulate(const LinearProcessModel& model, long n,
                                 std::uint64_t seed) {
  validate(model);
  if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
  const int q = model.order();
  SimulationOutput out;
  out.seed = seed;
  out.innovations = innovation_block(model, n, seed);
  out.data = detail::accumulate_ma(
      model, out.innovations, n, q,
      [q](long t, int k) { return t - k + q; });
  return out;
}

inline SimulationOutput simulate_truncated(const LinearProcessModel& model, int K,
                                           long n, std::uint64_t seed) {
  validate(model);
  if (n < 1) throw std::invalid_argument("simulate_truncated: n must be >= 1");
  const int q = model.order();
  if (K < 0 || K > q)
    throw std::invalid_argument("simulate_truncated: K out of range");
  SimulationOutput out;
  out.seed = seed;
  out.innovations = innovation_block(model, n, seed);
  out.data = detail::accumulate_ma(
      model, out.innovations, n, K,
      [q](long t, int k) { return t - k + q; });
  return out;
}

inline SimulationOutput simulate_circular(const LinearProcessModel& model, long n,
                                          std::uint64_t seed) {
  validate(model);
  const int q = model.order();
  if (n <= q)
    throw std::invalid_argument("simulate_circular: requires n > model order");
  SimulationOutput out;
  out.seed = seed;
  out.innovations = innovation_block(model, n, seed);
  out.data = detail::accumulate_ma(
      model, out.innovations, n, q,
      [q, n](long t, int k) { return ((t - k) % n + n) % n + q; });
  return out;
}

struct AssumptionReport {
  double weighted_coeff_sum = 0.0;       // ||Psi_0|| + sum_k k ||Psi_k||
  std::vector<double> coeff_norms;       // ||Psi_k||, k = 0..Q
  std::vector<double> tail_sums;         // sum_{k>=K} ||Psi_k||, K = 1..Q
  std::vector<double> tail_bounds;       // K2 * K^{-gamma}
  bool weighted_sum_ok = false;
  std::vector<bool> tail_ok;
};

inline AssumptionReport check_assumptions(const LinearProcessModel& model,
                                          const ModelAssumptions& assumptions) {
  validate(model);
  AssumptionReport report;
  const int q = model.order();
  report.coeff_norms.resize(static_cast<std::size_t>(q) + 1);
  for (int k = 0; k <= q; ++k)
    report.coeff_norms[static_cast<std::size_t>(k)] =
        linalg::op_norm(model.coeffs[static_cast<std::size_t>(k)]);
  report.weighted_coeff_sum = report.coeff_norms[0];
  for (int k = 1; k <= q; ++k)
    report.weighted_coeff_sum += k * report.coeff_norms[static_cast<std::size_t>(k)];
  report.weighted_sum_ok = report.weighted_coeff_sum <= assumptions.K2;
  for (int K = 1; K <= q; ++K) {
    double tail = 0.0;
    for (int k = K; k <= q; ++k) tail += report.coeff_norms[static_cast<std::size_t>(k)];
    report.tail_sums.push_back(tail);
    const double bound = assumptions.K2 * std::pow(K, -assumptions.gamma);
    report.tail_bounds.push_back(bound);
    report.tail_ok.push_back(tail <= bound);
  }
  return report;
}

// A family of coefficients with no common eigenbasis: Psi_k = decay^k R_k D_k
// with independent random orthogonal R_k and diagonal D_k.
inline LinearProcessModel make_rotating_ma(int d, int q, double decay,
                                           std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("make_rotating_ma: d must be >= 2");
  if (q < 1) throw std::invalid_argument("make_rotating_ma: Q must be >= 1");
  if (!(decay > 0.0 && decay < 1.0))
    throw std::invalid_argument("make_rotating_ma: decay must be in (0,1)");
  LinearProcessModel model;
  model.d = d;
  model.decay = decay;
  model.model_seed = seed;
  model.coeffs.reserve(static_cast<std::size_t>(q) + 1);
  for (int k = 0; k <= q; ++k) {
    rng::Stream64 stream(seed, rng::kModel, static_cast<std::uint64_t>(k));
    Eigen::MatrixXd gauss(d, d);
    for (int col = 0; col < d; ++col)
      for (int row = 0; row < d; ++row) gauss(row, col) = stream.next_gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd rot = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int col = 0; col < d; ++col)
      if (r(col, col) < 0.0) rot.col(col) = -rot.col(col);
    Eigen::VectorXd diag(d);
    for (int i = 0; i < d; ++i) diag(i) = 0.5 + stream.next_u01();
    model.coeffs.push_back(std::pow(decay, k) * rot * diag.asDiagonal());
  }
  validate(model);
  return model;
}

inline nlohmann::json to_json(const LinearProcessModel& model) {
  validate(model);
  nlohmann::json j;
  j["d"] = model.d;
  j["Q"] = model.order();
  j["innovation_law"] = to_string(model.law);
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& psi : model.coeffs) {
    nlohmann::json flat = nlohmann::json::array();
    for (int row = 0; row < psi.rows(); ++row)
      for (int col = 0; col < psi.cols(); ++col) flat.push_back(psi(row, col));
    coeffs.push_back(std::move(flat));
  }
  j["coeffs"] = std::move(coeffs);
  if (model.decay != 0.0) {
    j["decay"] = model.decay;
    j["seed"] = model.model_seed;
  }
  return j;
}

inline LinearProcessModel model_from_json(const nlohmann::json& j) {
  LinearProcessModel model;
  model.d = j.at("d").get<int>();
  const int q = j.at("Q").get<int>();
  model.law = innovation_law_from_string(
      j.value("innovation_law", std::string("gaussian")));
  const auto& coeffs = j.at("coeffs");
  if (static_cast<int>(coeffs.size()) != q + 1)
    throw std::invalid_argument("model json: expected Q+1 coefficient blocks");
  for (const auto& flat : coeffs) {
    if (static_cast<int>(flat.size()) != model.d * model.d)
      throw std::invalid_argument("model json: coefficient size mismatch");
    Eigen::MatrixXd psi(model.d, model.d);
    std::size_t idx = 0;
    for (int row = 0; row < model.d; ++row)
      for (int col = 0; col < model.d; ++col)
        psi(row, col) = flat[idx++].get<double>();
    model.coeffs.push_back(std::move(psi));
  }
  model.decay = j.value("decay", 0.0);
  model.model_seed = j.value("seed", std::uint64_t{0});
  validate(model);
  return model;
}

}  // namespace hdspec::process
