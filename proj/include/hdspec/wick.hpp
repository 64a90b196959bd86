#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hdspec/linalg.hpp"
#include "hdspec/rng.hpp"

// Exact Gaussian Gram-trace moments E[tr((YY^T)^L)] via Wick pairings and
// the ribbon-graph cycle decomposition, together with the closed-form
// kappa^L (2L-1)!! (d+M)^{L+1} bound they obey.
//
// Edge convention for the 2L Gram factors: e_q = (j_q, s_q) for q <= L and
// e_{L+q} = (j_{(q mod L)+1}, s_q).  The row pairing tau_r joins edges with
// equal j-index, the column pairing tau_c edges with equal s-index.

namespace hdspec::wick {

struct Pairing {
  std::vector<std::pair<int, int>> pairs;  // 1-based, first < second
};

inline std::uint64_t double_factorial(int n) {
  if (n < 1 || n % 2 == 0)
    throw std::invalid_argument("double_factorial: n must be odd and >= 1");
  if (n > 33) throw std::invalid_argument("double_factorial: n too large");
  std::uint64_t out = 1;
  for (int k = n; k >= 1; k -= 2) out *= static_cast<std::uint64_t>(k);
  return out;
}

namespace detail {

inline void enumerate_rec(std::vector<int>& free, Pairing& current,
                          std::vector<Pairing>& out) {
  if (free.empty()) {
    out.push_back(current);
    return;
  }
  const int a = free.front();
  for (std::size_t i = 1; i < free.size(); ++i) {
    const int b = free[i];
    std::vector<int> rest;
    rest.reserve(free.size() - 2);
    for (std::size_t j = 1; j < free.size(); ++j)
      if (j != i) rest.push_back(free[j]);
    current.pairs.emplace_back(a, b);
    enumerate_rec(rest, current, out);
    current.pairs.pop_back();
  }
}

}  // namespace detail

inline std::vector<Pairing> enumerate_pairings(int two_l) {
  if (two_l < 2 || two_l % 2 != 0)
    throw std::invalid_argument("enumerate_pairings: need a positive even size");
  if (two_l > 12)
    throw std::invalid_argument("enumerate_pairings: size above enumeration guard");
  std::vector<int> free(static_cast<std::size_t>(two_l));
  for (int i = 0; i < two_l; ++i) free[static_cast<std::size_t>(i)] = i + 1;
  std::vector<Pairing> out;
  out.reserve(double_factorial(two_l - 1));
  Pairing current;
  detail::enumerate_rec(free, current, out);
  return out;
}

// tau_r partner of edge q (1-based, L pairs of Gram factors).
inline int row_partner(int q, int L) {
  if (q <= L) return q == 1 ? 2 * L : L + q - 1;
  const int x = q - L;
  return x == L ? 1 : x + 1;
}

// tau_c partner of edge q.
inline int col_partner(int q, int L) { return q <= L ? q + L : q - L; }

// s-slot (1-based index into s_1..s_L) carried by edge q.
inline int s_slot(int q, int L) { return (q - 1) % L + 1; }

struct CycleDecomposition {
  // Each cycle is stored as its alternating walk q_0, q_1, ..., q_{k-1}
  // with {q_i, q_{i+1}} in pi for even i and tau-links in between.
  std::vector<std::vector<int>> row_cycles;
  std::vector<std::vector<int>> column_cycles;
};

namespace detail {

inline std::vector<int> partner_array(const Pairing& p, int two_l) {
  std::vector<int> partner(static_cast<std::size_t>(two_l) + 1, 0);
  for (const auto& [a, b] : p.pairs) {
    if (a < 1 || b < 1 || a > two_l || b > two_l || a == b)
      throw std::invalid_argument("pairing: index out of range");
    if (partner[static_cast<std::size_t>(a)] != 0 ||
        partner[static_cast<std::size_t>(b)] != 0)
      throw std::invalid_argument("pairing: repeated index");
    partner[static_cast<std::size_t>(a)] = b;
    partner[static_cast<std::size_t>(b)] = a;
  }
  for (int q = 1; q <= two_l; ++q)
    if (partner[static_cast<std::size_t>(q)] == 0)
      throw std::invalid_argument("pairing: does not cover all indices");
  return partner;
}

template <typename TauPartner>
std::vector<std::vector<int>> cycles_of(const std::vector<int>& pi, int two_l,
                                        TauPartner tau) {
  std::vector<bool> seen(static_cast<std::size_t>(two_l) + 1, false);
  std::vector<std::vector<int>> cycles;
  for (int start = 1; start <= two_l; ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    std::vector<int> walk;
    int q = start;
    while (true) {
      walk.push_back(q);
      seen[static_cast<std::size_t>(q)] = true;
      const int p = pi[static_cast<std::size_t>(q)];
      walk.push_back(p);
      seen[static_cast<std::size_t>(p)] = true;
      q = tau(p);
      if (q == start) break;
    }
    cycles.push_back(std::move(walk));
  }
  return cycles;
}

}  // namespace detail

inline CycleDecomposition cycle_decompose(const Pairing& p, int L) {
  const int two_l = 2 * L;
  const std::vector<int> pi = detail::partner_array(p, two_l);
  CycleDecomposition out;
  out.row_cycles =
      detail::cycles_of(pi, two_l, [L](int q) { return row_partner(q, L); });
  out.column_cycles =
      detail::cycles_of(pi, two_l, [L](int q) { return col_partner(q, L); });
  return out;
}

struct FactorSpec {
  std::vector<Eigen::MatrixXd> factors;  // C_0..C_U
};

struct BlockCovariance {
  int M = 0;
  int d = 0;
  std::vector<Eigen::MatrixXd> blocks;  // row-major M x M grid
  std::optional<FactorSpec> factor_spec;

  const Eigen::MatrixXd& block(int s, int sp) const {
    return blocks[static_cast<std::size_t>(s) * static_cast<std::size_t>(M) +
                  static_cast<std::size_t>(sp)];
  }
};

inline void validate(const BlockCovariance& cov) {
  if (cov.M < 1 || cov.d < 1)
    throw std::invalid_argument("block covariance: M and d must be >= 1");
  if (cov.blocks.size() !=
      static_cast<std::size_t>(cov.M) * static_cast<std::size_t>(cov.M))
    throw std::invalid_argument("block covariance: wrong number of blocks");
  double scale = 0.0;
  for (const auto& a : cov.blocks) {
    if (a.rows() != cov.d || a.cols() != cov.d)
      throw std::invalid_argument("block covariance: block dimension mismatch");
    if (!a.allFinite())
      throw std::invalid_argument("block covariance: non-finite block");
    scale = std::max(scale, a.cwiseAbs().maxCoeff());
  }
  for (int s = 0; s < cov.M; ++s)
    for (int sp = 0; sp < cov.M; ++sp) {
      const double dev =
          (cov.block(s, sp) - cov.block(sp, s).transpose()).cwiseAbs().maxCoeff();
      if (dev > 1e-12 * std::max(1.0, scale))
        throw std::invalid_argument(
            "block covariance: A(s,s') must equal A(s',s) transposed");
    }
}

// Jointly PSD covariance grid from moving-average factors:
// A_{s,s'} = sum_u C_u C_{u+s'-s}^T.
inline BlockCovariance make_factor_covariance(int d, int M,
                                              std::vector<Eigen::MatrixXd> factors) {
  if (d < 1 || M < 1)
    throw std::invalid_argument("factor covariance: M and d must be >= 1");
  if (factors.empty())
    throw std::invalid_argument("factor covariance: need at least one factor");
  for (const auto& c : factors)
    if (c.rows() != d || c.cols() != d)
      throw std::invalid_argument("factor covariance: factor dimension mismatch");
  BlockCovariance cov;
  cov.M = M;
  cov.d = d;
  cov.blocks.assign(static_cast<std::size_t>(M) * static_cast<std::size_t>(M),
                    Eigen::MatrixXd::Zero(d, d));
  const int U = static_cast<int>(factors.size()) - 1;
  for (int s = 0; s < M; ++s)
    for (int sp = s; sp < M; ++sp) {
      const int k = sp - s;
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
      for (int u = 0; u + k <= U; ++u)
        a.noalias() += factors[static_cast<std::size_t>(u)] *
                       factors[static_cast<std::size_t>(u + k)].transpose();
      cov.blocks[static_cast<std::size_t>(s) * static_cast<std::size_t>(M) +
                 static_cast<std::size_t>(sp)] = a;
      cov.blocks[static_cast<std::size_t>(sp) * static_cast<std::size_t>(M) +
                 static_cast<std::size_t>(s)] = a.transpose();
    }
  cov.factor_spec = FactorSpec{std::move(factors)};
  return cov;
}

inline double exact_trace_moment(const BlockCovariance& cov, int L) {
  validate(cov);
  if (L < 1) throw std::invalid_argument("exact_trace_moment: L must be >= 1");
  const double cost = static_cast<double>(double_factorial(2 * L - 1)) *
                      std::pow(static_cast<double>(cov.M), L) *
                      std::pow(static_cast<double>(cov.d), 3);
  if (cost > 1e8)
    throw std::invalid_argument("exact_trace_moment: budget exceeded");

  const std::vector<Pairing> pairings = enumerate_pairings(2 * L);
  std::vector<int> s(static_cast<std::size_t>(L), 0);  // 0-based assignment

  double total = 0.0;
  for (const Pairing& p : pairings) {
    const CycleDecomposition dec = cycle_decompose(p, L);
    std::fill(s.begin(), s.end(), 0);
    while (true) {
      double prod = 1.0;
      for (const std::vector<int>& walk : dec.row_cycles) {
        const auto slot = [&](std::size_t idx) {
          return s[static_cast<std::size_t>(s_slot(walk[idx], L) - 1)];
        };
        if (walk.size() == 2) {
          prod *= cov.block(slot(0), slot(1)).trace();
        } else {
          Eigen::MatrixXd acc = cov.block(slot(0), slot(1));
          for (std::size_t i = 2; i < walk.size(); i += 2)
            acc = acc * cov.block(slot(i), slot(i + 1));
          prod *= acc.trace();
        }
        if (prod == 0.0) break;
      }
      total += prod;

      int pos = 0;
      while (pos < L && s[static_cast<std::size_t>(pos)] == cov.M - 1) {
        s[static_cast<std::size_t>(pos)] = 0;
        ++pos;
      }
      if (pos == L) break;
      ++s[static_cast<std::size_t>(pos)];
    }
  }
  return total;
}

struct McEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

inline McEstimate mc_trace_moment(const BlockCovariance& cov, int L, long samples,
                                  std::uint64_t seed) {
  validate(cov);
  if (L < 1) throw std::invalid_argument("mc_trace_moment: L must be >= 1");
  if (!cov.factor_spec)
    throw std::invalid_argument("mc_trace_moment: covariance lacks factor_spec");
  if (samples < 1000)
    throw std::invalid_argument("mc_trace_moment: need at least 10^3 samples");
  const auto& factors = cov.factor_spec->factors;
  const int U = static_cast<int>(factors.size()) - 1;
  const int d = cov.d;
  const int M = cov.M;

  double sum = 0.0;
  double sum_sq = 0.0;
  Eigen::MatrixXd eps(d, M + U);
  Eigen::MatrixXd y(d, M);
  for (long rep = 0; rep < samples; ++rep) {
    rng::Stream64 stream(seed, rng::kMonteCarlo, static_cast<std::uint64_t>(rep));
    for (int col = 0; col < M + U; ++col)
      for (int row = 0; row < d; ++row) eps(row, col) = stream.next_gaussian();
    y.setZero();
    // Y_{.,s} = sum_u C_u eps_{s-u}; eps column t is stored at index t+U-1
    // for t in {1-U..M} (s is 1-based here).
    for (int u = 0; u <= U; ++u)
      y.noalias() +=
          factors[static_cast<std::size_t>(u)] * eps.block(0, U - u, d, M);
    const Eigen::MatrixXd w = y * y.transpose();
    Eigen::MatrixXd acc = w;
    for (int k = 1; k < L; ++k) acc = acc * w;
    const double t = acc.trace();
    sum += t;
    sum_sq += t * t;
  }
  McEstimate est;
  const double ns = static_cast<double>(samples);
  est.mean = sum / ns;
  const double var = std::max(0.0, (sum_sq - ns * est.mean * est.mean) / (ns - 1.0));
  est.stderr_mean = std::sqrt(var / ns);
  return est;
}

struct BNormReport {
  double op_norm = 0.0;
  double gershgorin = 0.0;  // max_s sum_{s'} ||A_{s,s'}||
};

inline BNormReport b_norm(const BlockCovariance& cov) {
  validate(cov);
  Eigen::MatrixXd b(cov.M, cov.M);
  for (int s = 0; s < cov.M; ++s)
    for (int sp = 0; sp < cov.M; ++sp)
      b(s, sp) = linalg::op_norm(cov.block(s, sp));
  BNormReport report;
  report.op_norm = linalg::op_norm(b);
  report.gershgorin = b.rowwise().sum().maxCoeff();
  return report;
}

inline double theorem2_bound(double kappa, int L, int d, int M) {
  if (!(kappa > 0.0) || L < 1 || d < 1 || M < 1)
    throw std::invalid_argument("theorem2_bound: arguments must be positive");
  return std::pow(kappa, L) *
         static_cast<double>(double_factorial(2 * L - 1)) *
         std::pow(static_cast<double>(d + M), L + 1);
}

inline nlohmann::json to_json(const BlockCovariance& cov) {
  validate(cov);
  nlohmann::json j;
  j["d"] = cov.d;
  j["M"] = cov.M;
  const auto flatten = [](const Eigen::MatrixXd& a) {
    nlohmann::json flat = nlohmann::json::array();
    for (int row = 0; row < a.rows(); ++row)
      for (int col = 0; col < a.cols(); ++col) flat.push_back(a(row, col));
    return flat;
  };
  if (cov.factor_spec) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& c : cov.factor_spec->factors) factors.push_back(flatten(c));
    j["factors"] = std::move(factors);
  } else {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& a : cov.blocks) blocks.push_back(flatten(a));
    j["blocks"] = std::move(blocks);
  }
  return j;
}

inline BlockCovariance block_covariance_from_json(const nlohmann::json& j) {
  const int d = j.at("d").get<int>();
  const int M = j.at("M").get<int>();
  const auto unflatten = [d](const nlohmann::json& flat) {
    if (static_cast<int>(flat.size()) != d * d)
      throw std::invalid_argument("block covariance json: matrix size mismatch");
    Eigen::MatrixXd a(d, d);
    std::size_t idx = 0;
    for (int row = 0; row < d; ++row)
      for (int col = 0; col < d; ++col) a(row, col) = flat[idx++].get<double>();
    return a;
  };
  if (j.contains("factors")) {
    std::vector<Eigen::MatrixXd> factors;
    for (const auto& flat : j.at("factors")) factors.push_back(unflatten(flat));
    return make_factor_covariance(d, M, std::move(factors));
  }
  BlockCovariance cov;
  cov.d = d;
  cov.M = M;
  for (const auto& flat : j.at("blocks")) cov.blocks.push_back(unflatten(flat));
  validate(cov);
  return cov;
}

}  // namespace hdspec::wick
