#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

#include "hdspec/rng.hpp"
#include "hdspec/spectral.hpp"

// Isotropic Wishart sampling and the structure of eta*V for Gaussian eta:
// exact conjugate symmetry, the isotropic-Wishart coupling away from
// theta in {0, pi}, and the low-rank almost-Wishart decomposition at
// r in {0, floor(n/2)}.

namespace hdspec::wishart {

enum class Flavor { real, complex };

struct WishartSample {
  Eigen::MatrixXcd matrix;
  Flavor flavor = Flavor::real;
  long dof = 0;
};

inline WishartSample sample_wishart(Flavor flavor, int d, long dof,
                                    std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("sample_wishart: d must be >= 1");
  if (dof < 1) throw std::invalid_argument("sample_wishart: dof must be >= 1");
  rng::Stream64 stream(seed, rng::kWishart);
  WishartSample out;
  out.flavor = flavor;
  out.dof = dof;
  if (flavor == Flavor::real) {
    Eigen::MatrixXd z(d, dof);
    for (long col = 0; col < dof; ++col)
      for (int row = 0; row < d; ++row) z(row, col) = stream.next_gaussian();
    out.matrix = (z * z.transpose()).cast<std::complex<double>>();
  } else {
    const double scale = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXcd z(d, dof);
    for (long col = 0; col < dof; ++col)
      for (int row = 0; row < d; ++row) {
        const double re = stream.next_gaussian() * scale;
        const double im = stream.next_gaussian() * scale;
        z(row, col) = std::complex<double>(re, im);
      }
    out.matrix = z * z.adjoint();
  }
  return out;
}

// eta V D_r V* eta^T (no 1/(2m+1) normalization).
inline Eigen::MatrixXcd smoothed_gram(const Eigen::MatrixXd& eta, long r, long m) {
  const Eigen::MatrixXcd block =
      spectral::selected_columns(spectral::dft_columns(eta), r, m);
  return block * block.adjoint();
}

inline Eigen::MatrixXd gaussian_noise(int d, long n, std::uint64_t seed,
                                      std::uint64_t substream = 0) {
  rng::Stream64 stream(seed, rng::kNoise, substream);
  Eigen::MatrixXd eta(d, n);
  for (long col = 0; col < n; ++col)
    for (int row = 0; row < d; ++row) eta(row, col) = stream.next_gaussian();
  return eta;
}

struct AlmostWishartResult {
  Eigen::MatrixXcd gram;      // eta V D_r V* eta^T
  Eigen::MatrixXd z;          // d x (2m+1), entries i.i.d. standard normal
  Eigen::MatrixXcd residual;  // gram - z z^T, Hermitian
  int rank_estimate = 0;
};

// At r in {0, floor(n/2)} the smoothing window is closed under the
// conjugacy s <-> n+2-s except for exactly one column: either the real
// self-conjugate column (s = 1 or s = n/2+1) or, for odd n at r=(n-1)/2,
// the single column whose conjugate partner falls outside the window.
// Each conjugate pair contributes sqrt(2)Re / sqrt(2)Im of one member to Z;
// the leftover column w is replaced by sqrt(2)xi, xi ~ N(0, Id/2), leaving
// the rank-2 residual E = w w* - 2 xi xi^T.
inline AlmostWishartResult almost_wishart_residual(long n, int d, long m, long r,
                                                   std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("almost_wishart_residual: d must be >= 1");
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("almost_wishart_residual: bandwidth too large");
  if (r != 0 && r != n / 2)
    throw std::invalid_argument(
        "almost_wishart_residual: r must be 0 or floor(n/2)");

  const Eigen::MatrixXd eta = gaussian_noise(d, n, seed);
  const Eigen::MatrixXcd xv = spectral::dft_columns(eta);

  // Window as 1-based column indices s with rho_n(r, s-1) <= m.
  std::vector<long> window;
  window.reserve(static_cast<std::size_t>(2 * m + 1));
  for (long j = -m; j <= m; ++j) window.push_back(((r + j) % n + n) % n + 1);
  std::vector<bool> in_window(static_cast<std::size_t>(n) + 1, false);
  for (long s : window) in_window[static_cast<std::size_t>(s)] = true;

  const auto conj_partner = [n](long s) { return s == 1 ? 1 : n + 2 - s; };

  std::vector<long> pair_reps;
  std::vector<long> leftovers;
  for (long s : window) {
    const long p = conj_partner(s);
    if (p == s || !in_window[static_cast<std::size_t>(p)])
      leftovers.push_back(s);
    else if (s < p)
      pair_reps.push_back(s);
  }
  if (leftovers.size() != 1 ||
      pair_reps.size() != static_cast<std::size_t>(m))
    throw std::logic_error("almost_wishart_residual: window classification failed");
  const long leftover = leftovers.front();

  rng::Stream64 xi_stream(seed, rng::kXi);
  Eigen::VectorXd xi(d);
  const double xi_scale = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) xi(i) = xi_stream.next_gaussian() * xi_scale;

  const double sqrt2 = std::sqrt(2.0);
  AlmostWishartResult out;
  out.z.resize(d, 2 * m + 1);
  out.z.col(0) = sqrt2 * xi;
  for (long k = 0; k < m; ++k) {
    const Eigen::VectorXcd col = xv.col(pair_reps[static_cast<std::size_t>(k)] - 1);
    out.z.col(1 + k) = sqrt2 * col.real();
    out.z.col(1 + m + k) = sqrt2 * col.imag();
  }

  const Eigen::MatrixXcd block = spectral::selected_columns(xv, r, m);
  out.gram = block * block.adjoint();
  const Eigen::VectorXcd w = xv.col(leftover - 1);
  out.residual = w * w.adjoint();
  out.residual -= (2.0 * xi * xi.transpose()).cast<std::complex<double>>();

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.residual);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() > 0 && sv(0) > 0.0) {
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-8 * sv(0)) ++out.rank_estimate;
  }
  return out;
}

struct CouplingReport {
  long reps = 0;
  double mean_trace_gram = 0.0;
  double mean_trace_wishart = 0.0;
  double mean_trace_sq_gram = 0.0;
  double mean_trace_sq_wishart = 0.0;
  double z_trace = 0.0;
  double z_trace_sq = 0.0;
  bool flag_trace = false;
  bool flag_trace_sq = false;
};

inline CouplingReport wishart_coupling_check(long n, int d, long m, long r,
                                             std::uint64_t seed, long reps) {
  if (reps < 2) throw std::invalid_argument("wishart_coupling_check: reps >= 2");
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("wishart_coupling_check: bandwidth too large");
  if (spectral::mod_distance(r, 0, n) <= m)
    throw std::invalid_argument(
        "wishart_coupling_check: window touches frequency 0");
  const double half = static_cast<double>(n) / 2.0;
  const double dist_half =
      std::min(std::abs(static_cast<double>(r) - half),
               static_cast<double>(n) - std::abs(static_cast<double>(r) - half));
  if (dist_half <= static_cast<double>(m))
    throw std::invalid_argument(
        "wishart_coupling_check: window touches frequency pi");

  std::vector<double> tr_a, tr2_a, tr_b, tr2_b;
  tr_a.reserve(reps);
  tr2_a.reserve(reps);
  tr_b.reserve(reps);
  tr2_b.reserve(reps);
  for (long rep = 0; rep < reps; ++rep) {
    const Eigen::MatrixXd eta =
        gaussian_noise(d, n, seed, static_cast<std::uint64_t>(rep));
    const Eigen::MatrixXcd gram = smoothed_gram(eta, r, m);
    tr_a.push_back(gram.real().trace());
    tr2_a.push_back((gram * gram).real().trace());

    const WishartSample w = sample_wishart(
        Flavor::complex, d, 2 * m + 1,
        rng::key3(seed, rng::kWishart, static_cast<std::uint64_t>(rep)));
    tr_b.push_back(w.matrix.real().trace());
    tr2_b.push_back((w.matrix * w.matrix).real().trace());
  }

  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto var_of = [&](const std::vector<double>& v, double mu) {
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
  };
  const auto z_score = [&](const std::vector<double>& a,
                           const std::vector<double>& b) {
    const double ma = mean_of(a), mb = mean_of(b);
    const double va = var_of(a, ma), vb = var_of(b, mb);
    const double denom = std::sqrt((va + vb) / static_cast<double>(a.size()));
    return denom > 0.0 ? (ma - mb) / denom : 0.0;
  };

  CouplingReport report;
  report.reps = reps;
  report.mean_trace_gram = mean_of(tr_a);
  report.mean_trace_wishart = mean_of(tr_b);
  report.mean_trace_sq_gram = mean_of(tr2_a);
  report.mean_trace_sq_wishart = mean_of(tr2_b);
  report.z_trace = z_score(tr_a, tr_b);
  report.z_trace_sq = z_score(tr2_a, tr2_b);
  report.flag_trace = std::abs(report.z_trace) > 4.0;
  report.flag_trace_sq = std::abs(report.z_trace_sq) > 4.0;
  return report;
}

inline nlohmann::json to_json(const CouplingReport& r) {
  nlohmann::json j;
  j["reps"] = r.reps;
  j["mean_trace_gram"] = r.mean_trace_gram;
  j["mean_trace_wishart"] = r.mean_trace_wishart;
  j["mean_trace_sq_gram"] = r.mean_trace_sq_gram;
  j["mean_trace_sq_wishart"] = r.mean_trace_sq_wishart;
  j["z_trace"] = r.z_trace;
  j["z_trace_sq"] = r.z_trace_sq;
  j["flag_trace"] = r.flag_trace;
  j["flag_trace_sq"] = r.flag_trace_sq;
  return j;
}

}  // namespace hdspec::wishart
