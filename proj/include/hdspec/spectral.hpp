#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>
#include <fftw3.h>

#include "hdspec/measures.hpp"
#include "hdspec/process.hpp"

// Periodogram and Daniell smoothed periodogram on the Fourier grid, plus the
// circular and innovation-domain approximants used to study how close the
// smoother is to its idealized forms.

namespace hdspec::spectral {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct FrequencyIndex {
  long r = 0;
  long n = 0;
  double theta_snapped = 0.0;
};

inline FrequencyIndex grid_index(double theta, long n) {
  if (n < 1) throw std::invalid_argument("grid_index: n must be >= 1");
  if (!(theta >= 0.0 && theta < kTwoPi))
    throw std::invalid_argument("grid_index: theta must lie in [0, 2pi)");
  long r = static_cast<long>(std::floor(static_cast<double>(n) * theta / kTwoPi + 0.5));
  r %= n;
  FrequencyIndex freq;
  freq.r = r;
  freq.n = n;
  freq.theta_snapped = kTwoPi * static_cast<double>(r) / static_cast<double>(n);
  return freq;
}

inline long mod_distance(long r, long rp, long n) {
  if (n < 1) throw std::invalid_argument("mod_distance: n must be >= 1");
  long diff = (r - rp) % n;
  if (diff < 0) diff += n;
  return std::min(diff, n - diff);
}

inline std::vector<int> selector_diag(long r, long n, long m) {
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("selector_diag: bandwidth too large");
  std::vector<int> diag(static_cast<std::size_t>(n), 0);
  for (long s = 0; s < n; ++s)
    if (mod_distance(r, s, n) <= m) diag[static_cast<std::size_t>(s)] = 1;
  return diag;
}

namespace detail {

// FFTW plan creation and destruction are not thread safe; execution is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex mu;
  return mu;
}

inline void dft_rows_in_place(Eigen::MatrixXcd& buf) {
  const int d = static_cast<int>(buf.rows());
  const int n = static_cast<int>(buf.cols());
  if (d == 0 || n == 0) return;
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    // Column-major storage: row i is a strided length-n signal.
    plan = fftw_plan_many_dft(1, &n, d, data, nullptr, d, 1, data, nullptr, d,
                              1, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("dft_columns: fftw planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  buf *= 1.0 / std::sqrt(static_cast<double>(n));
}

}  // namespace detail

// X -> XV with V the unitary DFT matrix (negative exponent, 1/sqrt(n)).
template <typename Derived>
Eigen::MatrixXcd dft_columns(const Eigen::MatrixBase<Derived>& x) {
  Eigen::MatrixXcd buf = x.template cast<std::complex<double>>();
  detail::dft_rows_in_place(buf);
  return buf;
}

struct SmoothedPeriodogram {
  Eigen::MatrixXcd matrix;
  FrequencyIndex freq;
  long bandwidth = 0;
};

inline Eigen::MatrixXcd periodogram(const Eigen::MatrixXd& x,
                                    const FrequencyIndex& freq) {
  if (freq.n != x.cols())
    throw std::invalid_argument("periodogram: frequency index built for another n");
  const Eigen::MatrixXcd xv = dft_columns(x);
  const Eigen::VectorXcd col = xv.col(freq.r);
  return col * col.adjoint();
}

// The 2m+1 columns of xv nearest (mod n) to index r, in window order.
inline Eigen::MatrixXcd selected_columns(const Eigen::MatrixXcd& xv, long r,
                                         long m) {
  const long n = xv.cols();
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("selected_columns: bandwidth too large");
  Eigen::MatrixXcd block(xv.rows(), 2 * m + 1);
  for (long j = -m; j <= m; ++j) {
    const long s = ((r + j) % n + n) % n;
    block.col(j + m) = xv.col(s);
  }
  return block;
}

// Gram matrix of the selected columns, scaled by 1/(2m+1).  Both smoother
// paths and the approximants funnel through here so that equal inputs give
// bitwise equal outputs.
inline Eigen::MatrixXcd selected_gram(const Eigen::MatrixXcd& xv, long r, long m) {
  const Eigen::MatrixXcd block = selected_columns(xv, r, m);
  Eigen::MatrixXcd gram = block * block.adjoint();
  gram *= 1.0 / static_cast<double>(2 * m + 1);
  return gram;
}

inline SmoothedPeriodogram daniell_matrix(const Eigen::MatrixXd& x, double theta,
                                          long m) {
  const long n = x.cols();
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("daniell_matrix: bandwidth too large");
  SmoothedPeriodogram out;
  out.freq = grid_index(theta, n);
  out.bandwidth = m;
  out.matrix = selected_gram(dft_columns(x), out.freq.r, m);
  return out;
}

inline SmoothedPeriodogram daniell_avg(const Eigen::MatrixXd& x, double theta,
                                       long m) {
  const long n = x.cols();
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("daniell_avg: bandwidth too large");
  SmoothedPeriodogram out;
  out.freq = grid_index(theta, n);
  out.bandwidth = m;
  const Eigen::MatrixXcd xv = dft_columns(x);
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(x.rows(), x.rows());
  for (long j = -m; j <= m; ++j) {
    const long s = ((out.freq.r + j) % n + n) % n;
    const Eigen::VectorXcd col = xv.col(s);
    sum += col * col.adjoint();
  }
  out.matrix = sum / static_cast<double>(2 * m + 1);
  return out;
}

inline SmoothedPeriodogram approx_s_tilde(const process::LinearProcessModel& model,
                                          long n, double theta, long m,
                                          std::uint64_t seed) {
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("approx_s_tilde: bandwidth too large");
  const process::SimulationOutput sim = process::simulate_circular(model, n, seed);
  SmoothedPeriodogram out;
  out.freq = grid_index(theta, n);
  out.bandwidth = m;
  out.matrix = selected_gram(dft_columns(sim.data), out.freq.r, m);
  return out;
}

inline SmoothedPeriodogram approx_s_prime(const process::LinearProcessModel& model,
                                          long n, double theta, long m,
                                          std::uint64_t seed) {
  if (m < 0 || 2 * m + 1 > n)
    throw std::invalid_argument("approx_s_prime: bandwidth too large");
  process::validate(model);
  if (n < 1) throw std::invalid_argument("approx_s_prime: n must be >= 1");
  const Eigen::MatrixXd eta =
      process::innovation_block(model, n, seed).rightCols(n);
  SmoothedPeriodogram out;
  out.freq = grid_index(theta, n);
  out.bandwidth = m;
  const Eigen::MatrixXcd inner = selected_gram(dft_columns(eta), out.freq.r, m);
  const Eigen::MatrixXcd g = process::transfer_function(model, out.freq.theta_snapped);
  out.matrix = g * inner * g.adjoint();
  return out;
}

inline measures::DiscreteMeasure esd(const SmoothedPeriodogram& sp) {
  return measures::esd(sp.matrix);
}

inline void write_eigenvalue_csv(std::ostream& os, long n, long d, long m, long r,
                                 const measures::DiscreteMeasure& mu) {
  os << "n,d,m,r,lambda\n";
  for (double lambda : mu.atoms)
    os << n << ',' << d << ',' << m << ',' << r << ','
       << measures::format_double(lambda) << '\n';
}

}  // namespace hdspec::spectral
