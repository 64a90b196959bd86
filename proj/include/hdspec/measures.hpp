#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdspec/linalg.hpp"

// Discrete probability measures on the real line, their Stieltjes transforms,
// and the exact bounded-Lipschitz distance.

namespace hdspec::measures {

inline constexpr double kPi = 3.14159265358979323846;

struct DiscreteMeasure {
  std::vector<double> atoms;    // ascending
  std::vector<double> weights;  // positive, summing to 1
};

inline void validate(const DiscreteMeasure& mu) {
  if (mu.atoms.size() != mu.weights.size())
    throw std::invalid_argument("measure: atom/weight length mismatch");
  if (mu.atoms.empty()) throw std::invalid_argument("measure: empty");
  double total = 0.0;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    if (!std::isfinite(mu.atoms[i]) || !std::isfinite(mu.weights[i]))
      throw std::invalid_argument("measure: non-finite entry");
    if (mu.weights[i] <= 0.0)
      throw std::invalid_argument("measure: nonpositive weight");
    if (i > 0 && mu.atoms[i] < mu.atoms[i - 1])
      throw std::invalid_argument("measure: atoms not ascending");
    total += mu.weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("measure: weights do not sum to 1");
}

inline DiscreteMeasure point_mass(double x) { return {{x}, {1.0}}; }

inline DiscreteMeasure make_measure(std::vector<double> atoms,
                                    std::vector<double> weights) {
  std::vector<std::size_t> idx(atoms.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  DiscreteMeasure mu;
  mu.atoms.reserve(atoms.size());
  mu.weights.reserve(atoms.size());
  for (std::size_t i : idx) {
    mu.atoms.push_back(atoms[i]);
    mu.weights.push_back(weights[i]);
  }
  validate(mu);
  return mu;
}

namespace detail {

template <typename Mat>
DiscreteMeasure esd_impl(const Mat& a, double tol) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("esd: input matrix is not square");
  if (!a.allFinite()) throw std::invalid_argument("esd: non-finite entries");
  const double scale = a.norm();
  const double asym = (a - a.adjoint()).norm();
  if (asym > tol * scale)
    throw std::invalid_argument("esd: input is not Hermitian within tolerance");
  Mat sym = (a + a.adjoint()) / typename Mat::Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("esd: eigensolver failed");
  const auto& ev = es.eigenvalues();
  DiscreteMeasure mu;
  const auto d = a.rows();
  mu.atoms.assign(ev.data(), ev.data() + d);
  mu.weights.assign(static_cast<std::size_t>(d), 1.0 / static_cast<double>(d));
  return mu;
}

}  // namespace detail

inline DiscreteMeasure esd(const Eigen::MatrixXd& a, double tol = 1e-8) {
  return detail::esd_impl(a, tol);
}

inline DiscreteMeasure esd(const Eigen::MatrixXcd& a, double tol = 1e-8) {
  return detail::esd_impl(a, tol);
}

inline std::complex<double> stieltjes(const DiscreteMeasure& mu,
                                      std::complex<double> z) {
  if (!(z.imag() > 0.0))
    throw std::invalid_argument("stieltjes: z must lie in the upper half-plane");
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t j = 0; j < mu.atoms.size(); ++j)
    acc += mu.weights[j] / (mu.atoms[j] - z);
  return acc;
}

struct StieltjesPoint {
  std::complex<double> z;
  std::complex<double> m;
};

inline double density_from_stieltjes(
    const std::function<std::complex<double>(std::complex<double>)>& m_eval,
    double x, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("density: eta must be positive");
  return m_eval(std::complex<double>(x, eta)).imag() / kPi;
}

namespace detail {

// Concave piecewise-linear function on [-1,1], stored as breakpoints with
// values. Used by the bounded-Lipschitz chain LP below.
struct PolyLine {
  std::vector<double> xs;
  std::vector<double> vs;
};

inline double polyline_eval(const PolyLine& f, double y) {
  const auto& xs = f.xs;
  if (y <= xs.front()) return f.vs.front();
  if (y >= xs.back()) return f.vs.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), y);
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (y - xs[lo]) / (xs[hi] - xs[lo]);
  return f.vs[lo] + t * (f.vs[hi] - f.vs[lo]);
}

inline void polyline_push(PolyLine& f, double x, double v) {
  if (!f.xs.empty() && x <= f.xs.back()) return;
  f.xs.push_back(x);
  f.vs.push_back(v);
}

// Replace f by x -> max{ f(y) : |y - x| <= g, y in [-1,1] }.
inline void window_max(PolyLine& f, double g) {
  if (g <= 0.0) return;
  constexpr double lo = -1.0, hi = 1.0;
  double vmax = f.vs[0];
  for (double v : f.vs) vmax = std::max(vmax, v);
  std::size_t i1 = f.vs.size(), i2 = 0;
  for (std::size_t i = 0; i < f.vs.size(); ++i)
    if (f.vs[i] == vmax) {
      if (i1 == f.vs.size()) i1 = i;
      i2 = i;
    }
  const double a = f.xs[i1], b = f.xs[i2];

  PolyLine out;
  if (a - g > lo) {
    polyline_push(out, lo, polyline_eval(f, lo + g));
    for (std::size_t j = 0; j < f.xs.size(); ++j)
      if (f.xs[j] > lo + g && f.xs[j] < a) polyline_push(out, f.xs[j] - g, f.vs[j]);
  }
  polyline_push(out, std::max(lo, a - g), vmax);
  polyline_push(out, std::min(hi, b + g), vmax);
  if (b + g < hi) {
    for (std::size_t j = 0; j < f.xs.size(); ++j)
      if (f.xs[j] > b && f.xs[j] < hi - g) polyline_push(out, f.xs[j] + g, f.vs[j]);
    polyline_push(out, hi, polyline_eval(f, hi - g));
  }
  if (out.xs.size() == 1) polyline_push(out, hi, out.vs[0]);
  f = std::move(out);
}

inline void add_linear(PolyLine& f, double c) {
  for (std::size_t i = 0; i < f.xs.size(); ++i) f.vs[i] += c * f.xs[i];
}

// Merge the two atom lists; exactly coincident locations share one variable
// with the signed weight w1 - w2.
inline void merge_signed(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2,
                         std::vector<double>& xs, std::vector<double>& cs) {
  std::size_t i = 0, j = 0;
  while (i < mu1.atoms.size() || j < mu2.atoms.size()) {
    if (j >= mu2.atoms.size() ||
        (i < mu1.atoms.size() && mu1.atoms[i] < mu2.atoms[j])) {
      if (!xs.empty() && xs.back() == mu1.atoms[i]) {
        cs.back() += mu1.weights[i];
      } else {
        xs.push_back(mu1.atoms[i]);
        cs.push_back(mu1.weights[i]);
      }
      ++i;
    } else if (i >= mu1.atoms.size() || mu2.atoms[j] < mu1.atoms[i]) {
      if (!xs.empty() && xs.back() == mu2.atoms[j]) {
        cs.back() -= mu2.weights[j];
      } else {
        xs.push_back(mu2.atoms[j]);
        cs.push_back(-mu2.weights[j]);
      }
      ++j;
    } else {
      if (!xs.empty() && xs.back() == mu1.atoms[i]) {
        cs.back() += mu1.weights[i] - mu2.weights[j];
      } else {
        xs.push_back(mu1.atoms[i]);
        cs.push_back(mu1.weights[i] - mu2.weights[j]);
      }
      ++i;
      ++j;
    }
  }
}

}  // namespace detail

// Exact value of sup { integral of f d(mu1-mu2) : |f| <= 1, f 1-Lipschitz }.
//
// On the merged atom set x_1 <= ... <= x_N the supremum is the chain LP
//   maximize sum c_i f_i  s.t.  |f_i| <= 1,  |f_{i+1}-f_i| <= x_{i+1}-x_i,
// solved exactly by dynamic programming over the concave piecewise-linear
// value function V_i(f) = max of the prefix objective given f_i = f. The
// sliding-window maximum of a concave function keeps it concave, so each
// step is a plateau insertion plus a shift of the rising and falling parts.
inline double bl_distance(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2) {
  validate(mu1);
  validate(mu2);
  std::vector<double> xs, cs;
  detail::merge_signed(mu1, mu2, xs, cs);
  const std::size_t n = xs.size();
  if (n == 0) return 0.0;

  detail::PolyLine v;
  v.xs = {-1.0, 1.0};
  v.vs = {-cs[0], cs[0]};
  for (std::size_t i = 1; i < n; ++i) {
    detail::window_max(v, xs[i] - xs[i - 1]);
    detail::add_linear(v, cs[i]);
  }
  double best = v.vs[0];
  for (double val : v.vs) best = std::max(best, val);
  return std::max(best, 0.0) + 0.0;
}

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_csv(const DiscreteMeasure& mu, std::ostream& os) {
  os << "atom,weight\n";
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    os << format_double(mu.atoms[i]) << ',' << format_double(mu.weights[i]) << '\n';
}

inline void write_csv(const DiscreteMeasure& mu, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(mu, os);
}

inline DiscreteMeasure read_csv(std::istream& is) {
  std::vector<double> atoms, weights;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, w;
    if (!std::getline(ss, a, ',') || !std::getline(ss, w)) continue;
    try {
      const double av = std::stod(a);
      const double wv = std::stod(w);
      atoms.push_back(av);
      weights.push_back(wv);
    } catch (const std::exception&) {
      if (atoms.empty()) continue;  // header line
      throw std::invalid_argument("measure csv: malformed line: " + line);
    }
  }
  return make_measure(std::move(atoms), std::move(weights));
}

inline DiscreteMeasure read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_csv(is);
}

}  // namespace hdspec::measures
