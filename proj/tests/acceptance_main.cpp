// Acceptance gate: one line per criterion, pinned tolerances, exit nonzero on
// any failure.  Usage: acceptance [criterion] [cli-binary-path].
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hdspec/experiments.hpp"
#include "hdspec/measures.hpp"
#include "hdspec/mp_solver.hpp"
#include "hdspec/process.hpp"
#include "hdspec/rng.hpp"
#include "hdspec/spectral.hpp"
#include "hdspec/wick.hpp"
#include "hdspec/wishart.hpp"

using namespace hdspec;
namespace ex = hdspec::experiments;
using cpx = std::complex<double>;

namespace {

constexpr std::uint64_t kMasterSeed = 20260814;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

cpx quadratic_oracle(double lambda, double c, cpx z) {
  const cpx a = lambda * c * z;
  const cpx b = z + c * lambda - lambda;
  const cpx disc = std::sqrt(b * b - 4.0 * a);
  const cpx q = std::abs(b + disc) >= std::abs(b - disc) ? -0.5 * (b + disc)
                                                         : -0.5 * (b - disc);
  const cpx r1 = q / a;
  const cpx r2 = 1.0 / q;
  return r1.imag() > r2.imag() ? r1 : r2;
}

Outcome criterion1() {
  const auto start = std::chrono::steady_clock::now();
  double max_err = 0.0;
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (double c : {0.25, 1.0, 2.0}) {
      mp::MPSolution sol;
      sol.H = measures::point_mass(lambda);
      sol.c = c;
      sol.tol = 1e-13;
      for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 10; ++j) {
          const cpx z(-2.0 + 6.0 * i / 19.0, 0.05 + (2.0 - 0.05) * j / 9.0);
          const cpx m = mp::mp_solve(sol, z);
          max_err = std::max(max_err, std::abs(m - quadratic_oracle(lambda, c, z)));
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = max_err <= 1e-10 && elapsed < 5.0;
  out.detail = "max |dm| = " + fmt(max_err, 3) + ", " + fmt(elapsed, 3) + " s";
  return out;
}

ex::ExperimentConfig sweep_config(ex::ModelKind kind,
                                  process::InnovationLaw law) {
  ex::ExperimentConfig cfg;
  cfg.family.kind = kind;
  cfg.family.law = law;
  cfg.family.q = 2;
  cfg.family.decay = 0.5;
  cfg.family.model_seed = 7;
  cfg.n_list = {1L << 12, 1L << 14, 1L << 16};
  cfg.alpha = 0.6;
  cfg.c_target = 0.25;
  cfg.theta_list = {0.4, 1.1, 1.9, 2.7, 3.6};
  cfg.replicates = 3;
  cfg.seed = kMasterSeed;
  return cfg;
}

Outcome convergence_sweep(const ex::ExperimentConfig& cfg, double limit) {
  const ex::Theorem1Result result = ex::run_theorem1(cfg);
  const std::vector<double> med = ex::median_dbl_by_n(result.rows, cfg.n_list);
  Outcome out;
  bool monotone = true;
  for (std::size_t i = 1; i < med.size(); ++i)
    if (med[i] > med[i - 1]) monotone = false;
  out.pass = result.all_ok && monotone && med.back() < limit;
  out.detail = "medians";
  for (double v : med) out.detail += " " + fmt(v);
  if (!result.all_ok) out.detail += ", row failures";
  return out;
}

Outcome criterion2() {
  return convergence_sweep(
      sweep_config(ex::ModelKind::white_noise, process::InnovationLaw::gaussian),
      0.1);
}

Outcome criterion3() {
  return convergence_sweep(sweep_config(ex::ModelKind::rotating_ma,
                                        process::InnovationLaw::rademacher),
                           0.15);
}

ex::ExperimentConfig wick_config(long mc_samples) {
  ex::ExperimentConfig cfg;
  cfg.seed = kMasterSeed;
  cfg.wick.instances = 100;
  cfg.wick.d_max = 4;
  cfg.wick.m_max = 4;
  cfg.wick.l_max = 3;
  cfg.wick.u_max = 2;
  cfg.wick.mc_samples = mc_samples;
  return cfg;
}

Outcome criterion4() {
  const auto start = std::chrono::steady_clock::now();
  const ex::WickResult result = ex::run_wick(wick_config(0));
  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = result.all_ok && result.inequality_pass == 100 && elapsed < 30.0;
  out.detail = std::to_string(result.inequality_pass) + "/100 bounds hold, " +
               fmt(elapsed, 3) + " s";
  return out;
}

Outcome criterion5() {
  const ex::WickResult result = ex::run_wick(wick_config(100000));
  const wick::BlockCovariance iid =
      wick::make_factor_covariance(2, 3, {Eigen::MatrixXd::Identity(2, 2)});
  const double exact = wick::exact_trace_moment(iid, 2);
  const wick::McEstimate mc = wick::mc_trace_moment(iid, 2, 100000, kMasterSeed);
  const bool iid_ok = std::abs(exact - 36.0) < 1e-9 &&
                      std::abs(mc.mean - 36.0) <= 3.0 * mc.stderr_mean;
  Outcome out;
  out.pass = result.all_ok && result.mc_pass >= 95 && iid_ok;
  out.detail = std::to_string(result.mc_pass) +
               "/100 within 3 se; iid case exact = " + fmt(exact, 6) +
               ", mc = " + fmt(mc.mean, 6);
  return out;
}

Outcome criterion6() {
  Outcome out;
  out.pass = true;
  const std::vector<std::uint64_t> expected = {1, 3, 15, 105, 945};
  for (int L = 1; L <= 5; ++L) {
    if (wick::enumerate_pairings(2 * L).size() !=
        expected[static_cast<std::size_t>(L - 1)])
      out.pass = false;
  }
  for (int L = 1; L <= 4 && out.pass; ++L) {
    for (const wick::Pairing& p : wick::enumerate_pairings(2 * L)) {
      const wick::CycleDecomposition dec = wick::cycle_decompose(p, L);
      if (dec.row_cycles.size() + dec.column_cycles.size() >
          static_cast<std::size_t>(L + 1)) {
        out.pass = false;
        break;
      }
    }
  }
  wick::Pairing example;
  example.pairs = {{1, 4}, {2, 5}, {3, 6}, {7, 8}};
  const wick::CycleDecomposition dec = wick::cycle_decompose(example, 4);
  std::set<std::set<int>> rows, cols;
  for (const auto& w : dec.row_cycles) rows.insert({w.begin(), w.end()});
  for (const auto& w : dec.column_cycles) cols.insert({w.begin(), w.end()});
  const std::set<std::set<int>> expected_rows = {{1, 4, 7, 8}, {2, 5}, {3, 6}};
  const std::set<std::set<int>> expected_cols = {{1, 2, 3, 4, 5, 6, 7, 8}};
  if (rows != expected_rows || cols != expected_cols) out.pass = false;
  out.detail = out.pass ? "counts, cycle bound, octagon example"
                        : "combinatorial mismatch";
  return out;
}

Outcome criterion7() {
  Outcome out;
  out.pass = true;
  std::string fail;

  rng::Stream64 gen(kMasterSeed, rng::kMonteCarlo);
  double max_diff = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const long n = 16 + 2 * static_cast<long>(gen.next_bits() % 56);
    const int d = 2 + static_cast<int>(gen.next_bits() % 5);
    const long m = 1 + static_cast<long>(gen.next_bits() % 4);
    const double theta = 6.28 * gen.next_u01();
    Eigen::MatrixXd x(d, n);
    for (long col = 0; col < n; ++col)
      for (int row = 0; row < d; ++row) x(row, col) = gen.next_gaussian();
    const auto avg = spectral::daniell_avg(x, theta, m);
    const auto mat = spectral::daniell_matrix(x, theta, m);
    max_diff =
        std::max(max_diff, (avg.matrix - mat.matrix).cwiseAbs().maxCoeff());
  }
  if (max_diff > 1e-10) {
    out.pass = false;
    fail += " smoother mismatch " + fmt(max_diff, 3);
  }

  {
    const long n = 32;
    Eigen::MatrixXd x(4, n);
    for (long col = 0; col < n; ++col)
      for (int row = 0; row < 4; ++row) x(row, col) = gen.next_gaussian();
    Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(4, 4);
    for (long r = 0; r < n; ++r)
      total += spectral::periodogram(
          x, spectral::FrequencyIndex{r, n, 2.0 * measures::kPi * r / n});
    const double dev =
        (total - (x * x.transpose()).cast<cpx>()).cwiseAbs().maxCoeff();
    if (dev > 1e-10) {
      out.pass = false;
      fail += " parseval " + fmt(dev, 3);
    }
    const Eigen::MatrixXcd xv = spectral::dft_columns(x);
    double sym = xv.col(0).imag().cwiseAbs().maxCoeff();
    for (long s = 1; s < n; ++s)
      sym = std::max(
          sym, (xv.col(s) - xv.col(n - s).conjugate()).cwiseAbs().maxCoeff());
    if (sym > 1e-10) {
      out.pass = false;
      fail += " conjugate symmetry " + fmt(sym, 3);
    }
  }

  int rank_ok = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const long n = seed < 50 ? 64 : 65;
    const long r = (seed % 2 == 0) ? 0 : n / 2;
    const wishart::AlmostWishartResult res =
        wishart::almost_wishart_residual(n, 5, 7, r, 4000 + seed);
    if (res.rank_estimate <= 3) ++rank_ok;
  }
  if (rank_ok != 100) {
    out.pass = false;
    fail += " residual rank " + std::to_string(rank_ok) + "/100";
  }

  out.detail = out.pass ? "smoothers, parseval, symmetry, residual rank 100/100"
                        : fail;
  return out;
}

Outcome criterion8() {
  Outcome out;
  out.pass = true;
  rng::Stream64 gen(kMasterSeed, rng::kXi);
  const int d = 50;
  int perturb_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd a(d, d);
    for (int col = 0; col < d; ++col)
      for (int row = 0; row < d; ++row) a(row, col) = gen.next_gaussian();
    a = Eigen::MatrixXd((a + a.transpose()) / std::sqrt(2.0 * d));
    const int rank = 1 + trial % 3;
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < rank; ++k) {
      Eigen::VectorXd u(d);
      for (int row = 0; row < d; ++row) u(row) = gen.next_gaussian();
      u.normalize();
      const double sigma = 4.0 * gen.next_u01() - 2.0;
      e += sigma * u * u.transpose();
    }
    const Eigen::MatrixXd perturbed = a + e;
    const double dist =
        measures::bl_distance(measures::esd(a), measures::esd(perturbed));
    if (dist <= 8.0 * rank / static_cast<double>(d) + 1e-12) ++perturb_ok;
  }
  if (perturb_ok != 100) {
    out.pass = false;
    out.detail = "perturbation bound " + std::to_string(perturb_ok) + "/100";
  }

  int stieltjes_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto random_measure = [&gen]() {
      const int atoms = 2 + static_cast<int>(gen.next_bits() % 7);
      std::vector<double> xs, ws;
      double total = 0.0;
      for (int i = 0; i < atoms; ++i) {
        xs.push_back(3.0 * gen.next_u01());
        ws.push_back(0.05 + gen.next_u01());
        total += ws.back();
      }
      for (double& w : ws) w /= total;
      return measures::make_measure(std::move(xs), std::move(ws));
    };
    const measures::DiscreteMeasure mu1 = random_measure();
    const measures::DiscreteMeasure mu2 = random_measure();
    const cpx z(4.0 * gen.next_u01() - 1.0, 0.999 * gen.next_u01() + 0.001);
    const double delta =
        std::abs(measures::stieltjes(mu1, z) - measures::stieltjes(mu2, z));
    const double lhs = 0.5 * z.imag() * z.imag() * delta;
    if (lhs <= measures::bl_distance(mu1, mu2) + 1e-12) ++stieltjes_ok;
  }
  if (stieltjes_ok != 100) {
    out.pass = false;
    out.detail += " stieltjes/bl " + std::to_string(stieltjes_ok) + "/100";
  }
  if (out.pass)
    out.detail = "perturbation 100/100, stieltjes/bl 100/100";
  return out;
}

Outcome criterion9() {
  ex::ExperimentConfig cfg;
  cfg.family.kind = ex::ModelKind::rotating_ma;
  cfg.family.law = process::InnovationLaw::gaussian;
  cfg.family.q = 2;
  cfg.family.decay = 0.5;
  cfg.family.model_seed = 7;
  cfg.n_list = {1L << 10, 1L << 12, 1L << 14};
  cfg.alpha = 0.6;
  cfg.c_target = 0.25;
  cfg.theta_list = {0.9, 2.2, 3.8};
  cfg.replicates = 3;
  cfg.seed = kMasterSeed;
  const ex::Prop1Result result = ex::run_prop1(cfg);
  const std::vector<double> med = ex::median_sprime_by_n(result.rows, cfg.n_list);
  bool decreasing = true;
  for (std::size_t i = 1; i < med.size(); ++i)
    if (!(med[i] < med[i - 1])) decreasing = false;

  ex::ExperimentConfig white;
  white.family.kind = ex::ModelKind::white_noise;
  white.n_list = {512};
  white.theta_list = {1.3};
  white.replicates = 2;
  white.seed = kMasterSeed;
  const ex::Prop1Result exact = ex::run_prop1(white);
  bool zero = exact.all_ok;
  for (const ex::Prop1Row& row : exact.rows)
    if (row.dbl_s_prime != 0.0 || row.dbl_s_tilde != 0.0) zero = false;

  Outcome out;
  out.pass = result.all_ok && decreasing && zero;
  out.detail = "medians";
  for (double v : med) out.detail += " " + fmt(v);
  out.detail += zero ? "; instantaneous model exactly 0"
                     : "; instantaneous model NOT exactly 0";
  return out;
}

nlohmann::json criterion2_config_json() {
  return nlohmann::json{
      {"model", {{"kind", "white_noise"}, {"innovation_law", "gaussian"}}},
      {"n_list", {4096, 16384, 65536}},
      {"alpha", 0.6},
      {"c_target", 0.25},
      {"theta_list", {0.4, 1.1, 1.9, 2.7, 3.6}},
      {"replicates", 3},
      {"seed", kMasterSeed},
  };
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion10(const std::string& cli_path) {
  Outcome out;
  if (!cli_path.empty()) {
    const std::filesystem::path work =
        std::filesystem::current_path() / "acceptance_c10";
    std::filesystem::create_directories(work);
    const std::filesystem::path config = work / "config.json";
    {
      std::ofstream cfg(config);
      cfg << criterion2_config_json().dump(2) << '\n';
    }
    for (int threads : {1, 4}) {
      const std::string cmd = "\"" + cli_path + "\" theorem1 --config \"" +
                              config.string() + "\" --out \"" +
                              (work / ("run" + std::to_string(threads))).string() +
                              "\" --threads " + std::to_string(threads);
      if (std::system(cmd.c_str()) != 0) {
        out.pass = false;
        out.detail = "cli run with " + std::to_string(threads) + " threads failed";
        return out;
      }
    }
    const std::string a = read_file(work / "run1" / "theorem1.csv");
    const std::string b = read_file(work / "run4" / "theorem1.csv");
    out.pass = !a.empty() && a == b;
    out.detail = out.pass ? "csv byte-identical across thread counts"
                          : "csv outputs differ";
    return out;
  }
  ex::ExperimentConfig cfg = ex::config_from_json(criterion2_config_json());
  cfg.threads = 1;
  const ex::Theorem1Result serial = ex::run_theorem1(cfg);
  cfg.threads = 4;
  const ex::Theorem1Result parallel = ex::run_theorem1(cfg);
  std::ostringstream a, b;
  ex::write_theorem1_csv(a, serial.rows);
  ex::write_theorem1_csv(b, parallel.rows);
  out.pass = a.str() == b.str();
  out.detail = out.pass ? "csv byte-identical across thread counts"
                        : "csv outputs differ";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const int which = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::string cli_path = argc > 2 ? argv[2] : "";
  int failures = 0;
  for (int criterion = 1; criterion <= 10; ++criterion) {
    if (which != 0 && criterion != which) continue;
    Outcome out;
    try {
      switch (criterion) {
        case 1: out = criterion1(); break;
        case 2: out = criterion2(); break;
        case 3: out = criterion3(); break;
        case 4: out = criterion4(); break;
        case 5: out = criterion5(); break;
        case 6: out = criterion6(); break;
        case 7: out = criterion7(); break;
        case 8: out = criterion8(); break;
        case 9: out = criterion9(); break;
        case 10: out = criterion10(cli_path); break;
        default: out.detail = "unknown criterion"; break;
      }
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::cout << "criterion " << criterion << ": "
              << (out.pass ? "PASS" : "FAIL") << " (" << out.detail << ")\n";
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
