#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hdspec/measures.hpp"
#include "hdspec/mp_solver.hpp"
#include "hdspec/process.hpp"
#include "hdspec/spectral.hpp"
#include "hdspec/wick.hpp"

// Experiment harness: bandwidth/dimension schedules, convergence sweeps for
// the smoothed-periodogram spectral law, coupling sweeps for the
// approximants, and randomized trace-moment verification.  All runs are
// deterministic functions of the config and master seed; replicate tasks
// draw their seeds from a counter hash so results do not depend on the
// thread count.

namespace hdspec::experiments {

enum class ModelKind { white_noise, rotating_ma, explicit_model };

struct ModelFamily {
  ModelKind kind = ModelKind::white_noise;
  process::InnovationLaw law = process::InnovationLaw::gaussian;
  int q = 2;                     // rotating_ma order
  double decay = 0.5;            // rotating_ma decay
  std::uint64_t model_seed = 1;  // rotating_ma seed
  std::optional<process::LinearProcessModel> explicit_model;
};

inline process::LinearProcessModel instantiate(const ModelFamily& family, int d) {
  switch (family.kind) {
    case ModelKind::white_noise: {
      process::LinearProcessModel model;
      model.d = d;
      model.coeffs = {Eigen::MatrixXd::Identity(d, d)};
      model.law = family.law;
      return model;
    }
    case ModelKind::rotating_ma: {
      process::LinearProcessModel model =
          process::make_rotating_ma(d, family.q, family.decay, family.model_seed);
      model.law = family.law;
      return model;
    }
    case ModelKind::explicit_model: {
      if (!family.explicit_model)
        throw std::invalid_argument("model family: explicit model missing");
      if (family.explicit_model->d != d)
        throw std::invalid_argument(
            "model family: explicit model dimension does not match schedule");
      return *family.explicit_model;
    }
  }
  throw std::invalid_argument("model family: unknown kind");
}

struct WickParams {
  int instances = 100;
  int d_max = 4;
  int m_max = 4;
  int l_max = 3;
  int u_max = 2;
  long mc_samples = 0;  // 0 disables the Monte-Carlo arm
};

struct DensityParams {
  long bins = 128;
};

struct ExperimentConfig {
  ModelFamily family;
  std::vector<long> n_list;
  double alpha = 0.6;
  double c_target = 0.25;
  std::vector<double> theta_list;
  int replicates = 1;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  bool timing = false;
  WickParams wick;
  DensityParams density;
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    const std::string kind = m.value("kind", std::string("white_noise"));
    if (kind == "white_noise") {
      cfg.family.kind = ModelKind::white_noise;
    } else if (kind == "rotating_ma") {
      cfg.family.kind = ModelKind::rotating_ma;
      cfg.family.q = m.value("Q", 2);
      cfg.family.decay = m.value("decay", 0.5);
      cfg.family.model_seed = m.value("model_seed", std::uint64_t{1});
    } else if (kind == "explicit") {
      cfg.family.kind = ModelKind::explicit_model;
      cfg.family.explicit_model = process::model_from_json(m.at("spec"));
    } else {
      throw std::invalid_argument("config: unknown model kind: " + kind);
    }
    cfg.family.law = process::innovation_law_from_string(
        m.value("innovation_law", std::string("gaussian")));
  }
  cfg.n_list = j.value("n_list", std::vector<long>{});
  cfg.alpha = j.value("alpha", 0.6);
  cfg.c_target = j.value("c_target", 0.25);
  cfg.theta_list = j.value("theta_list", std::vector<double>{});
  cfg.replicates = j.value("replicates", 1);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.threads = j.value("threads", 0);
  cfg.timing = j.value("timing", false);
  if (j.contains("wick")) {
    const auto& w = j.at("wick");
    cfg.wick.instances = w.value("instances", 100);
    cfg.wick.d_max = w.value("d_max", 4);
    cfg.wick.m_max = w.value("M_max", 4);
    cfg.wick.l_max = w.value("L_max", 3);
    cfg.wick.u_max = w.value("U_max", 2);
    cfg.wick.mc_samples = w.value("mc_samples", 0L);
  }
  if (j.contains("density")) cfg.density.bins = j.at("density").value("bins", 128L);
  return cfg;
}

struct ScheduleEntry {
  long n = 0;
  long m = 0;
  long d = 0;
  double c_n = 0.0;
};

inline std::vector<ScheduleEntry> make_schedule(const ExperimentConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw std::invalid_argument("schedule: alpha must lie in (0,1)");
  if (!(cfg.c_target > 0.0))
    throw std::invalid_argument("schedule: c_target must be positive");
  if (cfg.n_list.empty()) throw std::invalid_argument("schedule: empty n_list");
  std::vector<ScheduleEntry> schedule;
  for (long n : cfg.n_list) {
    if (n < 2) throw std::invalid_argument("schedule: n must be >= 2");
    ScheduleEntry e;
    e.n = n;
    e.m = std::llround(std::pow(static_cast<double>(n), cfg.alpha));
    e.d = std::llround(cfg.c_target * static_cast<double>(2 * e.m + 1));
    if (e.m < 1 || 2 * e.m + 1 > n)
      throw std::invalid_argument("schedule: bandwidth 2m+1 exceeds n");
    if (e.d < 2) throw std::invalid_argument("schedule: d must be >= 2");
    e.c_n = static_cast<double>(e.d) / static_cast<double>(2 * e.m + 1);
    schedule.push_back(e);
  }
  return schedule;
}

namespace detail {

template <typename Fn>
void parallel_for(long count, int threads, Fn fn) {
  if (count <= 0) return;
  long nthreads = threads > 0
                      ? threads
                      : static_cast<long>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  nthreads = std::min<long>(nthreads, count);
  if (nthreads == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (long t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

inline std::uint64_t task_seed(std::uint64_t master, std::size_t n_idx,
                               std::size_t theta_idx, int rep) {
  const std::uint64_t slot =
      (static_cast<std::uint64_t>(n_idx) << 32) | static_cast<std::uint64_t>(theta_idx);
  return rng::key4(master, rng::kTaskSeed, slot, static_cast<std::uint64_t>(rep));
}

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled) {
    if (enabled_) start_ = std::chrono::steady_clock::now();
  }
  double elapsed_ms() const {
    if (!enabled_) return 0.0;
    const auto now = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(now - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

struct Theorem1Row {
  long n = 0;
  long d = 0;
  long m = 0;
  double theta = 0.0;
  long r = 0;
  std::string innovation_law;
  std::uint64_t seed = 0;
  double dbl = 0.0;
  double runtime_ms = 0.0;
  bool ok = true;
  std::string error;
};

struct Theorem1Result {
  std::vector<Theorem1Row> rows;
  bool all_ok = true;
};

inline Theorem1Result run_theorem1(const ExperimentConfig& cfg) {
  const std::vector<ScheduleEntry> schedule = make_schedule(cfg);
  if (cfg.theta_list.empty())
    throw std::invalid_argument("theorem1: empty theta_list");
  if (cfg.replicates < 0)
    throw std::invalid_argument("theorem1: negative replicates");

  const std::size_t n_count = schedule.size();
  const std::size_t t_count = cfg.theta_list.size();

  std::vector<process::LinearProcessModel> models;
  models.reserve(n_count);
  for (const ScheduleEntry& e : schedule)
    models.push_back(instantiate(cfg.family, static_cast<int>(e.d)));

  // Reference measures are shared across replicates of an (n, theta) cell.
  std::vector<measures::DiscreteMeasure> nu_cache(n_count * t_count);
  for (std::size_t ni = 0; ni < n_count; ++ni)
    for (std::size_t ti = 0; ti < t_count; ++ti) {
      const ScheduleEntry& e = schedule[ni];
      const spectral::FrequencyIndex freq =
          spectral::grid_index(cfg.theta_list[ti], e.n);
      const mp::MPSolution sol =
          mp::nu_n(models[ni], freq.theta_snapped, e.d, e.m);
      nu_cache[ni * t_count + ti] = mp::nu_discretized(sol);
    }

  const long total =
      static_cast<long>(n_count * t_count) * static_cast<long>(cfg.replicates);
  Theorem1Result result;
  result.rows.resize(static_cast<std::size_t>(total));

  detail::parallel_for(total, cfg.threads, [&](long idx) {
    const std::size_t ni =
        static_cast<std::size_t>(idx) / (t_count * static_cast<std::size_t>(cfg.replicates));
    const std::size_t rem =
        static_cast<std::size_t>(idx) % (t_count * static_cast<std::size_t>(cfg.replicates));
    const std::size_t ti = rem / static_cast<std::size_t>(cfg.replicates);
    const int rep = static_cast<int>(rem % static_cast<std::size_t>(cfg.replicates));

    const ScheduleEntry& e = schedule[ni];
    Theorem1Row row;
    row.n = e.n;
    row.d = e.d;
    row.m = e.m;
    row.theta = cfg.theta_list[ti];
    row.innovation_law = process::to_string(cfg.family.law);
    row.seed = detail::task_seed(cfg.seed, ni, ti, rep);
    const detail::Stopwatch watch(cfg.timing);
    try {
      const spectral::FrequencyIndex freq = spectral::grid_index(row.theta, e.n);
      row.r = freq.r;
      const process::SimulationOutput sim =
          process::simulate(models[ni], e.n, row.seed);
      const spectral::SmoothedPeriodogram sp =
          spectral::daniell_matrix(sim.data, row.theta, e.m);
      row.dbl = measures::bl_distance(spectral::esd(sp),
                                      nu_cache[ni * t_count + ti]);
    } catch (const std::exception& ex) {
      row.ok = false;
      row.error = ex.what();
      row.dbl = std::numeric_limits<double>::quiet_NaN();
    }
    row.runtime_ms = watch.elapsed_ms();
    result.rows[static_cast<std::size_t>(idx)] = std::move(row);
  });

  for (const Theorem1Row& row : result.rows)
    if (!row.ok) result.all_ok = false;
  return result;
}

inline void write_theorem1_csv(std::ostream& os,
                               const std::vector<Theorem1Row>& rows) {
  os << "n,d,m,theta,r,innovation_law,seed,dbl,runtime_ms\n";
  for (const Theorem1Row& row : rows)
    os << row.n << ',' << row.d << ',' << row.m << ','
       << measures::format_double(row.theta) << ',' << row.r << ','
       << row.innovation_law << ',' << row.seed << ','
       << measures::format_double(row.dbl) << ','
       << measures::format_double(row.runtime_ms) << '\n';
}

// Median of the dbl column per sample size, in n_list order.
inline std::vector<double> median_dbl_by_n(const std::vector<Theorem1Row>& rows,
                                           const std::vector<long>& n_list) {
  std::vector<double> medians;
  for (long n : n_list) {
    std::vector<double> vals;
    for (const Theorem1Row& row : rows)
      if (row.n == n && row.ok) vals.push_back(row.dbl);
    medians.push_back(detail::median(std::move(vals)));
  }
  return medians;
}

struct Prop1Row {
  long n = 0;
  long d = 0;
  long m = 0;
  double theta = 0.0;
  long r = 0;
  std::string innovation_law;
  std::uint64_t seed = 0;
  double dbl_s_prime = 0.0;
  double dbl_s_tilde = 0.0;
  double runtime_ms = 0.0;
  bool ok = true;
  std::string error;
};

struct Prop1Result {
  std::vector<Prop1Row> rows;
  bool all_ok = true;
};

inline Prop1Result run_prop1(const ExperimentConfig& cfg) {
  const std::vector<ScheduleEntry> schedule = make_schedule(cfg);
  if (cfg.theta_list.empty()) throw std::invalid_argument("prop1: empty theta_list");
  if (cfg.replicates < 0) throw std::invalid_argument("prop1: negative replicates");

  const std::size_t n_count = schedule.size();
  const std::size_t t_count = cfg.theta_list.size();

  std::vector<process::LinearProcessModel> models;
  models.reserve(n_count);
  for (const ScheduleEntry& e : schedule)
    models.push_back(instantiate(cfg.family, static_cast<int>(e.d)));

  const long total =
      static_cast<long>(n_count * t_count) * static_cast<long>(cfg.replicates);
  Prop1Result result;
  result.rows.resize(static_cast<std::size_t>(total));

  detail::parallel_for(total, cfg.threads, [&](long idx) {
    const std::size_t ni =
        static_cast<std::size_t>(idx) / (t_count * static_cast<std::size_t>(cfg.replicates));
    const std::size_t rem =
        static_cast<std::size_t>(idx) % (t_count * static_cast<std::size_t>(cfg.replicates));
    const std::size_t ti = rem / static_cast<std::size_t>(cfg.replicates);
    const int rep = static_cast<int>(rem % static_cast<std::size_t>(cfg.replicates));

    const ScheduleEntry& e = schedule[ni];
    Prop1Row row;
    row.n = e.n;
    row.d = e.d;
    row.m = e.m;
    row.theta = cfg.theta_list[ti];
    row.innovation_law = process::to_string(cfg.family.law);
    row.seed = detail::task_seed(cfg.seed, ni, ti, rep);
    const detail::Stopwatch watch(cfg.timing);
    try {
      const spectral::FrequencyIndex freq = spectral::grid_index(row.theta, e.n);
      row.r = freq.r;
      const process::SimulationOutput sim =
          process::simulate(models[ni], e.n, row.seed);
      const spectral::SmoothedPeriodogram sp =
          spectral::daniell_matrix(sim.data, row.theta, e.m);
      const measures::DiscreteMeasure mu_s = spectral::esd(sp);
      const spectral::SmoothedPeriodogram sp_prime =
          spectral::approx_s_prime(models[ni], e.n, row.theta, e.m, row.seed);
      const spectral::SmoothedPeriodogram sp_tilde =
          spectral::approx_s_tilde(models[ni], e.n, row.theta, e.m, row.seed);
      row.dbl_s_prime = measures::bl_distance(mu_s, spectral::esd(sp_prime));
      row.dbl_s_tilde = measures::bl_distance(mu_s, spectral::esd(sp_tilde));
    } catch (const std::exception& ex) {
      row.ok = false;
      row.error = ex.what();
      row.dbl_s_prime = std::numeric_limits<double>::quiet_NaN();
      row.dbl_s_tilde = std::numeric_limits<double>::quiet_NaN();
    }
    row.runtime_ms = watch.elapsed_ms();
    result.rows[static_cast<std::size_t>(idx)] = std::move(row);
  });

  for (const Prop1Row& row : result.rows)
    if (!row.ok) result.all_ok = false;
  return result;
}

inline void write_prop1_csv(std::ostream& os, const std::vector<Prop1Row>& rows) {
  os << "n,d,m,theta,r,innovation_law,seed,dbl_s_prime,dbl_s_tilde,runtime_ms\n";
  for (const Prop1Row& row : rows)
    os << row.n << ',' << row.d << ',' << row.m << ','
       << measures::format_double(row.theta) << ',' << row.r << ','
       << row.innovation_law << ',' << row.seed << ','
       << measures::format_double(row.dbl_s_prime) << ','
       << measures::format_double(row.dbl_s_tilde) << ','
       << measures::format_double(row.runtime_ms) << '\n';
}

inline std::vector<double> median_sprime_by_n(const std::vector<Prop1Row>& rows,
                                              const std::vector<long>& n_list) {
  std::vector<double> medians;
  for (long n : n_list) {
    std::vector<double> vals;
    for (const Prop1Row& row : rows)
      if (row.n == n && row.ok) vals.push_back(row.dbl_s_prime);
    medians.push_back(detail::median(std::move(vals)));
  }
  return medians;
}

struct WickInstanceResult {
  int d = 0;
  int m_cols = 0;
  int l_power = 0;
  std::uint64_t seed = 0;
  double exact = 0.0;
  double b_op_norm = 0.0;
  double gershgorin = 0.0;
  double bound = 0.0;
  bool inequality_ok = false;
  bool mc_ran = false;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  bool mc_within_3 = false;
  bool ok = true;
  std::string error;
};

struct WickResult {
  std::vector<WickInstanceResult> instances;
  int inequality_pass = 0;
  int mc_pass = 0;
  bool all_ok = true;
};

inline WickResult run_wick(const ExperimentConfig& cfg) {
  const WickParams& wp = cfg.wick;
  if (wp.instances < 1) throw std::invalid_argument("wick: instances must be >= 1");
  if (wp.d_max < 1 || wp.m_max < 1 || wp.l_max < 1 || wp.u_max < 0)
    throw std::invalid_argument("wick: invalid size limits");

  WickResult result;
  result.instances.resize(static_cast<std::size_t>(wp.instances));

  detail::parallel_for(wp.instances, cfg.threads, [&](long idx) {
    WickInstanceResult inst;
    inst.seed = rng::key3(cfg.seed, rng::kTaskSeed, static_cast<std::uint64_t>(idx));
    try {
      rng::Stream64 gen(inst.seed, rng::kModel);
      inst.d = 1 + static_cast<int>(gen.next_bits() %
                                    static_cast<std::uint64_t>(wp.d_max));
      inst.m_cols = 1 + static_cast<int>(gen.next_bits() %
                                         static_cast<std::uint64_t>(wp.m_max));
      inst.l_power = 1 + static_cast<int>(gen.next_bits() %
                                          static_cast<std::uint64_t>(wp.l_max));
      const int u = static_cast<int>(gen.next_bits() %
                                     static_cast<std::uint64_t>(wp.u_max + 1));
      const double scale =
          1.0 / std::sqrt(static_cast<double>(inst.d) * static_cast<double>(u + 1));
      std::vector<Eigen::MatrixXd> factors;
      for (int k = 0; k <= u; ++k) {
        Eigen::MatrixXd c(inst.d, inst.d);
        for (int col = 0; col < inst.d; ++col)
          for (int row = 0; row < inst.d; ++row)
            c(row, col) = gen.next_gaussian() * scale;
        factors.push_back(std::move(c));
      }
      const wick::BlockCovariance cov =
          wick::make_factor_covariance(inst.d, inst.m_cols, std::move(factors));
      inst.exact = wick::exact_trace_moment(cov, inst.l_power);
      const wick::BNormReport bn = wick::b_norm(cov);
      inst.b_op_norm = bn.op_norm;
      inst.gershgorin = bn.gershgorin;
      inst.bound =
          wick::theorem2_bound(bn.op_norm, inst.l_power, inst.d, inst.m_cols);
      inst.inequality_ok = inst.exact <= inst.bound;
      if (wp.mc_samples > 0) {
        const wick::McEstimate mc = wick::mc_trace_moment(
            cov, inst.l_power, wp.mc_samples,
            rng::key3(cfg.seed, rng::kMonteCarlo, static_cast<std::uint64_t>(idx)));
        inst.mc_ran = true;
        inst.mc_mean = mc.mean;
        inst.mc_stderr = mc.stderr_mean;
        inst.mc_within_3 = std::abs(inst.exact - mc.mean) <= 3.0 * mc.stderr_mean ||
                           inst.exact == mc.mean;
      }
    } catch (const std::exception& ex) {
      inst.ok = false;
      inst.error = ex.what();
    }
    result.instances[static_cast<std::size_t>(idx)] = std::move(inst);
  });

  for (const WickInstanceResult& inst : result.instances) {
    if (!inst.ok) result.all_ok = false;
    if (inst.ok && inst.inequality_ok) ++result.inequality_pass;
    if (inst.ok && inst.mc_ran && inst.mc_within_3) ++result.mc_pass;
  }
  return result;
}

inline nlohmann::json to_json(const WickResult& result) {
  nlohmann::json j;
  j["inequality_pass"] = result.inequality_pass;
  j["mc_pass"] = result.mc_pass;
  j["instances"] = nlohmann::json::array();
  for (const WickInstanceResult& inst : result.instances) {
    nlohmann::json r;
    r["d"] = inst.d;
    r["M"] = inst.m_cols;
    r["L"] = inst.l_power;
    r["seed"] = inst.seed;
    if (inst.ok) {
      r["exact"] = inst.exact;
      r["b_norm"] = inst.b_op_norm;
      r["gershgorin"] = inst.gershgorin;
      r["bound"] = inst.bound;
      r["inequality_ok"] = inst.inequality_ok;
      if (inst.mc_ran) {
        r["mc_mean"] = inst.mc_mean;
        r["mc_stderr"] = inst.mc_stderr;
        r["mc_within_3"] = inst.mc_within_3;
      }
    } else {
      r["error"] = inst.error;
    }
    j["instances"].push_back(std::move(r));
  }
  return j;
}

struct DensityRow {
  double x = 0.0;
  double esd_hist_density = 0.0;
  double mp_density = 0.0;
};

inline std::vector<DensityRow> emit_density(const ExperimentConfig& cfg) {
  const std::vector<ScheduleEntry> schedule = make_schedule(cfg);
  if (schedule.size() != 1 || cfg.theta_list.size() != 1)
    throw std::invalid_argument("density: config must carry exactly one n and theta");
  if (cfg.density.bins < 2)
    throw std::invalid_argument("density: need at least 2 bins");
  const ScheduleEntry& e = schedule.front();
  const double theta = cfg.theta_list.front();
  const process::LinearProcessModel model =
      instantiate(cfg.family, static_cast<int>(e.d));
  const spectral::FrequencyIndex freq = spectral::grid_index(theta, e.n);

  const std::uint64_t seed = detail::task_seed(cfg.seed, 0, 0, 0);
  const process::SimulationOutput sim = process::simulate(model, e.n, seed);
  const spectral::SmoothedPeriodogram sp =
      spectral::daniell_matrix(sim.data, theta, e.m);
  const measures::DiscreteMeasure mu = spectral::esd(sp);

  const mp::MPSolution sol = mp::nu_n(model, freq.theta_snapped, e.d, e.m);
  const double sqrt_c = std::sqrt(sol.c);
  const double hi_mp =
      sol.H.atoms.back() * (1.0 + sqrt_c) * (1.0 + sqrt_c) * 1.05 + 0.1;
  const double hi = std::max(mu.atoms.back() * 1.02, hi_mp);

  const long bins = cfg.density.bins;
  const double width = hi / static_cast<double>(bins);
  std::vector<DensityRow> rows(static_cast<std::size_t>(bins));
  std::vector<double> centers(static_cast<std::size_t>(bins));
  for (long b = 0; b < bins; ++b)
    centers[static_cast<std::size_t>(b)] = (static_cast<double>(b) + 0.5) * width;

  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    long b = static_cast<long>(std::floor(mu.atoms[i] / width));
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    rows[static_cast<std::size_t>(b)].esd_hist_density += mu.weights[i];
  }
  const std::vector<double> dens = mp::mp_density(sol, centers, 1e-3);
  for (long b = 0; b < bins; ++b) {
    auto& row = rows[static_cast<std::size_t>(b)];
    row.x = centers[static_cast<std::size_t>(b)];
    row.esd_hist_density /= width;
    row.mp_density = dens[static_cast<std::size_t>(b)];
  }
  return rows;
}

inline void write_density_csv(std::ostream& os, const std::vector<DensityRow>& rows) {
  os << "x,esd_hist_density,mp_density\n";
  for (const DensityRow& row : rows)
    os << measures::format_double(row.x) << ','
       << measures::format_double(row.esd_hist_density) << ','
       << measures::format_double(row.mp_density) << '\n';
}

inline nlohmann::json check_model(const ExperimentConfig& cfg) {
  const std::vector<ScheduleEntry> schedule = make_schedule(cfg);
  nlohmann::json j;
  j["schedule"] = nlohmann::json::array();
  for (const ScheduleEntry& e : schedule) {
    nlohmann::json row;
    row["n"] = e.n;
    row["m"] = e.m;
    row["d"] = e.d;
    row["c_n"] = e.c_n;
    j["schedule"].push_back(std::move(row));
  }
  const ScheduleEntry& largest = schedule.back();
  const process::LinearProcessModel model =
      instantiate(cfg.family, static_cast<int>(largest.d));
  process::ModelAssumptions assumptions;
  assumptions.alpha = cfg.alpha;
  assumptions.c = cfg.c_target;
  const process::AssumptionReport report =
      process::check_assumptions(model, assumptions);
  nlohmann::json a;
  a["weighted_coeff_sum"] = report.weighted_coeff_sum;
  a["weighted_sum_ok"] = report.weighted_sum_ok;
  a["coeff_norms"] = report.coeff_norms;
  a["tail_sums"] = report.tail_sums;
  a["tail_bounds"] = report.tail_bounds;
  a["tail_ok"] = report.tail_ok;
  j["assumptions"] = std::move(a);
  return j;
}

}  // namespace hdspec::experiments
