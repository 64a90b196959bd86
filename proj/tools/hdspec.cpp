#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdspec/experiments.hpp"
#include "hdspec/measures.hpp"
#include "hdspec/mp_solver.hpp"

namespace {

namespace ex = hdspec::experiments;
namespace mp = hdspec::mp;
namespace measures = hdspec::measures;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string format;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "output directory (default: stdout)");
  o.seed_opt = sub->add_option("--seed", o.seed, "master seed override");
  o.threads_opt = sub->add_option("--threads", o.threads, "thread count override");
  sub->add_option("--format", o.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config parse error: " + std::string(e.what()));
  }
  return j;
}

ex::ExperimentConfig load_config(const CommonOpts& o) {
  ex::ExperimentConfig cfg;
  try {
    cfg = ex::config_from_json(load_json(o.config_path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config error: " + std::string(e.what()));
  }
  if (o.seed_opt && o.seed_opt->count() > 0) cfg.seed = o.seed;
  if (o.threads_opt && o.threads_opt->count() > 0) cfg.threads = o.threads;
  return cfg;
}

void with_output(const CommonOpts& o, const std::string& filename,
                 const std::function<void(std::ostream&)>& emit) {
  if (o.out_dir.empty()) {
    emit(std::cout);
    return;
  }
  std::filesystem::create_directories(o.out_dir);
  const std::filesystem::path path = std::filesystem::path(o.out_dir) / filename;
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path.string());
  emit(out);
}

std::string jnum(double x) {
  if (!std::isfinite(x)) return "null";
  return measures::format_double(x);
}

std::string jstr(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

void write_theorem1_json(std::ostream& os, const std::vector<ex::Theorem1Row>& rows) {
  os << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << "  {\"n\": " << r.n << ", \"d\": " << r.d << ", \"m\": " << r.m
       << ", \"theta\": " << jnum(r.theta) << ", \"r\": " << r.r
       << ", \"innovation_law\": " << jstr(r.innovation_law)
       << ", \"seed\": " << r.seed << ", \"dbl\": " << jnum(r.dbl)
       << ", \"runtime_ms\": " << jnum(r.runtime_ms);
    if (!r.ok) os << ", \"error\": " << jstr(r.error);
    os << '}' << (i + 1 < rows.size() ? "," : "") << '\n';
  }
  os << "]\n";
}

void write_prop1_json(std::ostream& os, const std::vector<ex::Prop1Row>& rows) {
  os << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << "  {\"n\": " << r.n << ", \"d\": " << r.d << ", \"m\": " << r.m
       << ", \"theta\": " << jnum(r.theta) << ", \"r\": " << r.r
       << ", \"innovation_law\": " << jstr(r.innovation_law)
       << ", \"seed\": " << r.seed << ", \"dbl_s_prime\": " << jnum(r.dbl_s_prime)
       << ", \"dbl_s_tilde\": " << jnum(r.dbl_s_tilde)
       << ", \"runtime_ms\": " << jnum(r.runtime_ms);
    if (!r.ok) os << ", \"error\": " << jstr(r.error);
    os << '}' << (i + 1 < rows.size() ? "," : "") << '\n';
  }
  os << "]\n";
}

void write_wick_json(std::ostream& os, const ex::WickResult& result) {
  os << "{\n  \"inequality_pass\": " << result.inequality_pass
     << ",\n  \"mc_pass\": " << result.mc_pass << ",\n  \"instances\": [\n";
  const auto& v = result.instances;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& inst = v[i];
    os << "    {\"d\": " << inst.d << ", \"M\": " << inst.m_cols
       << ", \"L\": " << inst.l_power << ", \"seed\": " << inst.seed;
    if (inst.ok) {
      os << ", \"exact\": " << jnum(inst.exact)
         << ", \"b_norm\": " << jnum(inst.b_op_norm)
         << ", \"gershgorin\": " << jnum(inst.gershgorin)
         << ", \"bound\": " << jnum(inst.bound)
         << ", \"inequality_ok\": " << (inst.inequality_ok ? "true" : "false");
      if (inst.mc_ran)
        os << ", \"mc_mean\": " << jnum(inst.mc_mean)
           << ", \"mc_stderr\": " << jnum(inst.mc_stderr)
           << ", \"mc_within_3\": " << (inst.mc_within_3 ? "true" : "false");
    } else {
      os << ", \"error\": " << jstr(inst.error);
    }
    os << '}' << (i + 1 < v.size() ? "," : "") << '\n';
  }
  os << "  ]\n}\n";
}

void write_wick_csv(std::ostream& os, const ex::WickResult& result) {
  os << "d,M,L,seed,exact,b_norm,gershgorin,bound,inequality_ok,"
        "mc_mean,mc_stderr,mc_within_3,ok\n";
  for (const auto& inst : result.instances)
    os << inst.d << ',' << inst.m_cols << ',' << inst.l_power << ',' << inst.seed
       << ',' << measures::format_double(inst.exact) << ','
       << measures::format_double(inst.b_op_norm) << ','
       << measures::format_double(inst.gershgorin) << ','
       << measures::format_double(inst.bound) << ','
       << (inst.inequality_ok ? 1 : 0) << ','
       << measures::format_double(inst.mc_mean) << ','
       << measures::format_double(inst.mc_stderr) << ','
       << (inst.mc_within_3 ? 1 : 0) << ',' << (inst.ok ? 1 : 0) << '\n';
}

void write_density_json(std::ostream& os, const std::vector<ex::DensityRow>& rows) {
  os << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    os << "  {\"x\": " << jnum(rows[i].x)
       << ", \"esd_hist_density\": " << jnum(rows[i].esd_hist_density)
       << ", \"mp_density\": " << jnum(rows[i].mp_density) << '}'
       << (i + 1 < rows.size() ? "," : "") << '\n';
  os << "]\n";
}

void write_check_model_csv(std::ostream& os, const nlohmann::json& report) {
  os << "n,m,d,c_n\n";
  for (const auto& row : report.at("schedule"))
    os << row.at("n").get<long>() << ',' << row.at("m").get<long>() << ','
       << row.at("d").get<long>() << ','
       << measures::format_double(row.at("c_n").get<double>()) << '\n';
}

void write_check_model_json(std::ostream& os, const nlohmann::json& report) {
  os << "{\n  \"schedule\": [\n";
  const auto& schedule = report.at("schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& row = schedule[i];
    os << "    {\"n\": " << row.at("n").get<long>()
       << ", \"m\": " << row.at("m").get<long>()
       << ", \"d\": " << row.at("d").get<long>()
       << ", \"c_n\": " << jnum(row.at("c_n").get<double>()) << '}'
       << (i + 1 < schedule.size() ? "," : "") << '\n';
  }
  const auto& a = report.at("assumptions");
  os << "  ],\n  \"assumptions\": {\n    \"weighted_coeff_sum\": "
     << jnum(a.at("weighted_coeff_sum").get<double>())
     << ",\n    \"weighted_sum_ok\": "
     << (a.at("weighted_sum_ok").get<bool>() ? "true" : "false");
  auto emit_list = [&os](const char* name, const std::vector<double>& xs) {
    os << ",\n    \"" << name << "\": [";
    for (std::size_t i = 0; i < xs.size(); ++i)
      os << jnum(xs[i]) << (i + 1 < xs.size() ? ", " : "");
    os << ']';
  };
  emit_list("coeff_norms", a.at("coeff_norms").get<std::vector<double>>());
  emit_list("tail_sums", a.at("tail_sums").get<std::vector<double>>());
  emit_list("tail_bounds", a.at("tail_bounds").get<std::vector<double>>());
  os << ",\n    \"tail_ok\": [";
  const auto tail_ok = a.at("tail_ok").get<std::vector<bool>>();
  for (std::size_t i = 0; i < tail_ok.size(); ++i)
    os << (tail_ok[i] ? "true" : "false") << (i + 1 < tail_ok.size() ? ", " : "");
  os << "]\n  }\n}\n";
}

struct MpSolveRow {
  std::complex<double> z;
  mp::MPDiagnostics diag;
};

std::vector<MpSolveRow> run_mp_solve(const CommonOpts& o) {
  const nlohmann::json j = load_json(o.config_path);
  if (!j.contains("mp")) throw std::invalid_argument("mp-solve: config lacks \"mp\"");
  const auto& spec = j.at("mp");
  mp::MPSolution sol;
  sol.H.atoms = spec.at("H").at("atoms").get<std::vector<double>>();
  sol.H.weights = spec.at("H").at("weights").get<std::vector<double>>();
  sol.c = spec.at("c").get<double>();
  sol.tol = spec.value("tol", 1e-12);
  sol.max_iter = spec.value("max_iter", 10000);
  std::vector<MpSolveRow> rows;
  for (const auto& zj : spec.at("z")) {
    if (!zj.is_array() || zj.size() != 2)
      throw std::invalid_argument("mp-solve: z entries must be [re, im] pairs");
    MpSolveRow row;
    row.z = {zj[0].get<double>(), zj[1].get<double>()};
    row.diag = mp::mp_solve_diag(sol, row.z);
    rows.push_back(row);
  }
  return rows;
}

void write_mp_solve_csv(std::ostream& os, const std::vector<MpSolveRow>& rows) {
  os << "z_re,z_im,m_re,m_im,iterations,residual,converged\n";
  for (const auto& row : rows)
    os << measures::format_double(row.z.real()) << ','
       << measures::format_double(row.z.imag()) << ','
       << measures::format_double(row.diag.m.real()) << ','
       << measures::format_double(row.diag.m.imag()) << ','
       << row.diag.iterations << ','
       << measures::format_double(row.diag.residual) << ','
       << (row.diag.converged ? 1 : 0) << '\n';
}

void write_mp_solve_json(std::ostream& os, const std::vector<MpSolveRow>& rows) {
  os << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    os << "  {\"z_re\": " << jnum(row.z.real())
       << ", \"z_im\": " << jnum(row.z.imag())
       << ", \"m_re\": " << jnum(row.diag.m.real())
       << ", \"m_im\": " << jnum(row.diag.m.imag())
       << ", \"iterations\": " << row.diag.iterations
       << ", \"residual\": " << jnum(row.diag.residual)
       << ", \"converged\": " << (row.diag.converged ? "true" : "false") << '}'
       << (i + 1 < rows.size() ? "," : "") << '\n';
  }
  os << "]\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Smoothed-periodogram spectral statistics for high-dimensional linear "
      "time series"};
  app.require_subcommand(1);

  CommonOpts theorem1_opts, prop1_opts, wick_opts, density_opts, mp_opts,
      check_opts;
  CLI::App* cmd_theorem1 =
      app.add_subcommand("theorem1", "Convergence sweep of esd(S) to the MP law");
  CLI::App* cmd_prop1 =
      app.add_subcommand("prop1", "Coupling sweep of S against its approximants");
  CLI::App* cmd_wick =
      app.add_subcommand("wick", "Random factor-model trace-moment verification");
  CLI::App* cmd_density =
      app.add_subcommand("density", "ESD histogram and MP density curve");
  CLI::App* cmd_mp = app.add_subcommand("mp-solve", "Evaluate the MP fixed point");
  CLI::App* cmd_check =
      app.add_subcommand("check-model", "Schedule table and model checks");
  add_common(cmd_theorem1, theorem1_opts);
  add_common(cmd_prop1, prop1_opts);
  add_common(cmd_wick, wick_opts);
  add_common(cmd_density, density_opts);
  add_common(cmd_mp, mp_opts);
  add_common(cmd_check, check_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_theorem1->parsed()) {
      const ex::ExperimentConfig cfg = load_config(theorem1_opts);
      const ex::Theorem1Result result = ex::run_theorem1(cfg);
      const bool json = theorem1_opts.format == "json";
      with_output(theorem1_opts, json ? "theorem1.json" : "theorem1.csv",
                  [&](std::ostream& os) {
                    json ? write_theorem1_json(os, result.rows)
                         : ex::write_theorem1_csv(os, result.rows);
                  });
      if (!result.all_ok) {
        std::cerr << "theorem1: one or more rows failed\n";
        return 2;
      }
    } else if (cmd_prop1->parsed()) {
      const ex::ExperimentConfig cfg = load_config(prop1_opts);
      const ex::Prop1Result result = ex::run_prop1(cfg);
      const bool json = prop1_opts.format == "json";
      with_output(prop1_opts, json ? "prop1.json" : "prop1.csv",
                  [&](std::ostream& os) {
                    json ? write_prop1_json(os, result.rows)
                         : ex::write_prop1_csv(os, result.rows);
                  });
      if (!result.all_ok) {
        std::cerr << "prop1: one or more rows failed\n";
        return 2;
      }
    } else if (cmd_wick->parsed()) {
      const ex::ExperimentConfig cfg = load_config(wick_opts);
      const ex::WickResult result = ex::run_wick(cfg);
      const bool csv = wick_opts.format == "csv";
      with_output(wick_opts, csv ? "wick.csv" : "wick.json",
                  [&](std::ostream& os) {
                    csv ? write_wick_csv(os, result) : write_wick_json(os, result);
                  });
      if (!result.all_ok) {
        std::cerr << "wick: one or more instances failed\n";
        return 2;
      }
    } else if (cmd_density->parsed()) {
      const ex::ExperimentConfig cfg = load_config(density_opts);
      const std::vector<ex::DensityRow> rows = ex::emit_density(cfg);
      const bool json = density_opts.format == "json";
      with_output(density_opts, json ? "density.json" : "density.csv",
                  [&](std::ostream& os) {
                    json ? write_density_json(os, rows)
                         : ex::write_density_csv(os, rows);
                  });
    } else if (cmd_mp->parsed()) {
      const std::vector<MpSolveRow> rows = run_mp_solve(mp_opts);
      const bool csv = mp_opts.format == "csv";
      with_output(mp_opts, csv ? "mp_solve.csv" : "mp_solve.json",
                  [&](std::ostream& os) {
                    csv ? write_mp_solve_csv(os, rows) : write_mp_solve_json(os, rows);
                  });
      for (const auto& row : rows)
        if (!row.diag.converged) {
          std::cerr << "mp-solve: fixed point did not converge\n";
          return 2;
        }
    } else if (cmd_check->parsed()) {
      const ex::ExperimentConfig cfg = load_config(check_opts);
      const nlohmann::json report = ex::check_model(cfg);
      const bool json = check_opts.format == "json";
      with_output(check_opts, json ? "check_model.json" : "check_model.csv",
                  [&](std::ostream& os) {
                    json ? write_check_model_json(os, report)
                         : write_check_model_csv(os, report);
                  });
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
