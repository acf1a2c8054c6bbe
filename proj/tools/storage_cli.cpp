// Command-line driver: solve / simulate / estimate / bootstrap / experiment /
// compare / diagnose. Every run persists its resolved configuration (seed
// included) next to the outputs so any result can be reproduced exactly.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "storage/storage.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
  std::string out = "out";
  std::string input;
  std::string config_path;
  std::uint64_t seed = 1;
  int threads = 0;
  int frequency = 12;
  double annual_rate = 0.05;
  double rho = 0.97, a = 1.5, b = -0.4, delta = 0.02;
  int mz = 64, mx1 = 128, mx2 = 128, iterations = 400;
  std::size_t n_particles = 4096;
  std::size_t ng = 1024;
  int quad_order = 16;
  std::string method = "sml";
  std::size_t t_periods = 500;
  std::size_t replicas = 20;
  std::size_t max_evals = 2000;
  bool restrict_rho = false;

  storage::StructuralParams params() const {
    storage::StructuralParams p;
    p.rho = rho;
    p.a = a;
    p.b = b;
    p.delta = delta;
    p.r = storage::period_rate(annual_rate, frequency);
    return p;
  }

  storage::SolverConfig solver() const {
    storage::SolverConfig cfg;
    cfg.grid.mz = mz;
    cfg.grid.mx1 = mx1;
    cfg.grid.mx2 = mx2;
    cfg.iterations = iterations;
    return cfg;
  }

  storage::EstimateConfig estimate_cfg() const {
    storage::EstimateConfig cfg;
    cfg.method = method == "cml" ? storage::Method::CML : storage::Method::SML;
    cfg.filter.n_particles = n_particles;
    cfg.filter.solver = solver();
    cfg.filter.quad_order = quad_order;
    cfg.filter.resample_grid_size = ng;
    cfg.cml.solver = solver();
    cfg.cml.quad_order = quad_order;
    cfg.optimizer.max_evaluations = max_evals;
    if (restrict_rho) cfg.mask.free[0] = false;
    return cfg;
  }
};

void add_common(CLI::App& app, CommonOpts& o) {
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", o.config_path, "key = value config file");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--input", o.input, "input CSV with header date,price");
  app.add_option("--seed", o.seed, "root RNG seed");
  app.add_option("--threads", o.threads, "worker thread cap (0 = hardware)");
  app.add_option("--frequency", o.frequency, "periods per year (1, 12, 52)")
      ->check(CLI::IsMember({1, 12, 52}));
  app.add_option("--annual-rate", o.annual_rate, "annual interest rate");
  app.add_option("--rho", o.rho);
  app.add_option("--a", o.a);
  app.add_option("--b", o.b);
  app.add_option("--delta", o.delta);
  app.add_option("--mz", o.mz);
  app.add_option("--mx1", o.mx1);
  app.add_option("--mx2", o.mx2);
  app.add_option("--iterations", o.iterations);
  app.add_option("--n-particles", o.n_particles);
  app.add_option("--ng", o.ng, "resampling grid size (power of two)");
  app.add_option("--quad-order", o.quad_order);
  app.add_option("--method", o.method)->check(CLI::IsMember({"sml", "cml"}));
  app.add_option("--t-periods", o.t_periods, "simulated series length");
  app.add_option("--replicas", o.replicas);
  app.add_option("--max-evals", o.max_evals, "optimizer evaluation budget");
  app.add_flag("--restrict-rho", o.restrict_rho, "hold rho fixed at --rho");
}

void write_resolved_config(const std::string& command, const CommonOpts& o) {
  std::filesystem::create_directories(o.out);
  storage::KeyValueMap kv;
  kv["command"] = command;
  kv["input"] = o.input;
  kv["seed"] = std::to_string(o.seed);
  kv["threads"] = std::to_string(o.threads);
  kv["frequency"] = std::to_string(o.frequency);
  kv["annual-rate"] = storage::detail_io::fmt(o.annual_rate);
  kv["rho"] = storage::detail_io::fmt(o.rho);
  kv["a"] = storage::detail_io::fmt(o.a);
  kv["b"] = storage::detail_io::fmt(o.b);
  kv["delta"] = storage::detail_io::fmt(o.delta);
  kv["mz"] = std::to_string(o.mz);
  kv["mx1"] = std::to_string(o.mx1);
  kv["mx2"] = std::to_string(o.mx2);
  kv["iterations"] = std::to_string(o.iterations);
  kv["n-particles"] = std::to_string(o.n_particles);
  kv["ng"] = std::to_string(o.ng);
  kv["quad-order"] = std::to_string(o.quad_order);
  kv["method"] = o.method;
  kv["t-periods"] = std::to_string(o.t_periods);
  kv["replicas"] = std::to_string(o.replicas);
  kv["max-evals"] = std::to_string(o.max_evals);
  kv["restrict-rho"] = o.restrict_rho ? "true" : "false";
  storage::write_key_values(kv, o.out + "/config.txt");
}

storage::PriceSeries require_input(const CommonOpts& o,
                                   std::vector<std::string>* warnings) {
  if (o.input.empty())
    throw CLI::ValidationError("--input", "this command requires --input");
  return storage::load_prices(o.input, o.frequency, warnings);
}

int cmd_solve(const CommonOpts& o) {
  const storage::StructuralParams p = o.params();
  p.validate();
  const storage::PriceFunctionTable pf =
      storage::solve_price_function(p, o.solver());
  write_resolved_config("solve", o);
  {
    std::ofstream out(o.out + "/price_function.csv");
    if (!out) throw storage::IoError("cannot write price_function.csv");
    storage::dump_price_table(pf, out);
  }
  std::printf("solved: %d iterations, final sup change %.3e\n", pf.iterations,
              pf.final_sup_change);
  std::printf("grid: Mz=%d Mx=%d x in [%.4f, %.4f]\n", pf.grid.mz,
              pf.grid.nx(), pf.grid.x_lo(), pf.grid.x_hi());
  return kExitOk;
}

int cmd_simulate(const CommonOpts& o) {
  const storage::StructuralParams p = o.params();
  p.validate();
  const storage::PriceFunctionTable pf =
      storage::solve_price_function(p, o.solver());
  const storage::SimulatedPath path = storage::simulate_dgp(
      p, pf, o.t_periods, o.seed, {}, o.frequency, o.quad_order);
  write_resolved_config("simulate", o);
  {
    std::ofstream out(o.out + "/prices.csv");
    if (!out) throw storage::IoError("cannot write prices.csv");
    out << "date,price\n";
    for (std::size_t t = 0; t < path.prices.values.size(); ++t)
      out << t << ',' << storage::detail_io::fmt(path.prices.values[t]) << '\n';
  }
  const storage::StatsRecord s =
      storage::price_stats(path.prices, &pf, &path.shocks);
  std::printf("T=%zu mean=%.4f sd=%.4f skew=%.4f kurt=%.4f ac1=%.4f "
              "stockout=%.4f\n",
              path.prices.size(), s.mean, s.sd, s.skewness, s.kurtosis, s.ac1,
              s.stockout_frequency.value_or(0.0));
  return kExitOk;
}

int cmd_estimate(const CommonOpts& o) {
  std::vector<std::string> warnings;
  const storage::PriceSeries series = require_input(o, &warnings);
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const storage::EstimationReport rep =
      storage::estimate(series, o.params(), o.seed, o.estimate_cfg());
  write_resolved_config("estimate", o);
  storage::emit_report(rep, series, o.out);
  std::printf("theta: rho=%.6f a=%.6f b=%.6f delta=%.6f\n", rep.theta_hat.rho,
              rep.theta_hat.a, rep.theta_hat.b, rep.theta_hat.delta);
  std::printf("loglik=%.4f converged=%d evaluations=%d\n", rep.loglik,
              int(rep.converged), rep.evaluations);
  return rep.converged ? kExitOk : kExitNumerical;
}

int cmd_bootstrap(const CommonOpts& o) {
  std::vector<std::string> warnings;
  const storage::PriceSeries series = require_input(o, &warnings);
  const storage::EstimateConfig cfg = o.estimate_cfg();
  storage::EstimationReport rep =
      storage::estimate(series, o.params(), o.seed, cfg);
  const storage::BootstrapResult boot = storage::parametric_bootstrap(
      rep.theta_hat, series.size(), o.replicas, o.seed, cfg, o.frequency);
  rep.bootstrap_se = boot.std_errors;
  write_resolved_config("bootstrap", o);
  storage::emit_report(rep, series, o.out);
  std::printf("bootstrap replicas=%zu failed=%d\n",
              boot.replica_estimates.size(), boot.failed_replicas);
  std::printf("se: rho=%.6f a=%.6f b=%.6f delta=%.6f\n", boot.std_errors[0],
              boot.std_errors[1], boot.std_errors[2], boot.std_errors[3]);
  return kExitOk;
}

int cmd_experiment(const CommonOpts& o) {
  storage::ExperimentSpec spec;
  spec.true_params = o.params();
  spec.T = o.t_periods;
  spec.replicas = o.replicas;
  spec.periods_per_year = o.frequency;
  spec.method = o.method == "cml" ? storage::Method::CML : storage::Method::SML;
  spec.seed = o.seed;
  spec.estimate_cfg = o.estimate_cfg();
  const storage::ExperimentResult res = storage::run_experiment(spec);
  write_resolved_config("experiment", o);

  storage::KeyValueMap kv;
  const char* names[4] = {"rho", "a", "b", "delta"};
  for (int k = 0; k < 4; ++k) {
    kv[std::string("bias.") + names[k]] = storage::detail_io::fmt(res.bias[k]);
    kv[std::string("sd.") + names[k]] = storage::detail_io::fmt(res.sd[k]);
    kv[std::string("rmse.") + names[k]] = storage::detail_io::fmt(res.rmse[k]);
    kv[std::string("mc_std.") + names[k]] =
        storage::detail_io::fmt(res.mc_std[k]);
  }
  kv["mc_std.loglik"] = storage::detail_io::fmt(res.mc_std_loglik);
  kv["eval_seconds"] = storage::detail_io::fmt(res.eval_seconds);
  kv["failed_replicas"] = std::to_string(res.failed_replicas);
  storage::write_key_values(kv, o.out + "/experiment.txt");

  std::printf("param        bias          sd        rmse\n");
  for (int k = 0; k < 4; ++k)
    std::printf("%-8s %9.5f  %9.5f  %9.5f\n", names[k], res.bias[k], res.sd[k],
                res.rmse[k]);
  std::printf("eval time %.2fs, failed replicas %d\n", res.eval_seconds,
              res.failed_replicas);
  return kExitOk;
}

int cmd_compare(const CommonOpts& o) {
  std::vector<std::string> warnings;
  const storage::PriceSeries series = require_input(o, &warnings);
  const storage::EstimateConfig cfg = o.estimate_cfg();
  const storage::EstimationReport rep =
      storage::estimate(series, o.params(), o.seed, cfg,
                        /*with_diagnostics=*/false);
  const storage::Ar1Fit ar1 = storage::fit_ar1(series);
  const storage::GarchFit garch = storage::fit_garch(series);
  const storage::MsAr1Fit ms = storage::fit_ms_ar1(series);
  write_resolved_config("compare", o);

  storage::KeyValueMap kv;
  kv["loglik.storage"] = storage::detail_io::fmt(rep.loglik);
  kv["loglik.ar1"] = storage::detail_io::fmt(ar1.loglik);
  kv["loglik.garch"] = storage::detail_io::fmt(garch.loglik);
  kv["loglik.ms_ar1"] = storage::detail_io::fmt(ms.loglik);

  if (o.replicas > 0) {
    const storage::BootstrapResult boot = storage::parametric_bootstrap(
        rep.theta_hat, series.size(), o.replicas, o.seed, cfg, o.frequency);
    const struct {
      const char* name;
      storage::BenchmarkModel model;
    } rivals[] = {{"ar1", storage::BenchmarkModel::Ar1},
                  {"garch", storage::BenchmarkModel::Garch},
                  {"ms_ar1", storage::BenchmarkModel::MsAr1}};
    for (const auto& rv : rivals) {
      const storage::LrComparison c = storage::lr_bootstrap_compare(
          rep.theta_hat, rep.loglik, series, rv.model, boot, cfg);
      kv[std::string("lr.") + rv.name] = storage::detail_io::fmt(c.observed_lr);
      kv[std::string("lr_rank.") + rv.name] = std::to_string(c.rank);
      kv[std::string("lr_replicas.") + rv.name] =
          std::to_string(c.simulated_lrs.size());
    }
  }
  storage::write_key_values(kv, o.out + "/compare.txt");
  std::printf("loglik: storage=%.4f ar1=%.4f garch=%.4f ms=%.4f\n", rep.loglik,
              ar1.loglik, garch.loglik, ms.loglik);
  return kExitOk;
}

int cmd_diagnose(const CommonOpts& o) {
  std::vector<std::string> warnings;
  const storage::PriceSeries series = require_input(o, &warnings);
  const storage::StructuralParams p = o.params();
  p.validate();
  storage::FilterConfig fc;
  fc.n_particles = o.n_particles;
  fc.solver = o.solver();
  fc.quad_order = o.quad_order;
  fc.resample_grid_size = o.ng;
  const storage::FilterOutput out = storage::pf_loglik(p, series, o.seed, fc);
  if (out.degenerate) {
    std::fprintf(stderr, "filter degenerated: all weights underflowed\n");
    return kExitNumerical;
  }
  const storage::DiagnosticsReport d =
      storage::residual_diagnostics(storage::generalized_residuals(out));
  write_resolved_config("diagnose", o);

  storage::KeyValueMap kv;
  kv["loglik"] = storage::detail_io::fmt(out.loglik);
  kv["resid.mean"] = storage::detail_io::fmt(d.mean);
  kv["resid.sd"] = storage::detail_io::fmt(d.sd);
  kv["resid.skewness"] = storage::detail_io::fmt(d.skewness);
  kv["resid.excess_kurtosis"] = storage::detail_io::fmt(d.excess_kurtosis);
  kv["resid.ac1"] = storage::detail_io::fmt(d.ac1);
  kv["p.jarque_bera"] = storage::detail_io::fmt(d.jarque_bera_p);
  kv["p.ks_normal"] = storage::detail_io::fmt(d.ks_normal_p);
  kv["p.ljung_box"] = storage::detail_io::fmt(d.ljung_box_p);
  kv["p.arch_lm"] = storage::detail_io::fmt(d.arch_p);
  storage::write_key_values(kv, o.out + "/diagnostics.txt");
  storage::write_series_csv(o.out + "/stockout_probability.csv", series.dates,
                            out.stockout_probability);
  storage::write_series_csv(o.out + "/implied_storage.csv", series.dates,
                            out.implied_storage);

  std::printf("loglik=%.4f\n", out.loglik);
  std::printf("p-values: JB=%.4f KS=%.4f LB=%.4f ARCH=%.4f\n", d.jarque_bera_p,
              d.ks_normal_p, d.ljung_box_p, d.arch_p);
  return kExitOk;
}

// Config-file keys become long options placed before the command-line flags,
// so explicit flags win (TakeLast policy).
std::vector<std::string> with_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const storage::KeyValueMap kv = storage::load_key_values(path);
  std::vector<std::string> merged;
  for (const auto& [k, v] : kv) {
    if (k == "command" || (k == "input" && v.empty())) continue;
    if (v == "true") {
      merged.push_back("--" + k);
    } else if (v == "false") {
      continue;
    } else if (!v.empty()) {
      merged.push_back("--" + k);
      merged.push_back(v);
    }
  }
  merged.insert(merged.end(), args.begin(), args.end());
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string usage =
      "usage: storage_cli <solve|simulate|estimate|bootstrap|experiment|"
      "compare|diagnose> [options]\n";
  if (argc < 2) {
    std::fputs(usage.c_str(), stderr);
    return kExitUsage;
  }
  const std::string command = argv[1];
  std::vector<std::string> args(argv + 2, argv + argc);

  CommonOpts opts;
  CLI::App app{"competitive storage model toolkit"};
  add_common(app, opts);

  try {
    args = with_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (opts.threads > 0) storage::set_max_threads(opts.threads);

    if (command == "solve") return cmd_solve(opts);
    if (command == "simulate") return cmd_simulate(opts);
    if (command == "estimate") return cmd_estimate(opts);
    if (command == "bootstrap") return cmd_bootstrap(opts);
    if (command == "experiment") return cmd_experiment(opts);
    if (command == "compare") return cmd_compare(opts);
    if (command == "diagnose") return cmd_diagnose(opts);
    std::fprintf(stderr, "unknown command `%s`\n%s", command.c_str(),
                 usage.c_str());
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  } catch (const storage::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
}
