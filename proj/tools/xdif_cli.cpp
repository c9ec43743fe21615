/// @file xdif_cli.cpp
/// @brief Command-line driver: check-params, simulate, sweep, entropy-report.
///
/// Exit codes are a stable contract: 0 ok, 1 config error, 2 failed parameter
/// conditions, 3 abnormal run termination (outputs are still written).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "xdif/config.hpp"
#include "xdif/entropy.hpp"
#include "xdif/galerkin.hpp"
#include "xdif/model.hpp"
#include "xdif/regime.hpp"
#include "xdif/sweeps.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string format = "toml";
  int jobs = 1;
  bool deterministic = false;
};

std::string resolve_out_dir(const CommonOpts& opts, const xdif::RunConfig& cfg) {
  if (const char* env = std::getenv("XDIF_OUT"); env && *env) return env;
  if (!opts.out_dir.empty()) return opts.out_dir;
  return cfg.out_dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void echo_config(const fs::path& dir, const xdif::RunConfig& cfg, const std::string& format) {
  if (format == "json")
    write_text(dir / "config_echo.json", cfg.to_json().dump(2) + "\n");
  else
    write_text(dir / "config_echo.toml", xdif::toml::dump(cfg.to_json()));
}

xdif::RunConfig load(const CommonOpts& opts, bool need_solver) {
  if (opts.config_path.empty()) throw xdif::ConfigError("missing --config");
  return xdif::load_config(opts.config_path, opts.format == "json", need_solver);
}

xdif::InitialData prepared_initial(const xdif::RunConfig& cfg, int k) {
  return xdif::prepare_initial_data(cfg.initial.sampler(1, cfg.domain), cfg.initial.sampler(2, cfg.domain),
                                    cfg.domain, k, cfg.initial.target_mass_u, cfg.initial.target_mass_v,
                                    cfg.initial.lift);
}

int cmd_check_params(const CommonOpts& opts) {
  xdif::RunConfig cfg = load(opts, /*need_solver=*/false);
  xdif::RegimeReport rep = xdif::check_conditions(cfg.model);
  const std::string text = rep.to_json().dump(2) + "\n";
  std::cout << text;
  const std::string dir = resolve_out_dir(opts, cfg);
  if (!dir.empty()) {
    fs::create_directories(dir);
    write_text(fs::path(dir) / "report.json", text);
  }
  if (!rep.all_required_hold()) {
    std::cerr << "failed conditions:";
    for (const std::string& name : rep.failing()) std::cerr << ' ' << name;
    std::cerr << '\n';
    return 2;
  }
  return 0;
}

int cmd_simulate(const CommonOpts& opts) {
  xdif::RunConfig cfg = load(opts, true);
  if (opts.deterministic) cfg.deterministic = true;
  if (!(cfg.level.delta > 0.0 && cfg.level.epsilon > 0.0))
    throw xdif::ConfigError("simulate: the Galerkin system requires level.delta > 0 and level.epsilon > 0");

  const fs::path dir = resolve_out_dir(opts, cfg);
  fs::create_directories(dir);
  echo_config(dir, cfg, opts.format);

  const xdif::CoefficientSet coeffs = xdif::build_coefficients(cfg.model, cfg.level);
  const xdif::InitialData init = prepared_initial(cfg, cfg.level.k);
  const xdif::TrajectoryRecord rec = xdif::integrate(init.w, init.z, coeffs, cfg.domain, cfg.solver);

  {
    std::ofstream f(dir / "trajectory.xtrj", std::ios::binary);
    xdif::write_trajectory(f, cfg.model, cfg.level, cfg.domain, cfg.solver, rec);
  }
  const xdif::EntropyReport rep = xdif::analyze_trajectory(rec, coeffs, cfg.domain);
  {
    std::ofstream f(dir / "entropy.csv");
    xdif::write_entropy_csv(f, rep);
  }
  json summary = xdif::entropy_summary_json(rep);
  summary["termination"] = xdif::to_string(rec.termination);
  summary["termination_time"] = rec.termination_time;
  summary["accepted_steps"] = rec.accepted;
  summary["rejected_steps"] = rec.rejected;
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::cout << "simulate: " << xdif::to_string(rec.termination) << " at t=" << rec.termination_time
            << "  max_inequality_residual=" << rep.max_inequality_residual
            << "  max_identity_residual_norm=" << rep.max_identity_residual_normalized
            << "  mass_drift=" << rep.mass_drift << '\n';
  return rec.termination == xdif::Termination::ReachedTEnd ? 0 : 3;
}

int cmd_sweep(const CommonOpts& opts) {
  xdif::RunConfig cfg = load(opts, true);
  if (!cfg.sweep) throw xdif::ConfigError("sweep: config needs a [sweep] table");

  const fs::path dir = resolve_out_dir(opts, cfg);
  fs::create_directories(dir);
  echo_config(dir, cfg, opts.format);

  xdif::SweepPlan plan;
  plan.params = cfg.model;
  plan.solver = cfg.solver;
  plan.domain = cfg.domain;
  plan.schedule = cfg.sweep->schedule;
  plan.comparison_times = cfg.sweep->comparison_times;
  plan.raw_u = cfg.initial.sampler(1, cfg.domain);
  plan.raw_v = cfg.initial.sampler(2, cfg.domain);
  plan.lift = cfg.initial.lift;
  plan.target_mass_u = cfg.initial.target_mass_u;
  plan.target_mass_v = cfg.initial.target_mass_v;

  auto save_point = [&](std::size_t, const xdif::RegularizationLevel& lvl,
                        const xdif::TrajectoryRecord& rec) {
    const fs::path pdir = dir / xdif::point_dir_name(cfg.model, lvl);
    fs::create_directories(pdir);
    std::ofstream f(pdir / "trajectory.xtrj", std::ios::binary);
    xdif::write_trajectory(f, cfg.model, lvl, cfg.domain, cfg.solver, rec);
    const xdif::CoefficientSet coeffs = xdif::build_coefficients(cfg.model, lvl);
    const xdif::EntropyReport rep = xdif::analyze_trajectory(rec, coeffs, cfg.domain);
    std::ofstream ec(pdir / "entropy.csv");
    xdif::write_entropy_csv(ec, rep);
  };

  const xdif::ConvergenceDiagnostics diag = xdif::run_sweep(plan, opts.jobs, save_point);
  {
    std::ofstream f(dir / "diagnostics.csv");
    xdif::write_diagnostics_csv(f, diag);
  }
  const json summary = xdif::diagnostics_summary_json(diag);
  write_text(dir / "diagnostics.json", summary.dump(2) + "\n");

  if (summary.contains("rates")) {
    std::cout << "axis=" << summary["axis"].get<std::string>() << '\n';
    for (const auto& r : summary["rates"]) {
      std::cout << "  t=" << r["time"].get<double>() << "  rate=";
      if (r["rate"].is_string())
        std::cout << r["rate"].get<std::string>();
      else
        std::cout << r["rate"].get<double>() << "  residual=" << r["residual"].get<double>();
      std::cout << '\n';
    }
  }
  std::cout << "neg-part mass maxima:";
  for (const auto& p : summary["points"]) std::cout << ' ' << p["max_neg_mass_u"].get<double>();
  std::cout << '\n';

  bool abnormal = false;
  for (const auto& p : diag.points)
    if (p.termination != xdif::Termination::ReachedTEnd) abnormal = true;
  return abnormal ? 3 : 0;
}

int cmd_entropy_report(const CommonOpts& opts, const std::string& traj_path, const std::string& form) {
  std::ifstream f(traj_path, std::ios::binary);
  if (!f) throw xdif::ConfigError("entropy-report: cannot open '" + traj_path + "'");
  xdif::LoadedTrajectory lt = xdif::read_trajectory(f);

  xdif::DissipationForm dform = xdif::DissipationForm::Simulation;
  xdif::RegularizationLevel lvl = lt.level;
  if (form == "limit") {
    dform = xdif::DissipationForm::Limit;
    lvl.delta = 0.0;  // theorem-level functionals: no shift, no eps term
    lvl.epsilon = 0.0;
  }
  const xdif::CoefficientSet coeffs = xdif::build_coefficients(lt.params, lvl);
  const xdif::EntropyReport rep = xdif::analyze_trajectory(lt.record, coeffs, lt.domain, dform);

  fs::path dir = ".";
  if (const char* env = std::getenv("XDIF_OUT"); env && *env)
    dir = env;
  else if (!opts.out_dir.empty())
    dir = opts.out_dir;
  fs::create_directories(dir);
  {
    std::ofstream ec(dir / "entropy.csv");
    xdif::write_entropy_csv(ec, rep);
  }
  write_text(dir / "summary.json", xdif::entropy_summary_json(rep).dump(2) + "\n");
  std::cout << "entropy-report (" << xdif::to_string(rep.form)
            << "): max_inequality_residual=" << rep.max_inequality_residual
            << "  max_identity_residual_norm=" << rep.max_identity_residual_normalized
            << "  min_state=" << rep.min_state << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galerkin laboratory for fully cross-diffusive pursuit-evasion systems"};
  app.require_subcommand(1);

  CommonOpts opts;
  app.add_option("--config", opts.config_path,
                 "configuration file (TOML subset, or JSON with --format json)");
  app.add_option("--out", opts.out_dir, "output directory (env XDIF_OUT overrides)");
  app.add_option("--jobs", opts.jobs, "worker count for sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", opts.deterministic, "force deterministic mode");
  app.add_option("--format", opts.format, "config format")->check(CLI::IsMember({"toml", "json"}));

  auto* c_check = app.add_subcommand("check-params", "evaluate the parameter-regime conditions");
  auto* c_sim = app.add_subcommand("simulate", "run one regularized Galerkin simulation");
  auto* c_sweep = app.add_subcommand("sweep", "run a regularization-ladder sweep");
  auto* c_rep = app.add_subcommand("entropy-report", "post-process an existing trajectory");
  std::string traj_path, form = "simulation";
  c_rep->add_option("--trajectory", traj_path, "trajectory file")->required();
  c_rep->add_option("--form", form, "functional form")->check(CLI::IsMember({"simulation", "limit"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_check->parsed()) return cmd_check_params(opts);
    if (c_sim->parsed()) return cmd_simulate(opts);
    if (c_sweep->parsed()) return cmd_sweep(opts);
    if (c_rep->parsed()) return cmd_entropy_report(opts, traj_path, form);
  } catch (const xdif::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
