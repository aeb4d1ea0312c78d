#pragma once

// Subcommands: run, welldepth, converge, depend, verify. Each returns a
// process exit status and writes its JSON report into the output directory.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdwave/analysis.hpp"
#include "sdwave/cli/config.hpp"
#include "sdwave/cli/io.hpp"
#include "sdwave/galerkin.hpp"
#include "sdwave/potential_well.hpp"

namespace sdwave::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowup = 3;
inline constexpr int kExitCheckFailed = 4;

// Tolerances of the verification suite.
inline constexpr double kEnergyIdentityTol = 1e-4;
inline constexpr double kMonotoneTol = 1e-10;
inline constexpr double kPoincareTol = 1.0 + 1e-10;
inline constexpr double kVirialTol = 1e-3;
inline constexpr double kDecayR2Min = 0.99;
inline constexpr double kLinearResponseFactor = 2.0;
inline constexpr double kGrowthR2Min = 0.9;

struct CommandOptions {
  std::filesystem::path output_dir = ".";
  std::filesystem::path input;  // verify: trajectory CSV (default output_dir/csv_path)
  bool quiet = false;
  std::ostream* log = &std::cout;
};

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  bool mandatory = true;
};

inline json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Check& c) {
  return {{"name", c.name},
          {"status", c.passed ? "PASS" : "FAIL"},
          {"measured", real_or_null(c.measured)},
          {"tolerance", real_or_null(c.tolerance)},
          {"mandatory", c.mandatory}};
}

inline json to_json(const WellDepthEstimate& w, const std::vector<double>& residuals = {}) {
  json trials = json::array();
  for (std::size_t i = 0; i < w.trials.size(); ++i) {
    json t{{"id", w.trials[i].id}, {"lambda_star", w.trials[i].lambda_star}, {"J_at_max", w.trials[i].J_at_max}};
    if (i < residuals.size()) t["nehari_residual"] = residuals[i];
    trials.push_back(t);
  }
  return {{"d_hat", w.d_hat}, {"safety", w.safety}, {"trials", trials}};
}

inline json to_json(const StableSetVerdict& v) {
  return {{"verdict", to_string(v.verdict)},
          {"trivial_zero", v.trivial_zero},
          {"I0", v.I0},
          {"E0", v.E0},
          {"threshold", v.threshold},
          {"energy_margin", v.energy_margin},
          {"note", "threshold = safety * d_hat with d_hat an upper estimate of the well depth"}};
}

inline json to_json(const DecayFit& f) {
  return {{"C1", f.C1}, {"C2", f.C2}, {"t_start", f.t_start}, {"t_end", f.t_end},
          {"r_squared", f.r_squared}, {"samples", f.samples}};
}

inline json to_json(const EstimateSuite& e) {
  return {{"delta_hat", real_or_null(e.delta_hat)},   {"nehari_ratio_min", real_or_null(e.nehari_ratio_min)},
          {"C0_hat", real_or_null(e.C0_hat)},
          {"CW_hat", real_or_null(e.CW_hat)},         {"poincare_margin", real_or_null(e.poincare_margin)},
          {"M_hat", real_or_null(e.M_hat)},           {"s_samples_used", e.s_samples_used},
          {"violation", e.violation}};
}

inline json config_echo(const RunConfig& c) {
  return {{"dim", c.domain.dim},
          {"length", c.domain.length},
          {"modes_per_dim", c.domain.modes_per_dim},
          {"oversample", c.domain.oversample},
          {"gamma", c.model.gamma},
          {"unsafe_gamma", c.model.unsafe_gamma},
          {"source_enabled", c.model.source_enabled},
          {"dt", c.solver.dt},
          {"t_end", c.solver.t_end},
          {"scheme", to_string(c.solver.scheme)},
          {"report_every", c.solver.report_every},
          {"amplitude", c.initial.amplitude}};
}

/// What the suite knows about the run besides the trajectory.
struct SuiteContext {
  double gamma = 4.0;
  double poincare = std::numeric_limits<double>::quiet_NaN();  // NaN when |grad u_t| is unknown
  bool stable = false;                                          // stable-set verdict IN
  double threshold = std::numeric_limits<double>::quiet_NaN();  // safety * d_hat
};

struct SuiteResult {
  std::vector<Check> checks;
  std::optional<DecayFit> fit;
  EstimateSuite estimates;

  bool mandatory_passed() const {
    for (const auto& c : checks)
      if (c.mandatory && !c.passed) return false;
    return true;
  }
};

inline SuiteResult verification_suite(const Trajectory& traj, const SuiteContext& ctx) {
  SuiteResult s;
  const bool stable = ctx.stable;

  const double ident = check_energy_identity(traj);
  s.checks.push_back({"energy_identity", ident <= kEnergyIdentityTol, ident, kEnergyIdentityTol, true});
  const double mono = max_energy_increase(traj);
  s.checks.push_back({"monotone_dissipation", mono <= kMonotoneTol, mono, kMonotoneTol, true});

  const double T = traj.back().t;
  s.estimates = check_integral_bound(traj, ctx.gamma, ctx.poincare, default_s_samples(T));
  if (std::isfinite(ctx.poincare)) {
    const double pm = s.estimates.poincare_margin;
    s.checks.push_back({"poincare_margin", pm <= kPoincareTol, pm, kPoincareTol, true});
  }

  const double vir = check_virial_identity(traj);
  s.checks.push_back({"virial_identity", vir <= kVirialTol, vir, kVirialTol, stable});

  if (stable) {
    const double E0 = traj.front().E;
    const double c3 = uniform_bound_constant(ctx.gamma);
    double violations = 0.0;
    double worst_bound = 0.0;
    for (const auto& r : traj) {
      if (!(r.I > 0.0) || !(r.E < ctx.threshold)) violations += 1.0;
      worst_bound = std::max(worst_bound, c3 * (2.0 * r.kinetic + r.grad_sq + r.lgamma) / E0);
    }
    s.checks.push_back({"stable_set_invariance", violations == 0.0, violations, 0.0, true});
    s.checks.push_back({"uniform_bound", worst_bound < 1.0, worst_bound, 1.0, true});

    const double nr = s.estimates.nehari_ratio_min;
    s.checks.push_back({"nehari_ratio", nr > 0.0, nr, 0.0, true});

    const bool c0_ok = std::isfinite(s.estimates.C0_hat) && !s.estimates.violation;
    s.checks.push_back({"integral_bound", c0_ok, s.estimates.C0_hat, std::numeric_limits<double>::infinity(), true});

    try {
      s.fit = fit_decay(traj);
      s.checks.push_back({"decay_rate", s.fit->C2 > 0.0, s.fit->C2, 0.0, true});
      // ln E of a damped oscillation is not a straight line, so r^2 is reported without gating the exit code
      s.checks.push_back({"decay_fit_r2", s.fit->r_squared >= kDecayR2Min, s.fit->r_squared, kDecayR2Min, false});
    } catch (const FitError&) {
      // Too few samples above the energy floor: the run decayed before the window.
    }
  }
  return s;
}

inline json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) arr.push_back(to_json(c));
  return arr;
}

inline void log_checks(const CommandOptions& opts, const std::vector<Check>& checks) {
  if (opts.quiet) return;
  for (const auto& c : checks)
    *opts.log << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << " measured=" << format_real(c.measured)
              << (c.mandatory ? "" : " (informational)") << '\n';
}

namespace detail {

struct WellContext {
  std::optional<WellDepthEstimate> well;
  std::vector<double> residuals;
};

inline WellContext well_depth(const RunConfig& cfg, const DomainPtr& dom) {
  WellContext ctx;
  if (!cfg.model.source_enabled) return ctx;
  const auto trials = default_trial_family(dom, cfg.well.trial_count, cfg.well.seed);
  ctx.well = estimate_depth(trials, cfg.model, cfg.well.safety);
  for (const auto& t : ctx.well->trials) {
    const auto m = fiber_moments(trials[t.id], cfg.model);
    ctx.residuals.push_back(nehari_residual(m, t.lambda_star, cfg.model.gamma));
  }
  return ctx;
}

inline void write_json(const CommandOptions& opts, const std::string& name, const json& doc) {
  write_atomic(opts.output_dir / name, doc.dump(2) + "\n");
}

}  // namespace detail

inline int cmd_run(const RunConfig& cfg, const CommandOptions& opts) {
  const auto dom = make_domain(cfg.domain);
  const auto [u0, u1] = build_initial(cfg, dom);

  const auto wc = detail::well_depth(cfg, dom);
  std::optional<StableSetVerdict> verdict;
  if (wc.well) verdict = stable_set_check(u0, u1, wc.well->d_hat, cfg.well.safety, cfg.model);

  double dual_max = 0.0;
  const auto res = integrate(u0, u1, cfg.solver, cfg.model, [&](const SimState& s) {
    if (cfg.model.source_enabled && s.step_count % cfg.solver.report_every == 0)
      dual_max = std::max(dual_max, source_dual_norm(s.u, cfg.model).norm);
  });

  write_atomic(opts.output_dir / cfg.outputs.csv_path, trajectory_csv(res.trajectory));

  json doc{{"command", "run"}, {"config", config_echo(cfg)}, {"status", to_string(res.status)}};
  doc["t_max_estimate"] = real_or_null(res.final_state.t_max_estimate);
  doc["stable_set"] = verdict ? to_json(*verdict) : json(nullptr);
  doc["well_depth"] = wc.well ? to_json(*wc.well, wc.residuals) : json(nullptr);
  const auto dual = source_dual_norm(u0, cfg.model);
  doc["source_dual_norm"] = {{"initial", dual.norm}, {"max_over_reports", dual_max},
                             {"rho", real_or_null(dual.rho)}, {"mu", real_or_null(dual.mu)}};

  int code = kExitOk;
  if (res.status == Status::Blowup) {
    code = kExitBlowup;
    doc["checks"] = json::array();
    if (!opts.quiet) *opts.log << "run: BLOWUP at t ~ " << format_real(res.final_state.t_max_estimate) << '\n';
  } else {
    SuiteContext ctx;
    ctx.gamma = cfg.model.gamma;
    ctx.poincare = dom->poincare_constant();
    ctx.stable = verdict && verdict->in();
    ctx.threshold = verdict ? verdict->threshold : std::numeric_limits<double>::quiet_NaN();
    const auto suite = verification_suite(res.trajectory, ctx);
    doc["checks"] = checks_json(suite.checks);
    doc["decay_fit"] = suite.fit ? to_json(*suite.fit) : json(nullptr);
    doc["estimates"] = to_json(suite.estimates);
    if (!suite.mandatory_passed()) code = kExitCheckFailed;
    if (!opts.quiet) {
      *opts.log << "run: " << to_string(res.status) << ", verdict "
                << (verdict ? to_string(verdict->verdict) : "n/a (linear model)") << ", "
                << res.trajectory.size() << " reports\n";
      log_checks(opts, suite.checks);
    }
  }
  doc["exit_code"] = code;
  write_atomic(opts.output_dir / cfg.outputs.json_path, doc.dump(2) + "\n");
  return code;
}

inline int cmd_welldepth(const RunConfig& cfg, const CommandOptions& opts) {
  if (!cfg.model.source_enabled) throw ConfigError("welldepth requires model.source_enabled = true");
  const auto dom = make_domain(cfg.domain);
  const auto wc = detail::well_depth(cfg, dom);
  json doc{{"command", "welldepth"}, {"config", config_echo(cfg)}, {"well_depth", to_json(*wc.well, wc.residuals)}};
  detail::write_json(opts, "welldepth.json", doc);
  if (!opts.quiet)
    *opts.log << "welldepth: d_hat = " << format_real(wc.well->d_hat) << " over " << wc.well->trials.size()
              << " trials\n";
  return kExitOk;
}

inline int cmd_converge(const RunConfig& cfg, const CommandOptions& opts) {
  const auto dom = make_domain(cfg.domain);
  const auto [u0, u1] = build_initial(cfg, dom);
  const auto table = convergence_study(u0, u1, cfg.solver, cfg.model, cfg.converge.m_list);

  json levels = json::array();
  for (const auto& l : table.levels)
    levels.push_back({{"modes_per_dim", l.modes_per_dim},
                      {"status", to_string(l.status)},
                      {"E_end", real_or_null(l.E_end)},
                      {"l2_end", real_or_null(l.l2_end)},
                      {"projection_loss", l.projection_loss}});
  json doc{{"command", "converge"}, {"config", config_echo(cfg)}, {"levels", levels},
           {"diff_E", table.diff_E}, {"diff_l2", table.diff_l2}, {"passed", table.passed}};
  doc["failed_level"] = table.failed_level >= 0 ? json(table.failed_level) : json(nullptr);
  const int code = table.failed_level >= 0 ? kExitBlowup : table.passed ? kExitOk : kExitCheckFailed;
  doc["exit_code"] = code;
  detail::write_json(opts, "converge.json", doc);
  if (!opts.quiet) {
    *opts.log << "converge: " << (table.passed ? "PASS" : "FAIL") << '\n';
    for (std::size_t i = 0; i < table.diff_E.size(); ++i)
      *opts.log << "  |E(m=" << table.levels[i + 1].modes_per_dim << ") - E(m=" << table.levels[i].modes_per_dim
                << ")| = " << format_real(table.diff_E[i]) << '\n';
  }
  return code;
}

/// Worst ratio max(a/b, b/a) of D/eps^2 between two runs over samples where both are positive.
inline double linear_response_spread(const DependenceRun& a, const DependenceRun& b) {
  double worst = 1.0;
  for (std::size_t i = 0; i < a.samples.size() && i < b.samples.size(); ++i) {
    const double x = a.samples[i].D_over_eps_sq;
    const double y = b.samples[i].D_over_eps_sq;
    if (x > 0.0 && y > 0.0) worst = std::max(worst, std::max(x / y, y / x));
  }
  return worst;
}

inline int cmd_depend(const RunConfig& cfg, const CommandOptions& opts) {
  const auto dom = make_domain(cfg.domain);
  const auto [u0, u1] = build_initial(cfg, dom);
  const auto rep =
      continuous_dependence(u0, u1, cfg.depend.epsilons, cfg.depend_times(), cfg.solver, cfg.model, cfg.depend.seed);

  std::vector<Check> checks;
  json runs = json::array();
  const DependenceRun* prev = nullptr;
  for (const auto& r : rep.runs) {
    json samples = json::array();
    double maxD = 0.0;
    for (const auto& s : r.samples) {
      samples.push_back({{"t", s.t}, {"D", s.D}, {"D_over_eps_sq", s.D_over_eps_sq}});
      maxD = std::max(maxD, s.D);
    }
    runs.push_back({{"eps", r.eps},
                    {"status", to_string(r.status)},
                    {"growth_rate", real_or_null(r.growth_rate)},
                    {"growth_r_squared", real_or_null(r.growth_r_squared)},
                    {"samples", samples}});
    if (r.eps == 0.0) {
      checks.push_back({"zero_perturbation_determinism", maxD == 0.0, maxD, 0.0, true});
      continue;
    }
    if (r.growth_rate > 0.0)
      checks.push_back({"growth_fit_eps_" + format_real(r.eps), r.growth_r_squared >= kGrowthR2Min,
                        r.growth_r_squared, kGrowthR2Min, true});
    if (prev) {
      const double spread = linear_response_spread(*prev, r);
      checks.push_back({"linear_response_" + format_real(prev->eps) + "_vs_" + format_real(r.eps),
                        spread <= kLinearResponseFactor, spread, kLinearResponseFactor, true});
    }
    prev = &r;
  }

  int code = kExitOk;
  if (rep.aborted)
    code = kExitBlowup;
  else
    for (const auto& c : checks)
      if (c.mandatory && !c.passed) code = kExitCheckFailed;

  json doc{{"command", "depend"}, {"config", config_echo(cfg)}, {"base_status", to_string(rep.base_status)},
           {"aborted", rep.aborted}, {"runs", runs}, {"checks", checks_json(checks)}, {"exit_code", code}};
  detail::write_json(opts, "depend.json", doc);
  if (!opts.quiet) {
    *opts.log << "depend: " << (rep.aborted ? "ABORTED" : "completed") << '\n';
    log_checks(opts, checks);
  }
  return code;
}

/// Re-runs the trajectory checks on an existing CSV. |grad u_t| is not in the
/// CSV, so the Poincare margin is not re-checked.
inline int cmd_verify(const RunConfig& cfg, const CommandOptions& opts) {
  const auto path = opts.input.empty() ? opts.output_dir / cfg.outputs.csv_path : opts.input;
  const auto traj = read_trajectory_csv(path);
  if (traj.empty()) throw DataError("trajectory CSV has no rows");

  const auto dom = make_domain(cfg.domain);
  const auto [u0, u1] = build_initial(cfg, dom);
  const auto wc = detail::well_depth(cfg, dom);
  std::optional<StableSetVerdict> verdict;
  if (wc.well) verdict = stable_set_check(u0, u1, wc.well->d_hat, cfg.well.safety, cfg.model);

  SuiteContext ctx;
  ctx.gamma = cfg.model.gamma;
  ctx.stable = verdict && verdict->in();
  ctx.threshold = verdict ? verdict->threshold : std::numeric_limits<double>::quiet_NaN();
  const auto suite = verification_suite(traj, ctx);
  const int code = suite.mandatory_passed() ? kExitOk : kExitCheckFailed;

  json doc{{"command", "verify"}, {"input", path.string()}, {"rows", traj.size()}, {"checks", checks_json(suite.checks)}};
  doc["stable_set"] = verdict ? to_json(*verdict) : json(nullptr);
  doc["decay_fit"] = suite.fit ? to_json(*suite.fit) : json(nullptr);
  doc["estimates"] = to_json(suite.estimates);
  doc["exit_code"] = code;
  detail::write_json(opts, "verify.json", doc);
  if (!opts.quiet) {
    *opts.log << "verify: " << traj.size() << " rows from " << path.string() << '\n';
    log_checks(opts, suite.checks);
  }
  return code;
}

}  // namespace sdwave::cli
