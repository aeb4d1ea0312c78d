// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sdwave/analysis.hpp"
#include "sdwave/potential_well.hpp"

using namespace sdwave;

namespace {

constexpr double kPi = std::numbers::pi;

int failures = 0;

void verdict(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s  %2d %-26s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ModelParams cube(double gamma) { return {gamma, 3, false, true}; }

SolverConfig solver(double dt, double t_end, double report_spacing = 1e-2) {
  SolverConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.report_every = static_cast<int>(std::lround(report_spacing / dt));
  return c;
}

double max_identity(const Trajectory& traj) {
  double w = 0.0;
  for (const auto& r : traj) w = std::max(w, std::abs(r.identity_residual));
  return w / traj.front().E;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool identical(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    for (auto [p, q] : {std::pair{x.t, y.t}, {x.E, y.E}, {x.I, y.I}, {x.J, y.J}, {x.kinetic, y.kinetic},
                        {x.grad_sq, y.grad_sq}, {x.logterm, y.logterm}, {x.lgamma, y.lgamma},
                        {x.cross_term, y.cross_term}, {x.damping_integral, y.damping_integral}})
      if (!same_bits(p, q)) return false;
  }
  return true;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const auto dom = make_domain({3, kPi, 8, 2});
  const ModalField zero(dom);
  const auto u0 = first_eigenmode(dom, 0.05);
  const auto p4 = cube(4.0);

  // Reference run shared by criteria 1-6 and 12.
  const auto ref = integrate(u0, zero, solver(1e-3, 20.0), p4);
  const auto& traj = ref.trajectory;
  const double E0 = traj.front().E;

  {
    const double r1 = max_identity(traj);
    const double r2 = max_identity(integrate(u0, zero, solver(5e-4, 20.0), p4).trajectory);
    const double r3 = max_identity(integrate(u0, zero, solver(2.5e-4, 20.0), p4).trajectory);
    const bool ok = ref.status == Status::Completed && r1 <= 1e-4 && r1 / r2 >= 3.5 && r2 / r3 >= 3.5;
    verdict(1, "energy_law", ok,
            fmt("residual %.3e (dt=1e-3), %.3e, %.3e; ratios %.2f, %.2f (need <= 1e-4, >= 3.5)", r1, r2, r3,
                r1 / r2, r2 / r3));
  }

  {
    double worst = -INFINITY;
    for (std::size_t i = 1; i < traj.size(); ++i) worst = std::max(worst, (traj[i].E - traj[i - 1].E) / E0);
    verdict(2, "monotone_dissipation", worst <= 1e-10,
            fmt("max (E[n+1]-E[n])/E0 = %.3e over %zu reports (need <= 1e-10)", worst, traj.size()));
  }

  const auto well = estimate_depth(default_trial_family(dom, 32, 12345), p4, 0.5);
  const auto vd = stable_set_check(u0, zero, well.d_hat, 0.5, p4);
  {
    std::size_t bad = 0;
    double minI = INFINITY;
    double maxE = -INFINITY;
    for (const auto& r : traj) {
      if (!(r.I > 0.0) || !(r.E < vd.threshold)) ++bad;
      minI = std::min(minI, r.I);
      maxE = std::max(maxE, r.E);
    }
    verdict(3, "stable_set_invariance", vd.in() && bad == 0,
            fmt("verdict %s, d_hat %.6g, min I %.3e, max E %.4e < %.4e, %zu violations", to_string(vd.verdict),
                well.d_hat, minI, maxE, vd.threshold, bad));
  }

  {
    const double c3 = uniform_bound_constant(4.0);
    double worst = 0.0;
    for (const auto& r : traj) worst = std::max(worst, c3 * (2 * r.kinetic + r.grad_sq + r.lgamma) / E0);
    verdict(4, "uniform_bound", c3 == 1.0 / 16.0 && worst < 1.0,
            fmt("C3 = %.6g, max C3(|u_t|^2+|grad u|^2+|u|_4^4)/E0 = %.6f (need < 1)", c3, worst));
  }

  {
    const auto f4 = fit_decay(traj, 2.0, 15.0);
    const auto run55 = integrate(u0, zero, solver(1e-3, 20.0), cube(5.5));
    const auto f55 = fit_decay(run55.trajectory, 2.0, 15.0);
    const bool ok = f4.C2 > 0 && f4.r_squared >= 0.99 && run55.status == Status::Completed && f55.C2 > 0 &&
                    f55.r_squared >= 0.99;
    verdict(5, "exponential_decay", ok,
            fmt("gamma=4: C1 %.4g C2 %.5f r2 %.6f (%zu pts); gamma=5.5: C1 %.4g C2 %.5f r2 %.6f (%zu pts)", f4.C1,
                f4.C2, f4.r_squared, f4.samples, f55.C1, f55.C2, f55.r_squared, f55.samples));
  }

  {
    const auto s = default_s_samples(20.0);
    const auto a = check_integral_bound(traj, 4.0, dom->poincare_constant(), s);
    const auto long_run = integrate(u0, zero, solver(1e-3, 40.0), p4);
    const auto b = check_integral_bound(long_run.trajectory, 4.0, dom->poincare_constant(), s);
    const double change = std::abs(b.C0_hat / a.C0_hat - 1);
    const bool ok = std::isfinite(a.C0_hat) && std::isfinite(b.C0_hat) && a.s_samples_used == 20 &&
                    b.s_samples_used == 20 && !a.violation && !b.violation && change <= 0.05;
    verdict(6, "integral_estimate", ok,
            fmt("C0_hat %.6f (T=20, %zu S) vs %.6f (T=40, %zu S), change %.2e (need <= 5%%)", a.C0_hat,
                a.s_samples_used, b.C0_hat, b.s_samples_used, change));
  }

  {
    const ModelParams lin{4.0, 3, false, false};
    double worst = 0.0;
    const std::vector<std::pair<MultiIndex, double>> cases = {
        {{1, 1, 1}, 0.0}, {{2, 1, 1}, 0.0}, {{1, 2, 3}, 0.0}, {{8, 8, 8}, 0.0}, {{1, 1, 1}, 0.7}};
    for (const auto& [k, v0] : cases) {
      const auto flat = dom->flat_index(k);
      const oracle::DampedOscillator exact{dom->eigenvalue(flat), 1.0, v0};
      double err = 0.0;
      double peak = 0.0;
      const auto cfg = solver(1e-4, 1.0);
      integrate(eigenmode(dom, k), v0 * eigenmode(dom, k), cfg, lin, [&](const SimState& st) {
        const double a = exact(st.t);
        err = std::max(err, std::abs(st.u.coeffs[flat] - a));
        peak = std::max(peak, std::abs(a));
      });
      worst = std::max(worst, err / peak);
    }
    verdict(7, "linear_oracle", worst <= 1e-6,
            fmt("max |a - a_exact| / max |a_exact| = %.3e over %zu modes, dt=1e-4, t in [0,1] (need <= 1e-6)", worst,
                cases.size()));
  }

  {
    const auto trials = default_trial_family(dom, 32, 2024);
    double worst_res = 0.0;
    double worst_scale = 0.0;
    double min_J = INFINITY;
    for (std::size_t i = 1; i < trials.size(); ++i) {
      const auto p = project_to_nehari(trials[i], p4);
      worst_res = std::max(worst_res, nehari_residual(p.moments, p.lambda_star, 4.0));
      min_J = std::min(min_J, p.J_at_max);
      for (double c : {0.5, 2.0, 10.0}) {
        const auto q = project_to_nehari(c * trials[i], p4);
        worst_scale = std::max(worst_scale, std::abs(q.J_at_max / p.J_at_max - 1));
      }
    }
    const auto est = estimate_depth(trials, p4);
    const bool ok = worst_res <= 1e-10 && worst_scale <= 1e-10 && est.d_hat > 0 && min_J > 0;
    verdict(8, "nehari_projection", ok,
            fmt("max residual %.2e on 32 random trials, max scaling drift %.2e, d_hat %.6g", worst_res, worst_scale,
                est.d_hat));
  }

  {
    const std::size_t n = 100000;
    double small_gap = INFINITY;
    double large_gap = INFINITY;
    for (double g : {4.0, 5.0, 5.9})
      for (std::size_t i = 1; i <= n; ++i) {
        const auto b = log_bound_small(static_cast<double>(i) / (n + 1), g);
        small_gap = std::min(small_gap, b.bound - b.lhs);
      }
    for (double mu : {0.1, 0.5, 1.0})
      for (std::size_t i = 0; i < n; ++i) {
        const auto b = log_bound_large(std::pow(1e6, static_cast<double>(i) / (n - 1)), mu);
        large_gap = std::min(large_gap, b.bound - b.lhs);
      }
    verdict(9, "log_inequalities", small_gap >= 0 && large_gap >= 0,
            fmt("min bound - lhs: %.3e on (0,1), %.3e on [1,1e6] (1e5 points each)", small_gap, large_gap));
  }

  {
    const auto cfg = solver(1e-3, 5.0);
    const bool same = identical(integrate(u0, zero, cfg, p4).trajectory, integrate(u0, zero, cfg, p4).trajectory);
    const auto rep = continuous_dependence(u0, zero, {0.0, 1e-3, 1e-4}, {5.0}, cfg, p4);
    bool ok = same && !rep.aborted && rep.runs.size() == 3;
    double ratio = NAN;
    if (ok) {
      ok = rep.runs[0].samples[0].D == 0.0;
      ratio = rep.runs[1].samples[0].D_over_eps_sq / rep.runs[2].samples[0].D_over_eps_sq;
      ok = ok && ratio >= 0.5 && ratio <= 2.0;
    }
    verdict(10, "continuous_dependence", ok,
            fmt("bit-identical repeat: %s; D/eps^2 at t=5: %.6g (1e-3) vs %.6g (1e-4), ratio %.4f", same ? "yes" : "no",
                rep.runs.size() == 3 ? rep.runs[1].samples[0].D_over_eps_sq : NAN,
                rep.runs.size() == 3 ? rep.runs[2].samples[0].D_over_eps_sq : NAN, ratio));
  }

  {
    const auto table = convergence_study(u0, zero, solver(1e-3, 20.0), p4, {4, 8, 16});
    const bool ok = table.failed_level < 0 && table.diff_E.size() == 2 && table.diff_E[1] < table.diff_E[0];
    verdict(11, "galerkin_convergence", ok,
            fmt("|E8-E4| = %.3e, |E16-E8| = %.3e (E_end %.4e)", table.diff_E.size() > 0 ? table.diff_E[0] : NAN,
                table.diff_E.size() > 1 ? table.diff_E[1] : NAN,
                table.levels.empty() ? NAN : table.levels.back().E_end));
  }

  {
    const auto est = check_integral_bound(traj, 4.0, dom->poincare_constant(), {});
    verdict(12, "poincare_margin", est.poincare_margin <= 1 + 1e-10,
            fmt("max |u_t| / (C_P |grad u_t|) = %.15f (need <= 1 + 1e-10)", est.poincare_margin));
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s: %d of 12 criteria failed (%.1f s)\n", failures ? "FAIL" : "PASS", failures, secs);
  return failures ? 1 : 0;
}
