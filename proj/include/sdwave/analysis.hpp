#pragma once

// Post-processing of trajectories: decay fits, energy and virial identities,
// the integral decay bound, continuous dependence, and Galerkin self-convergence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/functionals.hpp"
#include "sdwave/galerkin.hpp"
#include "sdwave/random_fields.hpp"

namespace sdwave {

using Trajectory = std::vector<EnergyReport>;

inline constexpr double kEnergyFloor = 1e-14;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope x. A constant y is an exact fit.
inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw FitError("least squares needs at least two distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

struct DecayFit {
  double C1 = 0.0;
  double C2 = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
};

/// Log-linear fit E ~ C1 exp(-C2 t) over reports in [t_start, t_end] with E > 1e-14.
inline DecayFit fit_decay(const Trajectory& traj, double t_start, double t_end) {
  std::vector<double> t;
  std::vector<double> y;
  for (const auto& r : traj) {
    if (r.t < t_start || r.t > t_end || !(r.E > kEnergyFloor)) continue;
    t.push_back(r.t);
    y.push_back(std::log(r.E));
  }
  if (t.size() < 10)
    throw FitError("decay fit needs >= 10 samples with E > 1e-14 in the window, found " + std::to_string(t.size()));
  const auto line = least_squares_line(t, y);
  return {std::exp(line.intercept), -line.slope, t_start, t_end, line.r_squared, t.size()};
}

/// Window [0.1 T, 0.75 T] with T the last report time.
inline DecayFit fit_decay(const Trajectory& traj) {
  if (traj.empty()) throw FitError("empty trajectory");
  const double T = traj.back().t;
  return fit_decay(traj, 0.1 * T, 0.75 * T);
}

/// max_n |E_n + D_n - E_0| / max(E_0, 1e-30)
inline double check_energy_identity(const Trajectory& traj) {
  if (traj.empty()) throw DataError("energy identity check on an empty trajectory");
  double worst = 0.0;
  for (const auto& r : traj) worst = std::max(worst, std::abs(r.identity_residual));
  return worst / std::max(traj.front().E, 1e-30);
}

/// max_n (E_{n+1} - E_n) / max(E_0, 1e-30); nonpositive for a dissipative run.
inline double max_energy_increase(const Trajectory& traj) {
  if (traj.empty()) throw DataError("monotonicity check on an empty trajectory");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < traj.size(); ++i) worst = std::max(worst, traj[i].E - traj[i - 1].E);
  if (traj.size() < 2) worst = 0.0;
  return worst / std::max(traj.front().E, 1e-30);
}

namespace detail {

// Trapezoid of value(r) over reports i..j.
template <class F>
double trapezoid(const Trajectory& traj, std::size_t i, std::size_t j, F value) {
  double s = 0.0;
  for (std::size_t k = i; k < j; ++k)
    s += 0.5 * (traj[k + 1].t - traj[k].t) * (value(traj[k]) + value(traj[k + 1]));
  return s;
}

}  // namespace detail

/// Checks int_S^T I dt = int_S^T |u_t|^2 dt - [int u_t u + 1/2 |grad u|^2]_S^T on
/// random report pairs (S, T). Each mismatch is normalized by the sum of the
/// magnitudes of the terms involved.
inline double check_virial_identity(const Trajectory& traj, int pairs = 10, std::uint64_t seed = 2024) {
  if (traj.empty()) throw DataError("virial check on an empty trajectory");
  if (traj.size() < 2) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, traj.size() - 1);
  const auto bracket = [](const EnergyReport& r) { return r.cross_term + 0.5 * r.grad_sq; };

  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) j = i + 1 < traj.size() ? i + 1 : i - 1;
    if (i > j) std::swap(i, j);
    const double lhs = detail::trapezoid(traj, i, j, [](const EnergyReport& r) { return r.I; });
    const double ut2 = detail::trapezoid(traj, i, j, [](const EnergyReport& r) { return 2.0 * r.kinetic; });
    const double rhs = ut2 - (bracket(traj[j]) - bracket(traj[i]));
    const double scale =
        detail::trapezoid(traj, i, j, [](const EnergyReport& r) { return std::abs(r.I); }) + ut2 +
        std::abs(bracket(traj[i])) + std::abs(bracket(traj[j]));
    if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

struct EstimateSuite {
  // Largest admissible delta in I >= delta |grad u|^2, capped at 1. The raw
  // minimum exceeds 1 whenever |u| < 1 everywhere (negative log term).
  double delta_hat = std::numeric_limits<double>::quiet_NaN();
  double nehari_ratio_min = std::numeric_limits<double>::quiet_NaN();  // min I / |grad u|^2
  double C0_hat = std::numeric_limits<double>::quiet_NaN();     // max int_S^T E / E(S)
  double CW_hat = std::numeric_limits<double>::quiet_NaN();     // max |u|_g^g / |grad u|^2
  double poincare_margin = std::numeric_limits<double>::quiet_NaN();
  double M_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t s_samples_used = 0;
  bool violation = false;
};

/// 20 values of S evenly spaced on [0, T/2).
inline std::vector<double> default_s_samples(double t_end, int count = 20) {
  std::vector<double> s;
  for (int i = 0; i < count; ++i) s.push_back(0.5 * t_end * i / count);
  return s;
}

/// Observed counterparts of the decay-proof constants. Pass NaN for
/// `poincare` when |grad u_t| is unavailable (e.g. trajectories read from CSV).
inline EstimateSuite check_integral_bound(const Trajectory& traj, double gamma, double poincare,
                                          const std::vector<double>& s_values) {
  EstimateSuite est;
  if (traj.empty()) return est;

  double dmin = std::numeric_limits<double>::infinity();
  double cw = -std::numeric_limits<double>::infinity();
  double pm = -std::numeric_limits<double>::infinity();
  for (const auto& r : traj) {
    if (r.grad_sq > 0.0) {
      dmin = std::min(dmin, r.I / r.grad_sq);
      cw = std::max(cw, r.lgamma / r.grad_sq);
    }
    if (r.grad_ut_sq > 0.0 && std::isfinite(poincare))
      pm = std::max(pm, std::sqrt(2.0 * r.kinetic) / (poincare * std::sqrt(r.grad_ut_sq)));
  }
  if (std::isfinite(dmin)) {
    est.nehari_ratio_min = dmin;
    est.delta_hat = std::min(dmin, 1.0);
  }
  if (std::isfinite(cw)) est.CW_hat = cw;
  if (std::isfinite(pm)) est.poincare_margin = pm;
  else if (std::isfinite(poincare)) est.poincare_margin = 0.0;

  const std::size_t last = traj.size() - 1;
  double c0 = -std::numeric_limits<double>::infinity();
  for (double S : s_values) {
    const auto it = std::lower_bound(traj.begin(), traj.end(), S,
                                     [](const EnergyReport& r, double s) { return r.t < s; });
    if (it == traj.end()) continue;
    const auto i = static_cast<std::size_t>(it - traj.begin());
    if (i >= last || !(traj[i].E >= kEnergyFloor)) continue;
    const double ratio = detail::trapezoid(traj, i, last, [](const EnergyReport& r) { return r.E; }) / traj[i].E;
    if (!std::isfinite(ratio)) est.violation = true;
    c0 = std::max(c0, ratio);
    ++est.s_samples_used;
  }
  if (est.s_samples_used > 0) est.C0_hat = c0;

  if (std::isfinite(est.delta_hat) && est.delta_hat > 0.0 && std::isfinite(est.CW_hat)) {
    const double g = gamma;
    est.M_hat = 0.5 + (g - 2.0) / (2.0 * g * est.delta_hat) + 1.0 / g + est.CW_hat / (g * g * est.delta_hat);
  }
  return est;
}

// ---------------------------------------------------------------------------
// Continuous dependence

struct DependenceSample {
  double t = 0.0;
  double D = 0.0;  // |z_t|_2^2 + |grad z|_2^2
  double D_over_eps_sq = 0.0;
};

struct DependenceRun {
  double eps = 0.0;
  Status status = Status::Running;
  std::vector<DependenceSample> samples;
  double growth_rate = std::numeric_limits<double>::quiet_NaN();  // fitted slope of ln D
  double growth_r_squared = std::numeric_limits<double>::quiet_NaN();
};

struct DependenceReport {
  Status base_status = Status::Running;
  bool aborted = false;
  std::vector<DependenceRun> runs;
};

namespace detail {

struct Snapshots {
  std::vector<long long> steps;
  std::vector<std::pair<ModalField, ModalField>> states;
};

inline Snapshots capture(const ModalField& u0, const ModalField& u1, const SolverConfig& cfg,
                         const ModelParams& params, const std::vector<double>& times, Status& status) {
  Snapshots snap;
  for (double t : times) snap.steps.push_back(std::llround(t / cfg.dt));
  snap.states.resize(times.size());
  auto res = integrate(u0, u1, cfg, params, [&](const SimState& s) {
    for (std::size_t i = 0; i < snap.steps.size(); ++i)
      if (snap.steps[i] == s.step_count) snap.states[i] = {s.u, s.ut};
  });
  status = res.status;
  return snap;
}

}  // namespace detail

/// Runs the base data and u0 + eps p for every eps, p a random band-limited
/// field with |grad p|_2 = 1, and samples D(t) = |z_t|^2 + |grad z|^2 of the
/// difference z at the requested times (clamped to [0, t_end]).
inline DependenceReport continuous_dependence(const ModalField& u0, const ModalField& u1,
                                              const std::vector<double>& eps_list,
                                              const std::vector<double>& sample_times, const SolverConfig& cfg,
                                              const ModelParams& params, std::uint64_t seed = 7) {
  cfg.validate();
  std::vector<double> times;
  for (double t : sample_times) times.push_back(std::clamp(t, 0.0, cfg.t_end));

  DependenceReport rep;
  const auto base = detail::capture(u0, u1, cfg, params, times, rep.base_status);
  if (rep.base_status != Status::Completed) {
    rep.aborted = true;
    return rep;
  }
  const auto direction = random_unit_h1(u0.domain, seed);

  for (double eps : eps_list) {
    DependenceRun run;
    run.eps = eps;
    ModalField v0 = u0;
    for (std::size_t k = 0; k < v0.size(); ++k) v0.coeffs[k] += eps * direction.coeffs[k];
    const auto pert = detail::capture(v0, u1, cfg, params, times, run.status);
    if (run.status != Status::Completed) {
      rep.aborted = true;
      rep.runs.push_back(run);
      return rep;
    }
    std::vector<double> ts;
    std::vector<double> ls;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto z = pert.states[i].first - base.states[i].first;
      const auto zt = pert.states[i].second - base.states[i].second;
      const double D = l2_norm_sq(zt) + grad_norm_sq(z);
      const double scaled = eps != 0.0 ? D / (eps * eps) : 0.0;
      run.samples.push_back({times[i], D, scaled});
      if (D > 0.0) {
        ts.push_back(times[i]);
        ls.push_back(std::log(D));
      }
    }
    if (ts.size() >= 2) {
      try {
        const auto line = least_squares_line(ts, ls);
        run.growth_rate = line.slope;
        run.growth_r_squared = line.r_squared;
      } catch (const FitError&) {
      }
    }
    rep.runs.push_back(std::move(run));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Galerkin self-convergence

struct ConvergenceLevel {
  int modes_per_dim = 0;
  Status status = Status::Running;
  double E_end = std::numeric_limits<double>::quiet_NaN();
  double l2_end = std::numeric_limits<double>::quiet_NaN();
  double projection_loss = 0.0;  // relative H^1 + L^2 mass of the initial data outside the band
};

struct ConvergenceTable {
  std::vector<ConvergenceLevel> levels;
  std::vector<double> diff_E;   // |E_{i+1} - E_i|
  std::vector<double> diff_l2;  // |l2_{i+1} - l2_i|
  bool passed = false;
  int failed_level = -1;
};

/// Differences at or below this multiple of the level scale count as roundoff.
inline constexpr double kRoundoffDiff = 1e-12;

/// Projects (u0, u1) onto each band in m_list, integrates, and compares
/// E(t_end) between successive levels.
inline ConvergenceTable convergence_study(const ModalField& u0, const ModalField& u1, const SolverConfig& cfg,
                                          const ModelParams& params, const std::vector<int>& m_list) {
  if (m_list.empty()) throw ParameterError("convergence study needs at least one level");
  for (std::size_t i = 1; i < m_list.size(); ++i)
    if (m_list[i] <= m_list[i - 1]) throw ParameterError("m_list must be strictly increasing");

  ConvergenceTable table;
  const double full = grad_norm_sq(u0) + l2_norm_sq(u1);
  double scale = 0.0;
  for (int m : m_list) {
    auto spec = u0.domain->spec();
    spec.modes_per_dim = m;
    const auto dom = make_domain(spec);
    const auto a0 = rebase(u0, dom);
    const auto a1 = rebase(u1, dom);

    ConvergenceLevel level;
    level.modes_per_dim = m;
    level.projection_loss = full > 0.0 ? (full - grad_norm_sq(a0) - l2_norm_sq(a1)) / full : 0.0;
    auto res = integrate(a0, a1, cfg, params);
    level.status = res.status;
    if (res.status != Status::Completed) {
      table.levels.push_back(level);
      table.failed_level = m;
      return table;
    }
    level.E_end = res.trajectory.back().E;
    level.l2_end = std::sqrt(l2_norm_sq(res.final_state.u));
    scale = std::max(scale, std::abs(level.E_end));
    table.levels.push_back(level);
  }
  for (std::size_t i = 1; i < table.levels.size(); ++i) {
    table.diff_E.push_back(std::abs(table.levels[i].E_end - table.levels[i - 1].E_end));
    table.diff_l2.push_back(std::abs(table.levels[i].l2_end - table.levels[i - 1].l2_end));
  }
  const std::size_t nd = table.diff_E.size();
  if (nd < 2) {
    table.passed = true;
  } else {
    const double a = table.diff_E[nd - 2];
    const double b = table.diff_E[nd - 1];
    const double floor = kRoundoffDiff * scale;
    table.passed = b < a || (a <= floor && b <= floor);
  }
  return table;
}

}  // namespace sdwave
