#pragma once

// Modal Galerkin integrator for
//   a_k'' + lambda_k a_k' + lambda_k a_k = F_k(a),  F_k = (f(u), w_k) / |w_k|^2.
// Linear terms use the trapezoidal rule (a 2x2 solve per mode, diagonal in the
// eigenbasis); the source is explicit, extrapolated to the half step for IMEX2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/functionals.hpp"

namespace sdwave {

enum class Scheme { IMEX2, IMEX1 };
enum class Status { Running, Completed, Blowup };

inline const char* to_string(Scheme s) { return s == Scheme::IMEX2 ? "IMEX2" : "IMEX1"; }

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Running: return "RUNNING";
    case Status::Completed: return "COMPLETED";
    case Status::Blowup: return "BLOWUP";
  }
  return "?";
}

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 20.0;
  Scheme scheme = Scheme::IMEX2;
  double blowup_threshold = 1e8;
  int report_every = 10;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ParameterError("t_end must be positive");
    if (!(blowup_threshold > 1.0)) throw ParameterError("blowup_threshold must exceed 1");
    if (report_every < 1) throw ParameterError("report_every must be >= 1");
  }

  long long step_count() const { return std::max(1LL, std::llround(t_end / dt)); }
};

struct SimState {
  ModalField u;
  ModalField ut;
  double t = 0.0;
  double damping_integral = 0.0;
  long long step_count = 0;
  Status status = Status::Running;
  double t_max_estimate = std::numeric_limits<double>::infinity();

  // Source at the current u and at the previous step (IMEX2 history).
  ModalField force;
  ModalField prev_force;
  bool has_history = false;
  double grad_ut_sq = 0.0;
};

/// Galerkin projection of f(u): pointwise on the oversampled grid, then back
/// onto the modal band.
inline ModalField rhs_nonlinear(const ModalField& u, const ModelParams& params) {
  detail::require_dim(u, params);
  detail::require_finite(u, "u");
  if (!params.source_enabled) return ModalField(u.domain);
  auto g = to_grid(u);
  for (double& v : g.values) v = source_eval(v, params.gamma);
  auto F = to_modal(g);
  if (!F.is_finite()) throw NumericError("source projection is not finite");
  return F;
}

/// BLOWUP when |grad u|_2 or |u_t|_2 exceeds the threshold or anything is non-finite.
inline Status blowup_scan(const SimState& state, double threshold) {
  if (!state.u.is_finite() || !state.ut.is_finite()) return Status::Blowup;
  const double gu = std::sqrt(grad_norm_sq(state.u));
  const double vt = std::sqrt(l2_norm_sq(state.ut));
  if (!std::isfinite(gu) || !std::isfinite(vt) || gu > threshold || vt > threshold) return Status::Blowup;
  return state.status;
}

inline SimState make_state(const ModalField& u0, const ModalField& u1, const ModelParams& params) {
  detail::require_dim(u0, params);
  require_same_domain(u0.domain, u1.domain);
  SimState s;
  s.u = u0;
  s.ut = u1;
  s.grad_ut_sq = grad_norm_sq(u1);
  s.force = rhs_nonlinear(u0, params);
  s.prev_force = ModalField(u0.domain);
  return s;
}

inline SimState step(const SimState& state, const SolverConfig& cfg, const ModelParams& params) {
  if (state.status != Status::Running) throw ParameterError("step called on a finished state");

  SimState next = state;
  const auto& dom = *state.u.domain;
  const auto lambda = dom.eigenvalues();
  const double dt = cfg.dt;
  const double p = 0.5 * dt;
  const bool extrapolate = cfg.scheme == Scheme::IMEX2 && state.has_history;

  for (std::size_t k = 0; k < dom.mode_count(); ++k) {
    const double a0 = state.u.coeffs[k];
    const double v0 = state.ut.coeffs[k];
    const double F = extrapolate ? 1.5 * state.force.coeffs[k] - 0.5 * state.prev_force.coeffs[k]
                                 : state.force.coeffs[k];
    const double lp = lambda[k] * p;
    // a1 = a0 + p (v0 + v1);  v1 = v0 - p lambda (v0 + v1) - p lambda (a0 + a1) + dt F
    const double v1 = (v0 * (1.0 - lp - lp * p) - 2.0 * lp * a0 + dt * F) / (1.0 + lp + lp * p);
    next.ut.coeffs[k] = v1;
    next.u.coeffs[k] = a0 + p * (v0 + v1);
  }

  next.step_count = state.step_count + 1;
  next.t = static_cast<double>(next.step_count) * dt;
  next.grad_ut_sq = grad_norm_sq(next.ut);
  next.damping_integral = state.damping_integral + p * (state.grad_ut_sq + next.grad_ut_sq);

  if (blowup_scan(next, cfg.blowup_threshold) == Status::Blowup) {
    next.status = Status::Blowup;
    next.t_max_estimate = next.t;
    return next;
  }
  next.prev_force = state.force;
  next.has_history = true;
  try {
    next.force = rhs_nonlinear(next.u, params);
  } catch (const NumericError&) {
    next.status = Status::Blowup;
    next.t_max_estimate = next.t;
  }
  return next;
}

struct IntegrationResult {
  std::vector<EnergyReport> trajectory;
  SimState final_state;
  Status status = Status::Running;
};

using StepObserver = std::function<void(const SimState&)>;

/// Runs to t_end, reporting every `report_every` steps plus the final step.
/// The observer, when given, sees the initial state and every later state.
inline IntegrationResult integrate(const ModalField& u0, const ModalField& u1, const SolverConfig& cfg,
                                   const ModelParams& params, const StepObserver& observer = {}) {
  cfg.validate();
  params.validate();
  IntegrationResult res;
  auto state = make_state(u0, u1, params);

  const auto report = [&](const SimState& s) {
    auto r = energy(s.u, s.ut, params);
    r.t = s.t;
    r.damping_integral = s.damping_integral;
    r.identity_residual = res.trajectory.empty() ? 0.0 : r.E + r.damping_integral - res.trajectory.front().E;
    res.trajectory.push_back(r);
  };

  report(state);
  if (observer) observer(state);
  const long long n = cfg.step_count();
  for (long long i = 1; i <= n; ++i) {
    state = step(state, cfg, params);
    if (state.status == Status::Blowup) break;
    if (observer) observer(state);
    if (i % cfg.report_every == 0 || i == n) report(state);
  }
  if (state.status == Status::Running) state.status = Status::Completed;
  res.status = state.status;
  res.final_state = std::move(state);
  return res;
}

}  // namespace sdwave
