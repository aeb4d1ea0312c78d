#pragma once

// Logarithmic source f(s) = |s|^{gamma-2} s ln|s| and the energy functionals
//   J(u) = 1/2 |grad u|^2 - 1/gamma int |u|^gamma ln|u| + 1/gamma^2 |u|_gamma^gamma
//   I(u) = |grad u|^2 - int |u|^gamma ln|u|
//   E    = 1/2 |u_t|^2 + J(u)

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"

namespace sdwave {

/// Lower end 2(n-1)/(n-2) of the upper subcritical window; n >= 3.
inline double subcritical_lower(int n) { return 2.0 * (n - 1) / (n - 2); }
/// Sobolev critical exponent 2n/(n-2); n >= 3.
inline double sobolev_critical(int n) { return 2.0 * n / (n - 2); }

struct ModelParams {
  double gamma = 4.0;
  int dim = 3;
  /// Skips the exponent window check; required for dims 1 and 2.
  bool unsafe_gamma = false;
  /// false turns the equation linear (f = 0, potential terms vanish).
  bool source_enabled = true;

  void validate() const {
    if (!(gamma > 2.0) || !std::isfinite(gamma))
      throw ParameterError("gamma must be finite and > 2");
    if (dim < 1 || dim > 3) throw ParameterError("model dim must be 1, 2 or 3");
    if (unsafe_gamma) return;
    if (dim < 3)
      throw ParameterError("dim " + std::to_string(dim) + " is a debug mode and requires unsafe_gamma");
    const double lo = subcritical_lower(dim);
    const double hi = sobolev_critical(dim);
    if (gamma < lo || gamma >= hi) {
      std::ostringstream os;
      os << "gamma = " << gamma << " outside the subcritical window [" << lo << ", " << hi << ") for n = "
         << dim;
      throw ParameterError(os.str());
    }
  }
};

/// f(s) = |s|^{gamma-2} s ln|s|, extended by f(0) = 0.
inline double source_eval(double s, double gamma) noexcept {
  if (s == 0.0) return 0.0;
  const double l = std::log(std::abs(s));
  const double v = std::exp((gamma - 1.0) * l) * l;
  return s < 0.0 ? -v : v;
}

/// min{1/2, (gamma-2)/(2 gamma), 1/gamma^2}
inline double uniform_bound_constant(double gamma) {
  return std::min({0.5, (gamma - 2.0) / (2.0 * gamma), 1.0 / (gamma * gamma)});
}

struct SourceIntegrals {
  double lgamma = 0.0;   // int |u|^gamma
  double logterm = 0.0;  // int |u|^gamma ln|u|
};

// Below this magnitude the logterm integrand is taken as exactly zero.
inline constexpr double kLogFloor = 1e-300;

inline SourceIntegrals source_integrals(const GridField& g, double gamma) {
  double lg = 0.0;
  double lt = 0.0;
  for (double v : g.values) {
    const double a = std::abs(v);
    if (a < kLogFloor) continue;
    const double l = std::log(a);
    const double p = std::exp(gamma * l);
    lg += p;
    lt += p * l;
  }
  const double w = g.domain->cell_volume();
  return {lg * w, lt * w};
}

struct EnergyReport {
  double t = 0.0;
  double E = 0.0;
  double J = 0.0;
  double I = 0.0;
  double kinetic = 0.0;  // 1/2 |u_t|_2^2
  double grad_sq = 0.0;
  double lgamma = 0.0;
  double logterm = 0.0;
  double cross_term = 0.0;  // int u_t u dx
  double damping_integral = 0.0;
  double identity_residual = 0.0;
  double grad_ut_sq = 0.0;  // |grad u_t|_2^2, not part of the CSV
};

namespace detail {

inline void require_finite(const ModalField& f, const char* what) {
  if (!f.is_finite()) throw NumericError(std::string("non-finite coefficients in ") + what);
}

inline void require_dim(const ModalField& f, const ModelParams& params) {
  if (!f.domain) throw DimensionError("field has no domain");
  if (f.domain->dim() != params.dim)
    throw DimensionError("model dim " + std::to_string(params.dim) + " does not match domain dim " +
                         std::to_string(f.domain->dim()));
}

inline SourceIntegrals model_integrals(const ModalField& u, const ModelParams& params) {
  if (!params.source_enabled) return {};
  return source_integrals(to_grid(u), params.gamma);
}

}  // namespace detail

/// Fills every report field except the ledger entries (damping_integral,
/// identity_residual) which belong to the integrator.
inline EnergyReport energy(const ModalField& u, const ModalField& ut, const ModelParams& params) {
  detail::require_dim(u, params);
  require_same_domain(u.domain, ut.domain);
  detail::require_finite(u, "u");
  detail::require_finite(ut, "u_t");

  const double g = params.gamma;
  const auto si = detail::model_integrals(u, params);

  EnergyReport r;
  r.grad_sq = grad_norm_sq(u);
  r.kinetic = 0.5 * l2_norm_sq(ut);
  r.lgamma = si.lgamma;
  r.logterm = si.logterm;
  r.cross_term = inner_product(ut, u);
  r.grad_ut_sq = grad_norm_sq(ut);
  r.J = 0.5 * r.grad_sq - r.logterm / g + r.lgamma / (g * g);
  r.I = r.grad_sq - r.logterm;
  r.E = r.kinetic + r.J;
  if (!std::isfinite(r.E) || !std::isfinite(r.I)) throw NumericError("energy evaluation is not finite");
  return r;
}

inline double nehari_I(const ModalField& u, const ModelParams& params) {
  detail::require_dim(u, params);
  detail::require_finite(u, "u");
  const auto si = detail::model_integrals(u, params);
  const double I = grad_norm_sq(u) - si.logterm;
  if (!std::isfinite(I)) throw NumericError("Nehari functional is not finite");
  return I;
}

inline double potential_J(const ModalField& u, const ModelParams& params) {
  detail::require_dim(u, params);
  detail::require_finite(u, "u");
  const auto si = detail::model_integrals(u, params);
  const double g = params.gamma;
  return 0.5 * grad_norm_sq(u) - si.logterm / g + si.lgamma / (g * g);
}

struct LogBound {
  double lhs;
  double bound;
};

/// s^{gamma-1} |ln s| against 1/(e (gamma-1)) on 0 < s < 1.
inline LogBound log_bound_small(double s, double gamma) {
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("log_bound_small requires 0 < s < 1");
  if (!(gamma > 2.0)) throw ParameterError("log_bound_small requires gamma > 2");
  return {std::pow(s, gamma - 1.0) * std::abs(std::log(s)), 1.0 / (std::numbers::e * (gamma - 1.0))};
}

/// s^{-mu} ln s against 1/(e mu) on s >= 1.
inline LogBound log_bound_large(double s, double mu) {
  if (!(s >= 1.0) || !std::isfinite(s)) throw ParameterError("log_bound_large requires finite s >= 1");
  if (!(mu > 0.0)) throw ParameterError("log_bound_large requires mu > 0");
  return {std::pow(s, -mu) * std::log(s), 1.0 / (std::numbers::e * mu)};
}

struct DualNormReport {
  double norm = 0.0;  // || f(u) ||_{gamma/(gamma-1)}
  double rho = 0.0;
  double mu = 0.0;
};

/// rho at the midpoint of (0, 2n/(n-2) - gamma); NaN when that gap is empty.
/// Dims 1 and 2 have no critical exponent and report rho = 1.
inline double dual_norm_rho(const ModelParams& params) {
  if (params.dim < 3) return 1.0;
  const double gap = sobolev_critical(params.dim) - params.gamma;
  return gap > 0.0 ? 0.5 * gap : std::numeric_limits<double>::quiet_NaN();
}

inline DualNormReport source_dual_norm(const ModalField& u, const ModelParams& params) {
  detail::require_dim(u, params);
  if (!(params.gamma > 2.0)) throw ParameterError("source_dual_norm requires gamma > 2");
  detail::require_finite(u, "u");

  const double g = params.gamma;
  const double q = g / (g - 1.0);
  DualNormReport r;
  r.rho = dual_norm_rho(params);
  r.mu = r.rho * (g - 1.0) / g;
  if (!params.source_enabled) return r;

  const auto grid = to_grid(u);
  double s = 0.0;
  for (double v : grid.values) {
    const double a = std::abs(v);
    if (a < kLogFloor) continue;
    s += std::pow(std::abs(std::pow(a, g - 1.0) * std::log(a)), q);
  }
  r.norm = std::pow(s * u.domain->cell_volume(), 1.0 / q);
  if (!std::isfinite(r.norm)) throw NumericError("dual norm integrand is not finite");
  return r;
}

}  // namespace sdwave
