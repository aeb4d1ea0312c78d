#pragma once

// Fibering map lambda -> J(lambda u), Nehari projection, and trial-family
// upper estimates of the potential well depth d.
//
// With A = |grad u|^2, B = int |u|^g ln|u|, G = |u|_g^g the scaling identity
// int |lu|^g ln|lu| = l^g (B + G ln l) gives
//   J(l u) = l^2 A/2 - l^g (B + G ln l)/g + l^g G/g^2
//   I(l u) = l^2 A   - l^g (B + G ln l)
// and l dJ/dl = I, so critical points of the fibering map are Nehari points.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/functionals.hpp"
#include "sdwave/random_fields.hpp"

namespace sdwave {

struct FiberMoments {
  double A = 0.0;  // |grad u|_2^2
  double B = 0.0;  // int |u|^gamma ln|u|
  double G = 0.0;  // |u|_gamma^gamma
};

inline FiberMoments fiber_moments(const ModalField& u, const ModelParams& params) {
  detail::require_dim(u, params);
  detail::require_finite(u, "u");
  const auto si = source_integrals(to_grid(u), params.gamma);
  return {grad_norm_sq(u), si.logterm, si.lgamma};
}

inline double fiber_J(const FiberMoments& m, double lambda, double gamma) {
  if (!(lambda > 0.0)) throw ParameterError("fiber_J requires lambda > 0");
  const double lg = std::pow(lambda, gamma);
  return 0.5 * lambda * lambda * m.A - lg * (m.B + m.G * std::log(lambda)) / gamma + lg * m.G / (gamma * gamma);
}

inline double fiber_I(const FiberMoments& m, double lambda, double gamma) {
  if (!(lambda > 0.0)) throw ParameterError("fiber_I requires lambda > 0");
  return lambda * lambda * m.A - std::pow(lambda, gamma) * (m.B + m.G * std::log(lambda));
}

/// |fiber_I(lambda)| / max(A, lambda^gamma G)
inline double nehari_residual(const FiberMoments& m, double lambda, double gamma) {
  const double scale = std::max(m.A, std::pow(lambda, gamma) * m.G);
  return std::abs(fiber_I(m, lambda, gamma)) / scale;
}

struct FiberScan {
  double lambda_min = 1e-6;
  double lambda_max = 1e3;
  int points = 400;
};

struct NehariProjection {
  double lambda_star = 0.0;
  double J_at_max = 0.0;
  FiberMoments moments;
};

/// Global maximizer of the fibering map from precomputed moments.
inline NehariProjection project_moments(const FiberMoments& m, double gamma, const FiberScan& scan = {}) {
  if (!(m.G > 0.0)) throw DegenerateInputError("Nehari projection of a zero field");
  if (scan.points < 2 || !(scan.lambda_min > 0.0) || !(scan.lambda_max > scan.lambda_min))
    throw ParameterError("invalid fibering scan");

  // I(l u)/l^2; same sign as fiber_I, better scaled near 0.
  const auto reduced = [&](double l) { return m.A - std::pow(l, gamma - 2.0) * (m.B + m.G * std::log(l)); };

  const double ratio = std::log(scan.lambda_max / scan.lambda_min) / (scan.points - 1);
  NehariProjection best;
  best.moments = m;
  bool found = false;
  double lo = scan.lambda_min;
  double f_lo = reduced(lo);
  for (int i = 1; i < scan.points; ++i) {
    const double hi = i == scan.points - 1 ? scan.lambda_max : scan.lambda_min * std::exp(ratio * i);
    const double f_hi = reduced(hi);
    if (f_lo > 0.0 && f_hi <= 0.0) {
      // Bisect to full precision: stop once the midpoint collapses onto an end.
      double a = lo;
      double b = hi;
      for (;;) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (reduced(mid) > 0.0)
          a = mid;
        else
          b = mid;
      }
      const double root = std::abs(reduced(a)) < std::abs(reduced(b)) ? a : b;
      const double J = fiber_J(m, root, gamma);
      if (!found || J > best.J_at_max) {
        best.lambda_star = root;
        best.J_at_max = J;
        found = true;
      }
    }
    lo = hi;
    f_lo = f_hi;
  }
  if (!found)
    throw BracketingError("no maximum of the fibering map in [" + std::to_string(scan.lambda_min) + ", " +
                          std::to_string(scan.lambda_max) + "]");
  return best;
}

inline NehariProjection project_to_nehari(const ModalField& u, const ModelParams& params,
                                          const FiberScan& scan = {}) {
  if (u.is_zero()) throw DegenerateInputError("Nehari projection of a zero field");
  return project_moments(fiber_moments(u, params), params.gamma, scan);
}

struct TrialResult {
  std::size_t id = 0;
  double lambda_star = 0.0;
  double J_at_max = 0.0;
};

struct WellDepthEstimate {
  double d_hat = std::numeric_limits<double>::infinity();
  std::vector<TrialResult> trials;
  double safety = 0.5;
};

/// d_hat = min over nonzero trials of sup_l J(l u). Zero trials are skipped.
inline WellDepthEstimate estimate_depth(const std::vector<ModalField>& trials, const ModelParams& params,
                                        double safety = 0.5, const FiberScan& scan = {}) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ParameterError("safety must lie in (0, 1]");
  WellDepthEstimate est;
  est.safety = safety;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].is_zero()) continue;
    const auto p = project_to_nehari(trials[i], params, scan);
    est.trials.push_back({i, p.lambda_star, p.J_at_max});
    est.d_hat = std::min(est.d_hat, p.J_at_max);
  }
  if (est.trials.empty()) throw ParameterError("well-depth trial family has no nonzero member");
  return est;
}

/// First eigenfunction followed by `random_count` random band-limited fields.
inline std::vector<ModalField> default_trial_family(const DomainPtr& domain, int random_count,
                                                    std::uint64_t seed) {
  std::vector<ModalField> trials;
  trials.push_back(first_eigenmode(domain));
  for (int i = 0; i < random_count; ++i)
    trials.push_back(random_band_limited(domain, seed + static_cast<std::uint64_t>(i)));
  return trials;
}

enum class Verdict { In, OutI, OutE };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::In: return "IN";
    case Verdict::OutI: return "OUT_I";
    case Verdict::OutE: return "OUT_E";
  }
  return "?";
}

struct StableSetVerdict {
  Verdict verdict = Verdict::OutI;
  bool trivial_zero = false;
  double I0 = 0.0;
  double E0 = 0.0;
  double threshold = 0.0;  // safety * d_hat
  double energy_margin = 0.0;  // threshold - E0

  bool in() const noexcept { return verdict == Verdict::In; }
};

/// IN when I(u0) > 0 and E(0) < safety * d_hat. Since d_hat only bounds d from
/// above, IN is a conservative indication, not a certificate.
inline StableSetVerdict stable_set_check(const ModalField& u0, const ModalField& u1, double d_hat, double safety,
                                         const ModelParams& params) {
  if (!(d_hat > 0.0)) throw ParameterError("d_hat must be positive");
  if (!(safety > 0.0 && safety <= 1.0)) throw ParameterError("safety must lie in (0, 1]");
  const auto rep = energy(u0, u1, params);
  StableSetVerdict v;
  v.trivial_zero = u0.is_zero();
  v.I0 = rep.I;
  v.E0 = rep.E;
  v.threshold = safety * d_hat;
  v.energy_margin = v.threshold - v.E0;
  if (v.trivial_zero || !(rep.I > 0.0))
    v.verdict = Verdict::OutI;
  else if (rep.E < v.threshold)
    v.verdict = Verdict::In;
  else
    v.verdict = Verdict::OutE;
  return v;
}

}  // namespace sdwave
