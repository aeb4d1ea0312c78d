#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "sdwave/domain.hpp"

namespace sdwave {

/// Smooth random band-limited field: Gaussian coefficients damped by 1/lambda_k,
/// scaled so that max |u| over the quadrature grid equals `amplitude`.
/// Fixed seed gives the same field on every run.
inline ModalField random_band_limited(const DomainPtr& domain, std::uint64_t seed, double amplitude = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ModalField f(domain);
  const auto lambda = domain->eigenvalues();
  const double lambda1 = lambda[0];
  for (std::size_t i = 0; i < f.size(); ++i) f.coeffs[i] = normal(rng) * lambda1 / lambda[i];

  const auto g = to_grid(f);
  double peak = 0.0;
  for (double v : g.values) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) f *= amplitude / peak;
  return f;
}

/// Same construction, rescaled to |grad u|_2 = 1.
inline ModalField random_unit_h1(const DomainPtr& domain, std::uint64_t seed) {
  auto f = random_band_limited(domain, seed);
  const double g = std::sqrt(grad_norm_sq(f));
  if (g > 0.0) f *= 1.0 / g;
  return f;
}

}  // namespace sdwave
