#pragma once

// Box domain (0,L)^n with homogeneous Dirichlet conditions and its sine
// eigenbasis. Fields live either as modal coefficients of
//   w_k(x) = prod_i sin(k_i pi x_i / L),  k in {1..m}^n,
// or as values on the interior grid x_j = (j+1) L/(N+1), j = 0..N-1, with
// N = oversample * m. The grid transform pair is a separable DST-I, so the
// trapezoid rule on this grid integrates products of two band modes exactly.

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sdwave/errors.hpp"

namespace sdwave {

using MultiIndex = std::vector<int>;

struct DomainSpec {
  int dim = 3;
  double length = std::numbers::pi;
  int modes_per_dim = 8;
  int oversample = 2;

  void validate() const {
    if (dim < 1 || dim > 3)
      throw ParameterError("domain dim must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
    if (!(length > 0.0) || !std::isfinite(length))
      throw ParameterError("domain length must be positive and finite");
    if (modes_per_dim < 1)
      throw ParameterError("modes_per_dim must be >= 1");
    if (oversample < 2)
      throw ParameterError("oversample must be >= 2");
  }

  bool operator==(const DomainSpec&) const = default;
};

struct Eigenpair {
  double eigenvalue;
  double normalization;  // ||w_k||_2^2 = (L/2)^n
};

/// Eigenvalue sum_i (k_i pi/L)^2 and squared L2 norm of w_k.
inline Eigenpair eigenpair(const DomainSpec& spec, const MultiIndex& k) {
  spec.validate();
  if (static_cast<int>(k.size()) != spec.dim)
    throw IndexError("multi-index has " + std::to_string(k.size()) + " components, domain dim is " +
                     std::to_string(spec.dim));
  double lambda = 0.0;
  for (int ki : k) {
    if (ki < 1 || ki > spec.modes_per_dim)
      throw IndexError("mode index " + std::to_string(ki) + " outside [1, " +
                       std::to_string(spec.modes_per_dim) + "]");
    const double w = ki * std::numbers::pi / spec.length;
    lambda += w * w;
  }
  return {lambda, std::pow(spec.length / 2.0, spec.dim)};
}

/// Sharp Poincare constant lambda_1^{-1/2}, lambda_1 = n (pi/L)^2.
inline double poincare_constant(const DomainSpec& spec) {
  spec.validate();
  const double w = std::numbers::pi / spec.length;
  return 1.0 / std::sqrt(spec.dim * w * w);
}

/// Precomputed eigenstructure and transform matrices for one DomainSpec.
/// Immutable once built; share it through DomainPtr.
class SpectralDomain {
 public:
  explicit SpectralDomain(const DomainSpec& spec) : spec_(spec) {
    spec_.validate();
    const auto m = static_cast<std::size_t>(spec_.modes_per_dim);
    const auto n_grid = static_cast<std::size_t>(spec_.oversample) * m;
    modes_ = 1;
    grid_ = 1;
    for (int d = 0; d < spec_.dim; ++d) {
      modes_ *= m;
      grid_ *= n_grid;
    }

    const double L = spec_.length;
    const double denom = static_cast<double>(n_grid + 1);
    spacing_ = L / denom;
    cell_ = std::pow(spacing_, spec_.dim);
    norm_sq_ = std::pow(L / 2.0, spec_.dim);

    synth_.resize(n_grid * m);
    analysis_.resize(m * n_grid);
    for (std::size_t j = 0; j < n_grid; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        const double s =
            std::sin(static_cast<double>((k + 1) * (j + 1)) * std::numbers::pi / denom);
        synth_[j * m + k] = s;
        analysis_[k * n_grid + j] = 2.0 / denom * s;
      }
    }

    eigen_.resize(modes_);
    for (std::size_t flat = 0; flat < modes_; ++flat) {
      std::size_t rest = flat;
      double lambda = 0.0;
      for (int d = spec_.dim - 1; d >= 0; --d) {
        const auto k = rest % m + 1;
        rest /= m;
        const double w = static_cast<double>(k) * std::numbers::pi / L;
        lambda += w * w;
      }
      eigen_[flat] = lambda;
    }
  }

  const DomainSpec& spec() const noexcept { return spec_; }
  int dim() const noexcept { return spec_.dim; }
  double length() const noexcept { return spec_.length; }
  std::size_t modes_per_dim() const noexcept { return static_cast<std::size_t>(spec_.modes_per_dim); }
  std::size_t grid_per_dim() const noexcept {
    return static_cast<std::size_t>(spec_.oversample * spec_.modes_per_dim);
  }
  std::size_t mode_count() const noexcept { return modes_; }
  std::size_t grid_size() const noexcept { return grid_; }

  std::span<const double> eigenvalues() const noexcept { return eigen_; }
  double eigenvalue(std::size_t flat) const { return eigen_.at(flat); }
  double basis_norm_sq() const noexcept { return norm_sq_; }
  /// Quadrature weight h^n of every interior grid point.
  double cell_volume() const noexcept { return cell_; }
  double grid_spacing() const noexcept { return spacing_; }
  double grid_coordinate(std::size_t j) const noexcept { return static_cast<double>(j + 1) * spacing_; }
  double poincare_constant() const noexcept { return sdwave::poincare_constant(spec_); }

  /// Lexicographic position of k (first component most significant).
  std::size_t flat_index(const MultiIndex& k) const {
    (void)eigenpair(spec_, k);
    std::size_t flat = 0;
    for (int ki : k) flat = flat * modes_per_dim() + static_cast<std::size_t>(ki - 1);
    return flat;
  }

  MultiIndex multi_index(std::size_t flat) const {
    if (flat >= modes_) throw IndexError("flat mode index out of range");
    MultiIndex k(static_cast<std::size_t>(spec_.dim));
    for (int d = spec_.dim - 1; d >= 0; --d) {
      k[static_cast<std::size_t>(d)] = static_cast<int>(flat % modes_per_dim()) + 1;
      flat /= modes_per_dim();
    }
    return k;
  }

  /// Modal coefficients -> grid values.
  void synthesize(std::span<const double> coeffs, std::vector<double>& out) const {
    if (coeffs.size() != modes_) throw DimensionError("coefficient count does not match domain");
    transform(coeffs, out, synth_, grid_per_dim(), modes_per_dim(), /*reverse=*/true);
  }

  /// Grid values -> modal coefficients (discrete L2 projection onto the band).
  void analyze(std::span<const double> values, std::vector<double>& out) const {
    if (values.size() != grid_) throw DimensionError("grid value count does not match domain");
    transform(values, out, analysis_, modes_per_dim(), grid_per_dim(), /*reverse=*/false);
  }

 private:
  // Applies the rows x cols matrix along every axis. Synthesis walks the axes
  // last-to-first and analysis first-to-last, so the strided last axis is
  // always transformed while the array is at its smallest.
  void transform(std::span<const double> in, std::vector<double>& out, const std::vector<double>& mat,
                 std::size_t rows, std::size_t cols, bool reverse) const {
    std::array<std::size_t, 3> shape{1, 1, 1};
    for (int d = 0; d < spec_.dim; ++d) shape[static_cast<std::size_t>(d)] = cols;

    std::vector<double> cur(in.begin(), in.end());
    std::vector<double> next;
    for (int pass = 0; pass < spec_.dim; ++pass) {
      const auto a = static_cast<std::size_t>(reverse ? spec_.dim - 1 - pass : pass);
      std::size_t outer = 1;
      std::size_t inner = 1;
      for (std::size_t d = 0; d < a; ++d) outer *= shape[d];
      for (std::size_t d = a + 1; d < static_cast<std::size_t>(spec_.dim); ++d) inner *= shape[d];

      next.assign(outer * rows * inner, 0.0);
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = cur.data() + o * cols * inner;
        double* dst = next.data() + o * rows * inner;
        if (inner == 1) {
          for (std::size_t r = 0; r < rows; ++r) {
            const double* mrow = mat.data() + r * cols;
            double acc = 0.0;
            for (std::size_t c = 0; c < cols; ++c) acc += mrow[c] * src[c];
            dst[r] = acc;
          }
          continue;
        }
        for (std::size_t r = 0; r < rows; ++r) {
          double* drow = dst + r * inner;
          const double* mrow = mat.data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) {
            const double w = mrow[c];
            const double* srow = src + c * inner;
            for (std::size_t i = 0; i < inner; ++i) drow[i] += w * srow[i];
          }
        }
      }
      shape[a] = rows;
      cur.swap(next);
    }
    out = std::move(cur);
  }

  DomainSpec spec_;
  std::size_t modes_ = 0;
  std::size_t grid_ = 0;
  double spacing_ = 0.0;
  double cell_ = 0.0;
  double norm_sq_ = 0.0;
  std::vector<double> eigen_;
  std::vector<double> synth_;     // grid_per_dim x modes_per_dim
  std::vector<double> analysis_;  // modes_per_dim x grid_per_dim
};

using DomainPtr = std::shared_ptr<const SpectralDomain>;

inline DomainPtr make_domain(const DomainSpec& spec) { return std::make_shared<const SpectralDomain>(spec); }

inline void require_same_domain(const DomainPtr& a, const DomainPtr& b) {
  if (!a || !b) throw DimensionError("field has no domain");
  if (a != b && !(a->spec() == b->spec())) throw DimensionError("fields live on different domains");
}

/// Scalar field as coefficients in the sine eigenbasis, lexicographic mode order.
struct ModalField {
  DomainPtr domain;
  std::vector<double> coeffs;

  ModalField() = default;
  explicit ModalField(DomainPtr d) : domain(std::move(d)), coeffs(domain->mode_count(), 0.0) {}
  ModalField(DomainPtr d, std::vector<double> c) : domain(std::move(d)), coeffs(std::move(c)) {
    if (coeffs.size() != domain->mode_count())
      throw DimensionError("coefficient count " + std::to_string(coeffs.size()) + " does not match " +
                           std::to_string(domain->mode_count()) + " modes");
  }

  std::size_t size() const noexcept { return coeffs.size(); }

  bool is_finite() const noexcept {
    for (double c : coeffs)
      if (!std::isfinite(c)) return false;
    return true;
  }

  bool is_zero() const noexcept {
    for (double c : coeffs)
      if (c != 0.0) return false;
    return true;
  }

  ModalField& operator+=(const ModalField& o) {
    require_same_domain(domain, o.domain);
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
    return *this;
  }

  ModalField& operator-=(const ModalField& o) {
    require_same_domain(domain, o.domain);
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
    return *this;
  }

  ModalField& operator*=(double s) noexcept {
    for (double& c : coeffs) c *= s;
    return *this;
  }

  friend ModalField operator+(ModalField a, const ModalField& b) { return a += b; }
  friend ModalField operator-(ModalField a, const ModalField& b) { return a -= b; }
  friend ModalField operator*(double s, ModalField a) { return a *= s; }
};

struct GridField {
  DomainPtr domain;
  std::vector<double> values;
};

inline GridField to_grid(const ModalField& f) {
  if (!f.domain) throw DimensionError("field has no domain");
  GridField g{f.domain, {}};
  f.domain->synthesize(f.coeffs, g.values);
  return g;
}

inline ModalField to_modal(const GridField& g) {
  if (!g.domain) throw DimensionError("grid field has no domain");
  std::vector<double> c;
  g.domain->analyze(g.values, c);
  return ModalField(g.domain, std::move(c));
}

/// Single eigenfunction amplitude * w_k.
inline ModalField eigenmode(const DomainPtr& domain, const MultiIndex& k, double amplitude = 1.0) {
  ModalField f(domain);
  f.coeffs[domain->flat_index(k)] = amplitude;
  return f;
}

inline ModalField first_eigenmode(const DomainPtr& domain, double amplitude = 1.0) {
  return eigenmode(domain, MultiIndex(static_cast<std::size_t>(domain->dim()), 1), amplitude);
}

/// (u, v) computed on the band: sum_k a_k b_k (L/2)^n.
inline double inner_product(const ModalField& a, const ModalField& b) {
  require_same_domain(a.domain, b.domain);
  double s = 0.0;
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) s += a.coeffs[i] * b.coeffs[i];
  return s * a.domain->basis_norm_sq();
}

inline double l2_norm_sq(const ModalField& f) { return inner_product(f, f); }

/// ||grad u||_2^2 = sum_k lambda_k c_k^2 (L/2)^n.
inline double grad_norm_sq(const ModalField& f) {
  if (!f.domain) throw DimensionError("field has no domain");
  const auto lambda = f.domain->eigenvalues();
  double s = 0.0;
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) s += lambda[i] * f.coeffs[i] * f.coeffs[i];
  return s * f.domain->basis_norm_sq();
}

inline double lp_norm(const GridField& g, double p) {
  if (!(p >= 1.0)) throw ParameterError("lp_norm requires p >= 1");
  double s = 0.0;
  for (double v : g.values) s += std::pow(std::abs(v), p);
  return std::pow(s * g.domain->cell_volume(), 1.0 / p);
}

/// (int |u|^p dx)^{1/p} by quadrature on the oversampled grid.
inline double lp_norm(const ModalField& f, double p) {
  if (!(p >= 1.0)) throw ParameterError("lp_norm requires p >= 1");
  return lp_norm(to_grid(f), p);
}

/// Copies coefficients into another band of the same box: truncates modes above
/// the target band, zero-fills modes the source lacks.
inline ModalField rebase(const ModalField& f, const DomainPtr& target) {
  const auto& src = f.domain->spec();
  const auto& dst = target->spec();
  if (src.dim != dst.dim || src.length != dst.length)
    throw DimensionError("rebase requires the same box");
  ModalField out(target);
  for (std::size_t flat = 0; flat < f.size(); ++flat) {
    if (f.coeffs[flat] == 0.0) continue;
    const auto k = f.domain->multi_index(flat);
    bool inside = true;
    for (int ki : k) inside = inside && ki <= dst.modes_per_dim;
    if (inside) out.coeffs[target->flat_index(k)] = f.coeffs[flat];
  }
  return out;
}

}  // namespace sdwave
