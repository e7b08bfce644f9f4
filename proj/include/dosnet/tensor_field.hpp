#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dosnet/error.hpp"
#include "dosnet/fft.hpp"

namespace dosnet {

using cplx = std::complex<double>;

/// Periodic uniform grid of rank 1 or 2. The right end of every axis is
/// excluded, so spacing = (max - min) / points.
class Grid {
 public:
  Grid() = default;

  Grid(std::vector<std::size_t> dims, std::vector<std::pair<double, double>> domain)
      : dims_(std::move(dims)), domain_(std::move(domain)) {
    detail::require(dims_.size() == 1 || dims_.size() == 2, "grid rank must be 1 or 2");
    detail::require(domain_.size() == dims_.size(), "grid domain rank mismatch");
    for (std::size_t a = 0; a < dims_.size(); ++a) {
      detail::require(dims_[a] >= 2, "grid axes need at least 2 points");
      detail::require(domain_[a].second > domain_[a].first, "grid domain must be increasing");
    }
  }

  static Grid line(std::size_t n, double lo = -std::numbers::pi, double hi = std::numbers::pi) {
    return Grid({n}, {{lo, hi}});
  }

  static Grid square(std::size_t n0, std::size_t n1, double lo = -1.0, double hi = 1.0) {
    return Grid({n0, n1}, {{lo, hi}, {lo, hi}});
  }

  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<std::pair<double, double>>& domain() const { return domain_; }

  std::size_t size() const {
    std::size_t s = 1;
    for (auto d : dims_) s *= d;
    return s;
  }

  double length(std::size_t axis) const { return domain_.at(axis).second - domain_.at(axis).first; }
  double spacing(std::size_t axis) const {
    return length(axis) / static_cast<double>(dims_.at(axis));
  }
  double coordinate(std::size_t axis, std::size_t i) const {
    return domain_.at(axis).first + spacing(axis) * static_cast<double>(i);
  }

  /// Angular wavenumbers in DFT order: 2π j / L for j < n/2, negative above.
  std::vector<double> wavenumbers(std::size_t axis) const {
    const std::size_t n = dims_.at(axis);
    const double base = 2.0 * std::numbers::pi / length(axis);
    std::vector<double> k(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto signed_j = j < (n + 1) / 2 ? static_cast<double>(j)
                                            : static_cast<double>(j) - static_cast<double>(n);
      k[j] = base * signed_j;
    }
    return k;
  }

  /// |k|² per flattened sample, useful for Laplacian multipliers.
  std::vector<double> wavenumber_squared() const {
    std::vector<double> out(size());
    if (rank() == 1) {
      auto k = wavenumbers(0);
      for (std::size_t j = 0; j < k.size(); ++j) out[j] = k[j] * k[j];
    } else {
      auto k0 = wavenumbers(0);
      auto k1 = wavenumbers(1);
      for (std::size_t i = 0; i < k0.size(); ++i)
        for (std::size_t j = 0; j < k1.size(); ++j) out[i * k1.size() + j] = k0[i] * k0[i] + k1[j] * k1[j];
    }
    return out;
  }

  bool operator==(const Grid&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::pair<double, double>> domain_;
};

enum class FieldKind { Real, Complex };

/// Samples of a real or complex function on a Grid, row-major.
///
/// Storage is complex for both kinds; a Real field keeps its imaginary parts
/// at zero.
class Field {
 public:
  Field() = default;

  Field(Grid grid, FieldKind kind) : grid_(std::move(grid)), kind_(kind), values_(grid_.size()) {}

  Field(Grid grid, std::vector<cplx> values, FieldKind kind = FieldKind::Complex)
      : grid_(std::move(grid)), kind_(kind), values_(std::move(values)) {
    detail::require_dims(values_.size() == grid_.size(), "field length does not match grid");
    if (kind_ == FieldKind::Real)
      for (auto& v : values_) v = {v.real(), 0.0};
  }

  static Field real(Grid grid, std::span<const double> values) {
    detail::require_dims(values.size() == grid.size(), "field length does not match grid");
    std::vector<cplx> v(values.begin(), values.end());
    return Field(std::move(grid), std::move(v), FieldKind::Real);
  }

  /// Samples f(x) on a rank-1 grid.
  static Field sample(const Grid& grid, const std::function<double(double)>& f) {
    detail::require_dims(grid.rank() == 1, "sample(f(x)) needs a rank-1 grid");
    Field out(grid, FieldKind::Real);
    for (std::size_t i = 0; i < grid.size(); ++i) out.values_[i] = f(grid.coordinate(0, i));
    return out;
  }

  /// Samples f(x, y) on a rank-2 grid.
  static Field sample(const Grid& grid, const std::function<double(double, double)>& f) {
    detail::require_dims(grid.rank() == 2, "sample(f(x,y)) needs a rank-2 grid");
    Field out(grid, FieldKind::Real);
    const auto n1 = grid.dims()[1];
    for (std::size_t i = 0; i < grid.dims()[0]; ++i)
      for (std::size_t j = 0; j < n1; ++j)
        out.values_[i * n1 + j] = f(grid.coordinate(0, i), grid.coordinate(1, j));
    return out;
  }

  static Field constant(const Grid& grid, double value) {
    Field out(grid, FieldKind::Real);
    for (auto& v : out.values_) v = value;
    return out;
  }

  const Grid& grid() const { return grid_; }
  FieldKind kind() const { return kind_; }
  bool is_real() const { return kind_ == FieldKind::Real; }
  std::size_t size() const { return values_.size(); }

  std::span<const cplx> values() const { return values_; }
  std::span<cplx> values() { return values_; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }
  cplx& operator[](std::size_t i) { return values_[i]; }

  std::vector<double> real_values() const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i].real();
    return out;
  }

  /// Reinterprets the field as real, dropping the imaginary parts.
  Field as_real() const { return Field(grid_, values_, FieldKind::Real); }
  Field as_complex() const { return Field(grid_, values_, FieldKind::Complex); }

 private:
  Grid grid_;
  FieldKind kind_ = FieldKind::Real;
  std::vector<cplx> values_;
};

/// DFT coefficients of a Field. `kind` records what the inverse should yield.
struct Spectrum {
  static constexpr const char* kNormalization = "unnormalized-forward, 1/n inverse";

  Grid grid;
  std::vector<cplx> coefficients;
  FieldKind kind = FieldKind::Complex;
};

inline Spectrum dft_forward(const Field& field) {
  detail::require(field.size() >= 2, "dft needs at least 2 samples");
  Spectrum s{field.grid(), std::vector<cplx>(field.values().begin(), field.values().end()),
             field.kind()};
  fft::transform(s.coefficients, std::span<const std::size_t>(field.grid().dims()),
                 fft::Direction::Forward);
  return s;
}

inline Field dft_inverse(const Spectrum& spectrum) {
  detail::require_dims(spectrum.coefficients.size() == spectrum.grid.size(),
                       "spectrum length does not match its grid");
  std::vector<cplx> v = spectrum.coefficients;
  fft::transform(v, std::span<const std::size_t>(spectrum.grid.dims()), fft::Direction::Backward);
  const double scale = 1.0 / static_cast<double>(v.size());
  for (auto& x : v) x *= scale;
  return Field(spectrum.grid, std::move(v), spectrum.kind);
}

inline double l2_norm(std::span<const cplx> values) {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return std::sqrt(s);
}

inline double l2_norm(const Field& field) { return l2_norm(field.values()); }

struct RelativeError {
  double value = 0.0;
  /// True when some |truth_i| was below 1e-12 and the L2-relative norm was
  /// returned instead of the pointwise mean.
  bool denominator_underflow = false;
};

/// (1/N) Σ |(pred_i - truth_i) / truth_i|², falling back to
/// ‖pred - truth‖ / ‖truth‖ when any truth sample is (numerically) zero.
inline RelativeError relative_error(std::span<const cplx> pred, std::span<const cplx> truth) {
  detail::require_dims(pred.size() == truth.size(), "relative_error: length mismatch");
  bool underflow = false;
  for (const auto& t : truth)
    if (std::abs(t) < 1e-12) {
      underflow = true;
      break;
    }
  if (underflow) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      num += std::norm(pred[i] - truth[i]);
      den += std::norm(truth[i]);
    }
    const double value = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return {value, true};
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::norm((pred[i] - truth[i]) / truth[i]);
  return {acc / static_cast<double>(pred.size()), false};
}

inline RelativeError relative_error(const Field& pred, const Field& truth) {
  detail::require_dims(pred.grid() == truth.grid(), "relative_error: grids differ");
  return relative_error(pred.values(), truth.values());
}

/// ‖pred - truth‖ / ‖truth‖.
inline double relative_l2(std::span<const cplx> pred, std::span<const cplx> truth) {
  detail::require_dims(pred.size() == truth.size(), "relative_l2: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += std::norm(pred[i] - truth[i]);
    den += std::norm(truth[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double relative_l2(const Field& pred, const Field& truth) {
  detail::require_dims(pred.grid() == truth.grid(), "relative_l2: grids differ");
  return relative_l2(pred.values(), truth.values());
}

}  // namespace dosnet
