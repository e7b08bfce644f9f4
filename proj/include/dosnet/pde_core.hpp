#pragma once

// Exact sub-flow solutions for the split equations. The same scalar formulas
// drive the classic solvers and the network activations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "dosnet/error.hpp"
#include "dosnet/tensor_field.hpp"

namespace dosnet::pde {

struct AllenCahnParams {
  double epsilon = 0.02;

  void validate() const { detail::require(epsilon > 0.0, "Allen-Cahn epsilon must be positive"); }
};

enum class Direction { Forward, Backward };

/// Fiber coefficients in km / ps / W units: alpha is the field attenuation
/// [1/km] applied as exp(-alpha*xi/2), beta2 [ps²/km], gamma [1/(W km)].
/// Backward direction flips the sign of all three.
struct NlseParams {
  double alpha = 0.063;
  double beta2 = -21.68;
  double gamma = 1.66;
  Direction direction = Direction::Forward;

  double sign() const { return direction == Direction::Forward ? 1.0 : -1.0; }

  NlseParams reversed() const {
    NlseParams p = *this;
    p.direction = direction == Direction::Forward ? Direction::Backward : Direction::Forward;
    return p;
  }

  void validate() const { detail::require(alpha >= 0.0, "NLSE alpha must be non-negative"); }
};

enum class LinearEq { Advection, Diffusion, Schrodinger, AllenCahnLinear, NlseLinear };

inline LinearEq parse_linear_eq(const std::string& s) {
  if (s == "advection") return LinearEq::Advection;
  if (s == "diffusion") return LinearEq::Diffusion;
  if (s == "schrodinger") return LinearEq::Schrodinger;
  if (s == "ac_linear") return LinearEq::AllenCahnLinear;
  if (s == "nlse_linear") return LinearEq::NlseLinear;
  throw ArgumentError("unknown equation tag: " + s);
}

inline std::string to_string(LinearEq eq) {
  switch (eq) {
    case LinearEq::Advection: return "advection";
    case LinearEq::Diffusion: return "diffusion";
    case LinearEq::Schrodinger: return "schrodinger";
    case LinearEq::AllenCahnLinear: return "ac_linear";
    case LinearEq::NlseLinear: return "nlse_linear";
  }
  return "?";
}

/// Whether the propagator maps real fields to real fields.
inline bool preserves_realness(LinearEq eq) {
  return eq == LinearEq::Advection || eq == LinearEq::Diffusion || eq == LinearEq::AllenCahnLinear;
}

struct LinearParams {
  AllenCahnParams ac{};
  NlseParams nlse{};
};

/// Per-mode multiplier exp(t * symbol(k)) of the linear sub-flow.
inline std::vector<cplx> linear_multiplier(const Grid& grid, LinearEq eq, double t,
                                           const LinearParams& params = {}) {
  detail::require(t >= 0.0, "propagation time must be non-negative");
  std::vector<cplx> m(grid.size());
  const cplx i1{0.0, 1.0};
  switch (eq) {
    case LinearEq::Advection: {
      detail::require_dims(grid.rank() == 1, "advection propagator is one-dimensional");
      auto k = grid.wavenumbers(0);
      // Real fields drop the imaginary part of the Nyquist mode on inversion,
      // which leaves cos(k t) there.
      for (std::size_t j = 0; j < m.size(); ++j) m[j] = std::exp(-i1 * k[j] * t);
      break;
    }
    case LinearEq::Diffusion: {
      auto k2 = grid.wavenumber_squared();
      for (std::size_t j = 0; j < m.size(); ++j) m[j] = std::exp(-k2[j] * t);
      break;
    }
    case LinearEq::Schrodinger: {
      auto k2 = grid.wavenumber_squared();
      for (std::size_t j = 0; j < m.size(); ++j) m[j] = std::exp(-i1 * k2[j] * t);
      break;
    }
    case LinearEq::AllenCahnLinear: {
      params.ac.validate();
      const double e2 = params.ac.epsilon * params.ac.epsilon;
      auto k2 = grid.wavenumber_squared();
      for (std::size_t j = 0; j < m.size(); ++j) m[j] = std::exp(-e2 * k2[j] * t);
      break;
    }
    case LinearEq::NlseLinear: {
      params.nlse.validate();
      detail::require_dims(grid.rank() == 1, "NLSE propagator is one-dimensional");
      const double s = params.nlse.sign();
      const double a = s * params.nlse.alpha;
      const double b = s * params.nlse.beta2;
      auto w = grid.wavenumbers(0);
      for (std::size_t j = 0; j < m.size(); ++j)
        m[j] = std::exp(t * cplx{-a / 2.0, b * w[j] * w[j] / 2.0});
      break;
    }
  }
  return m;
}

inline Spectrum linear_propagator(const Spectrum& spectrum, LinearEq eq, double t,
                                  const LinearParams& params = {}) {
  auto m = linear_multiplier(spectrum.grid, eq, t, params);
  Spectrum out = spectrum;
  for (std::size_t j = 0; j < m.size(); ++j) out.coefficients[j] *= m[j];
  if (!preserves_realness(eq)) out.kind = FieldKind::Complex;
  return out;
}

/// Convenience: physical-space in, physical-space out.
inline Field propagate_linear(const Field& u, LinearEq eq, double t, const LinearParams& params = {}) {
  return dft_inverse(linear_propagator(dft_forward(u), eq, t, params));
}

// --- Allen-Cahn reaction sub-flow du/dt = u - u³ -------------------------------

// Denominator written as u² + e^{-2τ}(1 - u²) so that u = ±1 gives exactly 1.
inline double ac_denominator(double u, double tau, double floor) {
  const double e = std::exp(-2.0 * tau);
  const double u2 = u * u;
  return std::max(u2 + e * (1.0 - u2), floor);
}

/// u / sqrt(e^{-2τ} + (1 - e^{-2τ}) u²), the exact flow of du/dt = u - u³.
inline double ac_flow(double u, double tau, double floor = 0.0) {
  if (u == 0.0) return u;
  return u / std::sqrt(ac_denominator(u, tau, floor));
}

inline double ac_flow_du(double u, double tau, double floor = 0.0) {
  const double d = ac_denominator(u, tau, floor);
  if (d == floor && floor > 0.0) return 1.0 / std::sqrt(d);
  const double e = std::exp(-2.0 * tau);
  return e / (d * std::sqrt(d));
}

inline double ac_flow_dtau(double u, double tau, double floor = 0.0) {
  const double d = ac_denominator(u, tau, floor);
  if (d == floor && floor > 0.0) return 0.0;
  const double e = std::exp(-2.0 * tau);
  return u * e * (1.0 - u * u) / (d * std::sqrt(d));
}

inline Field ac_nonlinear_step(const Field& u, double tau) {
  detail::require(u.is_real(), "Allen-Cahn nonlinear step needs a real field");
  detail::require(tau >= 0.0, "Allen-Cahn step needs tau >= 0");
  Field out = u;
  for (auto& v : out.values()) v = ac_flow(v.real(), tau);
  return out;
}

// --- NLSE Kerr sub-flow: intensity-dependent phase rotation --------------------

/// u * exp(±i γ ξ |u|²); the sign is + forward and - backward.
inline cplx nlse_rotation(cplx u, double phase_coeff) {
  const double theta = phase_coeff * std::norm(u);
  return u * cplx{std::cos(theta), std::sin(theta)};
}

inline double nlse_phase_coeff(double xi, double gamma, Direction direction) {
  return (direction == Direction::Forward ? 1.0 : -1.0) * gamma * xi;
}

inline Field nlse_nonlinear_step(const Field& u, double xi, double gamma, Direction direction) {
  detail::require(!u.is_real(), "NLSE nonlinear step needs a complex field");
  detail::require(xi >= 0.0, "NLSE step needs xi >= 0");
  const double c = nlse_phase_coeff(xi, gamma, direction);
  Field out = u;
  for (auto& v : out.values()) v = nlse_rotation(v, c);
  return out;
}

}  // namespace dosnet::pde
