#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dosnet/error.hpp"
#include "dosnet/pde_core.hpp"
#include "dosnet/tensor_field.hpp"

namespace dosnet::solvers {

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  std::string scheme;
  double tau = 0.0;

  std::size_t size() const { return times.size(); }
  const Field& back() const { return states.back(); }
};

enum class NonlinearKind { None, AllenCahn, Nlse };
enum class Scheme { Plain, Strang };

inline std::string to_string(Scheme s) { return s == Scheme::Plain ? "plain" : "strang"; }

/// u_t = L u + N u with L one of the spectral operators and N an optional
/// pointwise reaction.
struct SplitProblem {
  pde::LinearEq linear = pde::LinearEq::AllenCahnLinear;
  NonlinearKind nonlinear = NonlinearKind::AllenCahn;
  pde::LinearParams params{};

  static SplitProblem allen_cahn(pde::AllenCahnParams ac = {}) {
    SplitProblem p;
    p.params.ac = ac;
    return p;
  }
  static SplitProblem nlse(pde::NlseParams nlse) {
    SplitProblem p{pde::LinearEq::NlseLinear, NonlinearKind::Nlse, {}};
    p.params.nlse = nlse;
    return p;
  }
  static SplitProblem linear_only(pde::LinearEq eq, pde::LinearParams params = {}) {
    return {eq, NonlinearKind::None, params};
  }
};

/// Number of steps n with n·tau = T; rejects horizons that are not a multiple.
inline std::size_t step_count(double T, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("time step must be positive");
  if (T < 0.0) throw ArgumentError("horizon must be non-negative");
  const double n = std::round(T / tau);
  if (std::abs(n * tau - T) > 1e-12 * std::max(1.0, T))
    throw ArgumentError("horizon " + std::to_string(T) + " is not a multiple of tau " + std::to_string(tau));
  return static_cast<std::size_t>(n);
}

inline void apply_multiplier(Field& u, const std::vector<cplx>& m, bool keep_real) {
  auto s = dft_forward(u);
  for (std::size_t j = 0; j < m.size(); ++j) s.coefficients[j] *= m[j];
  s.kind = keep_real && u.is_real() ? FieldKind::Real : FieldKind::Complex;
  u = dft_inverse(s);
}

inline Field nonlinear_flow(const SplitProblem& p, const Field& u, double t) {
  switch (p.nonlinear) {
    case NonlinearKind::None: return u;
    case NonlinearKind::AllenCahn: return pde::ac_nonlinear_step(u, t);
    case NonlinearKind::Nlse:
      return pde::nlse_nonlinear_step(u.is_real() ? u.as_complex() : u, t, p.params.nlse.gamma,
                                      p.params.nlse.direction);
  }
  return u;
}

/// Precomputed multipliers for repeated stepping on one grid.
class Stepper {
 public:
  Stepper(SplitProblem problem, const Grid& grid, double tau)
      : p_(std::move(problem)),
        tau_(tau),
        full_(pde::linear_multiplier(grid, p_.linear, tau, p_.params)),
        half_(pde::linear_multiplier(grid, p_.linear, tau / 2.0, p_.params)),
        keep_real_(pde::preserves_realness(p_.linear)) {
    if (tau < 0.0) throw ArgumentError("time step must be non-negative");
  }

  void linear_full(Field& u) const { apply_multiplier(u, full_, keep_real_); }
  void linear_half(Field& u) const { apply_multiplier(u, half_, keep_real_); }
  void nonlinear(Field& u) const { u = nonlinear_flow(p_, u, tau_); }

  Field plain(Field u) const {
    linear_full(u);
    nonlinear(u);
    return u;
  }
  Field strang(Field u) const {
    linear_half(u);
    nonlinear(u);
    linear_half(u);
    return u;
  }
  Field step(const Field& u, Scheme s) const { return s == Scheme::Plain ? plain(u) : strang(u); }

 private:
  SplitProblem p_;
  double tau_;
  std::vector<cplx> full_, half_;
  bool keep_real_;
};

/// One plain step: exact linear flow over tau, then exact nonlinear flow.
inline Field plain_split_step(const Field& u, double tau, const SplitProblem& p) {
  return Stepper(p, u.grid(), tau).plain(u);
}

inline Field strang_split_step(const Field& u, double tau, const SplitProblem& p) {
  return Stepper(p, u.grid(), tau).strang(u);
}

/// Integrates to T with n = T/tau steps of the given scheme. Strang half
/// steps between unrecorded steps are merged into one full linear step.
inline Trajectory integrate(const Field& u0, double T, double tau, const SplitProblem& p, Scheme scheme,
                            std::size_t record_stride = 0) {
  const std::size_t n = step_count(T, tau);
  Trajectory tr;
  tr.scheme = to_string(scheme);
  tr.tau = tau;
  tr.times.push_back(0.0);
  tr.states.push_back(u0);
  if (n == 0) return tr;
  const Stepper st(p, u0.grid(), tau);
  Field u = u0;
  bool half_pending = false;  // Strang: state is mid-step, lacking a trailing half
  for (std::size_t s = 1; s <= n; ++s) {
    const bool record = s == n || (record_stride > 0 && s % record_stride == 0);
    if (scheme == Scheme::Plain) {
      u = st.plain(std::move(u));
    } else {
      if (half_pending)
        st.linear_full(u);
      else
        st.linear_half(u);
      st.nonlinear(u);
      half_pending = true;
      if (record) {
        st.linear_half(u);
        half_pending = false;
      }
    }
    if (record) {
      tr.times.push_back(static_cast<double>(s) * tau);
      tr.states.push_back(u);
    }
  }
  return tr;
}

/// Strang splitting for Allen-Cahn: half linear, analytic reaction, half linear.
inline Trajectory strang_allen_cahn(const Field& u0, double T, double tau, const pde::AllenCahnParams& params,
                                    std::size_t record_stride = 0) {
  detail::require(u0.is_real(), "Allen-Cahn initial state must be real");
  params.validate();
  return integrate(u0, T, tau, SplitProblem::allen_cahn(params), Scheme::Strang, record_stride);
}

/// Split-step Fourier propagation over one span. The signal grid is time in
/// ps; xi = span / steps. Plain ordering is linear then Kerr rotation.
inline Field ssfm_propagate(const Field& signal, const pde::NlseParams& params, double span_km,
                            std::size_t steps_per_span, bool symmetric = false) {
  detail::require(steps_per_span >= 1, "ssfm needs at least one step per span");
  detail::require(span_km >= 0.0, "span length must be non-negative");
  const double xi = span_km / static_cast<double>(steps_per_span);
  const Stepper st(SplitProblem::nlse(params), signal.grid(), xi);
  Field u = signal.is_real() ? signal.as_complex() : signal;
  if (!symmetric) {
    for (std::size_t s = 0; s < steps_per_span; ++s) u = st.plain(std::move(u));
    return u;
  }
  st.linear_half(u);
  for (std::size_t s = 0; s < steps_per_span; ++s) {
    st.nonlinear(u);
    if (s + 1 < steps_per_span)
      st.linear_full(u);
    else
      st.linear_half(u);
  }
  return u;
}

struct OrderFit {
  double order = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  bool saturated = false;
  std::vector<double> taus;
  std::vector<double> errors;
  std::vector<bool> used;
};

/// Least-squares slope of ln(error) against ln(tau). Errors below
/// 1e2 * machine epsilon carry no information and are left out; with fewer
/// than two usable points the fit is marked saturated.
inline OrderFit fit_order(std::vector<double> taus, std::vector<double> errors) {
  detail::require_dims(taus.size() == errors.size(), "order fit: length mismatch");
  OrderFit f;
  f.taus = std::move(taus);
  f.errors = std::move(errors);
  const double floor = 1e2 * std::numeric_limits<double>::epsilon();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < f.taus.size(); ++i) {
    const bool ok = f.errors[i] > floor && std::isfinite(f.errors[i]);
    f.used.push_back(ok);
    if (!ok) continue;
    const double x = std::log(f.taus[i]), y = std::log(f.errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) {
    f.saturated = true;
    return f;
  }
  const double kk = static_cast<double>(k);
  f.order = (kk * sxy - sx * sy) / (kk * sxx - sx * sx);
  f.intercept = (sy - f.order * sx) / kk;
  return f;
}

using Solver = std::function<Field(const Field& u0, double T, double tau)>;

/// Measures the order of `solve` against `reference` run at ref_tau
/// (default: 1/50 of the finest tested step).
inline OrderFit convergence_order(const Solver& solve, const Field& u0, double T, const std::vector<double>& taus,
                                  const Solver& reference, double ref_tau = 0.0) {
  detail::require(taus.size() >= 3, "convergence order needs at least 3 step sizes");
  double finest = taus.front();
  for (double t : taus) {
    step_count(T, t);
    finest = std::min(finest, t);
  }
  if (ref_tau <= 0.0) ref_tau = finest / 50.0;
  const Field ref = reference(u0, T, ref_tau);
  std::vector<double> errs;
  for (double t : taus) errs.push_back(relative_l2(solve(u0, T, t), ref));
  return fit_order(taus, errs);
}

inline Solver scheme_solver(const SplitProblem& p, Scheme s) {
  return [p, s](const Field& u0, double T, double tau) { return integrate(u0, T, tau, p, s).back(); };
}

/// Spectral x-derivative of a real rank-1 field (Nyquist mode dropped).
inline Field spectral_derivative(const Field& u) {
  detail::require_dims(u.grid().rank() == 1, "spectral derivative is one-dimensional here");
  auto s = dft_forward(u);
  const auto k = u.grid().wavenumbers(0);
  const std::size_t n = k.size();
  for (std::size_t j = 0; j < n; ++j)
    s.coefficients[j] *= (n % 2 == 0 && j == n / 2) ? cplx{} : cplx{0.0, k[j]};
  return dft_inverse(s);
}

struct BracketProbe {
  Field bracket;
  Field predicted;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double bracket_norm = 0.0;
  double predicted_norm = 0.0;
  bool predicted_vanishes = false;
};

/// Numerical commutator S_h W_h u0 - W_h S_h u0 of the Allen-Cahn reaction
/// flow S and diffusion flow W, against the closed-form leading term
/// -6 ε² u0 (∂x u0)² h².
inline BracketProbe lie_bracket_probe(const Field& u0, double h, const pde::AllenCahnParams& params) {
  detail::require(h > 0.0, "bracket probe needs h > 0");
  detail::require(u0.is_real() && u0.grid().rank() == 1, "bracket probe needs a real 1D field");
  params.validate();
  const pde::LinearParams lp{params, {}};
  auto S = [&](const Field& f) { return pde::ac_nonlinear_step(f, h); };
  auto W = [&](const Field& f) { return pde::propagate_linear(f, pde::LinearEq::AllenCahnLinear, h, lp); };
  BracketProbe out;
  const Field sw = S(W(u0));
  const Field ws = W(S(u0));
  out.bracket = Field(u0.grid(), FieldKind::Real);
  for (std::size_t i = 0; i < u0.size(); ++i) out.bracket[i] = sw[i].real() - ws[i].real();
  const Field ux = spectral_derivative(u0);
  out.predicted = Field(u0.grid(), FieldKind::Real);
  const double e2 = params.epsilon * params.epsilon;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    const double d = ux[i].real();
    out.predicted[i] = -6.0 * e2 * u0[i].real() * d * d * h * h;
  }
  out.bracket_norm = l2_norm(out.bracket);
  out.predicted_norm = l2_norm(out.predicted);
  double dot = 0.0;
  for (std::size_t i = 0; i < u0.size(); ++i) dot += out.bracket[i].real() * out.predicted[i].real();
  // Relative to the size of u0 the leading term is below rounding noise.
  if (out.predicted_norm <= 1e-14 * h * h * std::max(1.0, l2_norm(u0))) {
    out.predicted_vanishes = true;
  } else {
    out.ratio = dot / (out.predicted_norm * out.predicted_norm);
  }
  return out;
}

}  // namespace dosnet::solvers
