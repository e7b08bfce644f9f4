#pragma once

// Diagnostics: 2² factorial effects, intermediate-state time matching,
// long-horizon rollout, and the two-layer linear network weight theory.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dosnet/classic_solvers.hpp"
#include "dosnet/dosnet.hpp"
#include "dosnet/error.hpp"
#include "dosnet/tensor_field.hpp"

namespace dosnet::analysis {

// --- factorial design ---------------------------------------------------------------

struct FactorialCell {
  int xA = 1;  // +1 Autoflow, −1 DNN
  int xB = 1;  // +1 OSB, −1 ReLU
  double y = 1.0;
};

struct FactorialEffects {
  double q0 = 0.0, qA = 0.0, qB = 0.0, qAB = 0.0;

  double predict_log(int xA, int xB) const { return q0 + qA * xA + qB * xB + qAB * xA * xB; }
};

/// Exact solve of ln y = q0 + qA xA + qB xB + qAB xA xB over the four cells.
inline FactorialEffects factorial_effects(std::span<const FactorialCell> cells) {
  detail::require(cells.size() == 4, "a 2² design needs exactly four cells");
  bool seen[2][2] = {{false, false}, {false, false}};
  FactorialEffects q;
  for (const auto& c : cells) {
    detail::require((c.xA == 1 || c.xA == -1) && (c.xB == 1 || c.xB == -1), "levels must be ±1");
    if (!(c.y > 0.0)) throw ArgumentError("factorial responses must be positive");
    auto& s = seen[c.xA > 0][c.xB > 0];
    detail::require(!s, "factorial cells must cover each level combination once");
    s = true;
    const double l = std::log(c.y);
    q.q0 += l / 4.0;
    q.qA += c.xA * l / 4.0;
    q.qB += c.xB * l / 4.0;
    q.qAB += c.xA * c.xB * l / 4.0;
  }
  return q;
}

/// Cells in the order (DNN+ReLU, Autoflow+ReLU, DNN+OSB, Autoflow+OSB).
inline std::array<FactorialCell, 4> factorial_cells(double dnn_relu, double af_relu, double dnn_osb, double af_osb) {
  return {FactorialCell{-1, -1, dnn_relu}, FactorialCell{1, -1, af_relu}, FactorialCell{-1, 1, dnn_osb},
          FactorialCell{1, 1, af_osb}};
}

// --- time matching ---------------------------------------------------------------------

struct TimeMatch {
  std::size_t index = 0;
  double time = 0.0;
  double distance = 0.0;  // ‖O − y(t*)‖₂
};

/// t* = argmin_j ‖O − y(t_j)‖², earliest time on ties.
inline TimeMatch match_time(const Field& state, const solvers::Trajectory& traj) {
  detail::require(traj.size() > 0, "empty trajectory");
  TimeMatch best{0, 0.0, std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < traj.size(); ++j) {
    detail::require_dims(traj.states[j].grid() == state.grid(), "trajectory and state grids differ");
    double d2 = 0.0;
    const auto a = state.values();
    const auto b = traj.states[j].values();
    for (std::size_t i = 0; i < a.size(); ++i) d2 += std::norm(a[i] - b[i]);
    const double d = std::sqrt(d2);
    if (d < best.distance) best = {j, traj.times[j], d};
  }
  return best;
}

inline std::vector<TimeMatch> match_times(std::span<const Field> intermediates, const solvers::Trajectory& traj) {
  std::vector<TimeMatch> out;
  out.reserve(intermediates.size());
  for (const auto& f : intermediates) out.push_back(match_time(f, traj));
  return out;
}

/// Exact trajectory of a linear equation at n_intervals + 1 equally spaced
/// times on [0, T].
inline solvers::Trajectory linear_trajectory(const Field& u0, pde::LinearEq eq, double T, std::size_t n_intervals,
                                             const pde::LinearParams& params = {}) {
  detail::require(n_intervals >= 1, "trajectory needs at least one interval");
  solvers::Trajectory tr;
  tr.scheme = "exact";
  tr.tau = T / static_cast<double>(n_intervals);
  for (std::size_t j = 0; j <= n_intervals; ++j) {
    const double t = T * static_cast<double>(j) / static_cast<double>(n_intervals);
    tr.times.push_back(t);
    tr.states.push_back(pde::propagate_linear(u0, eq, t, params));
  }
  return tr;
}

/// Per-block intermediate states of a model for one input field.
inline std::vector<Field> model_intermediates(const Model& model, const Field& u0) {
  const auto dt = model.config().block.dtype;
  std::vector<Field> in{u0};
  const auto out = model.forward(ad::constant(stack_fields(in, dt)));
  std::vector<Field> fs;
  for (const auto& v : out.intermediates)
    fs.push_back(unstack_field(v->value, 0, u0.grid(), dt == ad::DType::Real ? FieldKind::Real : FieldKind::Complex));
  return fs;
}

// --- rollout -------------------------------------------------------------------------------

using Propagator = std::function<Field(const Field&)>;

struct RolloutStep {
  std::size_t step = 0;
  double rel_l2 = 0.0;
  double rel_error = 0.0;  // mean of ((û − u)/u)², with its L2 fallback
  bool fallback = false;
  double norm = 0.0;       // ‖û‖
};

/// Applies `model` n_steps times and compares every state with `reference`
/// applied the same number of times.
inline std::vector<RolloutStep> rollout(const Propagator& model, const Propagator& reference, const Field& u0,
                                        std::size_t n_steps) {
  std::vector<RolloutStep> out;
  Field pred = u0, truth = u0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    pred = model(pred);
    truth = reference(truth);
    detail::require_dims(pred.grid() == truth.grid(), "model output grid differs from reference");
    const auto re = relative_error(pred, truth);
    out.push_back({k, relative_l2(pred, truth), re.value, re.denominator_underflow, l2_norm(pred)});
  }
  return out;
}

inline Propagator model_propagator(const Model& model) {
  return [&model](const Field& u) {
    std::vector<Field> in{u};
    return predict_fields(model, in).front();
  };
}

inline Propagator exact_propagator(pde::LinearEq eq, double T, pde::LinearParams params = {}) {
  return [=](const Field& u) { return pde::propagate_linear(u, eq, T, params); };
}

inline Propagator allen_cahn_propagator(double T, double tau, pde::AllenCahnParams params) {
  return [=](const Field& u) { return solvers::strang_allen_cahn(u, T, tau, params).back(); };
}

// --- two-layer linear network ------------------------------------------------------------------

struct GradientFlowResult {
  Eigen::MatrixXd W21, W32;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> energy;  // per iteration, starting with the initial state
};

/// E = ½‖Σ31 − W32 W21‖²_F + (β/2)(‖W21‖² + ‖W32‖²), the loss with Σ11 = I
/// up to a constant.
inline double gradient_flow_energy(const Eigen::MatrixXd& S31, double beta, const Eigen::MatrixXd& W21,
                                   const Eigen::MatrixXd& W32) {
  return 0.5 * (S31 - W32 * W21).squaredNorm() + 0.5 * beta * (W21.squaredNorm() + W32.squaredNorm());
}

/// Explicit Euler on
///   dW21/dt = λ [W32ᵀ(Σ31 − W32 W21) − β W21]
///   dW32/dt = λ [(Σ31 − W32 W21) W21ᵀ − β W32]
/// with unit time per iteration. Stops when the update norm drops below tol.
inline GradientFlowResult two_layer_gradient_flow(const Eigen::MatrixXd& S31, double beta, double lambda,
                                                  Eigen::MatrixXd W21, Eigen::MatrixXd W32, std::size_t n_iters,
                                                  double tol = 1e-10, bool record_energy = false) {
  detail::require_dims(S31.rows() == W32.rows() && S31.cols() == W21.cols() && W32.cols() == W21.rows(),
                       "gradient flow shapes are incompatible");
  detail::require(beta >= 0.0 && lambda > 0.0, "beta must be >= 0 and lambda > 0");
  const double smax = S31.size() ? Eigen::JacobiSVD<Eigen::MatrixXd>(S31).singularValues()(0) : 0.0;
  if (!(lambda * (smax + beta) < 1.0))
    throw ArgumentError("step size too large: lambda·(s_max + beta) must be < 1");
  GradientFlowResult r;
  if (record_energy) r.energy.push_back(gradient_flow_energy(S31, beta, W21, W32));
  for (std::size_t it = 0; it < n_iters; ++it) {
    const Eigen::MatrixXd E = S31 - W32 * W21;
    const Eigen::MatrixXd d21 = lambda * (W32.transpose() * E - beta * W21);
    const Eigen::MatrixXd d32 = lambda * (E * W21.transpose() - beta * W32);
    W21 += d21;
    W32 += d32;
    r.iterations = it + 1;
    if (record_energy) r.energy.push_back(gradient_flow_energy(S31, beta, W21, W32));
    if (!std::isfinite(W21.norm()) || W21.norm() > 1e6 || W32.norm() > 1e6)
      throw NumericError("gradient flow diverged after " + std::to_string(it + 1) + " iterations");
    if (std::sqrt(d21.squaredNorm() + d32.squaredNorm()) < tol) {
      r.converged = true;
      break;
    }
  }
  r.W21 = std::move(W21);
  r.W32 = std::move(W32);
  return r;
}

/// Σ31 = U S Vᵀ. Symmetric input uses the eigendecomposition (U = V, signed
/// S); otherwise the SVD (S ≥ 0).
struct SignedSvd {
  Eigen::MatrixXd U, V;
  Eigen::VectorXd s;
  bool symmetric = false;
};

inline SignedSvd signed_svd(const Eigen::MatrixXd& S31) {
  SignedSvd d;
  const double scale = std::max(S31.norm(), std::numeric_limits<double>::min());
  d.symmetric = S31.rows() == S31.cols() && (S31 - S31.transpose()).norm() <= 1e-12 * scale;
  if (d.symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S31 + S31.transpose()));
    // Descending by magnitude, like singular values.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(S31.rows()));
    for (Eigen::Index i = 0; i < S31.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
    });
    d.U.resize(S31.rows(), S31.rows());
    d.s.resize(S31.rows());
    for (std::size_t k = 0; k < order.size(); ++k) {
      d.U.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(order[k]);
      d.s(static_cast<Eigen::Index>(k)) = es.eigenvalues()(order[k]);
    }
    d.V = d.U;
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(S31, Eigen::ComputeFullU | Eigen::ComputeFullV);
    d.U = svd.matrixU();
    d.V = svd.matrixV();
    d.s = svd.singularValues();
  }
  return d;
}

/// sgn with sgn(0) = +1.
inline double sgn1(double v) { return v < 0.0 ? -1.0 : 1.0; }

struct WeightReport {
  bool symmetric_path = false;
  double uv_residual = 0.0;          // ‖U33 − V11‖_max (symmetric path only)
  double relation_residual = 0.0;    // ‖W21 − W32ᵀ U33 sgn(S31) V11ᵀ‖ / ‖W21‖
  double product_residual = 0.0;     // ‖W32 W21 − U33 sgn(S)(|S| − β)₊ V11ᵀ‖ / ‖that‖
  double symmetry_w21 = 0.0;         // ‖W − Wᵀ‖ / ‖W‖
  double symmetry_w32 = 0.0;
  std::size_t zero_singular_values = 0;
  double sigma11_deviation = std::numeric_limits<double>::quiet_NaN();  // ‖Σ11 − I‖ when Σ11 is given
};

inline double symmetry_score(const Eigen::MatrixXd& W) {
  const double n = W.norm();
  return n > 0.0 ? (W - W.transpose()).norm() / n : 0.0;
}

inline WeightReport weight_diagnostics(const Eigen::MatrixXd& W21, const Eigen::MatrixXd& W32,
                                       const Eigen::MatrixXd& S31, double beta,
                                       const Eigen::MatrixXd* S11 = nullptr) {
  detail::require_dims(W21.rows() == W21.cols() && W32.rows() == W32.cols() && S31.rows() == S31.cols() &&
                           W21.rows() == S31.rows() && W32.rows() == S31.rows(),
                       "weight diagnostics need square matrices of one size");
  const auto d = signed_svd(S31);
  WeightReport r;
  r.symmetric_path = d.symmetric;
  if (d.symmetric) r.uv_residual = (d.U - d.V).cwiseAbs().maxCoeff();
  const Eigen::Index n = S31.rows();
  Eigen::VectorXd sg(n), mag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sg(i) = sgn1(d.s(i));
    mag(i) = std::max(std::abs(d.s(i)) - beta, 0.0);
    if (d.s(i) == 0.0) ++r.zero_singular_values;
  }
  const Eigen::MatrixXd rel = W32.transpose() * d.U * sg.asDiagonal() * d.V.transpose();
  r.relation_residual = (W21 - rel).norm() / std::max(W21.norm(), std::numeric_limits<double>::min());
  const Eigen::MatrixXd prod = d.U * (sg.cwiseProduct(mag)).asDiagonal() * d.V.transpose();
  r.product_residual = (W32 * W21 - prod).norm() / std::max(prod.norm(), std::numeric_limits<double>::min());
  r.symmetry_w21 = symmetry_score(W21);
  r.symmetry_w32 = symmetry_score(W32);
  if (S11) r.sigma11_deviation = (*S11 - Eigen::MatrixXd::Identity(n, n)).norm();
  return r;
}

/// Fixed-point weights W21 = R √(|S| − β) Vᵀ, W32 = U sgn(S) √(|S| − β) Rᵀ.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fixed_point_weights(const Eigen::MatrixXd& S31, double beta,
                                                                       const Eigen::MatrixXd& R) {
  const auto d = signed_svd(S31);
  const Eigen::Index n = S31.rows();
  Eigen::VectorXd root(n), sg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    root(i) = std::sqrt(std::max(std::abs(d.s(i)) - beta, 0.0));
    sg(i) = sgn1(d.s(i));
  }
  Eigen::MatrixXd W21 = R * root.asDiagonal() * d.V.transpose();
  Eigen::MatrixXd W32 = d.U * (sg.cwiseProduct(root)).asDiagonal() * R.transpose();
  return {W21, W32};
}

/// Circulant matrix of a centered cross-correlation kernel on n points:
/// (C u)_p = Σ_j w_j u_{p + j − c}.
inline Eigen::MatrixXd circulant(std::span<const double> w, std::size_t n) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const long c = static_cast<long>(w.size() / 2);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t j = 0; j < w.size(); ++j) {
      const long q = ((static_cast<long>(p) + static_cast<long>(j) - c) % static_cast<long>(n) + static_cast<long>(n)) %
                     static_cast<long>(n);
      C(static_cast<Eigen::Index>(p), q) += w[j];
    }
  return C;
}

/// ‖w − reverse(w)‖ / ‖w‖; equals the circulant symmetry score.
inline double kernel_symmetry_score(std::span<const double> w) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double d = w[j] - w[w.size() - 1 - j];
    num += d * d;
    den += w[j] * w[j];
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

/// max over block pairs of ‖Wi − Wj‖ / max(‖Wi‖, ‖Wj‖).
inline double max_pairwise_weight_difference(const std::vector<std::vector<double>>& ws) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t j = i + 1; j < ws.size(); ++j) {
      detail::require_dims(ws[i].size() == ws[j].size(), "block weights differ in size");
      double d = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t k = 0; k < ws[i].size(); ++k) {
        d += (ws[i][k] - ws[j][k]) * (ws[i][k] - ws[j][k]);
        ni += ws[i][k] * ws[i][k];
        nj += ws[j][k] * ws[j][k];
      }
      const double den = std::sqrt(std::max(ni, nj));
      if (den > 0.0) worst = std::max(worst, std::sqrt(d) / den);
    }
  return worst;
}

/// Σ11 = (1/M) Σ u0 u0ᵀ and Σ31 = (1/M) Σ uT u0ᵀ over real field pairs.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> covariances(std::span<const Field> inputs,
                                                               std::span<const Field> targets) {
  detail::require(!inputs.empty() && inputs.size() == targets.size(), "covariances need matching pairs");
  const auto n = static_cast<Eigen::Index>(inputs.front().size());
  Eigen::MatrixXd S11 = Eigen::MatrixXd::Zero(n, n), S31 = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd x(n), y(n);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Eigen::Index p = 0; p < n; ++p) {
      x(p) = inputs[i][static_cast<std::size_t>(p)].real();
      y(p) = targets[i][static_cast<std::size_t>(p)].real();
    }
    S11.noalias() += x * x.transpose();
    S31.noalias() += y * x.transpose();
  }
  const double m = static_cast<double>(inputs.size());
  return {S11 / m, S31 / m};
}

}  // namespace dosnet::analysis
