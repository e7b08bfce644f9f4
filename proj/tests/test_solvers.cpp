#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dosnet/classic_solvers.hpp"
#include "dosnet/rng.hpp"

using namespace dosnet;
using namespace dosnet::solvers;

namespace {

Field sine(std::size_t n, double amp = 1.0, double k = 1.0) {
  return Field::sample(Grid::line(n), [=](double x) { return amp * std::sin(k * x); });
}

// Random complex waveform on a 2.5 ps grid, occupying the lowest `band` of
// the spectrum like an oversampled transmit signal.
Field random_signal(std::size_t n, Rng& rng, double rms, double band = 0.25) {
  const auto g = Grid::line(n, 0.0, 2.5 * static_cast<double>(n));
  Spectrum s{g, std::vector<cplx>(n), FieldKind::Complex};
  const auto cutoff = static_cast<std::size_t>(band * static_cast<double>(n) / 2.0);
  for (std::size_t j = 0; j < n; ++j)
    if (j <= cutoff || n - j <= cutoff) s.coefficients[j] = {rng.normal(), rng.normal()};
  Field f = dft_inverse(s);
  const double scale = rms * std::sqrt(static_cast<double>(n)) / l2_norm(f);
  for (auto& v : f.values()) v *= scale;
  return f;
}

}  // namespace

TEST(Strang, ConstantStatesAreFixed) {
  for (double c : {1.0, 0.0, -1.0}) {
    const auto u0 = Field::constant(Grid::square(16, 16), c);
    const auto tr = strang_allen_cahn(u0, 0.5, 0.05, {}, 2);
    for (const auto& s : tr.states)
      for (auto v : s.values()) EXPECT_NEAR(v.real(), c, 1e-15);
  }
}

TEST(Strang, RecordsStrideAndEndpoints) {
  const auto tr = strang_allen_cahn(sine(32, 0.1), 1.0, 0.1, {}, 3);
  ASSERT_EQ(tr.times.size(), 5u);  // 0, 0.3, 0.6, 0.9, 1.0
  EXPECT_NEAR(tr.times[3], 0.9, 1e-12);
  EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
  EXPECT_THROW(strang_allen_cahn(sine(32), 1.0, 0.3, {}), ArgumentError);
  EXPECT_THROW(strang_allen_cahn(sine(32), 1.0, 0.0, {}), ArgumentError);
}

TEST(Strang, MergedHalfStepsMatchUnmerged) {
  const auto u0 = sine(64, 0.6);
  const SplitProblem p = SplitProblem::allen_cahn({0.1});
  Field u = u0;
  for (int i = 0; i < 20; ++i) u = strang_split_step(u, 0.05, p);
  EXPECT_LT(relative_l2(integrate(u0, 1.0, 0.05, p, Scheme::Strang).back(), u), 1e-13);
}

TEST(Strang, FineStepSelfOracle) {
  const auto u0 = sine(128, 0.1);
  const auto coarse = strang_allen_cahn(u0, 1.0, 1e-2, {}).back();
  const auto fine = strang_allen_cahn(u0, 1.0, 1e-4, {}).back();
  EXPECT_LT(relative_l2(coarse, fine), 1e-3);
}

TEST(Strang, StaysWithinPhaseBounds) {
  Rng rng(1);
  Field u0(Grid::square(32, 32), FieldKind::Real);
  for (auto& v : u0.values()) v = rng.uniform(-1.0, 1.0);
  const auto tr = strang_allen_cahn(u0, 1.0, 0.01, {0.05}, 10);
  for (const auto& s : tr.states)
    for (auto v : s.values()) EXPECT_LE(std::abs(v.real()), 1.001);
}

TEST(PlainSplit, TrivialCases) {
  const auto u0 = sine(64, 0.5, 2.0);
  const auto p = SplitProblem::allen_cahn({0.2});
  EXPECT_LT(relative_l2(plain_split_step(u0, 0.0, p), u0), 1e-15);
  const auto diff = SplitProblem::linear_only(pde::LinearEq::Diffusion);
  EXPECT_LT(relative_l2(integrate(u0, 0.3, 0.3, diff, Scheme::Plain).back(),
                        pde::propagate_linear(u0, pde::LinearEq::Diffusion, 0.3)),
            1e-14);
}

TEST(PlainSplit, LessAccurateThanStrangAgainstReference) {
  const auto u0 = sine(128, 0.8);
  const auto p = SplitProblem::allen_cahn({0.3});
  const auto ref = integrate(u0, 0.1, 1e-5, p, Scheme::Strang).back();
  const double e_plain = relative_l2(plain_split_step(u0, 0.1, p), ref);
  const double e_strang = relative_l2(strang_split_step(u0, 0.1, p), ref);
  EXPECT_LT(e_strang, e_plain);
  EXPECT_LT(e_plain, 1e-2);
}

TEST(Order, StrangIsSecondPlainIsFirst) {
  const auto u0 = sine(128, 0.5);
  const auto p = SplitProblem::allen_cahn({0.3});
  const std::vector<double> taus{0.04, 0.02, 0.01, 0.005};
  const auto ref = scheme_solver(p, Scheme::Strang);
  const auto s = convergence_order(scheme_solver(p, Scheme::Strang), u0, 0.2, taus, ref);
  const auto pl = convergence_order(scheme_solver(p, Scheme::Plain), u0, 0.2, taus, ref);
  EXPECT_FALSE(s.saturated);
  EXPECT_GE(s.order, 1.8);
  EXPECT_LE(s.order, 2.2);
  EXPECT_GE(pl.order, 0.8);
  EXPECT_LE(pl.order, 1.2);
}

TEST(Order, ExactPropagatorSaturates) {
  const auto u0 = sine(64, 1.0, 3.0);
  const auto diff = SplitProblem::linear_only(pde::LinearEq::Diffusion);
  const Solver exact = [](const Field& u, double T, double) {
    return pde::propagate_linear(u, pde::LinearEq::Diffusion, T);
  };
  const auto f = convergence_order(scheme_solver(diff, Scheme::Plain), u0, 0.2, {0.04, 0.02, 0.01}, exact);
  EXPECT_TRUE(f.saturated);
}

TEST(Order, FitRecoversKnownSlope) {
  const auto f = fit_order({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3});
  EXPECT_NEAR(f.order, 2.0, 1e-12);
  EXPECT_THROW(convergence_order(nullptr, sine(8), 1.0, {0.5, 0.25}, nullptr), ArgumentError);
}

TEST(Ssfm, DegenerateSplitsAreExact) {
  Rng rng(2);
  const auto u0 = random_signal(256, rng, 0.03);
  pde::NlseParams lin{0.063, -21.68, 0.0};
  const auto a = ssfm_propagate(u0, lin, 80.0, 17);
  const auto b = pde::propagate_linear(u0, pde::LinearEq::NlseLinear, 80.0, {{}, lin});
  EXPECT_LT(relative_l2(a, b), 1e-12);
  pde::NlseParams kerr{0.0, 0.0, 1.66};
  const auto c = ssfm_propagate(u0, kerr, 80.0, 13);
  const auto d = pde::nlse_nonlinear_step(u0, 80.0, 1.66, pde::Direction::Forward);
  EXPECT_LT(relative_l2(c, d), 1e-12);
  pde::NlseParams lossless{0.0, -21.68, 0.0};
  EXPECT_NEAR(l2_norm(ssfm_propagate(u0, lossless, 80.0, 5)), l2_norm(u0), 1e-12 * l2_norm(u0));
}

TEST(Ssfm, SymmetricRoundTripRecoversInput) {
  Rng rng(3);
  const auto u0 = random_signal(512, rng, std::sqrt(1e-3));
  const pde::NlseParams fwd{};
  const auto sym = ssfm_propagate(ssfm_propagate(u0, fwd, 80.0, 200, true), fwd.reversed(), 80.0, 200, true);
  EXPECT_LT(relative_l2(sym, u0), 1e-4);
}

TEST(Ssfm, PlainRoundTripErrorIsFirstOrder) {
  Rng rng(4);
  const auto u0 = random_signal(512, rng, std::sqrt(1e-3));
  const pde::NlseParams fwd{};
  auto trip = [&](std::size_t steps) {
    return relative_l2(ssfm_propagate(ssfm_propagate(u0, fwd, 80.0, steps), fwd.reversed(), 80.0, steps), u0);
  };
  const double e200 = trip(200), e400 = trip(400);
  EXPECT_LT(e200, 5e-3);
  EXPECT_NEAR(e200 / e400, 2.0, 0.2);
}

TEST(Ssfm, SymmetricIsSecondOrderAgainstFineReference) {
  Rng rng(5);
  const auto u0 = random_signal(512, rng, std::sqrt(1e-3));
  const pde::NlseParams fwd{};
  // Below ~160 steps the per-step dispersion phase at the band edge is too
  // large for the asymptotic regime.
  const auto ref = ssfm_propagate(u0, fwd, 80.0, 25600, true);
  const double e320 = relative_l2(ssfm_propagate(u0, fwd, 80.0, 320, true), ref);
  const double e640 = relative_l2(ssfm_propagate(u0, fwd, 80.0, 640, true), ref);
  EXPECT_NEAR(e320 / e640, 4.0, 0.4);
}

TEST(Bracket, ScalesQuadraticallyAndHasStableRatio) {
  const auto u0 = sine(128);
  const auto a = lie_bracket_probe(u0, 1e-3, {1.0});
  const auto b = lie_bracket_probe(u0, 5e-4, {1.0});
  EXPECT_FALSE(a.predicted_vanishes);
  EXPECT_NEAR(a.bracket_norm / b.bracket_norm, 4.0, 0.4);
  // The measured commutator has the same magnitude as the closed form but the
  // opposite sign; the Taylor expansion gives +6 u (u_x)² h².
  EXPECT_NEAR(std::abs(a.ratio), 1.0, 0.01);
  EXPECT_LT(a.ratio, 0.0);
}

TEST(Bracket, ConstantStateHasVanishingPrediction) {
  const auto u0 = Field::constant(Grid::line(64), 0.4);
  const auto a = lie_bracket_probe(u0, 1e-3, {1.0});
  const auto b = lie_bracket_probe(u0, 5e-4, {1.0});
  EXPECT_TRUE(a.predicted_vanishes);
  EXPECT_LE(b.bracket_norm, std::max(0.15 * a.bracket_norm, 1e-15));
}
