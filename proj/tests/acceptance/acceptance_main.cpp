// Acceptance runner: one PASS/FAIL line per criterion.
//
//   dosnet_acceptance [--suite fast|slow|all] [--only N ...] [--strict]
//
// Without --strict the exit code is 0 whenever every selected criterion ran to
// completion; with --strict any FAIL also makes it 1.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "dosnet/analysis.hpp"
#include "dosnet/checkpoint.hpp"
#include "dosnet/classic_solvers.hpp"
#include "dosnet/datagen.hpp"
#include "dosnet/dosnet.hpp"
#include "dosnet/fiberlink.hpp"
#include "dosnet/nlse_pipeline.hpp"
#include "dosnet/train.hpp"

namespace {

using namespace dosnet;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  bool slow;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& s) {
  std::fprintf(stderr, "  .. %s\n", s.c_str());
  std::fflush(stderr);
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

// --- shared helpers ---------------------------------------------------------------------

double mean_test_rel_l2(const Model& model, const Dataset& d) {
  const std::span<const Field> in(d.inputs.data() + d.n_train, d.n_test());
  const auto pred = predict_fields(model, in);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += relative_l2(pred[i], d.targets[d.n_train + i]);
  return acc / static_cast<double>(pred.size());
}

std::vector<std::vector<double>> block_weights(const Model& m) {
  std::vector<std::vector<double>> ws;
  for (const auto& p : m.params()) {
    const auto d = p.node->value.data();
    ws.emplace_back(d.begin(), d.end());
  }
  return ws;
}

TrainConfig toy_train_config(std::size_t epochs) {
  TrainConfig tc;
  tc.base_lr = 1e-3;
  tc.l2 = 1e-4;
  tc.epochs = epochs;
  tc.batch_size = 64;
  tc.schedule = false;
  tc.seed = 1;
  return tc;
}

void train_logged(Model& m, const PairSource& src, const TrainConfig& tc, const std::string& tag) {
  Trainer t(m, tc);
  t.run(src, tc.epochs, [&](const HistoryRow& r) {
    if (r.epoch % 10 == 9 || r.epoch + 1 == tc.epochs)
      progress(fmt("%s epoch %zu train %.3e val %.3e", tag.c_str(), r.epoch, r.train_loss, r.val_loss));
  });
}

// --- 1 --------------------------------------------------------------------------------------

Outcome factorial() {
  const auto eT = analysis::factorial_effects(analysis::factorial_cells(0.01024, 0.1875, 0.01825, 0.00226));
  const auto e2T = analysis::factorial_effects(analysis::factorial_cells(1.4330, 0.41988, 0.08793, 0.00552));
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-3; };
  const bool ok = close(eT.qA, 0.2046) && close(eT.qB, -0.9601) && close(eT.qAB, -1.2490) &&
                  close(e2T.qA, -0.9989) && close(e2T.qB, -1.7806) && close(e2T.qAB, -0.3851);
  return {ok, fmt("T: (%.4f, %.4f, %.4f)  2T: (%.4f, %.4f, %.4f)", eT.qA, eT.qB, eT.qAB, e2T.qA, e2T.qB, e2T.qAB)};
}

// --- 2 --------------------------------------------------------------------------------------

Outcome param_counts() {
  const auto ac = count_params(Model(presets::allen_cahn_autoflow({128, 128}, 5.0)));
  const auto nl = count_params(Model(presets::nlse_dosnet(6016, 1.0, 1.66)));
  return {ac == 19360 && nl == 24008, fmt("allen-cahn %zu, nlse %zu", ac, nl)};
}

// --- 3 --------------------------------------------------------------------------------------

Outcome splitting_order() {
  using namespace solvers;
  const std::vector<double> taus{0.1, 0.05, 0.025, 0.0125};
  const auto p1 = SplitProblem::allen_cahn({0.1});
  const auto u1 = Field::sample(Grid::line(128), [](double x) { return 0.5 * std::sin(x) + 0.3 * std::cos(2.0 * x); });
  const auto s1 = convergence_order(scheme_solver(p1, Scheme::Strang), u1, 0.5, taus, scheme_solver(p1, Scheme::Strang));
  const auto l1 = convergence_order(scheme_solver(p1, Scheme::Plain), u1, 0.5, taus, scheme_solver(p1, Scheme::Strang));

  const auto p2 = SplitProblem::allen_cahn({0.05});
  const auto u2 = Field::sample(Grid::square(64, 64), [](double x, double y) {
    return 0.6 * std::sin(std::numbers::pi * x) * std::cos(std::numbers::pi * y) + 0.2 * std::cos(2 * std::numbers::pi * x);
  });
  const auto s2 = convergence_order(scheme_solver(p2, Scheme::Strang), u2, 0.5, taus, scheme_solver(p2, Scheme::Strang));
  const auto l2 = convergence_order(scheme_solver(p2, Scheme::Plain), u2, 0.5, taus, scheme_solver(p2, Scheme::Strang));

  const bool ok = within(s1.order, 1.8, 2.2) && within(l1.order, 0.8, 1.2) && within(s2.order, 1.8, 2.2) &&
                  within(l2.order, 0.8, 1.2) && !s1.saturated && !s2.saturated;
  return {ok, fmt("1D strang %.3f plain %.3f; 2D strang %.3f plain %.3f", s1.order, l1.order, s2.order, l2.order)};
}

// --- 4 --------------------------------------------------------------------------------------

Outcome lie_bracket() {
  const auto u0 = Field::sample(Grid::line(128), [](double x) { return std::sin(x); });
  const pde::AllenCahnParams p{1.0};
  const auto a = solvers::lie_bracket_probe(u0, 1e-3, p);
  const auto b = solvers::lie_bracket_probe(u0, 5e-4, p);
  const double scaling = a.bracket_norm / b.bracket_norm;
  const bool ratio_ok = within(a.ratio, 0.95, 1.05);
  const bool scaling_ok = within(scaling, 3.6, 4.4);
  return {ratio_ok && scaling_ok, fmt("ratio %.4f (%s), scaling %.4f (%s)", a.ratio, ratio_ok ? "ok" : "out of range",
                                      scaling, scaling_ok ? "ok" : "out of range")};
}

// --- 5 --------------------------------------------------------------------------------------

Outcome fixed_points() {
  using Eigen::MatrixXd;
  std::string detail;
  bool ok = true;
  // a = b is invariant under the flow, so start off that line.
  auto run = [](double s, double beta) {
    return analysis::two_layer_gradient_flow(MatrixXd::Constant(1, 1, s), beta, 0.1, MatrixXd::Constant(1, 1, 0.5),
                                             MatrixXd::Constant(1, 1, 0.2), 2000000, 1e-14);
  };
  for (double s : {1.0, -1.0}) {
    const auto r = run(s, 0.1);
    const double want = std::sqrt(std::abs(s) - 0.1);
    const double ea = std::abs(std::abs(r.W21(0, 0)) - want), eb = std::abs(std::abs(r.W32(0, 0)) - want);
    ok = ok && ea < 1e-4 && eb < 1e-4;
    detail += fmt("s=%+.0f: |a|=%.6f |b|=%.6f; ", s, std::abs(r.W21(0, 0)), std::abs(r.W32(0, 0)));
  }
  const auto z = run(0.05, 0.5);
  const double m = std::max(std::abs(z.W21(0, 0)), std::abs(z.W32(0, 0)));
  ok = ok && m < 1e-6;
  detail += fmt("s=0.05, beta=0.5: max |w| = %.2e", m);
  return {ok, detail};
}

// --- 6 --------------------------------------------------------------------------------------

Outcome diffusion_toy() {
  const double T = 0.03;
  const auto d = build_linear_dataset(pde::LinearEq::Diffusion, 5000, T, Grid::line(200), 0.75, 1);
  Rng rng = Rng(1).substream(7);
  Model m(presets::linear_autoflow(200, 3, 21), rng);
  train_logged(m, DatasetSource(d), toy_train_config(100), "diffusion");

  const double err = mean_test_rel_l2(m, d);
  const std::size_t intervals = 60;
  const double step = T / static_cast<double>(intervals);
  double worst = 0.0;
  double mean1 = 0.0, mean2 = 0.0;
  const std::size_t samples = 20;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto& u0 = d.inputs[d.n_train + i];
    const auto traj = analysis::linear_trajectory(u0, pde::LinearEq::Diffusion, T, intervals);
    const auto inter = analysis::model_intermediates(m, u0);
    const auto mt = analysis::match_times(std::span<const Field>(inter).subspan(1, 2), traj);
    worst = std::max({worst, std::abs(mt[0].time - T / 3.0), std::abs(mt[1].time - 2.0 * T / 3.0)});
    mean1 += mt[0].time / static_cast<double>(samples);
    mean2 += mt[1].time / static_cast<double>(samples);
  }
  const auto ws = block_weights(m);
  const double pairwise = analysis::max_pairwise_weight_difference(ws);
  double sym = 0.0;
  for (const auto& w : ws) sym = std::max(sym, analysis::kernel_symmetry_score(w));
  const bool ok = err < 1e-2 && worst <= step + 1e-12 && pairwise < 0.05;
  return {ok, fmt("test rel L2 %.3e; matched times %.4f, %.4f (targets %.4f, %.4f, worst miss %.4f, step %.4f); "
                  "pairwise weight diff %.4f; max asymmetry %.3f",
                  err, mean1, mean2, T / 3.0, 2.0 * T / 3.0, worst, step, pairwise, sym)};
}

// --- 7 --------------------------------------------------------------------------------------

Outcome allen_cahn_factorial() {
  const double T = 1.0;
  AllenCahnDataOptions opt;
  opt.threads = 0;
  progress("building the 64x64 Allen-Cahn dataset");
  const auto d = build_ac_dataset(200, T, 1e-3, {0.02}, Grid::square(64, 64), 1, opt);
  const DatasetSource src(d);
  const std::size_t epochs = 60;
  auto run = [&](bool autoflow, ad::ActivationKind act, const char* tag) {
    auto cfg = autoflow ? presets::allen_cahn_autoflow({64, 64}, T, 5, act) : presets::baseline_dnn({64, 64}, T, act);
    // Sign alignment stalls the Kaiming-initialised Autoflow at this scale.
    cfg.sign_align = false;
    Rng rng = Rng(1).substream(7);
    Model m(cfg, rng);
    TrainConfig tc;
    tc.base_lr = 4e-4;
    tc.epochs = epochs;
    tc.batch_size = 16;
    tc.schedule = false;
    tc.seed = 1;
    train_logged(m, src, tc, tag);
    const double e = mean_test_rel_l2(m, d);
    progress(fmt("%s test rel L2 %.4e", tag, e));
    return e;
  };
  const double dnn_relu = run(false, ad::ActivationKind::Relu, "dnn-relu");
  const double af_relu = run(true, ad::ActivationKind::Relu, "autoflow-relu");
  const double dnn_osb = run(false, ad::ActivationKind::AllenCahn, "dnn-osb");
  const double af_osb = run(true, ad::ActivationKind::AllenCahn, "autoflow-osb");
  const auto e = analysis::factorial_effects(analysis::factorial_cells(dnn_relu, af_relu, dnn_osb, af_osb));
  return {e.qB < 0.0 && e.qAB < 0.0,
          fmt("errors dnn-relu %.3e autoflow-relu %.3e dnn-osb %.3e autoflow-osb %.3e; qA %.3f qB %.3f qAB %.3f",
              dnn_relu, af_relu, dnn_osb, af_osb, e.qA, e.qB, e.qAB)};
}

// --- 8 --------------------------------------------------------------------------------------

Outcome unitary_stabilization() {
  const double T = 0.03;
  const auto d = build_linear_dataset(pde::LinearEq::Schrodinger, 5000, T, Grid::line(200), 0.75, 1);
  const DatasetSource src(d);
  const std::size_t epochs = 20;
  Rng r1 = Rng(1).substream(7), r2 = Rng(1).substream(7);
  Model unitary(presets::unitary_autoflow(200, 3), r1);
  Model regular(presets::linear_autoflow(200, 3, 21, ad::DType::Complex), r2);
  train_logged(unitary, src, toy_train_config(epochs), "unitary");
  train_logged(regular, src, toy_train_config(epochs), "regular");

  const auto ref = analysis::exact_propagator(pde::LinearEq::Schrodinger, T);
  const auto pu = analysis::model_propagator(unitary), pr = analysis::model_propagator(regular);
  const std::size_t samples = 20, steps = 4;
  double eu = 0.0, er = 0.0, drift = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto& u0 = d.inputs[d.n_train + i];
    const auto ru = analysis::rollout(pu, ref, u0, steps);
    const auto rr = analysis::rollout(pr, ref, u0, steps);
    eu += ru.back().rel_l2 / static_cast<double>(samples);
    er += rr.back().rel_l2 / static_cast<double>(samples);
    double prev = l2_norm(u0);
    for (const auto& s : ru) {
      drift = std::max(drift, std::abs(s.norm - prev) / l2_norm(u0));
      prev = s.norm;
    }
  }
  return {eu < er && drift < 1e-8,
          fmt("4T rollout rel L2: unitary %.3e, regular %.3e; unitary per-step norm drift %.2e", eu, er, drift)};
}

// --- 9 --------------------------------------------------------------------------------------

Outcome fiber_round_trip() {
  link::LinkConfig cfg;
  cfg.noiseless = true;
  cfg.n_spans = 20;
  Rng rng(1);
  const auto tx = link::random_symbols(10000, rng);
  const auto launched = link::modulate(tx, cfg);
  Rng noise(2);
  const auto rx = link::propagate_link(launched, cfg, 400, noise);
  const auto back = link::backpropagate(rx, cfg, 200);
  const double err = relative_l2(back, launched.as_complex());
  const auto b2b = link::stream_ber(link::receiver_frontend(launched, cfg), cfg, tx);
  return {err < 1e-3 && b2b.errors == 0,
          fmt("round-trip rel L2 %.3e; back-to-back BER %.1e (%zu of %zu bits)", err, b2b.ber, b2b.errors, b2b.bits)};
}

// --- 10 -------------------------------------------------------------------------------------

Outcome nlse_ordering() {
  link::LinkConfig cfg;
  cfg.n_spans = 4;
  cfg.launch_dBm = 2.0;
  const std::size_t sim_steps = 100, train_symbols = 96000, test_symbols = 10000, epochs = 20;
  double ber_net = 0.0, ber_ssfm = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {101, 102, 103}) {
    const auto train_run = link::simulate_link(train_symbols, cfg, sim_steps, seed);
    const auto test_run = link::simulate_link(test_symbols, cfg, sim_steps, seed + 1000);
    const auto src = link::segment_pairs(train_run, 8);
    Rng rng = Rng(seed).substream(7);
    Model m(link::link_dosnet_config(cfg, 2), rng);
    TrainConfig tc;
    tc.base_lr = 1e-4;
    tc.epochs = epochs;
    tc.batch_size = 64;
    tc.schedule = false;
    tc.seed = seed;
    const link::SegmentLayout lay;
    tc.loss_window = ad::Window{lay.pad, lay.pad + lay.valid};
    train_logged(m, src, tc, fmt("seed %llu", static_cast<unsigned long long>(seed)));
    const auto net = link::stream_ber(link::dosnet_equalize(m, test_run.noisy_rx), cfg, test_run.tx);
    const auto ssfm = link::stream_ber(link::ssfm_equalize(test_run.received, cfg, 1), cfg, test_run.tx);
    progress(fmt("seed %llu: dosnet BER %.3e, 1-step SSFM BER %.3e", static_cast<unsigned long long>(seed), net.ber,
                 ssfm.ber));
    per_seed += fmt("[%.2e vs %.2e] ", net.ber, ssfm.ber);
    ber_net += net.ber / 3.0;
    ber_ssfm += ssfm.ber / 3.0;
  }
  return {ber_net <= ber_ssfm,
          fmt("mean BER dosnet %.3e vs 1-step SSFM %.3e; per seed %s", ber_net, ber_ssfm, per_seed.c_str())};
}

// --- 11 -------------------------------------------------------------------------------------

ad::Tensor random_tensor(std::vector<std::size_t> shape, ad::DType dt, Rng& rng, double sd = 1.0) {
  ad::Tensor t(std::move(shape), dt);
  for (auto& v : t.data()) v = rng.normal(0.0, sd);
  return t;
}

// Largest relative deviation between backprop and central differences over
// every parameter of the model.
double model_gradcheck(Model& m, Rng& rng, double sd) {
  const auto shape = m.state_shape(2);
  const auto dt = m.config().block.dtype;
  const auto x = random_tensor(shape, dt, rng, sd);
  const auto y = random_tensor(shape, dt, rng, sd);
  auto loss = [&] { return ad::mse(m.forward(ad::constant(x)).output, y)->value[0]; };
  ad::zero_grad(m.params());
  ad::backward(ad::mse(m.forward(ad::constant(x)).output, y));
  double num = 0.0, den = 0.0;
  const double h = 1e-6;
  for (auto& p : m.params()) {
    auto v = p.node->value.data();
    const auto g = p.node->grad_buffer().data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + h;
      const double fp = loss();
      v[i] = keep - h;
      const double fm = loss();
      v[i] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      num += (g[i] - fd) * (g[i] - fd);
      den += fd * fd;
    }
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

Outcome properties() {
  std::vector<std::string> failed;
  std::ostringstream detail;
  Rng rng(2024);

  // autodiff
  {
    double worst = 0.0;
    auto ac = presets::allen_cahn_autoflow({8, 8}, 1.0, 2);
    ac.block.kernel = 3;
    ac.learnable_tau = true;
    auto dnn = presets::baseline_dnn({12}, 1.0, ad::ActivationKind::AllenCahn);
    dnn.block.kernel = 3;
    auto nl = presets::nlse_dosnet(24, 0.3, 1.3, 2, 5);
    nl.learnable_tau = true;
    auto un = presets::unitary_autoflow(6, 2);
    for (const auto& cfg : {ac, dnn, nl, un, presets::linear_autoflow(16, 3, 5, ad::DType::Complex)}) {
      Model m(cfg, rng);
      worst = std::max(worst, model_gradcheck(m, rng, 0.7));
    }
    detail << fmt("gradcheck %.1e; ", worst);
    if (!(worst < 1e-5)) failed.push_back("autodiff");
  }

  // DFT round trip and Parseval
  {
    double rt = 0.0, pv = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
      const Grid g = trial % 4 == 0 ? Grid::square(3 + rng.below(40), 3 + rng.below(40)) : Grid::line(2 + rng.below(1000));
      std::vector<cplx> v(g.size());
      for (auto& z : v) z = {rng.normal(), trial % 2 ? rng.normal() : 0.0};
      const Field f(g, v, trial % 2 ? FieldKind::Complex : FieldKind::Real);
      const auto s = dft_forward(f);
      rt = std::max(rt, relative_l2(dft_inverse(s), f));
      const double e = std::pow(l2_norm(f), 2);
      const double es = std::pow(l2_norm(s.coefficients), 2) / static_cast<double>(g.size());
      pv = std::max(pv, std::abs(e - es) / e);
    }
    detail << fmt("dft round trip %.1e, parseval %.1e; ", rt, pv);
    if (!(rt < 1e-10 && pv < 1e-10)) failed.push_back("dft");
  }

  // phase rotation keeps the modulus
  {
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const cplx u{rng.normal(), rng.normal()};
      const double c = rng.uniform(-50.0, 50.0);
      worst = std::max(worst, std::abs(std::abs(pde::nlse_rotation(u, c)) - std::abs(u)));
    }
    detail << fmt("rotation modulus %.1e; ", worst);
    if (!(worst < 1e-15)) failed.push_back("phase rotation");
  }

  // Allen-Cahn sub-flow keeps +-1
  {
    bool exact = true;
    ad::Tensor t({1, 1, 2}, ad::DType::Real);
    t[0] = 1.0;
    t[1] = -1.0;
    for (double tau : {0.0, 1e-6, 0.01, 0.3, 1.0, 5.0, 40.0, 400.0}) {
      exact = exact && pde::ac_flow(1.0, tau) == 1.0 && pde::ac_flow(-1.0, tau) == -1.0;
      const auto y = ad::activation(ad::constant(t), {ad::ActivationKind::AllenCahn, tau});
      exact = exact && y->value[0] == 1.0 && y->value[1] == -1.0;
    }
    detail << (exact ? "ac fixed points exact; " : "ac fixed points moved; ");
    if (!exact) failed.push_back("allen-cahn fixed points");
  }

  // Gray labels: neighbours differ in one bit, map/demap inverts
  {
    bool ok = true;
    const auto pts = link::constellation();
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b)
        if (std::abs(std::abs(pts[a] - pts[b]) - 2.0) < 1e-12) ok = ok && std::popcount(static_cast<unsigned>(a ^ b)) == 1;
    std::vector<std::uint8_t> bits(4 * 4096);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    ok = ok && link::gray_demap(link::gray_map(bits)) == bits;
    detail << (ok ? "gray adjacency exact; " : "gray adjacency broken; ");
    if (!ok) failed.push_back("gray code");
  }

  // byte round trips
  {
    auto d = build_linear_dataset(pde::LinearEq::Advection, 12, 0.3, Grid::line(64), 0.75, 5);
    std::ostringstream a, b;
    write_dataset(a, d);
    std::istringstream ia(a.str());
    write_dataset(b, read_dataset(ia));
    bool ok = a.str() == b.str();

    Model m(presets::nlse_dosnet(64, 0.5, 1.66, 2, 9), rng);
    Adam opt(m.params(), AdamConfig{1e-3, 0.9, 0.999, 1e-8, 0.0});
    ad::zero_grad(m.params());
    const auto x = random_tensor(m.state_shape(2), ad::DType::Complex, rng);
    ad::backward(ad::mse(m.forward(ad::constant(x)).output, x));
    opt.step(m.params(), 1e-3);
    std::ostringstream c, e;
    write_checkpoint(c, m, &opt, {{"tag", "acceptance"}});
    std::istringstream ic(c.str());
    auto ck = read_checkpoint(ic);
    Adam restored(ck.model.params(), AdamConfig{1e-3, 0.9, 0.999, 1e-8, 0.0});
    if (ck.adam) restored.restore(ck.adam->steps, ck.adam->m, ck.adam->v);
    write_checkpoint(e, ck.model, &restored, ck.meta);
    ok = ok && ck.adam.has_value() && c.str() == e.str();
    detail << (ok ? "dataset/checkpoint bytes identical" : "byte round trip differs");
    if (!ok) failed.push_back("serialization");
  }

  std::string d = detail.str();
  if (!failed.empty()) {
    d += "; failed:";
    for (const auto& f : failed) d += " " + f;
  }
  return {failed.empty(), d};
}

std::vector<Criterion> criteria() {
  return {
      {1, "factorial effects", false, factorial},
      {2, "parameter counts", false, param_counts},
      {3, "splitting order", false, splitting_order},
      {4, "lie bracket", false, lie_bracket},
      {5, "two-layer fixed points", false, fixed_points},
      {6, "linear diffusion toy", false, diffusion_toy},
      {7, "allen-cahn factorial rerun", true, allen_cahn_factorial},
      {8, "unitary stabilization", false, unitary_stabilization},
      {9, "fiber round trip", false, fiber_round_trip},
      {10, "nlse compensation ordering", true, nlse_ordering},
      {11, "property suites", false, properties},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dosnet acceptance criteria"};
  std::string suite = "fast";
  std::vector<int> only;
  bool strict = false;
  app.add_option("--suite", suite, "fast, slow or all")->check(CLI::IsMember({"fast", "slow", "all"}));
  app.add_option("--only", only, "run just these criterion numbers");
  app.add_flag("--strict", strict, "exit 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> pick(only.begin(), only.end());
  int failures = 0, errors = 0;
  for (const auto& c : criteria()) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    if (pick.empty() && ((suite == "fast" && c.slow) || (suite == "slow" && !c.slow))) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    bool crashed = false;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      crashed = true;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %2d  %-28s %s  [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
    errors += crashed ? 1 : 0;
  }
  if (errors > 0) return 2;
  return strict && failures > 0 ? 1 : 0;
}
