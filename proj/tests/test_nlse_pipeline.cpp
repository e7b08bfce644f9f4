#include <gtest/gtest.h>

#include "dosnet/nlse_pipeline.hpp"

using namespace dosnet;
using namespace dosnet::link;

namespace {

LinkConfig short_link() {
  LinkConfig c;
  c.rrc_taps = 257;
  c.n_spans = 1;
  return c;
}

const SegmentLayout kSmall{96, 40, 16};

// Sets every block to u ↦ u: delta kernel on the direct channel, ξ = 0.
void make_identity(Model& m, std::size_t kernel) {
  for (auto& p : m.params()) {
    auto& t = p.node->value;
    t.fill(0.0);
    if (p.name.ends_with("conv0.weight")) t.cdata()[kernel / 2] = 1.0;
  }
}

}  // namespace

TEST(NlsePipeline, SegmentPairsSplitInHalf) {
  const auto run = simulate_link(512, short_link(), 20, 1);
  const auto src = segment_pairs(run, 8, kSmall);
  EXPECT_EQ(src.size(Split::Train) + src.size(Split::Val), 1024u / 8u);
  EXPECT_EQ(src.size(Split::Train), src.size(Split::Val));
  EXPECT_EQ(src.sample_shape(), (std::vector<std::size_t>{1, 96}));
}

TEST(NlsePipeline, GatherPlacesValidWindowAtCenter) {
  const auto run = simulate_link(512, short_link(), 20, 2);
  const auto src = segment_pairs(run, 8, kSmall);
  ad::Tensor x, y;
  const std::vector<std::size_t> idx{3, 0};
  src.gather(Split::Val, idx, x, y);
  ASSERT_EQ(x.shape(), (std::vector<std::size_t>{2, 1, 96}));
  const std::size_t off = src.inputs().offsets[src.size(Split::Train) + 3];
  for (std::size_t j = 0; j < 16; ++j) {
    EXPECT_EQ(x.cdata()[40 + j], run.noisy_rx[(off + j) % run.noisy_rx.size()]);
    EXPECT_EQ(y.cdata()[40 + j], run.clean_rx[(off + j) % run.clean_rx.size()]);
  }
}

TEST(NlsePipeline, XiInitSplitsEffectiveLength) {
  LinkConfig c;
  c.n_spans = 4;
  EXPECT_NEAR(nlse_xi_init(c, 2), 2.0 * (1.0 - std::exp(-0.063 * 80.0)) / 0.063, 1e-12);
  const auto cfg = link_dosnet_config(c, 2);
  EXPECT_TRUE(cfg.learnable_tau);
  Model m(cfg);
  EXPECT_EQ(count_params(m), 24010u);
}

TEST(NlsePipeline, IdentityModelStitchesStreamBack) {
  const auto run = simulate_link(512, short_link(), 20, 3);
  auto cfg = link_dosnet_config(short_link(), 2, 21, kSmall);
  Model m(cfg);
  make_identity(m, 21);
  const auto y = dosnet_equalize(m, run.noisy_rx, kSmall, 7);
  ASSERT_EQ(y.size(), run.noisy_rx.size());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LT(std::abs(y[i] - run.noisy_rx[i]), 1e-15);
}

TEST(NlsePipeline, SsfmBaselineRecoversNoiselessLink) {
  auto cfg = short_link();
  cfg.noiseless = true;
  cfg.launch_dBm = 2.0;
  const auto run = simulate_link(2000, cfg, 100, 4);
  const auto y = ssfm_equalize(run.received, cfg, 100);
  EXPECT_LT(relative_l2(y, run.clean_rx), 1e-3);
  EXPECT_EQ(stream_ber(y, cfg, run.tx).errors, 0u);
  // Uncompensated dispersion makes the raw stream undecodable.
  EXPECT_GT(stream_ber(run.noisy_rx, cfg, run.tx).ber, 0.1);
}

TEST(NlsePipeline, TrainingReducesValidationLoss) {
  // A 5 km span keeps the dispersive spread inside the small segment.
  auto link = short_link();
  link.span_km = 5.0;
  link.launch_dBm = 2.0;
  const auto run = simulate_link(400, link, 20, 5);
  const auto src = segment_pairs(run, 8, kSmall);
  Rng rng(6);
  Model m(link_dosnet_config(link, 2, 41, kSmall), rng);
  TrainConfig tc;
  tc.base_lr = 1e-2;
  tc.batch_size = 16;
  tc.loss_window = ad::Window{kSmall.pad, kSmall.pad + kSmall.valid};
  tc.schedule = false;
  Trainer t(m, tc);
  const double before = t.evaluate(src, Split::Val);
  t.run(src, 20);
  EXPECT_LT(t.evaluate(src, Split::Val), 0.05 * before);
}

TEST(NlsePipeline, LinkConfigJsonRoundTrip) {
  LinkConfig c;
  c.n_spans = 4;
  c.launch_dBm = 2.0;
  c.noiseless = true;
  const auto back = link_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(link_config_from_json({{"n_spans", 7}}).n_spans, 7u);
  EXPECT_THROW(link_config_from_json({{"spans", 7}}), ArgumentError);
  EXPECT_THROW(link_config_from_json({{"rrc_taps", 100}}), ArgumentError);
  EXPECT_THROW(link_config_from_json({{"n_spans", "four"}}), ArgumentError);
}
