#pragma once

// Glue between the fiber link and DOSnet: segment datasets for training,
// windowed inference with stitching, and the SSFM back-propagation baseline.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dosnet/dosnet.hpp"
#include "dosnet/fiberlink.hpp"
#include "dosnet/train.hpp"

#include <nlohmann/json.hpp>

namespace dosnet::link {

/// Received/launch segment pairs. Train uses the first n_train segments, Val
/// the rest.
class SegmentPairSource : public PairSource {
 public:
  SegmentPairSource(SegmentSet input, SegmentSet target, std::size_t n_train)
      : in_(std::move(input)), tgt_(std::move(target)), n_train_(n_train) {
    detail::require_dims(in_.size() == tgt_.size() && in_.layout.length == tgt_.layout.length,
                         "input and target segment sets differ");
    detail::require(n_train_ <= in_.size(), "n_train exceeds the segment count");
  }

  std::size_t size(Split s) const override { return s == Split::Train ? n_train_ : in_.size() - n_train_; }
  std::vector<std::size_t> sample_shape() const override { return {1, in_.layout.length}; }
  ad::DType dtype() const override { return ad::DType::Complex; }

  void gather(Split s, std::span<const std::size_t> idx, ad::Tensor& in, ad::Tensor& target) const override {
    const std::size_t off = s == Split::Train ? 0 : n_train_;
    const std::size_t L = in_.layout.length;
    in = ad::Tensor({idx.size(), 1, L}, ad::DType::Complex);
    target = ad::Tensor({idx.size(), 1, L}, ad::DType::Complex);
    auto xi = in.cdata();
    auto yi = target.cdata();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      detail::require(idx[b] < size(s), "batch index out of range");
      const auto x = in_[off + idx[b]];
      const auto y = tgt_[off + idx[b]];
      std::copy(x.begin(), x.end(), xi.begin() + static_cast<std::ptrdiff_t>(b * L));
      std::copy(y.begin(), y.end(), yi.begin() + static_cast<std::ptrdiff_t>(b * L));
    }
  }

  const SegmentSet& inputs() const { return in_; }
  const SegmentSet& targets() const { return tgt_; }

 private:
  SegmentSet in_, tgt_;
  std::size_t n_train_;
};

/// Segments both streams with `stride` and splits the offsets in half.
inline SegmentPairSource segment_pairs(const LinkRun& run, std::size_t stride = 8, const SegmentLayout& lay = {}) {
  auto in = segment(run.noisy_rx, stride, lay);
  auto tgt = segment(run.clean_rx, stride, lay);
  const std::size_t n_train = in.size() / 2;
  return {std::move(in), std::move(tgt), n_train};
}

/// Per-block nonlinear step: the link's total effective length split evenly.
inline double nlse_xi_init(const LinkConfig& cfg, std::size_t n_blocks) {
  detail::require(n_blocks >= 1, "need at least one block");
  return static_cast<double>(cfg.n_spans) * cfg.effective_length_km() / static_cast<double>(n_blocks);
}

/// DOSnet for a link: kernel sized to the segment, learnable ξ.
inline AutoflowConfig link_dosnet_config(const LinkConfig& cfg, std::size_t n_blocks = 2, std::size_t kernel = 3001,
                                         const SegmentLayout& lay = {}) {
  auto c = presets::nlse_dosnet(lay.length, nlse_xi_init(cfg, n_blocks), cfg.gamma, n_blocks, kernel);
  c.learnable_tau = true;
  return c;
}

/// Runs the model over non-overlapping valid windows (stride = valid) and
/// stitches the centers back into a stream.
inline std::vector<cplx> dosnet_equalize(const Model& model, std::span<const cplx> rx, const SegmentLayout& lay = {},
                                         std::size_t batch = 32) {
  const auto set = segment(rx, lay.valid, lay);
  std::vector<cplx> out(rx.size());
  const std::size_t L = lay.length;
  for (std::size_t s = 0; s < set.size(); s += batch) {
    const std::size_t e = std::min(set.size(), s + batch);
    ad::Tensor x({e - s, 1, L}, ad::DType::Complex);
    auto xv = x.cdata();
    for (std::size_t b = s; b < e; ++b) {
      const auto seg = set[b];
      std::copy(seg.begin(), seg.end(), xv.begin() + static_cast<std::ptrdiff_t>((b - s) * L));
    }
    const auto y = model.predict(x);
    const auto yv = y.cdata();
    for (std::size_t b = s; b < e; ++b)
      for (std::size_t j = 0; j < lay.valid; ++j)
        out[(set.offsets[b] + j) % rx.size()] = yv[(b - s) * L + lay.pad + j];
  }
  return out;
}

/// Back-propagation on the full-rate received waveform, then the matched filter.
inline std::vector<cplx> ssfm_equalize(const Field& received, const LinkConfig& cfg, std::size_t steps_per_span) {
  return receiver_frontend(backpropagate(received, cfg, steps_per_span), cfg);
}

inline nlohmann::json to_json(const LinkConfig& c) {
  return {{"alpha", c.alpha},
          {"beta2", c.beta2},
          {"gamma", c.gamma},
          {"span_km", c.span_km},
          {"n_spans", c.n_spans},
          {"noise_figure_dB", c.noise_figure_dB},
          {"noiseless", c.noiseless},
          {"carrier_hz", c.carrier_hz},
          {"baud", c.baud},
          {"sps_tx", c.sps_tx},
          {"sps_rx", c.sps_rx},
          {"rolloff", c.rolloff},
          {"launch_dBm", c.launch_dBm},
          {"rrc_taps", c.rrc_taps},
          {"noise_bandwidth_hz", c.noise_bandwidth_hz}};
}

/// Fields absent from `j` keep their value in `c`; unknown keys are errors.
inline LinkConfig link_config_from_json(const nlohmann::json& j, LinkConfig c = {}) {
  if (!j.is_object()) throw ArgumentError("link config must be a JSON object");
  const auto known = to_json(c);
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ArgumentError("unknown link field '" + k + "'");
  try {
    c.alpha = j.value("alpha", c.alpha);
    c.beta2 = j.value("beta2", c.beta2);
    c.gamma = j.value("gamma", c.gamma);
    c.span_km = j.value("span_km", c.span_km);
    c.n_spans = j.value("n_spans", c.n_spans);
    c.noise_figure_dB = j.value("noise_figure_dB", c.noise_figure_dB);
    c.noiseless = j.value("noiseless", c.noiseless);
    c.carrier_hz = j.value("carrier_hz", c.carrier_hz);
    c.baud = j.value("baud", c.baud);
    c.sps_tx = j.value("sps_tx", c.sps_tx);
    c.sps_rx = j.value("sps_rx", c.sps_rx);
    c.rolloff = j.value("rolloff", c.rolloff);
    c.launch_dBm = j.value("launch_dBm", c.launch_dBm);
    c.rrc_taps = j.value("rrc_taps", c.rrc_taps);
    c.noise_bandwidth_hz = j.value("noise_bandwidth_hz", c.noise_bandwidth_hz);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("link config: ") + e.what());
  }
  c.validate();
  return c;
}

inline BerResult stream_ber(std::span<const cplx> rx_2sps, const LinkConfig& cfg, const SymbolStream& tx) {
  return decide_and_ber(symbol_samples(rx_2sps, cfg), tx.bits);
}

}  // namespace dosnet::link
