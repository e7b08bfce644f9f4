#pragma once

// Mini-batch training loop: shuffled batches, MSE loss, Adam with the step
// schedule, optional unitary retraction after every update.

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "dosnet/autodiff.hpp"
#include "dosnet/datagen.hpp"
#include "dosnet/dosnet.hpp"
#include "dosnet/optim.hpp"
#include "dosnet/rng.hpp"

namespace dosnet {

enum class Split { Train, Val };

/// Supplies batches of (input, target) tensors shaped [B, C, spatial...].
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t size(Split s) const = 0;
  /// [C, spatial...] of one sample.
  virtual std::vector<std::size_t> sample_shape() const = 0;
  virtual ad::DType dtype() const = 0;
  virtual void gather(Split s, std::span<const std::size_t> idx, ad::Tensor& in, ad::Tensor& target) const = 0;
};

/// Train split = dataset train pairs, Val split = dataset test pairs.
class DatasetSource : public PairSource {
 public:
  explicit DatasetSource(const Dataset& d) : d_(d) { d_.validate(); }

  std::size_t size(Split s) const override { return s == Split::Train ? d_.n_train : d_.n_test(); }

  std::vector<std::size_t> sample_shape() const override {
    std::vector<std::size_t> s{1};
    s.insert(s.end(), d_.grid().dims().begin(), d_.grid().dims().end());
    return s;
  }

  ad::DType dtype() const override { return d_.kind == FieldKind::Real ? ad::DType::Real : ad::DType::Complex; }

  void gather(Split s, std::span<const std::size_t> idx, ad::Tensor& in, ad::Tensor& target) const override {
    const std::size_t off = s == Split::Train ? 0 : d_.n_train;
    std::vector<Field> xs, ys;
    xs.reserve(idx.size());
    ys.reserve(idx.size());
    for (auto i : idx) {
      detail::require(i < size(s), "batch index out of range");
      xs.push_back(d_.inputs[off + i]);
      ys.push_back(d_.targets[off + i]);
    }
    in = stack_fields(xs, dtype());
    target = stack_fields(ys, dtype());
  }

 private:
  const Dataset& d_;
};

struct TrainConfig {
  double base_lr = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  bool schedule = true;
  std::size_t schedule_step = 30;
  double schedule_factor = 0.1;
  /// Restricts the loss to [lo, hi) on the last axis.
  std::optional<ad::Window> loss_window;

  void validate() const {
    detail::require(batch_size >= 1, "batch size must be at least 1");
    detail::require(base_lr > 0.0 && std::isfinite(base_lr), "learning rate must be positive");
    detail::require(l2 >= 0.0, "L2 coefficient must be non-negative");
    detail::require(schedule_step >= 1, "schedule step must be positive");
  }

  double lr(std::size_t epoch) const {
    return schedule ? lr_schedule(base_lr, epoch, schedule_step, schedule_factor) : base_lr;
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"base_lr", c.base_lr},   {"epochs", c.epochs},
                      {"batch_size", c.batch_size}, {"l2", c.l2},
                      {"seed", c.seed},          {"schedule", c.schedule},
                      {"schedule_step", c.schedule_step}, {"schedule_factor", c.schedule_factor}};
  if (c.loss_window) j["loss_window"] = {c.loss_window->lo, c.loss_window->hi};
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  try {
    c.base_lr = j.value("base_lr", c.base_lr);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.l2 = j.value("l2", c.l2);
    c.seed = j.value("seed", c.seed);
    c.schedule = j.value("schedule", c.schedule);
    c.schedule_step = j.value("schedule_step", c.schedule_step);
    c.schedule_factor = j.value("schedule_factor", c.schedule_factor);
    if (j.contains("loss_window")) {
      const auto w = j.at("loss_window").get<std::vector<std::size_t>>();
      if (w.size() != 2) throw ArgumentError("loss_window needs [lo, hi]");
      c.loss_window = ad::Window{w[0], w[1]};
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

struct HistoryRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

inline double max_param_magnitude(const Model& m) {
  double mx = 0.0;
  for (const auto& p : m.params())
    for (double v : p.node->value.data()) mx = std::max(mx, std::abs(v));
  return mx;
}

/// Owns the optimizer state so training can stop and resume.
class Trainer {
 public:
  Trainer(Model& model, TrainConfig cfg)
      : model_(model), cfg_(cfg), opt_(model.params(), AdamConfig{cfg.base_lr, 0.9, 0.999, 1e-8, cfg.l2}) {
    cfg_.validate();
  }

  Adam& optimizer() { return opt_; }
  const Adam& optimizer() const { return opt_; }
  const TrainConfig& config() const { return cfg_; }
  std::size_t epoch() const { return epoch_; }
  void set_epoch(std::size_t e) { epoch_ = e; }

  /// Batch order of epoch `e`: a Fisher-Yates shuffle drawn from
  /// Rng(seed).substream(e), so a resumed run sees the same batches.
  std::vector<std::size_t> epoch_order(std::size_t e, std::size_t n) const {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng r = Rng(cfg_.seed).substream(e);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[r.below(i)]);
    return order;
  }

  /// Mean loss over a split, weighted by batch size. NaN for an empty split.
  double evaluate(const PairSource& src, Split split) const {
    const std::size_t n = src.size(split);
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    std::vector<std::size_t> idx;
    ad::Tensor x, y;
    for (std::size_t s = 0; s < n; s += cfg_.batch_size) {
      const std::size_t e = std::min(n, s + cfg_.batch_size);
      idx.resize(e - s);
      std::iota(idx.begin(), idx.end(), s);
      src.gather(split, idx, x, y);
      const auto out = model_.forward(ad::constant(x)).output;
      acc += ad::mse(out, y, cfg_.loss_window)->value[0] * static_cast<double>(e - s);
    }
    return acc / static_cast<double>(n);
  }

  /// Runs `epochs` more epochs and returns their history rows.
  std::vector<HistoryRow> run(const PairSource& src, std::size_t epochs,
                              const std::function<void(const HistoryRow&)>& on_epoch = {}) {
    std::vector<HistoryRow> hist;
    if (epochs == 0) return hist;
    const std::size_t n = src.size(Split::Train);
    detail::require(n >= 1, "training split is empty");
    const auto shape = src.sample_shape();
    const auto want = model_.state_shape(1);
    detail::require_dims(std::equal(shape.begin(), shape.end(), want.begin() + 1, want.end()) &&
                             shape.size() + 1 == want.size(),
                         "dataset sample shape does not match the model");
    detail::require_dims(src.dtype() == model_.config().block.dtype, "dataset dtype does not match the model");
    auto& params = model_.params();
    std::vector<std::size_t> idx;
    ad::Tensor x, y;
    for (std::size_t k = 0; k < epochs; ++k, ++epoch_) {
      const double lr = cfg_.lr(epoch_);
      const auto order = epoch_order(epoch_, n);
      double acc = 0.0;
      std::size_t batch_no = 0;
      for (std::size_t s = 0; s < n; s += cfg_.batch_size, ++batch_no) {
        const std::size_t e = std::min(n, s + cfg_.batch_size);
        idx.assign(order.begin() + static_cast<long>(s), order.begin() + static_cast<long>(e));
        src.gather(Split::Train, idx, x, y);
        const auto loss = ad::mse(model_.forward(ad::constant(x)).output, y, cfg_.loss_window);
        const double lv = loss->value[0];
        if (!std::isfinite(lv)) {
          std::ostringstream msg;
          msg << "non-finite training loss at epoch " << epoch_ << ", batch " << batch_no
              << " (max |param| = " << max_param_magnitude(model_) << ")";
          throw NumericError(msg.str());
        }
        ad::zero_grad(params);
        ad::backward(loss);
        opt_.step(params, lr);
        if (model_.config().unitary) model_.project_unitary();
        acc += lv * static_cast<double>(e - s);
      }
      HistoryRow row{epoch_, acc / static_cast<double>(n), evaluate(src, Split::Val), lr};
      hist.push_back(row);
      if (on_epoch) on_epoch(row);
    }
    return hist;
  }

 private:
  Model& model_;
  TrainConfig cfg_;
  Adam opt_;
  std::size_t epoch_ = 0;
};

/// One-shot training with cfg.epochs epochs.
inline std::vector<HistoryRow> train(Model& model, const PairSource& src, const TrainConfig& cfg) {
  Trainer t(model, cfg);
  return t.run(src, cfg.epochs);
}

}  // namespace dosnet
