#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "dosnet/autodiff.hpp"
#include "dosnet/error.hpp"

namespace dosnet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Added to the gradient as l2 * param before the moment updates.
  double l2 = 0.0;
};

/// Per-parameter Adam moments. Complex parameters are updated per real
/// scalar, matching the ℝ² gradient convention.
class Adam {
 public:
  Adam() = default;

  Adam(std::span<const ad::Param> params, AdamConfig cfg = {}) : cfg_(cfg) {
    std::unordered_set<const ad::Node*> seen;
    for (const auto& p : params) {
      if (!p.trainable) continue;
      if (!seen.insert(p.node.get()).second) throw ArgumentError("parameter registered twice: " + p.name);
      m_.emplace_back(p.scalar_count(), 0.0);
      v_.emplace_back(p.scalar_count(), 0.0);
    }
  }

  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }
  std::uint64_t steps() const { return t_; }

  /// One update using the gradients currently stored on the parameters.
  /// `lr` overrides cfg.lr for this step (used by the schedule).
  void step(std::span<ad::Param> params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t slot = 0;
    for (auto& p : params) {
      if (!p.trainable) continue;
      if (slot >= m_.size()) throw DimensionError("optimizer has fewer slots than trainable parameters");
      auto& m = m_[slot];
      auto& v = v_[slot];
      auto w = p.node->value.data();
      if (w.size() != m.size()) throw DimensionError("parameter " + p.name + " changed shape");
      const auto& gt = p.node->grad;
      const bool has_grad = !gt.empty();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double g = (has_grad ? gt[i] : 0.0) + cfg_.l2 * w[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mh = m[i] / bc1;
        const double vh = v[i] / bc2;
        w[i] -= lr * mh / (std::sqrt(vh) + cfg_.eps);
      }
      ++slot;
    }
    if (slot != m_.size()) throw DimensionError("optimizer has more slots than trainable parameters");
  }

  void step(std::span<ad::Param> params) { step(params, cfg_.lr); }

  // State access for checkpointing.
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(std::uint64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
    if (m.size() != m_.size() || v.size() != v_.size()) throw DimensionError("optimizer state slot count mismatch");
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size())
        throw DimensionError("optimizer state shape mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  AdamConfig cfg_{};
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

/// base_lr * factor^floor(epoch / step_epochs).
inline double lr_schedule(double base_lr, std::size_t epoch, std::size_t step_epochs = 30, double factor = 0.1) {
  detail::require(step_epochs > 0, "schedule step must be positive");
  return base_lr * std::pow(factor, static_cast<double>(epoch / step_epochs));
}

}  // namespace dosnet
