#pragma once

// Autoflow / OSB architecture: configuration, initialization, forward pass,
// unitary retraction and parameter bookkeeping.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dosnet/autodiff.hpp"
#include "dosnet/error.hpp"
#include "dosnet/rng.hpp"
#include "dosnet/tensor_field.hpp"

namespace dosnet {

enum class Architecture { Autoflow, BaselineDnn };
enum class InitScheme { ConstantInvK, Orthogonal, KaimingUniform };

inline std::string to_string(Architecture a) { return a == Architecture::Autoflow ? "autoflow" : "baseline_dnn"; }

inline Architecture parse_architecture(const std::string& s) {
  if (s == "autoflow") return Architecture::Autoflow;
  if (s == "baseline_dnn" || s == "dnn") return Architecture::BaselineDnn;
  throw ArgumentError("unknown architecture: " + s);
}

inline std::string to_string(InitScheme s) {
  switch (s) {
    case InitScheme::ConstantInvK: return "constant_inv_k";
    case InitScheme::Orthogonal: return "orthogonal";
    case InitScheme::KaimingUniform: return "kaiming_uniform";
  }
  return "?";
}

inline InitScheme parse_init(const std::string& s) {
  if (s == "constant_inv_k" || s == "constant") return InitScheme::ConstantInvK;
  if (s == "orthogonal") return InitScheme::Orthogonal;
  if (s == "kaiming_uniform" || s == "kaiming") return InitScheme::KaimingUniform;
  throw ArgumentError("unknown init scheme: " + s);
}

/// One entry of an OSB layer plan: "conv:<out_channels>", "act", "conj" or
/// "dense".
struct LayerSpec {
  enum class Kind { Conv, Act, Conj, Dense };
  Kind kind = Kind::Act;
  std::size_t channels = 0;

  static LayerSpec parse(const std::string& s) {
    if (s == "act") return {Kind::Act, 0};
    if (s == "conj") return {Kind::Conj, 0};
    if (s == "dense") return {Kind::Dense, 0};
    if (s.rfind("conv:", 0) == 0) {
      std::size_t pos = 0;
      unsigned long c = 0;
      try {
        c = std::stoul(s.substr(5), &pos);
      } catch (const std::exception&) {
        throw ArgumentError("bad layer spec: " + s);
      }
      if (pos != s.size() - 5 || c == 0) throw ArgumentError("bad layer spec: " + s);
      return {Kind::Conv, c};
    }
    throw ArgumentError("unknown layer spec: " + s);
  }

  std::string str() const {
    switch (kind) {
      case Kind::Conv: return "conv:" + std::to_string(channels);
      case Kind::Act: return "act";
      case Kind::Conj: return "conj";
      case Kind::Dense: return "dense";
    }
    return "?";
  }
};

struct OsbConfig {
  std::vector<LayerSpec> plan;
  std::size_t kernel = 11;
  ad::DType dtype = ad::DType::Real;
  std::size_t state_channels = 1;
};

struct AutoflowConfig {
  std::size_t n_blocks = 5;
  OsbConfig block;
  Architecture arch = Architecture::Autoflow;
  InitScheme init = InitScheme::KaimingUniform;
  bool sign_align = false;
  bool unitary = false;
  ad::ActivationSpec activation;
  bool learnable_tau = false;
  /// Spatial dims of the state (one entry for 1D, two for 2D).
  std::vector<std::size_t> spatial;

  void validate() const {
    detail::require(n_blocks >= 1, "model needs at least one block");
    detail::require(spatial.size() == 1 || spatial.size() == 2, "state must be 1D or 2D");
    detail::require(block.kernel % 2 == 1, "kernel size must be odd");
    detail::require(!block.plan.empty(), "empty layer plan");
    std::size_t ch = block.state_channels;
    std::size_t convs = 0;
    for (const auto& l : block.plan) {
      switch (l.kind) {
        case LayerSpec::Kind::Conv:
          for (auto d : spatial) detail::require(d >= block.kernel, "state smaller than kernel");
          ch = l.channels;
          ++convs;
          break;
        case LayerSpec::Kind::Conj:
          detail::require(block.dtype == ad::DType::Complex, "conj layer needs complex dtype");
          ch *= 2;
          break;
        case LayerSpec::Kind::Dense:
          detail::require(spatial.size() == 1 && ch == 1, "dense layer needs a 1-channel 1D state");
          break;
        case LayerSpec::Kind::Act: break;
      }
    }
    detail::require(ch == block.state_channels, "layer plan must end at the state channel count");
    if (arch == Architecture::BaselineDnn) {
      detail::require(n_blocks == 1, "baseline DNN is a single stack");
      detail::require(convs >= 2, "baseline DNN needs first and last convs");
    }
    if (sign_align) detail::require(block.dtype == ad::DType::Real, "sign alignment needs a real state");
    if (unitary) {
      for (const auto& l : block.plan)
        detail::require(l.kind != LayerSpec::Kind::Conv, "unitary models use dense layers only");
      detail::require(block.dtype == ad::DType::Complex, "unitary models are complex");
    }
    if (activation.kind == ad::ActivationKind::AllenCahn || activation.kind == ad::ActivationKind::Relu)
      detail::require(block.dtype == ad::DType::Real, "activation needs a real state");
    if (activation.kind == ad::ActivationKind::Nlse)
      detail::require(block.dtype == ad::DType::Complex, "NLSE activation needs a complex state");
  }
};

// --- presets -------------------------------------------------------------------

inline std::vector<LayerSpec> parse_plan(const std::vector<std::string>& tokens) {
  std::vector<LayerSpec> out;
  for (const auto& t : tokens) out.push_back(LayerSpec::parse(t));
  return out;
}

namespace presets {

/// 5-block Allen-Cahn DOSnet: conv 1→16, act, conv 16→1, act per block.
/// `nonlinearity` picks the OSB (Allen-Cahn) activation or ReLU.
inline AutoflowConfig allen_cahn_autoflow(std::vector<std::size_t> spatial, double T, std::size_t M = 5,
                                          ad::ActivationKind nonlinearity = ad::ActivationKind::AllenCahn) {
  AutoflowConfig c;
  c.n_blocks = M;
  c.block = {parse_plan({"conv:16", "act", "conv:1", "act"}), 11, ad::DType::Real, 1};
  c.init = InitScheme::KaimingUniform;
  c.sign_align = true;
  c.activation.kind = nonlinearity;
  c.activation.tau = T / static_cast<double>(M);
  c.spatial = std::move(spatial);
  return c;
}

/// conv 1→16, act, 3 × (conv 16→16, act), conv 16→1.
inline AutoflowConfig baseline_dnn(std::vector<std::size_t> spatial, double T,
                                   ad::ActivationKind nonlinearity = ad::ActivationKind::Relu) {
  AutoflowConfig c;
  c.n_blocks = 1;
  c.arch = Architecture::BaselineDnn;
  c.block = {parse_plan({"conv:16", "act", "conv:16", "act", "conv:16", "act", "conv:16", "act", "conv:1"}), 11,
             ad::DType::Real, 1};
  c.init = InitScheme::KaimingUniform;
  c.activation.kind = nonlinearity;
  c.activation.tau = T / 5.0;
  c.spatial = std::move(spatial);
  return c;
}

/// 2-block NLSE DOSnet: (u, ū) → complex conv 2→1 → Kerr rotation.
inline AutoflowConfig nlse_dosnet(std::size_t n, double xi, double gamma, std::size_t M = 2,
                                  std::size_t kernel = 3001) {
  AutoflowConfig c;
  c.n_blocks = M;
  c.block = {parse_plan({"conj", "conv:1", "act"}), kernel, ad::DType::Complex, 1};
  c.init = InitScheme::Orthogonal;
  c.activation = {ad::ActivationKind::Nlse, xi, gamma, pde::Direction::Backward};
  c.spatial = {n};
  return c;
}

/// Linear Autoflow for the toys: one conv per block, no activation.
inline AutoflowConfig linear_autoflow(std::size_t n, std::size_t M = 3, std::size_t kernel = 21,
                                      ad::DType dtype = ad::DType::Real) {
  AutoflowConfig c;
  c.n_blocks = M;
  c.block = {parse_plan({"conv:1"}), kernel, dtype, 1};
  c.init = InitScheme::ConstantInvK;
  c.activation.kind = ad::ActivationKind::Identity;
  c.spatial = {n};
  return c;
}

/// Linear Autoflow whose blocks are full unitary matrices.
inline AutoflowConfig unitary_autoflow(std::size_t n, std::size_t M = 3) {
  AutoflowConfig c;
  c.n_blocks = M;
  c.block = {parse_plan({"dense"}), 1, ad::DType::Complex, 1};
  c.init = InitScheme::Orthogonal;
  c.unitary = true;
  c.activation.kind = ad::ActivationKind::Identity;
  c.spatial = {n};
  return c;
}

}  // namespace presets

// --- initialization ---------------------------------------------------------------

/// Weight tensor for `shape` = [out, in, k(, k)] or [n, n].
///   constant_inv_k: every entry 1/k with k the last dim.
///   orthogonal: the (out, in·k) flattening has orthonormal rows or columns,
///               whichever is fewer (unitary for complex dtype).
///   kaiming_uniform: U(-b, b), b = sqrt(6 / fan_in), fan_in = in·k(·k).
inline ad::Tensor init_weights(InitScheme scheme, const std::vector<std::size_t>& shape, ad::DType dtype,
                               Rng& rng) {
  ad::Tensor t(shape, dtype);
  const std::size_t rows = shape.at(0);
  const std::size_t cols = t.numel() / rows;
  switch (scheme) {
    case InitScheme::ConstantInvK: {
      const double v = 1.0 / static_cast<double>(shape.back());
      if (dtype == ad::DType::Complex)
        for (auto& c : t.cdata()) c = {v, 0.0};
      else
        t.fill(v);
      break;
    }
    case InitScheme::KaimingUniform: {
      const double b = std::sqrt(6.0 / static_cast<double>(cols));
      for (auto& v : t.data()) v = rng.uniform(-b, b);
      break;
    }
    case InitScheme::Orthogonal: {
      const std::size_t big = std::max(rows, cols), small = std::min(rows, cols);
      if (dtype == ad::DType::Complex) {
        Eigen::MatrixXcd a(big, small);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
          for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = {rng.normal(), rng.normal()};
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
        Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(a.rows(), a.cols());
        const Eigen::MatrixXcd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
          const cplx d = r(j, j);
          q.col(j) *= std::abs(d) > 0.0 ? d / std::abs(d) : cplx{1.0, 0.0};
        }
        auto out = t.cdata();
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j)
            out[i * cols + j] = rows >= cols ? q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                                             : q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      } else {
        Eigen::MatrixXd a(big, small);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
          for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
        for (Eigen::Index j = 0; j < q.cols(); ++j)
          if (qr.matrixQR()(j, j) < 0.0) q.col(j) *= -1.0;
        auto out = t.data();
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j)
            out[i * cols + j] = rows >= cols ? q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                                             : q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      }
      break;
    }
  }
  return t;
}

// --- unitary retraction -------------------------------------------------------------

struct UnitaryProjection {
  Eigen::MatrixXcd matrix;
  double min_singular_value = 0.0;
  bool rank_deficient = false;
};

/// Closest unitary matrix in Frobenius norm: the polar factor U Vᴴ.
inline UnitaryProjection unitary_project(const Eigen::MatrixXcd& w) {
  detail::require_dims(w.rows() == w.cols(), "unitary projection needs a square matrix");
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  UnitaryProjection p;
  p.matrix = svd.matrixU() * svd.matrixV().adjoint();
  p.min_singular_value = w.rows() > 0 ? svd.singularValues().minCoeff() : 0.0;
  p.rank_deficient = p.min_singular_value < 1e-12;
  return p;
}

inline Eigen::MatrixXcd to_matrix(const ad::Tensor& t) {
  detail::require_dims(t.rank() == 2 && t.is_complex(), "expected a complex matrix tensor");
  const auto r = static_cast<Eigen::Index>(t.dim(0)), c = static_cast<Eigen::Index>(t.dim(1));
  Eigen::MatrixXcd m(r, c);
  auto d = t.cdata();
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d[static_cast<std::size_t>(i * c + j)];
  return m;
}

inline void assign_matrix(ad::Tensor& t, const Eigen::MatrixXcd& m) {
  detail::require_dims(t.rank() == 2 && t.is_complex() && static_cast<Eigen::Index>(t.dim(0)) == m.rows() &&
                           static_cast<Eigen::Index>(t.dim(1)) == m.cols(),
                       "matrix shape mismatch");
  auto d = t.cdata();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
}

// --- field <-> tensor -----------------------------------------------------------------

/// Stacks same-grid fields into a [B, 1, spatial...] tensor.
inline ad::Tensor stack_fields(std::span<const Field> fields, ad::DType dtype) {
  detail::require(!fields.empty(), "no fields to stack");
  const Grid& g = fields.front().grid();
  std::vector<std::size_t> shape{fields.size(), 1};
  shape.insert(shape.end(), g.dims().begin(), g.dims().end());
  ad::Tensor t(shape, dtype);
  const std::size_t P = g.size();
  for (std::size_t b = 0; b < fields.size(); ++b) {
    detail::require_dims(fields[b].grid() == g, "fields live on different grids");
    auto v = fields[b].values();
    if (dtype == ad::DType::Complex) {
      std::copy(v.begin(), v.end(), t.cdata().begin() + static_cast<long>(b * P));
    } else {
      for (std::size_t p = 0; p < P; ++p) t[b * P + p] = v[p].real();
    }
  }
  return t;
}

inline Field unstack_field(const ad::Tensor& t, std::size_t b, const Grid& grid, FieldKind kind) {
  const std::size_t P = grid.size();
  detail::require_dims(t.numel() >= (b + 1) * P, "batch index out of range");
  std::vector<cplx> v(P);
  if (t.is_complex()) {
    auto d = t.cdata();
    std::copy(d.begin() + static_cast<long>(b * P), d.begin() + static_cast<long>((b + 1) * P), v.begin());
  } else {
    for (std::size_t p = 0; p < P; ++p) v[p] = t[b * P + p];
  }
  return Field(grid, std::move(v), kind);
}

// --- model -------------------------------------------------------------------------------

class Model {
 public:
  struct Output {
    ad::Var output;
    std::vector<ad::Var> intermediates;
  };

  /// Builds the parameter list; weights are drawn from `rng` per cfg.init.
  Model(AutoflowConfig cfg, Rng& rng) : cfg_(std::move(cfg)) { build(&rng); }

  /// Same layout with zeroed weights (used when loading a checkpoint).
  explicit Model(AutoflowConfig cfg) : cfg_(std::move(cfg)) { build(nullptr); }

  const AutoflowConfig& config() const { return cfg_; }
  std::vector<ad::Param>& params() { return params_; }
  const std::vector<ad::Param>& params() const { return params_; }

  std::vector<std::size_t> state_shape(std::size_t batch) const {
    std::vector<std::size_t> s{batch, cfg_.block.state_channels};
    s.insert(s.end(), cfg_.spatial.begin(), cfg_.spatial.end());
    return s;
  }

  Output forward(const ad::Var& x) const {
    const auto& shape = x->value.shape();
    detail::require_dims(shape.size() == cfg_.spatial.size() + 2 && shape[1] == cfg_.block.state_channels &&
                             std::equal(cfg_.spatial.begin(), cfg_.spatial.end(), shape.begin() + 2),
                         "state shape does not match the model");
    detail::require_dims(x->value.dtype() == cfg_.block.dtype, "state dtype does not match the model");
    Output out;
    out.intermediates.push_back(x);
    ad::Var h = x;
    for (const auto& block : layers_) {
      const ad::Var in = h;
      for (const auto& l : block) {
        switch (l.spec.kind) {
          case LayerSpec::Kind::Conv: h = ad::circ_conv(h, params_[l.param].node); break;
          case LayerSpec::Kind::Dense: h = ad::dense(h, params_[l.param].node); break;
          case LayerSpec::Kind::Conj: h = ad::conj_augment(h); break;
          case LayerSpec::Kind::Act:
            h = ad::activation(h, cfg_.activation, l.param >= 0 ? params_[l.param].node : nullptr);
            break;
        }
      }
      if (cfg_.sign_align) h = ad::sign_align(in, h);
      detail::require_dims(h->value.shape() == shape, "block changed the state shape");
      out.intermediates.push_back(h);
    }
    out.output = h;
    return out;
  }

  /// Forward values only for a [B, C, spatial...] tensor.
  ad::Tensor predict(const ad::Tensor& x) const { return forward(ad::constant(x)).output->value; }

  /// Trainable real scalars; complex entries count twice.
  std::size_t count_params() const {
    std::size_t n = 0;
    for (const auto& p : params_)
      if (p.trainable) n += p.scalar_count();
    return n;
  }

  /// Replaces every dense weight by its polar factor.
  void project_unitary() {
    for (const auto& block : layers_)
      for (const auto& l : block)
        if (l.spec.kind == LayerSpec::Kind::Dense) {
          auto& t = params_[l.param].node->value;
          const auto p = unitary_project(to_matrix(t));
          if (p.rank_deficient)
            throw NumericError("unitary projection of " + params_[l.param].name + " is rank deficient");
          assign_matrix(t, p.matrix);
        }
  }

 private:
  struct Layer {
    LayerSpec spec;
    int param = -1;
  };

  void build(Rng* rng) {
    cfg_.validate();
    const auto& b = cfg_.block;
    for (std::size_t i = 0; i < cfg_.n_blocks; ++i) {
      std::vector<Layer> block;
      std::size_t ch = b.state_channels;
      std::size_t conv_i = 0, act_i = 0, dense_i = 0;
      for (const auto& spec : b.plan) {
        Layer l{spec, -1};
        const std::string prefix = "block" + std::to_string(i) + ".";
        switch (spec.kind) {
          case LayerSpec::Kind::Conv: {
            std::vector<std::size_t> shape{spec.channels, ch, b.kernel};
            if (cfg_.spatial.size() == 2) shape.push_back(b.kernel);
            add_param(prefix + "conv" + std::to_string(conv_i++) + ".weight", shape, rng, l);
            ch = spec.channels;
            break;
          }
          case LayerSpec::Kind::Dense: {
            const std::size_t n = cfg_.spatial[0];
            add_param(prefix + "dense" + std::to_string(dense_i++) + ".weight", {n, n}, rng, l);
            break;
          }
          case LayerSpec::Kind::Conj: ch *= 2; break;
          case LayerSpec::Kind::Act:
            if (cfg_.learnable_tau && cfg_.activation.kind != ad::ActivationKind::Identity &&
                cfg_.activation.kind != ad::ActivationKind::Relu) {
              l.param = static_cast<int>(params_.size());
              params_.push_back(ad::make_param(prefix + "act" + std::to_string(act_i) + ".tau",
                                               ad::Tensor::scalar(cfg_.activation.tau)));
            }
            ++act_i;
            break;
        }
        block.push_back(l);
      }
      layers_.push_back(std::move(block));
    }
    if (cfg_.unitary && rng) project_unitary();
  }

  void add_param(std::string name, std::vector<std::size_t> shape, Rng* rng, Layer& l) {
    ad::Tensor w = rng ? init_weights(cfg_.init, shape, cfg_.block.dtype, *rng) : ad::Tensor(shape, cfg_.block.dtype);
    l.param = static_cast<int>(params_.size());
    params_.push_back(ad::make_param(std::move(name), std::move(w)));
  }

  AutoflowConfig cfg_;
  std::vector<ad::Param> params_;
  std::vector<std::vector<Layer>> layers_;
};

inline std::size_t count_params(const Model& m) { return m.count_params(); }

/// Runs the model over fields in batches and returns the outputs.
inline std::vector<Field> predict_fields(const Model& model, std::span<const Field> inputs, std::size_t batch = 64) {
  std::vector<Field> out;
  out.reserve(inputs.size());
  const auto dt = model.config().block.dtype;
  for (std::size_t s = 0; s < inputs.size(); s += batch) {
    const std::size_t e = std::min(inputs.size(), s + batch);
    const auto y = model.predict(stack_fields(inputs.subspan(s, e - s), dt));
    for (std::size_t b = 0; b < e - s; ++b)
      out.push_back(unstack_field(y, b, inputs[s + b].grid(),
                                  dt == ad::DType::Real ? FieldKind::Real : FieldKind::Complex));
  }
  return out;
}

// --- JSON ------------------------------------------------------------------------------------

inline nlohmann::json to_json(const AutoflowConfig& c) {
  std::vector<std::string> plan;
  for (const auto& l : c.block.plan) plan.push_back(l.str());
  return {
      {"n_blocks", c.n_blocks},
      {"plan", plan},
      {"kernel", c.block.kernel},
      {"dtype", ad::to_string(c.block.dtype)},
      {"state_channels", c.block.state_channels},
      {"arch", to_string(c.arch)},
      {"init", to_string(c.init)},
      {"sign_align", c.sign_align},
      {"unitary", c.unitary},
      {"activation", ad::to_string(c.activation.kind)},
      {"tau", c.activation.tau},
      {"gamma", c.activation.gamma},
      {"direction", c.activation.direction == pde::Direction::Forward ? "forward" : "backward"},
      {"denom_floor", c.activation.denom_floor},
      {"learnable_tau", c.learnable_tau},
      {"spatial", c.spatial},
  };
}

inline AutoflowConfig autoflow_config_from_json(const nlohmann::json& j) {
  AutoflowConfig c;
  try {
    c.n_blocks = j.at("n_blocks").get<std::size_t>();
    c.block.plan = parse_plan(j.at("plan").get<std::vector<std::string>>());
    c.block.kernel = j.at("kernel").get<std::size_t>();
    const auto dt = j.at("dtype").get<std::string>();
    if (dt != "real" && dt != "complex") throw ArgumentError("dtype must be real or complex");
    c.block.dtype = dt == "real" ? ad::DType::Real : ad::DType::Complex;
    c.block.state_channels = j.value("state_channels", std::size_t{1});
    c.arch = parse_architecture(j.value("arch", std::string("autoflow")));
    c.init = parse_init(j.value("init", std::string("kaiming_uniform")));
    c.sign_align = j.value("sign_align", false);
    c.unitary = j.value("unitary", false);
    c.activation.kind = ad::parse_activation(j.value("activation", std::string("identity")));
    c.activation.tau = j.value("tau", 1.0);
    c.activation.gamma = j.value("gamma", 1.0);
    const auto dir = j.value("direction", std::string("backward"));
    if (dir != "forward" && dir != "backward") throw ArgumentError("direction must be forward or backward");
    c.activation.direction = dir == "forward" ? pde::Direction::Forward : pde::Direction::Backward;
    c.activation.denom_floor = j.value("denom_floor", 1e-8);
    c.learnable_tau = j.value("learnable_tau", false);
    c.spatial = j.at("spatial").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace dosnet
