// dosnet command-line driver: dataset generation, training, evaluation,
// rollouts, BER sweeps, analysis reports and parameter counts.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "dosnet/analysis.hpp"
#include "dosnet/checkpoint.hpp"
#include "dosnet/classic_solvers.hpp"
#include "dosnet/datagen.hpp"
#include "dosnet/dosnet.hpp"
#include "dosnet/fiberlink.hpp"
#include "dosnet/nlse_pipeline.hpp"
#include "dosnet/train.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace dosnet;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- formatting -----------------------------------------------------------------------

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : os_(path) {
    if (!os_) throw Error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

 private:
  std::ofstream os_;
};

// --- configuration --------------------------------------------------------------------

json section(const json& cfg, const std::string& name) {
  if (!cfg.contains(name)) return json::object();
  if (!cfg.at(name).is_object()) throw UsageError("config section '" + name + "' must be an object");
  return cfg.at(name);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw UsageError("unknown field '" + k + "' in " + where);
}

template <class T>
T get(const json& j, const std::string& key, const T& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(where + "." + key + " has the wrong type");
  }
}

template <class T>
T need(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw UsageError("missing required field " + where + "." + key);
  return get<T>(j, key, T{}, where);
}

/// "a.b.c=value": value is parsed as JSON when possible, else taken as a string.
void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw UsageError("empty path component in '" + key + "'");
    if (!node->is_object()) throw UsageError("'" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

struct Context {
  std::string command;
  json cfg;
  fs::path out_dir;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  json outputs = json::array();

  /// Relative paths resolve against the output directory.
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : out_dir / path;
  }
  fs::path output(const std::string& p) {
    outputs.push_back(p);
    return resolve(p);
  }
  fs::path input(const std::string& p) const {
    const auto path = resolve(p);
    if (!fs::exists(path)) throw UsageError("input file not found: " + path.string());
    return path;
  }

  void write_manifest() const {
    json m = cfg;
    m["seed"] = seed;
    m["threads"] = threads;
    m["output_dir"] = out_dir.string();
    m["_manifest"] = {{"command", command}, {"outputs", outputs}};
    std::ofstream os(out_dir / (command + ".manifest.json"));
    os << m.dump(2) << '\n';
    if (!os) throw Error("cannot write manifest in " + out_dir.string());
  }
};

// --- model construction ---------------------------------------------------------------

struct ModelInputs {
  std::vector<std::size_t> spatial;
  double horizon = 0.0;
  ad::DType dtype = ad::DType::Real;
  std::optional<link::LinkConfig> link;
  link::SegmentLayout layout;
};

AutoflowConfig build_model_config(const json& m, const ModelInputs& in) {
  const std::string w = "model";
  check_keys(m, w,
             {"preset", "config", "spatial", "T", "n_blocks", "kernel", "nonlinearity", "dtype", "xi", "gamma",
              "learnable_tau", "sign_align", "init"});
  AutoflowConfig c;
  if (m.contains("config")) {
    c = autoflow_config_from_json(m.at("config"));
  } else {
    const auto preset = need<std::string>(m, "preset", w);
    const auto spatial = get(m, "spatial", in.spatial, w);
    if (spatial.empty() && preset != "link_dosnet" && preset != "nlse_dosnet")
      throw UsageError("model.spatial is required when no dataset is given");
    const double T = get(m, "T", in.horizon, w);
    if (preset == "allen_cahn_autoflow") {
      c = presets::allen_cahn_autoflow(spatial, T, get<std::size_t>(m, "n_blocks", 5, w),
                                       ad::parse_activation(get<std::string>(m, "nonlinearity", "ac", w)));
    } else if (preset == "baseline_dnn") {
      c = presets::baseline_dnn(spatial, T, ad::parse_activation(get<std::string>(m, "nonlinearity", "relu", w)));
    } else if (preset == "linear_autoflow") {
      if (spatial.size() != 1) throw UsageError("linear_autoflow needs a 1D grid");
      const auto dt = get<std::string>(m, "dtype", ad::to_string(in.dtype), w);
      c = presets::linear_autoflow(spatial[0], get<std::size_t>(m, "n_blocks", 3, w),
                                   get<std::size_t>(m, "kernel", 21, w),
                                   dt == "complex" ? ad::DType::Complex : ad::DType::Real);
    } else if (preset == "unitary_autoflow") {
      if (spatial.size() != 1) throw UsageError("unitary_autoflow needs a 1D grid");
      c = presets::unitary_autoflow(spatial[0], get<std::size_t>(m, "n_blocks", 3, w));
    } else if (preset == "nlse_dosnet") {
      c = presets::nlse_dosnet(in.layout.length, need<double>(m, "xi", w), get<double>(m, "gamma", 1.66, w),
                               get<std::size_t>(m, "n_blocks", 2, w), get<std::size_t>(m, "kernel", 3001, w));
    } else if (preset == "link_dosnet") {
      if (!in.link) throw UsageError("preset link_dosnet needs a 'link' section");
      c = link::link_dosnet_config(*in.link, get<std::size_t>(m, "n_blocks", 2, w),
                                   get<std::size_t>(m, "kernel", 3001, w), in.layout);
    } else {
      throw UsageError("unknown model preset '" + preset + "'");
    }
  }
  if (m.contains("learnable_tau")) c.learnable_tau = get<bool>(m, "learnable_tau", false, w);
  if (m.contains("sign_align")) c.sign_align = get<bool>(m, "sign_align", false, w);
  if (m.contains("init")) c.init = parse_init(get<std::string>(m, "init", "", w));
  c.validate();
  return c;
}

link::SegmentLayout segment_layout(const json& s) {
  check_keys(s, "segments", {"length", "pad", "valid", "stride"});
  link::SegmentLayout lay;
  lay.pad = get<std::size_t>(s, "pad", lay.pad, "segments");
  lay.valid = get<std::size_t>(s, "valid", lay.valid, "segments");
  lay.length = get<std::size_t>(s, "length", 2 * lay.pad + lay.valid, "segments");
  if (lay.length != 2 * lay.pad + lay.valid) throw UsageError("segments.length must equal 2·pad + valid");
  return lay;
}

std::optional<link::LinkConfig> link_section(const json& cfg) {
  if (!cfg.contains("link")) return std::nullopt;
  return link::link_config_from_json(section(cfg, "link"));
}

pde::LinearEq linear_eq_of(EqTag t) {
  switch (t) {
    case EqTag::Advection: return pde::LinearEq::Advection;
    case EqTag::Diffusion: return pde::LinearEq::Diffusion;
    case EqTag::Schrodinger: return pde::LinearEq::Schrodinger;
    default: throw UsageError("dataset '" + to_string(t) + "' is not a linear equation");
  }
}

// --- gen-data -------------------------------------------------------------------------------

int cmd_gen_data(Context& ctx) {
  auto d = section(ctx.cfg, "data");
  const std::string w = "data";
  check_keys(d, w,
             {"eq", "n", "n_pairs", "T", "split", "modes", "tau_ref", "epsilon", "max_freq", "out", "n_symbols",
              "sim_steps_per_span", "domain"});
  const auto eq = parse_eq_tag(need<std::string>(d, "eq", w));
  const auto out = get<std::string>(d, "out", to_string(eq) + ".dosd", w);
  Dataset ds;
  if (eq == EqTag::Waveform) {
    const auto link = link_section(ctx.cfg).value_or(link::LinkConfig{});
    const auto n_symbols = get<std::size_t>(d, "n_symbols", 10000, w);
    const auto steps = get<std::size_t>(d, "sim_steps_per_span", 100, w);
    if (n_symbols == 0 || steps == 0) throw UsageError("n_symbols and sim_steps_per_span must be positive");
    ctx.cfg["link"] = link::to_json(link);
    d.update({{"n_symbols", n_symbols}, {"sim_steps_per_span", steps}});
    const auto run = link::simulate_link(n_symbols, link, steps, ctx.seed);
    const auto g = link::signal_grid(run.noisy_rx.size(), link.symbol_period_ps() / static_cast<double>(link.sps_rx));
    ds.eq = EqTag::Waveform;
    ds.kind = FieldKind::Complex;
    ds.horizon = static_cast<double>(link.n_spans) * link.span_km;
    ds.inputs.emplace_back(g, run.noisy_rx, FieldKind::Complex);
    ds.targets.emplace_back(g, run.clean_rx, FieldKind::Complex);
    ds.n_train = 1;
  } else if (eq == EqTag::AllenCahn) {
    const auto n = get<std::size_t>(d, "n", 128, w);
    const auto pairs = get<std::size_t>(d, "n_pairs", 500, w);
    const double T = need<double>(d, "T", w);
    const double tau_ref = get<double>(d, "tau_ref", T / 100.0, w);
    pde::AllenCahnParams p{get<double>(d, "epsilon", pde::AllenCahnParams{}.epsilon, w)};
    AllenCahnDataOptions opt;
    opt.max_freq_exclusive = get<std::size_t>(d, "max_freq", opt.max_freq_exclusive, w);
    opt.split_frac = get<double>(d, "split", opt.split_frac, w);
    opt.threads = ctx.threads;
    const auto dom = get<std::vector<double>>(d, "domain", {-1.0, 1.0}, w);
    if (dom.size() != 2) throw UsageError("data.domain needs [lo, hi]");
    ds = build_ac_dataset(pairs, T, tau_ref, p, Grid::square(n, n, dom[0], dom[1]), ctx.seed, opt);
    d.update({{"n", n}, {"n_pairs", pairs}, {"tau_ref", tau_ref}, {"epsilon", p.epsilon},
              {"max_freq", opt.max_freq_exclusive}, {"split", opt.split_frac}, {"domain", dom}});
  } else if (eq == EqTag::Nlse) {
    throw UsageError("use eq = waveform for link data");
  } else {
    const auto n = get<std::size_t>(d, "n", 200, w);
    const auto pairs = get<std::size_t>(d, "n_pairs", 5000, w);
    const double T = need<double>(d, "T", w);
    LinearDataOptions opt;
    opt.modes = get<std::size_t>(d, "modes", opt.modes, w);
    opt.threads = ctx.threads;
    const auto dom = get<std::vector<double>>(d, "domain", {-std::numbers::pi, std::numbers::pi}, w);
    if (dom.size() != 2) throw UsageError("data.domain needs [lo, hi]");
    const double split = get<double>(d, "split", 0.75, w);
    ds = build_linear_dataset(linear_eq_of(eq), pairs, T, Grid::line(n, dom[0], dom[1]), split, ctx.seed, opt);
    d.update({{"n", n}, {"n_pairs", pairs}, {"modes", opt.modes}, {"split", split}, {"domain", dom}});
  }
  d["out"] = out;
  ctx.cfg["data"] = d;
  save_dataset(ctx.output(out).string(), ds);
  std::cout << "wrote " << ds.size() << " pairs (" << ds.n_train << " train / " << ds.n_test() << " test) to "
            << ctx.resolve(out).string() << '\n';
  return kExitOk;
}

// --- train ------------------------------------------------------------------------------------

struct TrainingData {
  Dataset dataset;
  std::unique_ptr<PairSource> source;
  ModelInputs model_inputs;
};

TrainingData load_training_data(const Context& ctx, const json& data_sec) {
  TrainingData td;
  // data.path, or the file gen-data wrote when the same config drives both.
  const auto path = data_sec.contains("path") ? need<std::string>(data_sec, "path", "data")
                                              : need<std::string>(data_sec, "out", "data");
  td.dataset = load_dataset(ctx.input(path).string());
  const auto& ds = td.dataset;
  td.model_inputs.horizon = ds.horizon;
  td.model_inputs.dtype = ds.kind == FieldKind::Real ? ad::DType::Real : ad::DType::Complex;
  td.model_inputs.link = link_section(ctx.cfg);
  if (ds.eq == EqTag::Waveform) {
    const auto seg = section(ctx.cfg, "segments");
    td.model_inputs.layout = segment_layout(seg);
    const auto stride = get<std::size_t>(seg, "stride", 8, "segments");
    auto in = link::segment(ds.inputs[0].values(), stride, td.model_inputs.layout);
    auto tgt = link::segment(ds.targets[0].values(), stride, td.model_inputs.layout);
    const auto n_train = in.size() / 2;
    td.source = std::make_unique<link::SegmentPairSource>(std::move(in), std::move(tgt), n_train);
    td.model_inputs.spatial = {td.model_inputs.layout.length};
  } else {
    td.source = std::make_unique<DatasetSource>(td.dataset);
    td.model_inputs.spatial = ds.grid().dims();
  }
  return td;
}

int cmd_train(Context& ctx) {
  auto data_sec = section(ctx.cfg, "data");
  auto train_sec = section(ctx.cfg, "train");
  const std::string w = "train";
  check_keys(train_sec, w,
             {"base_lr", "epochs", "batch_size", "l2", "seed", "schedule", "schedule_step", "schedule_factor",
              "loss_window", "resume", "out", "metrics"});
  const auto out = get<std::string>(train_sec, "out", "model.dosm", w);
  const auto metrics = get<std::string>(train_sec, "metrics", "metrics.csv", w);
  const auto resume = get<std::string>(train_sec, "resume", "", w);
  json tc_json = train_sec;
  for (const char* k : {"resume", "out", "metrics"}) tc_json.erase(k);
  if (!tc_json.contains("seed")) tc_json["seed"] = ctx.seed;

  auto td = load_training_data(ctx, data_sec);
  if (td.dataset.eq == EqTag::Waveform && !tc_json.contains("loss_window"))
    tc_json["loss_window"] = {td.model_inputs.layout.pad, td.model_inputs.layout.pad + td.model_inputs.layout.valid};
  TrainConfig tc;
  try {
    tc = train_config_from_json(tc_json);
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }

  std::optional<Model> model;
  std::optional<AdamState> adam;
  std::size_t start_epoch = 0;
  if (!resume.empty()) {
    auto ck = load_checkpoint(ctx.input(resume).string());
    model.emplace(std::move(ck.model));
    adam = std::move(ck.adam);
    start_epoch = ck.meta.value("epoch", std::size_t{0});
  } else {
    const auto cfg = build_model_config(section(ctx.cfg, "model"), td.model_inputs);
    ctx.cfg["model"] = {{"config", to_json(cfg)}};
    Rng rng = Rng(ctx.seed).substream(7);
    model.emplace(cfg, rng);
  }
  ctx.cfg["train"] = to_json(tc);
  ctx.cfg["train"]["out"] = out;
  ctx.cfg["train"]["metrics"] = metrics;
  if (!resume.empty()) ctx.cfg["train"]["resume"] = resume;

  Trainer trainer(*model, tc);
  if (adam) trainer.optimizer().restore(adam->steps, adam->m, adam->v);
  trainer.set_epoch(start_epoch);
  const std::size_t todo = tc.epochs > start_epoch ? tc.epochs - start_epoch : 0;
  Csv csv(ctx.output(metrics), {"epoch", "train_loss", "val_loss", "lr"});
  trainer.run(*td.source, todo, [&](const HistoryRow& r) {
    csv.row({std::to_string(r.epoch), num(r.train_loss), num(r.val_loss), num(r.lr)});
    std::cout << "epoch " << r.epoch << " train " << num(r.train_loss) << " val " << num(r.val_loss) << '\n';
  });
  const json meta = {{"epoch", trainer.epoch()}, {"seed", ctx.seed}, {"data", data_sec}, {"train", to_json(tc)}};
  save_checkpoint(ctx.output(out).string(), *model, &trainer.optimizer(), meta);
  std::cout << "saved " << ctx.resolve(out).string() << " (" << count_params(*model) << " parameters)\n";
  return kExitOk;
}

// --- eval ----------------------------------------------------------------------------------------

int cmd_eval(Context& ctx) {
  auto ev = section(ctx.cfg, "eval");
  check_keys(ev, "eval", {"checkpoint", "out", "batch_size"});
  const auto ck = load_checkpoint(ctx.input(need<std::string>(ev, "checkpoint", "eval")).string());
  auto td = load_training_data(ctx, section(ctx.cfg, "data"));
  TrainConfig tc;
  tc.batch_size = get<std::size_t>(ev, "batch_size", 64, "eval");
  if (td.dataset.eq == EqTag::Waveform)
    tc.loss_window = ad::Window{td.model_inputs.layout.pad, td.model_inputs.layout.pad + td.model_inputs.layout.valid};
  Model model = ck.model;
  Trainer t(model, tc);
  Csv csv(ctx.output(get<std::string>(ev, "out", "eval.csv", "eval")),
          {"split", "pairs", "mse", "rel_l2_mean", "rel_error_mean"});
  for (auto split : {Split::Train, Split::Val}) {
    const auto n = td.source->size(split);
    double rl = std::numeric_limits<double>::quiet_NaN(), re = rl;
    if (td.dataset.eq != EqTag::Waveform && n > 0) {
      const std::size_t off = split == Split::Train ? 0 : td.dataset.n_train;
      std::vector<Field> xs(td.dataset.inputs.begin() + static_cast<std::ptrdiff_t>(off),
                            td.dataset.inputs.begin() + static_cast<std::ptrdiff_t>(off + n));
      const auto ys = predict_fields(model, xs);
      rl = re = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        rl += relative_l2(ys[i], td.dataset.targets[off + i]);
        re += relative_error(ys[i], td.dataset.targets[off + i]).value;
      }
      rl /= static_cast<double>(n);
      re /= static_cast<double>(n);
    }
    const double mse = t.evaluate(*td.source, split);
    const std::string name = split == Split::Train ? "train" : "test";
    csv.row({name, std::to_string(n), num(mse), num(rl), num(re)});
    std::cout << name << ": mse " << num(mse) << " rel_l2 " << num(rl) << '\n';
  }
  return kExitOk;
}

// --- rollout --------------------------------------------------------------------------------------

struct RolloutSetup {
  analysis::Propagator reference;
  std::vector<Field> starts;
};

RolloutSetup rollout_setup(const Context& ctx, const json& r, const Dataset& ds) {
  const std::string w = "rollout";
  RolloutSetup s;
  if (ds.eq == EqTag::AllenCahn) {
    pde::AllenCahnParams p{get<double>(r, "epsilon", pde::AllenCahnParams{}.epsilon, w)};
    s.reference = analysis::allen_cahn_propagator(ds.horizon, get<double>(r, "tau_ref", ds.horizon / 100.0, w), p);
  } else {
    s.reference = analysis::exact_propagator(linear_eq_of(ds.eq), ds.horizon);
  }
  const auto n = std::min(get<std::size_t>(r, "samples", 10, w), ds.n_test());
  if (n == 0) throw UsageError("dataset has no test pairs to roll out");
  for (std::size_t i = 0; i < n; ++i) s.starts.push_back(ds.inputs[ds.n_train + i]);
  (void)ctx;
  return s;
}

void run_rollout(Context& ctx, const json& r, const std::string& default_out) {
  const std::string w = "rollout";
  check_keys(r, w, {"checkpoint", "data", "samples", "n_steps", "tau_ref", "epsilon", "out"});
  const auto ds = load_dataset(ctx.input(need<std::string>(r, "data", w)).string());
  const auto setup = rollout_setup(ctx, r, ds);
  const auto which = need<std::string>(r, "checkpoint", w);
  std::optional<LoadedCheckpoint> ck;
  analysis::Propagator model = setup.reference;
  if (which != "exact") {
    ck = load_checkpoint(ctx.input(which).string());
    model = analysis::model_propagator(ck->model);
  }
  const auto steps = get<std::size_t>(r, "n_steps", 4, w);
  Csv csv(ctx.output(get<std::string>(r, "out", default_out, w)),
          {"sample", "step", "rel_l2", "rel_error", "fallback", "norm"});
  std::vector<double> mean(steps, 0.0);
  for (std::size_t i = 0; i < setup.starts.size(); ++i) {
    const auto rows = analysis::rollout(model, setup.reference, setup.starts[i], steps);
    for (const auto& row : rows) {
      csv.row({std::to_string(i), std::to_string(row.step), num(row.rel_l2), num(row.rel_error),
               row.fallback ? "1" : "0", num(row.norm)});
      mean[row.step - 1] += row.rel_l2 / static_cast<double>(setup.starts.size());
    }
  }
  for (std::size_t k = 0; k < steps; ++k) std::cout << "step " << k + 1 << " mean rel_l2 " << num(mean[k]) << '\n';
}

int cmd_rollout(Context& ctx) {
  run_rollout(ctx, section(ctx.cfg, "rollout"), "rollout.csv");
  return kExitOk;
}

// --- ber-sweep ------------------------------------------------------------------------------------

int cmd_ber_sweep(Context& ctx) {
  auto sw = section(ctx.cfg, "sweep");
  const std::string w = "sweep";
  check_keys(sw, w, {"powers_dBm", "n_symbols", "seeds", "sim_steps_per_span", "methods", "out"});
  const auto base = link_section(ctx.cfg).value_or(link::LinkConfig{});
  ctx.cfg["link"] = link::to_json(base);
  const auto powers = need<std::vector<double>>(sw, "powers_dBm", w);
  const auto n_symbols = get<std::size_t>(sw, "n_symbols", 10000, w);
  const auto seeds = get<std::vector<std::uint64_t>>(sw, "seeds", {ctx.seed}, w);
  const auto sim_steps = get<std::size_t>(sw, "sim_steps_per_span", 100, w);
  if (!sw.contains("methods") || !sw.at("methods").is_array()) throw UsageError("sweep.methods must be an array");
  const auto seg = segment_layout(section(ctx.cfg, "segments"));

  struct Method {
    std::string kind;
    std::vector<std::size_t> steps;
    std::optional<LoadedCheckpoint> ck;
  };
  std::vector<Method> methods;
  for (const auto& m : sw.at("methods")) {
    check_keys(m, "sweep.methods[]", {"method", "steps", "checkpoint"});
    Method mm;
    mm.kind = need<std::string>(m, "method", "sweep.methods[]");
    if (mm.kind == "ssfm") {
      mm.steps = need<std::vector<std::size_t>>(m, "steps", "sweep.methods[]");
    } else if (mm.kind == "dosnet") {
      mm.ck = load_checkpoint(ctx.input(need<std::string>(m, "checkpoint", "sweep.methods[]")).string());
      mm.steps = {mm.ck->model.config().n_blocks};
    } else if (mm.kind == "none" || mm.kind == "loopback") {
      mm.steps = {0};
    } else {
      throw UsageError("unknown sweep method '" + mm.kind + "'");
    }
    methods.push_back(std::move(mm));
  }

  struct Row {
    double power;
    std::string method;
    std::size_t steps;
    double ber;
    std::uint64_t seed;
  };
  std::vector<std::vector<Row>> rows(powers.size() * seeds.size());
  parallel_for(rows.size(), ctx.threads, [&](std::size_t job) {
    const double p = powers[job / seeds.size()];
    const auto seed = seeds[job % seeds.size()];
    auto cfg = base;
    cfg.launch_dBm = p;
    const auto run = link::simulate_link(n_symbols, cfg, sim_steps, seed);
    auto& out = rows[job];
    for (const auto& m : methods) {
      if (m.kind == "loopback") {
        auto lb = cfg;
        lb.n_spans = 0;
        lb.noiseless = true;
        const auto r = link::simulate_link(n_symbols, lb, 1, seed);
        out.push_back({p, m.kind, 0, link::stream_ber(r.noisy_rx, lb, r.tx).ber, seed});
      } else if (m.kind == "none") {
        out.push_back({p, m.kind, 0, link::stream_ber(run.noisy_rx, cfg, run.tx).ber, seed});
      } else if (m.kind == "ssfm") {
        for (auto k : m.steps)
          out.push_back({p, m.kind, k, link::stream_ber(link::ssfm_equalize(run.received, cfg, k), cfg, run.tx).ber,
                         seed});
      } else {
        const auto y = link::dosnet_equalize(m.ck->model, run.noisy_rx, seg);
        out.push_back({p, m.kind, m.steps[0], link::stream_ber(y, cfg, run.tx).ber, seed});
      }
    }
  });
  Csv csv(ctx.output(get<std::string>(sw, "out", "ber.csv", w)), {"power_dBm", "method", "steps", "ber", "seed"});
  for (const auto& job : rows)
    for (const auto& r : job) {
      csv.row({num(r.power), r.method, std::to_string(r.steps), num(r.ber), std::to_string(r.seed)});
      std::cout << num(r.power) << " dBm " << r.method << " " << r.steps << ": " << num(r.ber) << '\n';
    }
  return kExitOk;
}

// --- analyze --------------------------------------------------------------------------------------

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& where) {
  try {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw UsageError(where + " is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) throw UsageError(where + " is ragged");
      for (std::size_t k = 0; k < rows[i].size(); ++k)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return m;
  } catch (const json::exception&) {
    throw UsageError(where + " must be a list of rows");
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
    j.push_back(r);
  }
  return j;
}

/// Real conv kernels [1, 1, k] of every block, in block order.
std::vector<std::vector<double>> block_kernels(const Model& m) {
  std::vector<std::vector<double>> ks;
  for (const auto& p : m.params()) {
    if (!p.name.ends_with("conv0.weight")) continue;
    const auto& t = p.node->value;
    if (t.is_complex() || t.rank() != 3 || t.dim(0) != 1 || t.dim(1) != 1)
      throw UsageError("weight diagnostics need a single-channel real 1D conv per block");
    ks.emplace_back(t.data().begin(), t.data().end());
  }
  if (ks.empty()) throw UsageError("model has no conv blocks");
  return ks;
}

json analyze_factorial(Context& ctx, const json& f) {
  check_keys(f, "analysis.factorial", {"responses", "out"});
  if (!f.contains("responses") || !f.at("responses").is_object())
    throw UsageError("analysis.factorial.responses must map a label to [dnn_relu, autoflow_relu, dnn_osb, autoflow_osb]");
  Csv csv(ctx.output(get<std::string>(f, "out", "factorial.csv", "analysis.factorial")),
          {"label", "q0", "qA", "qB", "qAB"});
  json rep = json::object();
  for (const auto& [label, v] : f.at("responses").items()) {
    const auto y = get<std::vector<double>>(f.at("responses"), label, {}, "analysis.factorial.responses");
    if (y.size() != 4) throw UsageError("factorial responses need four values");
    const auto cells = analysis::factorial_cells(y[0], y[1], y[2], y[3]);
    const auto q = analysis::factorial_effects(cells);
    csv.row({label, num(q.q0), num(q.qA), num(q.qB), num(q.qAB)});
    rep[label] = {{"q0", q.q0}, {"qA", q.qA}, {"qB", q.qB}, {"qAB", q.qAB}};
  }
  return rep;
}

json analyze_bracket(Context& ctx, const json& b) {
  const std::string w = "analysis.bracket";
  check_keys(b, w, {"h", "n", "epsilon", "out"});
  const auto hs = get<std::vector<double>>(b, "h", {1e-3, 5e-4}, w);
  const auto g = Grid::line(get<std::size_t>(b, "n", 128, w));
  const auto u0 = Field::sample(g, [](double x) { return std::sin(x); });
  const pde::AllenCahnParams p{get<double>(b, "epsilon", 1.0, w)};
  Csv csv(ctx.output(get<std::string>(b, "out", "bracket.csv", w)),
          {"h", "ratio", "bracket_norm", "predicted_norm", "norm_scaling"});
  json rep = json::array();
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (double h : hs) {
    const auto pr = solvers::lie_bracket_probe(u0, h, p);
    const double scaling = prev / pr.bracket_norm;
    csv.row({num(h), num(pr.ratio), num(pr.bracket_norm), num(pr.predicted_norm), num(scaling)});
    rep.push_back({{"h", h}, {"ratio", pr.ratio}, {"bracket_norm", pr.bracket_norm}, {"norm_scaling", scaling}});
    prev = pr.bracket_norm;
  }
  return rep;
}

json analyze_order(Context& ctx, const json& o) {
  const std::string w = "analysis.order";
  check_keys(o, w, {"n", "T", "taus", "epsilon", "out"});
  const auto g = Grid::line(get<std::size_t>(o, "n", 128, w));
  const auto u0 = Field::sample(g, [](double x) { return 0.5 * std::sin(x) + 0.3 * std::cos(2.0 * x); });
  const double T = get<double>(o, "T", 0.5, w);
  const auto taus = get<std::vector<double>>(o, "taus", {0.1, 0.05, 0.025, 0.0125}, w);
  const auto prob = solvers::SplitProblem::allen_cahn({get<double>(o, "epsilon", 0.1, w)});
  const auto ref = solvers::scheme_solver(prob, solvers::Scheme::Strang);
  Csv csv(ctx.output(get<std::string>(o, "out", "order.csv", w)), {"scheme", "tau", "error", "order"});
  json rep = json::object();
  for (auto s : {solvers::Scheme::Plain, solvers::Scheme::Strang}) {
    const auto fit = solvers::convergence_order(solvers::scheme_solver(prob, s), u0, T, taus, ref);
    for (std::size_t i = 0; i < fit.taus.size(); ++i)
      csv.row({solvers::to_string(s), num(fit.taus[i]), num(fit.errors[i]), num(fit.order)});
    rep[solvers::to_string(s)] = fit.order;
  }
  return rep;
}

json analyze_weights(Context& ctx, const json& wsec) {
  const std::string w = "analysis.weights";
  check_keys(wsec, w, {"checkpoint", "data", "beta", "out"});
  const auto ck = load_checkpoint(ctx.input(need<std::string>(wsec, "checkpoint", w)).string());
  const auto ks = block_kernels(ck.model);
  json rep;
  rep["pairwise_difference"] = analysis::max_pairwise_weight_difference(ks);
  json sym = json::array();
  for (const auto& k : ks) sym.push_back(analysis::kernel_symmetry_score(k));
  rep["symmetry"] = sym;
  if (wsec.contains("data")) {
    const auto ds = load_dataset(ctx.input(get<std::string>(wsec, "data", "", w)).string());
    const std::span<const Field> in(ds.inputs.data(), ds.n_train), out(ds.targets.data(), ds.n_train);
    const auto [S11, S31] = analysis::covariances(in, out);
    rep["sigma11_deviation"] = (S11 - Eigen::MatrixXd::Identity(S11.rows(), S11.cols())).norm();
    if (ks.size() == 2) {
      const auto n = ds.grid().size();
      const auto W21 = analysis::circulant(ks[0], n), W32 = analysis::circulant(ks[1], n);
      const auto r = analysis::weight_diagnostics(W21, W32, S31, get<double>(wsec, "beta", 0.0, w), &S11);
      rep["relation_residual"] = r.relation_residual;
      rep["product_residual"] = r.product_residual;
      rep["symmetric_path"] = r.symmetric_path;
    }
  }
  std::ofstream os(ctx.output(get<std::string>(wsec, "out", "weights.json", w)));
  os << rep.dump(2) << '\n';
  return rep;
}

json analyze_match_times(Context& ctx, const json& m) {
  const std::string w = "analysis.match_times";
  check_keys(m, w, {"checkpoint", "data", "samples", "intervals", "out"});
  const auto ck = load_checkpoint(ctx.input(need<std::string>(m, "checkpoint", w)).string());
  const auto ds = load_dataset(ctx.input(need<std::string>(m, "data", w)).string());
  const auto eq = linear_eq_of(ds.eq);
  const auto n = std::min(get<std::size_t>(m, "samples", 10, w), ds.n_test());
  const auto intervals = get<std::size_t>(m, "intervals", 60, w);
  Csv csv(ctx.output(get<std::string>(m, "out", "match_times.csv", w)),
          {"sample", "block", "time", "index", "distance"});
  std::vector<double> mean;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u0 = ds.inputs[ds.n_train + i];
    const auto traj = analysis::linear_trajectory(u0, eq, ds.horizon, intervals);
    const auto fs = analysis::model_intermediates(ck.model, u0);
    const auto ms = analysis::match_times(fs, traj);
    mean.resize(ms.size(), 0.0);
    for (std::size_t b = 0; b < ms.size(); ++b) {
      csv.row({std::to_string(i), std::to_string(b), num(ms[b].time), std::to_string(ms[b].index),
               num(ms[b].distance)});
      mean[b] += ms[b].time / static_cast<double>(n);
    }
  }
  return {{"mean_times", mean}, {"horizon", ds.horizon}};
}

json analyze_gradient_flow(Context& ctx, const json& g) {
  const std::string w = "analysis.gradient_flow";
  check_keys(g, w, {"sigma31", "beta", "lambda", "W21", "W32", "iters", "out"});
  const auto S = matrix_from_json(g.at("sigma31"), w + ".sigma31");
  const auto W21 = g.contains("W21") ? matrix_from_json(g.at("W21"), w + ".W21")
                                     : Eigen::MatrixXd(0.5 * Eigen::MatrixXd::Identity(S.cols(), S.cols()));
  const auto W32 = g.contains("W32") ? matrix_from_json(g.at("W32"), w + ".W32")
                                     : Eigen::MatrixXd(0.5 * Eigen::MatrixXd::Identity(S.rows(), S.cols()));
  const double beta = need<double>(g, "beta", w);
  const auto r = analysis::two_layer_gradient_flow(S, beta, get<double>(g, "lambda", 0.1, w), W21, W32,
                                                   get<std::size_t>(g, "iters", 100000, w));
  json rep = {{"W21", matrix_to_json(r.W21)},
              {"W32", matrix_to_json(r.W32)},
              {"iterations", r.iterations},
              {"converged", r.converged}};
  if (S.rows() == S.cols()) {
    const auto d = analysis::weight_diagnostics(r.W21, r.W32, S, beta);
    rep["relation_residual"] = d.relation_residual;
    rep["product_residual"] = d.product_residual;
  }
  std::ofstream os(ctx.output(get<std::string>(g, "out", "gradient_flow.json", w)));
  os << rep.dump(2) << '\n';
  return rep;
}

int cmd_analyze(Context& ctx) {
  const auto a = section(ctx.cfg, "analysis");
  check_keys(a, "analysis", {"factorial", "bracket", "order", "weights", "match_times", "rollout", "gradient_flow"});
  if (a.empty()) throw UsageError("analysis section is empty; nothing to do");
  json report = json::object();
  if (a.contains("factorial")) report["factorial"] = analyze_factorial(ctx, a.at("factorial"));
  if (a.contains("bracket")) report["bracket"] = analyze_bracket(ctx, a.at("bracket"));
  if (a.contains("order")) report["order"] = analyze_order(ctx, a.at("order"));
  if (a.contains("weights")) report["weights"] = analyze_weights(ctx, a.at("weights"));
  if (a.contains("match_times")) report["match_times"] = analyze_match_times(ctx, a.at("match_times"));
  if (a.contains("gradient_flow")) report["gradient_flow"] = analyze_gradient_flow(ctx, a.at("gradient_flow"));
  if (a.contains("rollout")) run_rollout(ctx, a.at("rollout"), "analysis_rollout.csv");
  std::ofstream os(ctx.output("report.json"));
  os << report.dump(2) << '\n';
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

// --- count-params ---------------------------------------------------------------------------------

int cmd_count_params(Context& ctx, const std::string& checkpoint) {
  std::size_t n = 0;
  if (!checkpoint.empty()) {
    n = count_params(load_checkpoint(ctx.input(checkpoint).string()).model);
  } else {
    ModelInputs in;
    in.link = link_section(ctx.cfg);
    in.layout = segment_layout(section(ctx.cfg, "segments"));
    const auto data = section(ctx.cfg, "data");
    if (data.contains("path") || data.contains("out")) {
      const auto td = load_training_data(ctx, data);
      in = td.model_inputs;
    }
    n = count_params(Model(build_model_config(section(ctx.cfg, "model"), in)));
  }
  std::cout << n << '\n';
  return kExitOk;
}

// --- driver ----------------------------------------------------------------------------------------

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config " + path);
  try {
    json j = json::parse(is);
    if (!j.is_object()) throw UsageError("config root must be an object");
    j.erase("_manifest");
    return j;
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::locale::global(std::locale::classic());
  CLI::App app{"dosnet: operator-splitting solvers and DOSnet training"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads, epochs;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "generate a dataset file"},
      {"train", "train a model and write a checkpoint plus metrics CSV"},
      {"eval", "evaluate a checkpoint on a dataset"},
      {"rollout", "apply a one-horizon model repeatedly and compare with the reference"},
      {"ber-sweep", "BER over launch powers for SSFM and DOSnet compensation"},
      {"analyze", "factorial, bracket, order, weight and time-matching reports"},
      {"count-params", "count trainable parameters"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("-c,--config", config_path, "JSON config file (a manifest also works)");
    s->add_option("--set", overrides, "override a config field, e.g. --set train.epochs=5")->take_all();
    s->add_option("--seed", seed, "global seed");
    s->add_option("-o,--out-dir", out_dir, "output directory (default: $DOSNET_OUTPUT_DIR or .)");
    s->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
    if (name == "train") s->add_option("--epochs", epochs, "shorthand for --set train.epochs=N");
    if (name == "count-params") s->add_option("--checkpoint", checkpoint, "count a saved model instead");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* active = nullptr;
  for (auto* s : subs)
    if (s->parsed()) active = s;

  try {
    Context ctx;
    ctx.command = active->get_name();
    ctx.cfg = read_config(config_path);
    for (const auto& o : overrides) apply_override(ctx.cfg, o);
    if (epochs) ctx.cfg["train"]["epochs"] = *epochs;
    ctx.seed = seed ? *seed : get<std::uint64_t>(ctx.cfg, "seed", 0, "config");
    ctx.threads = threads ? *threads : get<std::size_t>(ctx.cfg, "threads", 1, "config");
    if (!out_dir.empty())
      ctx.out_dir = out_dir;
    else if (const char* env = std::getenv("DOSNET_OUTPUT_DIR"); env && *env)
      ctx.out_dir = env;
    else
      ctx.out_dir = get<std::string>(ctx.cfg, "output_dir", ".", "config");
    fs::create_directories(ctx.out_dir);
    for (const char* k : {"seed", "threads", "output_dir"}) ctx.cfg.erase(k);

    int rc = kExitUsage;
    if (ctx.command == "gen-data") rc = cmd_gen_data(ctx);
    if (ctx.command == "train") rc = cmd_train(ctx);
    if (ctx.command == "eval") rc = cmd_eval(ctx);
    if (ctx.command == "rollout") rc = cmd_rollout(ctx);
    if (ctx.command == "ber-sweep") rc = cmd_ber_sweep(ctx);
    if (ctx.command == "analyze") rc = cmd_analyze(ctx);
    if (ctx.command == "count-params") rc = cmd_count_params(ctx, checkpoint);
    ctx.write_manifest();
    return rc;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
