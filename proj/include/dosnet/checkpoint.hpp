#pragma once

// "DOSM" model checkpoints:
//   "DOSM" | u32 version | u64 json length | json {model, meta} |
//   u64 param count | per param: u32 name length, name, u8 trainable,
//   u32 dtype (1 = f64, 2 = c128), u32 rank, u64 dims[rank], f64 payload |
//   u8 has optimizer | [u64 step, per slot: u64 length, f64 m[], f64 v[]]
// All numbers little-endian.

#include <fstream>
#include <optional>
#include <string>

#include "dosnet/datagen.hpp"
#include "dosnet/dosnet.hpp"
#include "dosnet/optim.hpp"

namespace dosnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct AdamState {
  std::uint64_t steps = 0;
  std::vector<std::vector<double>> m, v;
};

struct LoadedCheckpoint {
  Model model;
  std::optional<AdamState> adam;
  nlohmann::json meta;
};

inline void write_checkpoint(std::ostream& os, const Model& model, const Adam* opt, const nlohmann::json& meta = {}) {
  os.write("DOSM", 4);
  io::put<std::uint32_t>(os, kCheckpointVersion);
  const std::string js = nlohmann::json{{"model", to_json(model.config())}, {"meta", meta}}.dump();
  io::put<std::uint64_t>(os, js.size());
  os.write(js.data(), static_cast<std::streamsize>(js.size()));
  io::put<std::uint64_t>(os, model.params().size());
  for (const auto& p : model.params()) {
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    io::put<std::uint8_t>(os, p.trainable ? 1 : 0);
    const auto& t = p.node->value;
    io::put<std::uint32_t>(os, t.is_complex() ? 2u : 1u);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) io::put<std::uint64_t>(os, d);
    io::put_doubles(os, t.data());
  }
  io::put<std::uint8_t>(os, opt ? 1 : 0);
  if (opt) {
    io::put<std::uint64_t>(os, opt->steps());
    const auto& m = opt->first_moments();
    const auto& v = opt->second_moments();
    io::put<std::uint64_t>(os, m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      io::put<std::uint64_t>(os, m[i].size());
      io::put_doubles(os, m[i]);
      io::put_doubles(os, v[i]);
    }
  }
  if (!os) throw Error("checkpoint write failed");
}

inline LoadedCheckpoint read_checkpoint(std::istream& is, const std::string& path = "<stream>") {
  io::check_magic(is, "DOSM", path);
  const auto version = io::get<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  const auto jl = io::get<std::uint64_t>(is, "config length");
  if (jl > (1u << 26)) throw FormatError(path + ": implausible config length");
  std::string js(jl, '\0');
  is.read(js.data(), static_cast<std::streamsize>(jl));
  if (is.gcount() != static_cast<std::streamsize>(jl)) throw FormatError(path + ": truncated config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": bad config json: " + e.what());
  }
  if (!j.contains("model")) throw FormatError(path + ": config has no model section");
  LoadedCheckpoint ck{Model(autoflow_config_from_json(j.at("model"))), std::nullopt, j.value("meta", nlohmann::json{})};
  auto& params = ck.model.params();
  const auto n = io::get<std::uint64_t>(is, "param count");
  if (n != params.size())
    throw FormatError(path + ": checkpoint holds " + std::to_string(n) + " parameters, model expects " +
                      std::to_string(params.size()));
  for (auto& p : params) {
    const auto nl = io::get<std::uint32_t>(is, "name length");
    if (nl > 4096) throw FormatError(path + ": implausible parameter name length");
    std::string name(nl, '\0');
    is.read(name.data(), nl);
    if (is.gcount() != static_cast<std::streamsize>(nl)) throw FormatError(path + ": truncated parameter name");
    if (name != p.name) throw FormatError(path + ": parameter " + name + " where " + p.name + " expected");
    p.trainable = io::get<std::uint8_t>(is, "trainable flag") != 0;
    const auto dt = io::get<std::uint32_t>(is, "dtype");
    const auto rank = io::get<std::uint32_t>(is, "rank");
    auto& t = p.node->value;
    if ((dt == 2) != t.is_complex() || rank != t.rank()) throw FormatError(path + ": layout mismatch for " + name);
    for (std::size_t a = 0; a < rank; ++a)
      if (io::get<std::uint64_t>(is, "dims") != t.dim(a)) throw FormatError(path + ": shape mismatch for " + name);
    io::get_doubles(is, t.data(), "parameter payload");
  }
  if (io::get<std::uint8_t>(is, "optimizer flag")) {
    AdamState st;
    st.steps = io::get<std::uint64_t>(is, "optimizer step");
    const auto slots = io::get<std::uint64_t>(is, "optimizer slots");
    if (slots > params.size()) throw FormatError(path + ": too many optimizer slots");
    for (std::uint64_t i = 0; i < slots; ++i) {
      const auto len = io::get<std::uint64_t>(is, "slot length");
      if (len > (1ull << 32)) throw FormatError(path + ": implausible optimizer slot");
      std::vector<double> m(len), v(len);
      io::get_doubles(is, m, "optimizer moments");
      io::get_doubles(is, v, "optimizer moments");
      st.m.push_back(std::move(m));
      st.v.push_back(std::move(v));
    }
    ck.adam = std::move(st);
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const Model& model, const Adam* opt = nullptr,
                            const nlohmann::json& meta = {}) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_checkpoint(os, model, opt, meta);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_checkpoint(is, path);
}

}  // namespace dosnet
