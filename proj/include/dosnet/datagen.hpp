#pragma once

// Synthetic datasets for the linear toys and Allen-Cahn, and the "DOSD"
// binary format.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dosnet/classic_solvers.hpp"
#include "dosnet/error.hpp"
#include "dosnet/pde_core.hpp"
#include "dosnet/rng.hpp"
#include "dosnet/tensor_field.hpp"

namespace dosnet {

enum class EqTag : std::uint32_t { Advection = 0, Diffusion = 1, Schrodinger = 2, AllenCahn = 3, Nlse = 4, Waveform = 5 };

inline std::string to_string(EqTag t) {
  switch (t) {
    case EqTag::Advection: return "advection";
    case EqTag::Diffusion: return "diffusion";
    case EqTag::Schrodinger: return "schrodinger";
    case EqTag::AllenCahn: return "allen_cahn";
    case EqTag::Nlse: return "nlse";
    case EqTag::Waveform: return "waveform";
  }
  return "?";
}

inline EqTag parse_eq_tag(const std::string& s) {
  for (auto t : {EqTag::Advection, EqTag::Diffusion, EqTag::Schrodinger, EqTag::AllenCahn, EqTag::Nlse,
                 EqTag::Waveform})
    if (to_string(t) == s) return t;
  if (s == "ac") return EqTag::AllenCahn;
  throw ArgumentError("unknown equation tag: " + s);
}

inline EqTag eq_tag(pde::LinearEq eq) {
  switch (eq) {
    case pde::LinearEq::Advection: return EqTag::Advection;
    case pde::LinearEq::Diffusion: return EqTag::Diffusion;
    case pde::LinearEq::Schrodinger: return EqTag::Schrodinger;
    default: throw ArgumentError("no dataset tag for " + pde::to_string(eq));
  }
}

/// Input/target pairs on one grid. Pairs [0, n_train) form the training split
/// and [n_train, size) the test split.
struct Dataset {
  EqTag eq = EqTag::Diffusion;
  double horizon = 0.0;
  FieldKind kind = FieldKind::Real;
  std::vector<Field> inputs;
  std::vector<Field> targets;
  std::size_t n_train = 0;

  std::size_t size() const { return inputs.size(); }
  std::size_t n_test() const { return size() - n_train; }
  const Grid& grid() const { return inputs.front().grid(); }

  std::vector<std::size_t> train_indices() const {
    std::vector<std::size_t> v(n_train);
    for (std::size_t i = 0; i < n_train; ++i) v[i] = i;
    return v;
  }
  std::vector<std::size_t> test_indices() const {
    std::vector<std::size_t> v(n_test());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = n_train + i;
    return v;
  }

  void validate() const {
    detail::require(!inputs.empty(), "dataset is empty");
    detail::require_dims(inputs.size() == targets.size(), "dataset inputs and targets differ in count");
    detail::require(n_train <= size(), "train split larger than dataset");
    for (std::size_t i = 0; i < size(); ++i)
      detail::require_dims(inputs[i].grid() == grid() && targets[i].grid() == grid(),
                           "dataset fields live on different grids");
  }
};

inline std::size_t split_count(std::size_t n, double split_frac) {
  if (!(split_frac > 0.0 && split_frac < 1.0)) throw ArgumentError("split fraction must lie in (0, 1)");
  return static_cast<std::size_t>(std::llround(split_frac * static_cast<double>(n)));
}

// --- initial conditions -------------------------------------------------------------

/// Angular wavenumber of integer frequency k on `axis` of a periodic grid.
inline double base_wavenumber(const Grid& g, std::size_t axis) { return 2.0 * std::numbers::pi / g.length(axis); }

/// u0 = Σ_{k=1..m} c_k sin(kx) + q_k cos(kx), c_k, q_k ~ N(0,1). `forced`
/// replaces the random draws with explicit (c, q) pairs.
inline Field sample_fourier_ic(std::size_t m, Rng& rng, const Grid& grid,
                               const std::vector<std::pair<double, double>>* forced = nullptr) {
  detail::require_dims(grid.rank() == 1, "1D Fourier initial condition needs a rank-1 grid");
  if (m < 1 || 2 * m >= grid.dims()[0]) throw ArgumentError("Fourier mode count must satisfy 1 <= m < n/2");
  if (forced) detail::require(forced->size() == m, "forced coefficient count must equal m");
  std::vector<double> c(m), q(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (forced) {
      c[k] = (*forced)[k].first;
      q[k] = (*forced)[k].second;
    } else {
      c[k] = rng.normal();
      q[k] = rng.normal();
    }
  }
  const double w = base_wavenumber(grid, 0);
  Field u(grid, FieldKind::Real);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.coordinate(0, i);
    double s = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
      const double a = w * static_cast<double>(k) * x;
      s += c[k - 1] * std::sin(a) + q[k - 1] * std::cos(a);
    }
    u[i] = s;
  }
  return u;
}

/// 2D Fourier series with every cos/sin product of frequencies kx, ky <
/// max_freq_exclusive and N(0,1) coefficients, clamped to [−1, 1].
inline Field sample_fourier_ic_2d(std::size_t max_freq_exclusive, Rng& rng, const Grid& grid, bool clamp = true) {
  detail::require_dims(grid.rank() == 2, "2D Fourier initial condition needs a rank-2 grid");
  const std::size_t K = max_freq_exclusive;
  if (K < 1 || 2 * (K - 1) >= std::min(grid.dims()[0], grid.dims()[1]))
    throw ArgumentError("frequency bound too large for grid");
  // coef[(kx*K + ky)*4 + {cc, cs, sc, ss}]
  std::vector<double> coef(K * K * 4);
  for (auto& v : coef) v = rng.normal();
  const std::size_t n0 = grid.dims()[0], n1 = grid.dims()[1];
  const double w0 = base_wavenumber(grid, 0), w1 = base_wavenumber(grid, 1);
  // Separable tables of cos/sin per axis.
  std::vector<double> c0(K * n0), s0(K * n0), c1(K * n1), s1(K * n1);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n0; ++i) {
      const double a = w0 * static_cast<double>(k) * grid.coordinate(0, i);
      c0[k * n0 + i] = std::cos(a);
      s0[k * n0 + i] = std::sin(a);
    }
    for (std::size_t j = 0; j < n1; ++j) {
      const double a = w1 * static_cast<double>(k) * grid.coordinate(1, j);
      c1[k * n1 + j] = std::cos(a);
      s1[k * n1 + j] = std::sin(a);
    }
  }
  Field u(grid, FieldKind::Real);
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n1; ++j) {
      double s = 0.0;
      for (std::size_t kx = 0; kx < K; ++kx)
        for (std::size_t ky = 0; ky < K; ++ky) {
          const double* a = &coef[(kx * K + ky) * 4];
          const double cx = c0[kx * n0 + i], sx = s0[kx * n0 + i], cy = c1[ky * n1 + j], sy = s1[ky * n1 + j];
          s += a[0] * cx * cy + a[1] * cx * sy + a[2] * sx * cy + a[3] * sx * sy;
        }
      u[i * n1 + j] = clamp ? std::clamp(s, -1.0, 1.0) : s;
    }
  return u;
}

// --- builders --------------------------------------------------------------------------

/// Runs f(i) for i in [0, n) on up to `threads` workers. Each index owns its
/// output slot, so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        (void)t;
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            f(i);
          } catch (...) {
            if (!failed.exchange(true)) err = std::current_exception();
          }
        }
      });
  }
  if (err) std::rethrow_exception(err);
}

struct LinearDataOptions {
  std::size_t modes = 10;
  pde::LinearParams params{};
  std::size_t threads = 1;
};

/// Pairs (u0, e^{T L} u0) from the exact spectral propagator. Pair i draws its
/// initial condition from Rng(seed).substream(i).
inline Dataset build_linear_dataset(pde::LinearEq eq, std::size_t n_pairs, double T, const Grid& grid,
                                    double split_frac, std::uint64_t seed, const LinearDataOptions& opt = {}) {
  detail::require(n_pairs >= 1, "dataset needs at least one pair");
  detail::require(T >= 0.0, "horizon must be non-negative");
  Dataset d;
  d.eq = eq_tag(eq);
  d.horizon = T;
  d.kind = pde::preserves_realness(eq) ? FieldKind::Real : FieldKind::Complex;
  d.n_train = split_count(n_pairs, split_frac);
  d.inputs.resize(n_pairs);
  d.targets.resize(n_pairs);
  const Rng root(seed);
  // Validate once before spawning work.
  {
    Rng probe = root.substream(0);
    (void)sample_fourier_ic(opt.modes, probe, grid);
  }
  parallel_for(n_pairs, opt.threads, [&](std::size_t i) {
    Rng r = root.substream(i);
    Field u0 = sample_fourier_ic(opt.modes, r, grid);
    Field uT = pde::propagate_linear(u0, eq, T, opt.params);
    if (d.kind == FieldKind::Complex) {
      u0 = u0.as_complex();
      uT = uT.as_complex();
    }
    d.inputs[i] = std::move(u0);
    d.targets[i] = std::move(uT);
  });
  return d;
}

struct AllenCahnDataOptions {
  std::size_t max_freq_exclusive = 8;
  double split_frac = 0.8;
  std::size_t threads = 0;
};

/// Pairs (u0, u(T)) with u(T) from Strang splitting at step tau_ref.
inline Dataset build_ac_dataset(std::size_t n_pairs, double T, double tau_ref, const pde::AllenCahnParams& params,
                                const Grid& grid, std::uint64_t seed, const AllenCahnDataOptions& opt = {}) {
  detail::require_dims(grid.rank() == 2, "Allen-Cahn dataset needs a 2D grid");
  detail::require(n_pairs >= 1, "dataset needs at least one pair");
  params.validate();
  (void)solvers::step_count(T, tau_ref);
  Dataset d;
  d.eq = EqTag::AllenCahn;
  d.horizon = T;
  d.kind = FieldKind::Real;
  d.n_train = split_count(n_pairs, opt.split_frac);
  d.inputs.resize(n_pairs);
  d.targets.resize(n_pairs);
  const Rng root(seed);
  parallel_for(n_pairs, opt.threads, [&](std::size_t i) {
    Rng r = root.substream(i);
    Field u0 = sample_fourier_ic_2d(opt.max_freq_exclusive, r, grid);
    d.targets[i] = solvers::strang_allen_cahn(u0, T, tau_ref, params).back();
    d.inputs[i] = std::move(u0);
  });
  return d;
}

// --- DOSD file format ---------------------------------------------------------------------
//
// "DOSD" | u32 version | u32 eq tag | u32 dtype (1 = f64, 2 = c128) | u64 pairs |
// u64 n_train | u32 rank | u64 dims[rank] | f64 domain[2·rank] | f64 horizon |
// inputs then targets, little-endian.

namespace io {

inline constexpr std::uint32_t kDatasetVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto b = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(b.begin(), b.end());
    os.write(b.data(), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <class T>
T get(std::istream& is, const char* what) {
  std::array<char, sizeof(T)> b{};
  is.read(b.data(), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw FormatError(std::string("truncated payload while reading ") + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  return std::bit_cast<T>(b);
}

inline void put_doubles(std::ostream& os, std::span<const double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (double x : v) put(os, x);
  }
}

inline void get_doubles(std::istream& is, std::span<double> v, const char* what) {
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (is.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)))
    throw FormatError(std::string("truncated payload while reading ") + what);
  if constexpr (std::endian::native == std::endian::big)
    for (auto& x : v) {
      auto b = std::bit_cast<std::array<char, 8>>(x);
      std::reverse(b.begin(), b.end());
      x = std::bit_cast<double>(b);
    }
}

inline void check_magic(std::istream& is, const char* magic, const std::string& path) {
  char m[4] = {};
  is.read(m, 4);
  if (is.gcount() != 4 || std::memcmp(m, magic, 4) != 0)
    throw FormatError(path + ": bad magic (expected \"" + std::string(magic, 4) + "\")");
}

}  // namespace io

inline std::size_t dataset_header_bytes(std::size_t rank) { return 4 + 4 + 4 + 4 + 8 + 8 + 4 + 8 * rank + 16 * rank + 8; }

inline void write_dataset(std::ostream& os, const Dataset& d) {
  d.validate();
  const Grid& g = d.grid();
  os.write("DOSD", 4);
  io::put<std::uint32_t>(os, io::kDatasetVersion);
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(d.eq));
  io::put<std::uint32_t>(os, d.kind == FieldKind::Real ? 1u : 2u);
  io::put<std::uint64_t>(os, d.size());
  io::put<std::uint64_t>(os, d.n_train);
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.rank()));
  for (auto n : g.dims()) io::put<std::uint64_t>(os, n);
  for (const auto& [lo, hi] : g.domain()) {
    io::put(os, lo);
    io::put(os, hi);
  }
  io::put(os, d.horizon);
  std::vector<double> buf;
  auto dump = [&](const Field& f) {
    if (d.kind == FieldKind::Real) {
      buf = f.real_values();
    } else {
      const auto* raw = reinterpret_cast<const double*>(f.values().data());
      buf.assign(raw, raw + 2 * f.size());
    }
    io::put_doubles(os, buf);
  };
  for (const auto& f : d.inputs) dump(f);
  for (const auto& f : d.targets) dump(f);
  if (!os) throw Error("write failed");
}

inline Dataset read_dataset(std::istream& is, const std::string& path = "<stream>") {
  io::check_magic(is, "DOSD", path);
  const auto version = io::get<std::uint32_t>(is, "version");
  if (version != io::kDatasetVersion)
    throw FormatError(path + ": unsupported dataset version " + std::to_string(version));
  Dataset d;
  const auto tag = io::get<std::uint32_t>(is, "eq tag");
  if (tag > static_cast<std::uint32_t>(EqTag::Waveform)) throw FormatError(path + ": unknown eq tag");
  d.eq = static_cast<EqTag>(tag);
  const auto dtype = io::get<std::uint32_t>(is, "dtype");
  if (dtype != 1 && dtype != 2) throw FormatError(path + ": unknown dtype code");
  d.kind = dtype == 1 ? FieldKind::Real : FieldKind::Complex;
  const auto pairs = io::get<std::uint64_t>(is, "pair count");
  d.n_train = io::get<std::uint64_t>(is, "train count");
  const auto rank = io::get<std::uint32_t>(is, "rank");
  if (rank < 1 || rank > 2) throw FormatError(path + ": unsupported rank");
  if (d.n_train > pairs) throw FormatError(path + ": train count exceeds pair count");
  std::vector<std::size_t> dims(rank);
  for (auto& n : dims) n = io::get<std::uint64_t>(is, "dims");
  std::vector<std::pair<double, double>> dom(rank);
  for (auto& [lo, hi] : dom) {
    lo = io::get<double>(is, "domain");
    hi = io::get<double>(is, "domain");
  }
  d.horizon = io::get<double>(is, "horizon");
  Grid g;
  try {
    g = Grid(dims, dom);
  } catch (const ArgumentError& e) {
    throw FormatError(path + ": " + e.what());
  }
  const std::size_t per = g.size() * (dtype == 1 ? 1 : 2);
  std::vector<double> buf(per);
  auto load = [&](std::vector<Field>& out) {
    out.reserve(pairs);
    for (std::uint64_t i = 0; i < pairs; ++i) {
      io::get_doubles(is, buf, "field payload");
      std::vector<cplx> v(g.size());
      if (dtype == 1)
        for (std::size_t p = 0; p < g.size(); ++p) v[p] = buf[p];
      else
        std::copy_n(buf.data(), per, reinterpret_cast<double*>(v.data()));
      out.emplace_back(g, std::move(v), d.kind);
    }
  };
  load(d.inputs);
  load(d.targets);
  if (pairs == 0) throw FormatError(path + ": dataset has no pairs");
  return d;
}

inline void save_dataset(const std::string& path, const Dataset& d) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_dataset(os, d);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_dataset(is, path);
}

}  // namespace dosnet
