#pragma once

// Single-channel coherent link: 16-QAM transmitter with RRC shaping, spans of
// fiber with lumped amplifiers, matched-filter receiver, segmentation for the
// NLSE DOSnet and bit-error counting.
//
// Time is measured in ps on the simulation grid; signals carry √W amplitudes.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dosnet/classic_solvers.hpp"
#include "dosnet/error.hpp"
#include "dosnet/pde_core.hpp"
#include "dosnet/rng.hpp"
#include "dosnet/tensor_field.hpp"

namespace dosnet::link {

inline constexpr double kPlanck = 6.62607015e-34;

struct LinkConfig {
  double alpha = 0.063;     // 1/km, power attenuation
  double beta2 = -21.68;    // ps²/km
  double gamma = 1.66;      // 1/(W·km)
  double span_km = 80.0;
  std::size_t n_spans = 20;
  double noise_figure_dB = 4.5;
  bool noiseless = false;
  double carrier_hz = 193.1e12;
  double baud = 100e9;
  std::size_t sps_tx = 4;
  std::size_t sps_rx = 2;
  double rolloff = 0.1;
  double launch_dBm = 0.0;
  std::size_t rrc_taps = 1025;
  double noise_bandwidth_hz = 50e9;

  void validate() const {
    detail::require(span_km > 0.0, "span length must be positive");
    detail::require(sps_rx >= 1 && sps_tx % sps_rx == 0, "sps_tx must be a multiple of sps_rx");
    detail::require(rolloff > 0.0 && rolloff <= 1.0, "roll-off must lie in (0, 1]");
    detail::require(rrc_taps % 2 == 1, "RRC tap count must be odd");
    detail::require(baud > 0.0 && carrier_hz > 0.0 && noise_bandwidth_hz >= 0.0, "bad link rates");
    detail::require(alpha >= 0.0, "alpha must be non-negative");
  }

  pde::NlseParams fiber() const { return {alpha, beta2, gamma, pde::Direction::Forward}; }
  double symbol_period_ps() const { return 1e12 / baud; }
  double sample_period_ps() const { return symbol_period_ps() / static_cast<double>(sps_tx); }
  double launch_watts() const { return 1e-3 * std::pow(10.0, launch_dBm / 10.0); }
  double gain() const { return std::exp(alpha * span_km); }
  double noise_figure_linear() const { return noiseless ? 0.0 : std::pow(10.0, noise_figure_dB / 10.0); }
  /// σ² = F h ν0 (G − 1) Δν in W.
  double ase_variance() const {
    return noise_figure_linear() * kPlanck * carrier_hz * (gain() - 1.0) * noise_bandwidth_hz;
  }
  /// (1 − e^{−α L}) / α; equals L for a lossless fiber.
  double effective_length_km() const { return alpha > 0.0 ? (1.0 - std::exp(-alpha * span_km)) / alpha : span_km; }
};

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

// --- 16-QAM with Gray labels ---------------------------------------------------------

/// Per-axis Gray table: 00 → −3, 01 → −1, 11 → +1, 10 → +3.
inline double gray_level(int b0, int b1) {
  static constexpr std::array<double, 4> lv{-3.0, -1.0, 3.0, 1.0};  // indexed by b0·2 + b1
  return lv[static_cast<std::size_t>(b0 * 2 + b1)];
}

inline std::pair<int, int> gray_bits(double level) {
  if (level < -2.0) return {0, 0};
  if (level < 0.0) return {0, 1};
  if (level < 2.0) return {1, 1};
  return {1, 0};
}

/// Four bits per symbol, I-axis bits first.
inline std::vector<cplx> gray_map(std::span<const std::uint8_t> bits) {
  detail::require(bits.size() % 4 == 0, "bit count must be a multiple of 4");
  std::vector<cplx> out(bits.size() / 4);
  for (std::size_t s = 0; s < out.size(); ++s) {
    const auto* b = &bits[4 * s];
    out[s] = {gray_level(b[0] & 1, b[1] & 1), gray_level(b[2] & 1, b[3] & 1)};
  }
  return out;
}

/// Nearest constellation point per symbol, then its Gray label.
inline std::vector<std::uint8_t> gray_demap(std::span<const cplx> symbols) {
  std::vector<std::uint8_t> bits;
  bits.reserve(4 * symbols.size());
  for (auto z : symbols) {
    const auto [i0, i1] = gray_bits(z.real());
    const auto [q0, q1] = gray_bits(z.imag());
    bits.insert(bits.end(), {static_cast<std::uint8_t>(i0), static_cast<std::uint8_t>(i1),
                             static_cast<std::uint8_t>(q0), static_cast<std::uint8_t>(q1)});
  }
  return bits;
}

inline std::array<cplx, 16> constellation() {
  std::array<cplx, 16> pts{};
  for (int c = 0; c < 16; ++c) pts[c] = {gray_level((c >> 3) & 1, (c >> 2) & 1), gray_level((c >> 1) & 1, c & 1)};
  return pts;
}

inline cplx nearest_point(cplx z) {
  auto lvl = [](double v) { return v < -2.0 ? -3.0 : v < 0.0 ? -1.0 : v < 2.0 ? 1.0 : 3.0; };
  return {lvl(z.real()), lvl(z.imag())};
}

struct SymbolStream {
  std::vector<std::uint8_t> bits;
  std::vector<cplx> symbols;
};

inline SymbolStream random_symbols(std::size_t n_symbols, Rng& rng) {
  SymbolStream s;
  s.bits.resize(4 * n_symbols);
  for (auto& b : s.bits) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
  s.symbols = gray_map(s.bits);
  return s;
}

// --- pulse shaping ---------------------------------------------------------------------------

/// Root-raised-cosine h(t) sampled at t_i = (i − (n−1)/2)·T_s/sps.
inline std::vector<double> rrc_filter_taps(double rho, double Ts, std::size_t n_taps, std::size_t sps) {
  detail::require(n_taps % 2 == 1, "RRC tap count must be odd");
  detail::require(rho > 0.0 && rho <= 1.0, "roll-off must lie in (0, 1]");
  detail::require(Ts > 0.0 && sps >= 1, "bad RRC timing");
  const double pi = std::numbers::pi;
  const long half = static_cast<long>(n_taps / 2);
  std::vector<double> h(n_taps);
  for (std::size_t i = 0; i < n_taps; ++i) {
    const long m = static_cast<long>(i) - half;
    const double x = static_cast<double>(m) / static_cast<double>(sps);  // t / T_s
    double v;
    if (m == 0) {
      v = 1.0 + rho * (4.0 / pi - 1.0);
    } else if (std::abs(std::abs(x) - 1.0 / (4.0 * rho)) < 1e-12) {
      v = rho / std::sqrt(2.0) *
          ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * rho)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * rho)));
    } else {
      v = (std::sin(pi * x * (1.0 - rho)) + 4.0 * rho * x * std::cos(pi * x * (1.0 + rho))) /
          (pi * x * (1.0 - (4.0 * rho * x) * (4.0 * rho * x)));
    }
    h[i] = v / Ts;
  }
  return h;
}

/// Full linear convolution of two tap vectors.
inline std::vector<double> convolve_taps(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

/// y[p] = Σ_j taps[j]·x[p − (j − c)], c = center tap, indices mod n. Done
/// through the FFT.
inline std::vector<cplx> circular_filter(std::span<const cplx> x, std::span<const double> taps) {
  const std::size_t n = x.size();
  detail::require_dims(taps.size() <= n, "filter longer than signal");
  const long c = static_cast<long>(taps.size() / 2);
  std::vector<cplx> kernel(n), xs(x.begin(), x.end());
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const long idx = ((static_cast<long>(j) - c) % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n);
    kernel[static_cast<std::size_t>(idx)] += taps[j];
  }
  const std::array<std::size_t, 1> dims{n};
  fft::transform(kernel, dims, fft::Direction::Forward);
  fft::transform(xs, dims, fft::Direction::Forward);
  for (std::size_t k = 0; k < n; ++k) xs[k] *= kernel[k] / static_cast<double>(n);
  fft::transform(xs, dims, fft::Direction::Backward);
  return xs;
}

inline Grid signal_grid(std::size_t n_samples, double dt_ps) {
  return Grid({n_samples}, {{0.0, dt_ps * static_cast<double>(n_samples)}});
}

/// u0(t) = √P_L Σ a_n h(t − n T_s) on a circular grid at sps_tx samples per
/// symbol, symbols scaled by 1/√10 to unit average power. Time inside h is in
/// symbol periods, so the pulse has unit energy per symbol.
inline Field modulate(const SymbolStream& stream, const LinkConfig& cfg) {
  cfg.validate();
  detail::require(!stream.symbols.empty(), "empty symbol stream");
  const std::size_t n = stream.symbols.size() * cfg.sps_tx;
  const auto taps = rrc_filter_taps(cfg.rolloff, 1.0, std::min(cfg.rrc_taps, n - (n % 2 == 0 ? 1 : 0)), cfg.sps_tx);
  std::vector<cplx> up(n);
  const double scale = std::sqrt(cfg.launch_watts() / 10.0);
  for (std::size_t s = 0; s < stream.symbols.size(); ++s) up[s * cfg.sps_tx] = scale * stream.symbols[s];
  return Field(signal_grid(n, cfg.sample_period_ps()), circular_filter(up, taps), FieldKind::Complex);
}

// --- channel -----------------------------------------------------------------------------------

/// Amplifier: amplitude gain √G, then complex AWGN of total variance σ².
inline Field oa_stage(const Field& signal, const LinkConfig& cfg, Rng& rng) {
  const double G = cfg.gain();
  detail::require(G >= 1.0, "amplifier gain must be at least 1");
  const double g = std::sqrt(G);
  const double sd = std::sqrt(cfg.ase_variance() / 2.0);
  Field out = signal.as_complex();
  for (auto& v : out.values()) {
    v *= g;
    if (sd > 0.0) v += cplx{rng.normal(0.0, sd), rng.normal(0.0, sd)};
  }
  return out;
}

/// n_spans × (SSFM over one span, then amplifier).
inline Field propagate_link(const Field& signal, const LinkConfig& cfg, std::size_t steps_per_span, Rng& rng,
                            bool symmetric = true) {
  cfg.validate();
  Field u = signal.as_complex();
  for (std::size_t s = 0; s < cfg.n_spans; ++s) {
    u = solvers::ssfm_propagate(u, cfg.fiber(), cfg.span_km, steps_per_span, symmetric);
    u = oa_stage(u, cfg, rng);
  }
  return u;
}

/// Digital back-propagation: per span, remove the amplifier gain and run SSFM
/// with reversed fiber parameters.
inline Field backpropagate(const Field& received, const LinkConfig& cfg, std::size_t steps_per_span,
                           bool symmetric = true) {
  cfg.validate();
  Field u = received.as_complex();
  const double g = 1.0 / std::sqrt(cfg.gain());
  for (std::size_t s = 0; s < cfg.n_spans; ++s) {
    for (auto& v : u.values()) v *= g;
    u = solvers::ssfm_propagate(u, cfg.fiber().reversed(), cfg.span_km, steps_per_span, symmetric);
  }
  return u;
}

// --- receiver ------------------------------------------------------------------------------------

/// Matched RRC filter (scaled so the tx·rx cascade is 1 at the symbol
/// instant), then decimation to sps_rx. Filters are centered, so symbol n sits
/// at sample n·sps_rx of the output.
inline std::vector<cplx> receiver_frontend(const Field& signal, const LinkConfig& cfg) {
  cfg.validate();
  const std::size_t n = signal.size();
  const std::size_t dec = cfg.sps_tx / cfg.sps_rx;
  detail::require_dims(n % dec == 0, "signal length must be divisible by sps_tx / sps_rx");
  auto taps = rrc_filter_taps(cfg.rolloff, 1.0, std::min(cfg.rrc_taps, n - (n % 2 == 0 ? 1 : 0)), cfg.sps_tx);
  for (auto& t : taps) t /= static_cast<double>(cfg.sps_tx);
  const auto y = circular_filter(signal.values(), taps);
  std::vector<cplx> out(n / dec);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i * dec];
  return out;
}

/// Symbol-center samples from an sps_rx stream, rescaled to constellation
/// units ({±1, ±3}²).
inline std::vector<cplx> symbol_samples(std::span<const cplx> rx, const LinkConfig& cfg) {
  detail::require_dims(rx.size() % cfg.sps_rx == 0, "stream length must be a whole number of symbols");
  const double scale = std::sqrt(10.0 / cfg.launch_watts());
  std::vector<cplx> out(rx.size() / cfg.sps_rx);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rx[i * cfg.sps_rx] * scale;
  return out;
}

struct BerResult {
  std::size_t errors = 0;
  std::size_t bits = 0;
  double ber = 0.0;
};

inline BerResult decide_and_ber(std::span<const cplx> rx_symbols, std::span<const std::uint8_t> tx_bits) {
  detail::require_dims(4 * rx_symbols.size() == tx_bits.size(), "symbol and bit counts do not match");
  const auto bits = gray_demap(rx_symbols);
  BerResult r;
  r.bits = bits.size();
  for (std::size_t i = 0; i < bits.size(); ++i) r.errors += (bits[i] != (tx_bits[i] & 1)) ? 1 : 0;
  r.ber = r.bits ? static_cast<double>(r.errors) / static_cast<double>(r.bits) : 0.0;
  return r;
}

// --- segmentation ----------------------------------------------------------------------------------

struct SegmentLayout {
  std::size_t length = 6016;
  std::size_t pad = 3000;
  std::size_t valid = 16;
};

/// Circular windows: segment s covers source samples offset_s − pad + [0,
/// length), so its valid window [pad, pad + valid) is source offset_s + [0,
/// valid).
inline std::vector<cplx> extract_segment(std::span<const cplx> x, std::size_t offset, const SegmentLayout& lay) {
  const std::size_t n = x.size();
  std::vector<cplx> seg(lay.length);
  const std::size_t start = (offset + n - lay.pad % n) % n;
  for (std::size_t j = 0; j < lay.length; ++j) seg[j] = x[(start + j) % n];
  return seg;
}

/// Segments are cut on demand; at 24000 segments × 6016 samples the full set
/// would not fit comfortably in memory.
struct SegmentSet {
  SegmentLayout layout;
  std::size_t stride = 8;
  std::vector<cplx> source;
  std::vector<std::size_t> offsets;

  std::size_t size() const { return offsets.size(); }
  std::vector<cplx> operator[](std::size_t i) const { return extract_segment(source, offsets.at(i), layout); }
  std::vector<cplx> valid_window(std::size_t i) const {
    const auto o = offsets.at(i);
    std::vector<cplx> w(layout.valid);
    for (std::size_t j = 0; j < layout.valid; ++j) w[j] = source[(o + j) % source.size()];
    return w;
  }
};

inline SegmentSet segment(std::span<const cplx> x, std::size_t stride, const SegmentLayout& lay = {}) {
  detail::require(lay.pad * 2 + lay.valid == lay.length, "segment layout must be pad + valid + pad");
  detail::require_dims(x.size() >= lay.length, "signal shorter than one segment");
  detail::require(stride >= 1 && x.size() % stride == 0, "stride must divide the signal length");
  SegmentSet s;
  s.layout = lay;
  s.stride = stride;
  s.source.assign(x.begin(), x.end());
  for (std::size_t o = 0; o < x.size(); o += stride) s.offsets.push_back(o);
  return s;
}

/// Concatenates valid-window predictions, one per stride-`valid` offset.
inline std::vector<cplx> stitch(std::span<const std::vector<cplx>> windows) {
  std::vector<cplx> out;
  for (const auto& w : windows) out.insert(out.end(), w.begin(), w.end());
  return out;
}

inline std::vector<std::vector<cplx>> valid_windows(const SegmentSet& s) {
  std::vector<std::vector<cplx>> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back(s.valid_window(i));
  return out;
}

// --- end-to-end helpers ------------------------------------------------------------------------------

/// One simulated transmission: clean and received streams at sps_rx.
struct LinkRun {
  SymbolStream tx;
  Field launched;
  Field received;
  std::vector<cplx> clean_rx;  // matched-filtered launch waveform
  std::vector<cplx> noisy_rx;  // matched-filtered received waveform
};

inline LinkRun simulate_link(std::size_t n_symbols, const LinkConfig& cfg, std::size_t steps_per_span,
                             std::uint64_t seed) {
  Rng root(seed);
  Rng sym = root.substream(0), noise = root.substream(1);
  LinkRun r;
  r.tx = random_symbols(n_symbols, sym);
  r.launched = modulate(r.tx, cfg);
  r.received = propagate_link(r.launched, cfg, steps_per_span, noise);
  r.clean_rx = receiver_frontend(r.launched, cfg);
  r.noisy_rx = receiver_frontend(r.received, cfg);
  return r;
}

}  // namespace dosnet::link
