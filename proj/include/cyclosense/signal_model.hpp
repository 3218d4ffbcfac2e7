#pragma once

// Received-signal generation: pulse-shaped linear modulation plus circularly
// symmetric white Gaussian noise, with optional per-trial noise-power error.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyclosense/common.hpp"
#include "cyclosense/rng.hpp"

namespace cyclosense {

enum class Scheme { BPSK, QPSK };

inline std::string_view to_string(Scheme s) { return s == Scheme::BPSK ? "bpsk" : "qpsk"; }

inline Scheme parse_scheme(std::string_view name) {
  if (name == "bpsk" || name == "BPSK") return Scheme::BPSK;
  if (name == "qpsk" || name == "QPSK") return Scheme::QPSK;
  throw ParameterError("unknown modulation scheme '" + std::string(name) + "'");
}

/// Unit mean power constellation.
inline std::vector<Sample> alphabet(Scheme s) {
  if (s == Scheme::BPSK) return {{1.0, 0.0}, {-1.0, 0.0}};
  const double a = std::numbers::sqrt2 / 2.0;
  return {{a, a}, {-a, a}, {-a, -a}, {a, -a}};
}

struct ModulationConfig {
  Scheme scheme = Scheme::BPSK;
  int samples_per_symbol = 2;
  double bt_product = 0.5;
  int pulse_span_symbols = 4;
  std::size_t n_symbols = 1000;

  void validate() const {
    if (samples_per_symbol < 1) throw ParameterError("samples_per_symbol must be >= 1");
    if (!(bt_product > 0.0) || !std::isfinite(bt_product)) throw ParameterError("bt_product must be > 0");
    if (pulse_span_symbols < 1) throw ParameterError("pulse_span_symbols must be >= 1");
    if (n_symbols < 1) throw ParameterError("n_symbols must be >= 1");
  }

  /// Samples per sensing block, K.
  std::size_t block_length() const { return n_symbols * static_cast<std::size_t>(samples_per_symbol); }

  /// Symbols generated on each side of the block so every kept sample has full pulse support.
  std::size_t guard_symbols() const { return static_cast<std::size_t>((pulse_span_symbols + 1) / 2); }
};

/// Draws i.i.d. symbols uniformly from a finite alphabet.
class SymbolSource {
 public:
  SymbolSource(std::vector<Sample> alphabet, std::uint64_t seed) : alphabet_(std::move(alphabet)), rng_(seed) {
    if (alphabet_.empty()) throw ParameterError("empty symbol alphabet");
  }
  SymbolSource(Scheme scheme, std::uint64_t seed) : SymbolSource(alphabet(scheme), seed) {}

  std::vector<Sample> draw(std::size_t count) {
    std::vector<Sample> out(count);
    if (alphabet_.size() == 2) {
      // One engine word covers 64 binary symbols.
      std::uint64_t word = 0;
      for (std::size_t i = 0; i < count; ++i) {
        if (i % 64 == 0) word = rng_();
        out[i] = alphabet_[(word >> (i % 64)) & 1U];
      }
      return out;
    }
    std::uniform_int_distribution<std::size_t> pick(0, alphabet_.size() - 1);
    for (auto& s : out) s = alphabet_[pick(rng_)];
    return out;
  }

  const std::vector<Sample>& symbols() const { return alphabet_; }

 private:
  std::vector<Sample> alphabet_;
  Engine rng_;
};

/// Nominal noise power and the half-width U of a uniform-in-dB error on it.
struct NoiseModel {
  double nominal_variance = 1.0;
  double uncertainty_db = 0.0;

  void validate() const {
    if (!(nominal_variance > 0.0) || !std::isfinite(nominal_variance))
      throw ParameterError("noise variance must be > 0");
    if (!(uncertainty_db >= 0.0) || !std::isfinite(uncertainty_db))
      throw ParameterError("noise uncertainty must be >= 0 dB");
  }

  /// sigma_w^2 * 10^(u/10), u ~ U[-U, +U]. U = 0 returns the nominal value exactly.
  template <class Rng>
  double draw_variance(Rng& rng) const {
    if (uncertainty_db == 0.0) return nominal_variance;
    std::uniform_real_distribution<double> u(-uncertainty_db, uncertainty_db);
    return nominal_variance * std::pow(10.0, u(rng) / 10.0);
  }
};

struct Waveform {
  std::vector<Sample> samples;
  int samples_per_symbol = 2;

  std::size_t size() const { return samples.size(); }
  std::span<const Sample> view() const { return samples; }
};

/// Samples of g(t) = exp(-2 pi^2 B^2 t^2 / ln 2), B = BT / T, at t = n T_s for
/// |t| <= span T / 2. Unnormalized; the center tap is 1.
inline std::vector<double> gaussian_pulse_taps(const ModulationConfig& cfg) {
  cfg.validate();
  const int half = cfg.pulse_span_symbols * cfg.samples_per_symbol / 2;
  // t in symbol periods is n / sps, so B t = BT * n / sps.
  const double scale = 2.0 * std::numbers::pi * std::numbers::pi / std::numbers::ln2;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  for (int n = -half; n <= half; ++n) {
    const double bt = cfg.bt_product * n / cfg.samples_per_symbol;
    taps[static_cast<std::size_t>(n + half)] = std::exp(-scale * bt * bt);
  }
  return taps;
}

/// x(n) = sum_k s_k g(n T_s - k T) over the central n_symbols of a guarded block.
///
/// `symbols` holds n_symbols + 2 * guard_symbols() entries; the guard symbols on
/// each side only feed pulse tails into the kept window. Sample 0 of the result
/// sits on the peak of the first kept symbol. The output is scaled by a single
/// constant so its mean power is exactly 1 (an all-zero input stays zero).
inline Waveform modulate(std::span<const Sample> symbols, const ModulationConfig& cfg) {
  cfg.validate();
  if (symbols.empty()) throw ParameterError("modulate: empty symbol sequence");
  const std::size_t guard = cfg.guard_symbols();
  if (symbols.size() != cfg.n_symbols + 2 * guard)
    throw ParameterError("modulate: expected " + std::to_string(cfg.n_symbols + 2 * guard) +
                         " symbols (n_symbols plus guard), got " + std::to_string(symbols.size()));

  const auto taps = gaussian_pulse_taps(cfg);
  const auto sps = static_cast<std::ptrdiff_t>(cfg.samples_per_symbol);
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto n_ext = static_cast<std::ptrdiff_t>(symbols.size());
  const auto offset = static_cast<std::ptrdiff_t>(guard) * sps;

  Waveform w;
  w.samples_per_symbol = cfg.samples_per_symbol;
  w.samples.assign(cfg.block_length(), Sample{});
  double power = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const std::ptrdiff_t n = offset + static_cast<std::ptrdiff_t>(i);
    // Symbols k with |n - k sps| <= half; n >= half holds because guard * sps >= half.
    const std::ptrdiff_t k_lo = (n - half + sps - 1) / sps;
    const std::ptrdiff_t k_hi = std::min((n + half) / sps, n_ext - 1);
    Sample acc{};
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k)
      acc += symbols[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(n - k * sps + half)];
    w.samples[i] = acc;
    power += std::norm(acc);
  }
  power /= static_cast<double>(w.samples.size());
  if (power > 0.0) {
    const double g = 1.0 / std::sqrt(power);
    for (auto& x : w.samples) x *= g;
  }
  return w;
}

/// Seed streams derived from one trial seed.
namespace seed_stream {
inline constexpr std::uint64_t kNoise = 0;
inline constexpr std::uint64_t kSymbols = 1;
}  // namespace seed_stream

/// Adds circularly symmetric Gaussian noise of total variance `variance` in place.
template <class Rng>
void add_complex_noise(std::span<Sample> y, double variance, Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  for (auto& v : y) {
    const double re = n(rng);
    const double im = n(rng);
    v += Sample{re, im};
  }
}

/// Per-trial noise variance that realize_trial uses for `seed`.
inline double trial_noise_variance(const NoiseModel& noise, std::uint64_t seed) {
  Engine rng(derive_seed({seed, seed_stream::kNoise}));
  return noise.draw_variance(rng);
}

/// K samples of complex white Gaussian noise with the given variance, drawn
/// exactly as realize_trial draws its H0 noise at zero uncertainty.
inline Waveform noise_waveform(std::size_t k, double variance, int samples_per_symbol, std::uint64_t seed) {
  Waveform w;
  w.samples_per_symbol = samples_per_symbol;
  w.samples.assign(k, Sample{});
  Engine rng(derive_seed({seed, seed_stream::kNoise}));
  add_complex_noise(std::span<Sample>(w.samples), variance, rng);
  return w;
}

/// One realization of y(n) under H0 (noise only) or H1 (signal plus noise).
///
/// The signal is scaled so mean|x|^2 / nominal variance equals 10^(snr_db/10);
/// the noise variance is drawn per trial from `noise`. Deterministic in `seed`.
inline Waveform realize_trial(const ModulationConfig& cfg, const NoiseModel& noise, double snr_db, Hypothesis h,
                              std::uint64_t seed) {
  cfg.validate();
  noise.validate();
  Waveform y;
  if (h == Hypothesis::H1) {
    if (!std::isfinite(snr_db)) throw ParameterError("realize_trial: non-finite SNR");
    SymbolSource src(cfg.scheme, derive_seed({seed, seed_stream::kSymbols}));
    const auto symbols = src.draw(cfg.n_symbols + 2 * cfg.guard_symbols());
    y = modulate(symbols, cfg);
    const double amp = std::sqrt(noise.nominal_variance * std::pow(10.0, snr_db / 10.0));
    for (auto& x : y.samples) x *= amp;
  } else {
    y.samples_per_symbol = cfg.samples_per_symbol;
    y.samples.assign(cfg.block_length(), Sample{});
  }
  Engine rng(derive_seed({seed, seed_stream::kNoise}));
  const double variance = noise.draw_variance(rng);
  add_complex_noise(std::span<Sample>(y.samples), variance, rng);
  return y;
}

/// Keeps every `factor`-th sample from offset 0; input must be at 2 * factor samples/symbol.
inline Waveform decimate_to_two_sps(const Waveform& w, int factor) {
  if (factor < 1) throw ParameterError("decimation factor must be >= 1");
  if (w.samples_per_symbol != 2 * factor)
    throw ParameterError("decimation factor " + std::to_string(factor) + " does not take " +
                         std::to_string(w.samples_per_symbol) + " samples/symbol to 2");
  Waveform out;
  out.samples_per_symbol = 2;
  out.samples.reserve(w.samples.size() / static_cast<std::size_t>(factor) + 1);
  for (std::size_t i = 0; i < w.samples.size(); i += static_cast<std::size_t>(factor)) out.samples.push_back(w.samples[i]);
  return out;
}

}  // namespace cyclosense
