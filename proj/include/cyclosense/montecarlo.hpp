#pragma once

// Neyman-Pearson experiment harness: thresholds are calibrated once at nominal
// noise, then P_f and P_d are estimated across noise-uncertainty levels and SNRs.
//
// Every trial draws its waveform from a seed derived from
// (master seed, stream, U, SNR, trial index), so results do not depend on the
// order in which trials run or on the worker count. All detectors in a row are
// evaluated on the same waveforms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclosense/common.hpp"
#include "cyclosense/cyclic_stats.hpp"
#include "cyclosense/detectors.hpp"
#include "cyclosense/parallel.hpp"
#include "cyclosense/rng.hpp"
#include "cyclosense/signal_model.hpp"

namespace cyclosense {

inline std::vector<double> default_snr_grid() {
  std::vector<double> g;
  for (int s = -20; s <= 0; ++s) g.push_back(s);
  return g;
}

struct ExperimentConfig {
  ModulationConfig modulation;
  double noise_variance = 1.0;
  std::vector<double> uncertainties_db{0.0, 1.0, 2.0};
  std::vector<DetectorKind> detectors{kAllDetectors.begin(), kAllDetectors.end()};
  double target_pf = 0.1;
  std::vector<double> snr_grid_db = default_snr_grid();
  std::size_t pd_trials = 10'000;
  std::size_t pf_trials = 100'000;
  std::size_t calibration_trials = 100'000;
  std::uint64_t master_seed = 1;
  CovarianceSpec covariance;

  NoiseModel noise(double uncertainty_db) const { return {noise_variance, uncertainty_db}; }

  std::size_t block_length() const { return modulation.block_length(); }

  void validate() const {
    modulation.validate();
    covariance.validate();
    noise(0.0).validate();
    if (uncertainties_db.empty()) throw ParameterError("at least one noise uncertainty level is required");
    for (double u : uncertainties_db) noise(u).validate();
    if (detectors.empty()) throw ParameterError("at least one detector is required");
    detail::check_pf(target_pf);
    if (snr_grid_db.empty()) throw ParameterError("SNR grid must not be empty");
    if (!std::is_sorted(snr_grid_db.begin(), snr_grid_db.end())) throw ParameterError("SNR grid must be sorted");
    for (double s : snr_grid_db)
      if (!std::isfinite(s)) throw ParameterError("SNR grid values must be finite");
    if (pd_trials < 100 || pf_trials < 100) throw ParameterError("trial counts must be >= 100");
    const bool needs_calibration = std::any_of(detectors.begin(), detectors.end(), uses_covariance);
    if (needs_calibration && calibration_trials < min_calibration_trials(target_pf))
      throw ParameterError("calibration_trials too small for the target P_f");
    if (std::find(detectors.begin(), detectors.end(), DetectorKind::CD) != detectors.end() && block_length() % 2 != 0)
      throw ParameterError("the CD detector needs an even block length K");
    if (needs_calibration && block_length() < 2 * covariance.smoothing_factor)
      throw ParameterError("block length K must be >= 2L for MME/EME");
  }
};

struct ResultRow {
  DetectorKind detector = DetectorKind::CD;
  double uncertainty_db = 0.0;
  std::optional<double> snr_db;  // empty for P_f rows
  std::optional<double> pf;
  std::optional<double> pd;
  std::optional<double> pm;
  std::size_t trials = 0;
  double wilson_halfwidth = 0.0;  // of the row's estimated quantity (P_f or P_d)
  std::size_t degenerate_trials = 0;

  bool is_pf_row() const { return !snr_db.has_value(); }
};

/// Half-width of the 95% Wilson score interval for `successes` out of `n`.
inline double wilson_halfwidth(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  return z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
}

/// Calibrated threshold per detector kind.
class ThresholdSet {
 public:
  void set(const Threshold& t) { items_[index_of(t.kind)] = t; }
  bool has(DetectorKind k) const { return items_[index_of(k)].has_value(); }
  const Threshold& at(DetectorKind k) const {
    if (!has(k)) throw ParameterError("no threshold calibrated for " + std::string(to_string(k)));
    return *items_[index_of(k)];
  }

 private:
  std::array<std::optional<Threshold>, 4> items_{};
};

namespace stream {
inline constexpr std::uint64_t kCalibration = 0xCA1;
inline constexpr std::uint64_t kNull = 0x40;
inline constexpr std::uint64_t kSignal = 0x41;
}  // namespace stream

inline std::uint64_t calibration_seed(const ExperimentConfig& cfg) {
  return derive_seed({cfg.master_seed, stream::kCalibration});
}

/// Seed for trial `index` of the (hypothesis, U, SNR) condition. SNR is ignored under H0.
inline std::uint64_t trial_seed(const ExperimentConfig& cfg, Hypothesis h, double uncertainty_db, double snr_db,
                                std::size_t index) {
  if (h == Hypothesis::H0)
    return derive_seed({cfg.master_seed, stream::kNull, bits_of(uncertainty_db), static_cast<std::uint64_t>(index)});
  return derive_seed(
      {cfg.master_seed, stream::kSignal, bits_of(uncertainty_db), bits_of(snr_db), static_cast<std::uint64_t>(index)});
}

/// Analytic CD/ED thresholds and empirical MME/EME thresholds at nominal noise.
/// MME and EME share one calibration run.
inline ThresholdSet calibrate(const ExperimentConfig& cfg, unsigned workers = 0) {
  cfg.validate();
  ThresholdSet out;
  const std::size_t k = cfg.block_length();
  std::vector<DetectorKind> empirical;
  for (auto d : cfg.detectors) {
    if (d == DetectorKind::CD) out.set(cd_threshold(cfg.target_pf, cfg.noise_variance, k));
    else if (d == DetectorKind::ED) out.set(ed_threshold(cfg.target_pf, cfg.noise_variance, k));
    else if (std::find(empirical.begin(), empirical.end(), d) == empirical.end()) empirical.push_back(d);
  }
  if (empirical.empty()) return out;

  const std::uint64_t seed = calibration_seed(cfg);
  const NoiseModel nominal = cfg.noise(0.0);
  std::vector<std::array<double, 4>> values(cfg.calibration_trials);
  parallel_for(cfg.calibration_trials, workers, [&](std::size_t i) {
    const Waveform w =
        realize_trial(cfg.modulation, nominal, 0.0, Hypothesis::H0, derive_seed({seed, static_cast<std::uint64_t>(i)}));
    const auto s = compute_statistics(w.view(), empirical, cfg.covariance);
    for (auto d : empirical) values[i][index_of(d)] = s[d].value_or(0.0);
  });
  std::vector<double> column(values.size());
  for (auto d : empirical) {
    std::transform(values.begin(), values.end(), column.begin(), [&](const auto& v) { return v[index_of(d)]; });
    out.set(threshold_from_null(d, cfg.target_pf, column, seed));
  }
  return out;
}

struct TrialResult {
  Decision decision;
  bool degenerate = false;
};

/// One trial of one detector. A degenerate covariance decides H0.
inline TrialResult run_trial(const ExperimentConfig& cfg, DetectorKind detector, const Threshold& threshold,
                             Hypothesis h, double uncertainty_db, double snr_db, std::size_t trial_index) {
  const Waveform w =
      realize_trial(cfg.modulation, cfg.noise(uncertainty_db), snr_db, h, trial_seed(cfg, h, uncertainty_db, snr_db, trial_index));
  try {
    return {decide(compute_statistic(detector, w.view(), cfg.covariance), threshold), false};
  } catch (const DegenerateCovarianceError&) {
    return {Decision{Hypothesis::H0, {detector, 0.0}, threshold}, true};
  }
}

struct DecisionCounts {
  std::array<std::size_t, 4> signal_decisions{};  // H1 count per detector
  std::array<std::size_t, 4> degenerate{};
  std::size_t trials = 0;
};

/// Runs `trials` trials of one condition and counts H1 decisions for each detector.
inline DecisionCounts count_decisions(const ExperimentConfig& cfg, const ThresholdSet& thresholds,
                                      std::span<const DetectorKind> detectors, Hypothesis h, double uncertainty_db,
                                      double snr_db, std::size_t trials, unsigned workers = 0) {
  const NoiseModel noise = cfg.noise(uncertainty_db);
  std::array<double, 4> lambda{};
  for (auto d : detectors) lambda[index_of(d)] = thresholds.at(d).lambda;

  // Bit 2d: detector d decided H1; bit 2d+1: detector d hit a degenerate covariance.
  std::vector<std::uint8_t> flags(trials, 0);
  parallel_for(trials, workers, [&](std::size_t i) {
    const Waveform w = realize_trial(cfg.modulation, noise, snr_db, h, trial_seed(cfg, h, uncertainty_db, snr_db, i));
    const auto s = compute_statistics(w.view(), detectors, cfg.covariance);
    std::uint8_t f = 0;
    for (auto d : detectors) {
      const auto bit = 2 * index_of(d);
      const auto& v = s[d];
      if (v) {
        if (*v >= lambda[index_of(d)]) f |= static_cast<std::uint8_t>(1U << bit);
      } else {
        f |= static_cast<std::uint8_t>(1U << (bit + 1));
      }
    }
    flags[i] = f;
  });

  DecisionCounts c;
  c.trials = trials;
  for (auto f : flags)
    for (auto d : kAllDetectors) {
      c.signal_decisions[index_of(d)] += (f >> (2 * index_of(d))) & 1U;
      c.degenerate[index_of(d)] += (f >> (2 * index_of(d) + 1)) & 1U;
    }
  return c;
}

namespace detail {
inline ResultRow pf_row(DetectorKind d, double u, const DecisionCounts& c) {
  ResultRow r;
  r.detector = d;
  r.uncertainty_db = u;
  r.trials = c.trials;
  r.pf = static_cast<double>(c.signal_decisions[index_of(d)]) / static_cast<double>(c.trials);
  r.wilson_halfwidth = wilson_halfwidth(c.signal_decisions[index_of(d)], c.trials);
  r.degenerate_trials = c.degenerate[index_of(d)];
  return r;
}

inline ResultRow pd_row(DetectorKind d, double u, double snr, const DecisionCounts& c) {
  ResultRow r;
  r.detector = d;
  r.uncertainty_db = u;
  r.snr_db = snr;
  r.trials = c.trials;
  r.pd = static_cast<double>(c.signal_decisions[index_of(d)]) / static_cast<double>(c.trials);
  r.pm = 1.0 - *r.pd;
  r.wilson_halfwidth = wilson_halfwidth(c.signal_decisions[index_of(d)], c.trials);
  r.degenerate_trials = c.degenerate[index_of(d)];
  return r;
}

inline bool row_less(const ResultRow& a, const ResultRow& b) {
  if (a.detector != b.detector) return index_of(a.detector) < index_of(b.detector);
  if (a.uncertainty_db != b.uncertainty_db) return a.uncertainty_db < b.uncertainty_db;
  if (a.snr_db.has_value() != b.snr_db.has_value()) return !a.snr_db.has_value();
  return a.snr_db.value_or(0.0) < b.snr_db.value_or(0.0);
}
}  // namespace detail

/// P_f of one detector under H0 trials with uncertainty U (thresholds from nominal noise).
inline ResultRow estimate_pfa(const ExperimentConfig& cfg, const ThresholdSet& thresholds, DetectorKind detector,
                              double uncertainty_db, unsigned workers = 0) {
  const std::array<DetectorKind, 1> one{detector};
  const auto c = count_decisions(cfg, thresholds, one, Hypothesis::H0, uncertainty_db, 0.0, cfg.pf_trials, workers);
  return detail::pf_row(detector, uncertainty_db, c);
}

/// P_d (and P_m) of one detector under H1 trials at the given SNR and uncertainty.
inline ResultRow estimate_pd(const ExperimentConfig& cfg, const ThresholdSet& thresholds, DetectorKind detector,
                             double uncertainty_db, double snr_db, unsigned workers = 0) {
  const std::array<DetectorKind, 1> one{detector};
  const auto c = count_decisions(cfg, thresholds, one, Hypothesis::H1, uncertainty_db, snr_db, cfg.pd_trials, workers);
  return detail::pd_row(detector, uncertainty_db, snr_db, c);
}

/// P_f rows for every (detector, U) and P_d rows for every (detector, U, SNR),
/// sorted by (detector, U, SNR) with each P_f row first. P_d rows carry the P_f
/// of their (detector, U) in `pf`.
inline std::vector<ResultRow> run_grid(const ExperimentConfig& cfg, const ThresholdSet& thresholds,
                                       std::span<const double> uncertainties, std::span<const double> snrs,
                                       unsigned workers = 0) {
  cfg.validate();
  std::vector<ResultRow> rows;
  for (double u : uncertainties) {
    const auto null = count_decisions(cfg, thresholds, cfg.detectors, Hypothesis::H0, u, 0.0, cfg.pf_trials, workers);
    std::array<double, 4> pf{};
    for (auto d : cfg.detectors) {
      rows.push_back(detail::pf_row(d, u, null));
      pf[index_of(d)] = *rows.back().pf;
    }
    for (double snr : snrs) {
      const auto sig = count_decisions(cfg, thresholds, cfg.detectors, Hypothesis::H1, u, snr, cfg.pd_trials, workers);
      for (auto d : cfg.detectors) {
        rows.push_back(detail::pd_row(d, u, snr, sig));
        rows.back().pf = pf[index_of(d)];
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), detail::row_less);
  return rows;
}

/// The full detector x U x SNR cross product of the configuration.
inline std::vector<ResultRow> sweep(const ExperimentConfig& cfg, const ThresholdSet& thresholds, unsigned workers = 0) {
  return run_grid(cfg, thresholds, cfg.uncertainties_db, cfg.snr_grid_db, workers);
}

/// Uncertainty levels and SNR columns of the reference false-alarm/detection table.
inline constexpr std::array<double, 3> kTable1Uncertainties{0.0, 1.0, 2.0};
inline constexpr std::array<double, 3> kTable1Snrs{-12.0, -10.0, -8.0};

/// Restricts `cfg` to the reference table's detectors, uncertainty levels and SNRs.
inline ExperimentConfig table1_config(ExperimentConfig cfg) {
  cfg.detectors.assign(kAllDetectors.begin(), kAllDetectors.end());
  cfg.uncertainties_db.assign(kTable1Uncertainties.begin(), kTable1Uncertainties.end());
  cfg.snr_grid_db.assign(kTable1Snrs.begin(), kTable1Snrs.end());
  return cfg;
}

/// The 12 x 4 reference grid: {CD, ED, MME, EME} x U in {0, 1, 2} dB, one P_f
/// cell and P_d cells at -12, -10 and -8 dB. Detector, uncertainty and SNR
/// settings of `cfg` are overridden; everything else is kept.
inline std::vector<ResultRow> reproduce_table1(const ExperimentConfig& cfg, const ThresholdSet& thresholds,
                                               unsigned workers = 0) {
  return sweep(table1_config(cfg), thresholds, workers);
}

/// Per-trial H0 statistic values of one detector (same trials as estimate_pfa).
inline std::vector<double> null_statistics(const ExperimentConfig& cfg, DetectorKind detector, double uncertainty_db,
                                           std::size_t trials, unsigned workers = 0) {
  std::vector<double> out(trials);
  const NoiseModel noise = cfg.noise(uncertainty_db);
  parallel_for(trials, workers, [&](std::size_t i) {
    const Waveform w =
        realize_trial(cfg.modulation, noise, 0.0, Hypothesis::H0, trial_seed(cfg, Hypothesis::H0, uncertainty_db, 0.0, i));
    out[i] = compute_statistic(detector, w.view(), cfg.covariance).value;
  });
  return out;
}

}  // namespace cyclosense
