#pragma once

// CFAR thresholds and the decision rule.
//
// CD and ED have closed-form nulls under complex white Gaussian noise:
//   CD: K T / sigma_w^4 ~ chi2(1)
//   ED: 2K C0 / sigma_w^2 ~ chi2(2K)
// MME and EME are calibrated by Monte Carlo at nominal noise.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cyclosense/common.hpp"
#include "cyclosense/cyclic_stats.hpp"
#include "cyclosense/parallel.hpp"
#include "cyclosense/rng.hpp"
#include "cyclosense/signal_model.hpp"

namespace cyclosense {

enum class CalibrationMethod { Analytic, Empirical };

inline std::string_view to_string(CalibrationMethod m) {
  return m == CalibrationMethod::Analytic ? "analytic" : "empirical";
}

struct Provenance {
  CalibrationMethod method = CalibrationMethod::Analytic;
  std::size_t trials = 0;  // empirical only
  std::uint64_t seed = 0;  // empirical only
};

struct Threshold {
  DetectorKind kind = DetectorKind::CD;
  double target_pf = 0.1;
  double lambda = 0.0;
  Provenance provenance;
};

/// Null distribution of the CD statistic.
struct CdNullModel {
  double mu0 = 0.0;        // sigma_w^4 / K
  double sigma0_sq = 0.0;  // 2 sigma_w^8 / K^2
  int dof = 1;

  static CdNullModel make(double sigma_w2, std::size_t k) {
    if (!(sigma_w2 > 0.0)) throw ParameterError("noise variance must be > 0");
    if (k == 0) throw ParameterError("K must be > 0");
    CdNullModel m;
    m.mu0 = sigma_w2 * sigma_w2 / static_cast<double>(k);
    m.sigma0_sq = 2.0 * m.mu0 * m.mu0;
    return m;
  }
};

struct Decision {
  Hypothesis hypothesis = Hypothesis::H0;
  StatisticValue statistic;
  Threshold threshold;
};

namespace detail {
inline void check_pf(double pf) {
  if (!(pf > 0.0 && pf < 1.0)) throw ParameterError("target P_f must lie in (0, 1), got " + std::to_string(pf));
}
}  // namespace detail

/// x with P(chi2_dof > x) = p.
inline double chi2_inv_sf(double p, int dof) {
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("chi2_inv_sf: p must lie in (0, 1]");
  if (dof < 1) throw ParameterError("chi2_inv_sf: dof must be >= 1");
  if (p == 1.0) return 0.0;
  return 2.0 * boost::math::gamma_q_inv(0.5 * dof, p);
}

/// lambda = (sigma_w^4 / K) * chi2_inv_sf(pf, 1).
inline Threshold cd_threshold(double pf, double sigma_w2, std::size_t k) {
  detail::check_pf(pf);
  if (k % 2 != 0) throw ParameterError("cd_threshold: K must be even");
  const auto null = CdNullModel::make(sigma_w2, k);
  return {DetectorKind::CD, pf, null.mu0 * chi2_inv_sf(pf, 1), {CalibrationMethod::Analytic, 0, 0}};
}

/// lambda = (sigma_w^2 / 2K) * chi2_inv_sf(pf, 2K).
inline Threshold ed_threshold(double pf, double sigma_w2, std::size_t k) {
  detail::check_pf(pf);
  if (!(sigma_w2 > 0.0)) throw ParameterError("noise variance must be > 0");
  if (k == 0) throw ParameterError("ed_threshold: K must be > 0");
  const double dof = 2.0 * static_cast<double>(k);
  return {DetectorKind::ED, pf, sigma_w2 / dof * chi2_inv_sf(pf, static_cast<int>(2 * k)),
          {CalibrationMethod::Analytic, 0, 0}};
}

/// Empirical q-quantile with "higher" interpolation: the order statistic at
/// index ceil((n - 1) q) of the ascending sample.
inline double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ParameterError("empirical_quantile: no samples");
  const auto idx = static_cast<std::size_t>(std::ceil(static_cast<double>(values.size() - 1) * q));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

inline std::size_t min_calibration_trials(double pf) { return static_cast<std::size_t>(std::ceil(10.0 / pf)); }

/// Threshold from precomputed H0 statistic values (the (1 - pf)-quantile).
inline Threshold threshold_from_null(DetectorKind kind, double pf, std::span<const double> null_values,
                                     std::uint64_t seed) {
  detail::check_pf(pf);
  if (null_values.size() < min_calibration_trials(pf))
    throw ParameterError("empirical threshold: " + std::to_string(null_values.size()) + " trials cannot resolve P_f = " +
                         std::to_string(pf) + " (need >= " + std::to_string(min_calibration_trials(pf)) + ")");
  const double lambda = empirical_quantile({null_values.begin(), null_values.end()}, 1.0 - pf);
  return {kind, pf, lambda, {CalibrationMethod::Empirical, null_values.size(), seed}};
}

/// Monte Carlo threshold: `trials` H0 waveforms from `h0_sampler(trial_seed)`,
/// with trial_seed = derive_seed({seed, trial_index}). Deterministic in `seed`
/// for any worker count. Degenerate-covariance trials enter the sample as 0.
template <class Sampler>
Threshold empirical_threshold(DetectorKind kind, double pf, Sampler&& h0_sampler, std::size_t trials,
                              std::uint64_t seed, const CovarianceSpec& cov = {}, unsigned workers = 0) {
  detail::check_pf(pf);
  if (trials < min_calibration_trials(pf))
    throw ParameterError("empirical threshold: " + std::to_string(trials) + " trials cannot resolve P_f = " +
                         std::to_string(pf));
  std::vector<double> values(trials);
  parallel_for(trials, workers, [&](std::size_t i) {
    const Waveform w = h0_sampler(derive_seed({seed, static_cast<std::uint64_t>(i)}));
    try {
      values[i] = compute_statistic(kind, w.view(), cov).value;
    } catch (const DegenerateCovarianceError&) {
      values[i] = 0.0;
    }
  });
  return threshold_from_null(kind, pf, values, seed);
}

/// H1 iff the statistic reaches the threshold (ties go to H1).
inline Decision decide(const StatisticValue& s, const Threshold& t) {
  if (s.kind != t.kind)
    throw ParameterError("decide: statistic is " + std::string(to_string(s.kind)) + " but threshold is " +
                         std::string(to_string(t.kind)));
  return {s.value >= t.lambda ? Hypothesis::H1 : Hypothesis::H0, s, t};
}

}  // namespace cyclosense
