#pragma once

// Test statistics: cyclic autocorrelation, the alpha = 1/2 cyclic detector (CD),
// energy detection (ED) and the covariance eigenvalue ratios (MME, EME).

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclosense/common.hpp"
#include "cyclosense/signal_model.hpp"

namespace cyclosense {

struct CyclicParams {
  double alpha = 0.5;  // cycles/sample
  long lag = 0;
};

struct CovarianceSpec {
  std::size_t smoothing_factor = 10;  // L

  void validate() const {
    if (smoothing_factor < 2) throw ParameterError("smoothing factor L must be >= 2");
  }
};

struct StatisticValue {
  DetectorKind kind = DetectorKind::CD;
  double value = 0.0;
};

using CovarianceMatrix = Eigen::MatrixXcd;

/// (1/K) sum_n y(n+l) y*(n) e^{-j 2 pi alpha n}, summed over the n where both
/// samples exist and normalized by the full K.
inline Sample cyclic_autocorrelation(std::span<const Sample> y, const CyclicParams& p) {
  const auto k = static_cast<long>(y.size());
  if (k == 0) throw ParameterError("cyclic_autocorrelation: empty waveform");
  if (std::labs(p.lag) >= k) throw ParameterError("cyclic_autocorrelation: |lag| must be < K");
  const long first = p.lag < 0 ? -p.lag : 0;
  const long last = p.lag < 0 ? k - 1 : k - 1 - p.lag;
  Sample acc{};
  for (long n = first; n <= last; ++n) {
    // Reduce alpha * n mod 1 before forming the phase so large n keeps full precision.
    const double cycles = p.alpha * static_cast<double>(n);
    const double frac = cycles - std::floor(cycles);
    const Sample rot = std::polar(1.0, -2.0 * std::numbers::pi * frac);
    acc += y[static_cast<std::size_t>(n + p.lag)] * std::conj(y[static_cast<std::size_t>(n)]) * rot;
  }
  return acc / static_cast<double>(k);
}

inline Sample cyclic_autocorrelation(const Waveform& w, const CyclicParams& p) {
  return cyclic_autocorrelation(w.view(), p);
}

/// C1 = (1/K) sum |y(n)|^2 (-1)^n. Real by construction.
inline double cd_component(std::span<const Sample> y) {
  if (y.empty()) throw ParameterError("cd_statistic: empty waveform");
  if (y.size() % 2 != 0)
    throw ParameterError("cd_statistic: K = " + std::to_string(y.size()) + " is odd; the alternating sum needs even K");
  double even = 0.0;
  double odd = 0.0;
  for (std::size_t n = 0; n < y.size(); n += 2) {
    even += std::norm(y[n]);
    odd += std::norm(y[n + 1]);
  }
  return (even - odd) / static_cast<double>(y.size());
}

/// T = C1^2, the squared Fourier coefficient of |y(n)|^2 at alpha = 1/2.
inline StatisticValue cd_statistic(std::span<const Sample> y) {
  const double c1 = cd_component(y);
  return {DetectorKind::CD, c1 * c1};
}
inline StatisticValue cd_statistic(const Waveform& w) { return cd_statistic(w.view()); }

/// C0 = (1/K) sum |y(n)|^2.
inline StatisticValue ed_statistic(std::span<const Sample> y) {
  if (y.empty()) throw ParameterError("ed_statistic: empty waveform");
  double p = 0.0;
  for (const auto& v : y) p += std::norm(v);
  return {DetectorKind::ED, p / static_cast<double>(y.size())};
}
inline StatisticValue ed_statistic(const Waveform& w) { return ed_statistic(w.view()); }

/// R = 1/(K-L+1) sum_{n=L-1}^{K-1} v(n) v(n)^H, v(n) = [y(n), y(n-1), ..., y(n-L+1)]^T.
///
/// R(i,j) for i <= j is a lag-(j-i) correlation over a window shifted by j, so
/// each entry is the full-length lag sum minus at most L-1 edge products on
/// each side. Cost is O(K L + L^3) instead of O(K L^2).
inline CovarianceMatrix sample_covariance(std::span<const Sample> y, const CovarianceSpec& spec) {
  spec.validate();
  const std::size_t k = y.size();
  const std::size_t l = spec.smoothing_factor;
  if (k < 2 * l)
    throw ParameterError("sample_covariance: K = " + std::to_string(k) + " < 2L = " + std::to_string(2 * l));

  // lag_sum[d] = sum_{m=0}^{K-1-d} y(m+d) y*(m)
  std::vector<Sample> lag_sum(l);
  for (std::size_t d = 0; d < l; ++d) {
    Sample acc{};
    for (std::size_t m = 0; m + d < k; ++m) acc += y[m + d] * std::conj(y[m]);
    lag_sum[d] = acc;
  }

  const double norm = 1.0 / static_cast<double>(k - l + 1);
  CovarianceMatrix r(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l));
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i; j < l; ++j) {
      const std::size_t d = j - i;
      // Window m in [L-1-j, K-1-j]; remove m < L-1-j and m > K-1-j.
      Sample acc = lag_sum[d];
      for (std::size_t m = 0; m + 1 + j < l; ++m) acc -= y[m + d] * std::conj(y[m]);
      for (std::size_t m = k - j; m + d < k; ++m) acc -= y[m + d] * std::conj(y[m]);
      acc *= norm;
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
      r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = std::conj(acc);
    }
    r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).imag(0.0);
  }
  return r;
}
inline CovarianceMatrix sample_covariance(const Waveform& w, const CovarianceSpec& spec) {
  return sample_covariance(w.view(), spec);
}

struct EigenExtremes {
  double max = 0.0;
  double min = 0.0;
};

/// Largest and smallest eigenvalue of a Hermitian matrix. The input is
/// symmetrized as (R + R^H)/2; a smallest eigenvalue within round-off of zero
/// (|min| <= 64 eps |max|) is clamped to 0.
inline EigenExtremes eigen_extremes(const CovarianceMatrix& r) {
  if (r.rows() == 0 || r.rows() != r.cols()) throw ParameterError("eigen_extremes: need a non-empty square matrix");
  if (!r.allFinite()) throw NumericError("eigen_extremes: non-finite matrix entry");
  const CovarianceMatrix h = (r + r.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<CovarianceMatrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigen_extremes: eigensolver did not converge");
  const auto& ev = solver.eigenvalues();  // ascending
  EigenExtremes out{ev(ev.size() - 1), ev(0)};
  if (std::abs(out.min) <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(out.max)) out.min = 0.0;
  return out;
}

/// Both covariance statistics from one eigen-decomposition.
struct EigenStatistics {
  EigenExtremes extremes;
  double energy = 0.0;  // C0
  double mme = 0.0;     // lambda_max / lambda_min
  double eme = 0.0;     // C0 / lambda_min
};

inline EigenStatistics eigen_statistics(std::span<const Sample> y, const CovarianceSpec& spec) {
  EigenStatistics s;
  s.extremes = eigen_extremes(sample_covariance(y, spec));
  s.energy = ed_statistic(y).value;
  if (!(s.extremes.min > 0.0)) throw DegenerateCovarianceError("degenerate sample covariance: lambda_min <= 0");
  s.mme = s.extremes.max / s.extremes.min;
  s.eme = s.energy / s.extremes.min;
  return s;
}

inline StatisticValue mme_statistic(std::span<const Sample> y, const CovarianceSpec& spec) {
  return {DetectorKind::MME, eigen_statistics(y, spec).mme};
}
inline StatisticValue mme_statistic(const Waveform& w, const CovarianceSpec& spec) {
  return mme_statistic(w.view(), spec);
}

inline StatisticValue eme_statistic(std::span<const Sample> y, const CovarianceSpec& spec) {
  return {DetectorKind::EME, eigen_statistics(y, spec).eme};
}
inline StatisticValue eme_statistic(const Waveform& w, const CovarianceSpec& spec) {
  return eme_statistic(w.view(), spec);
}

/// Dispatch on kind. Throws DegenerateCovarianceError for MME/EME on rank-deficient input.
inline StatisticValue compute_statistic(DetectorKind kind, std::span<const Sample> y, const CovarianceSpec& spec) {
  switch (kind) {
    case DetectorKind::CD: return cd_statistic(y);
    case DetectorKind::ED: return ed_statistic(y);
    case DetectorKind::MME: return mme_statistic(y, spec);
    case DetectorKind::EME: return eme_statistic(y, spec);
  }
  throw ParameterError("unknown detector kind");
}

/// Statistic values for a subset of detectors computed from one waveform.
/// A missing value means the detector was not requested, or its covariance was degenerate.
struct StatisticSet {
  std::array<std::optional<double>, 4> values{};
  bool degenerate = false;

  const std::optional<double>& operator[](DetectorKind k) const { return values[index_of(k)]; }
};

inline StatisticSet compute_statistics(std::span<const Sample> y, std::span<const DetectorKind> kinds,
                                       const CovarianceSpec& spec) {
  StatisticSet out;
  bool want_eigen = false;
  for (auto k : kinds) {
    if (k == DetectorKind::CD) out.values[index_of(k)] = cd_statistic(y).value;
    if (k == DetectorKind::ED) out.values[index_of(k)] = ed_statistic(y).value;
    want_eigen = want_eigen || uses_covariance(k);
  }
  if (want_eigen) {
    try {
      const auto es = eigen_statistics(y, spec);
      for (auto k : kinds) {
        if (k == DetectorKind::MME) out.values[index_of(k)] = es.mme;
        if (k == DetectorKind::EME) out.values[index_of(k)] = es.eme;
      }
    } catch (const DegenerateCovarianceError&) {
      out.degenerate = true;
    }
  }
  return out;
}

}  // namespace cyclosense
