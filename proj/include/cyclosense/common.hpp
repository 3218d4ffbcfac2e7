#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cyclosense {

using Sample = std::complex<double>;

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced (or was handed) values it cannot work with.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sample covariance has a zero (or negative) smallest eigenvalue.
class DegenerateCovarianceError : public NumericError {
 public:
  using NumericError::NumericError;
};

enum class Hypothesis { H0, H1 };

/// The four sensing statistics. Order is the canonical report order.
enum class DetectorKind { CD, ED, MME, EME };

inline constexpr std::array<DetectorKind, 4> kAllDetectors = {
    DetectorKind::CD, DetectorKind::ED, DetectorKind::MME, DetectorKind::EME};

inline constexpr std::size_t index_of(DetectorKind k) { return static_cast<std::size_t>(k); }

inline std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::CD: return "CD";
    case DetectorKind::ED: return "ED";
    case DetectorKind::MME: return "MME";
    case DetectorKind::EME: return "EME";
  }
  return "?";
}

inline std::string_view to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

/// Case-insensitive parse of "CD", "ED", "MME", "EME".
inline DetectorKind parse_detector(std::string_view name) {
  std::string up;
  for (char c : name) up.push_back(static_cast<char>(c >= 'a' && c <= 'z' ? c - 32 : c));
  for (auto k : kAllDetectors)
    if (up == to_string(k)) return k;
  throw ParameterError("unknown detector '" + std::string(name) + "' (expected CD, ED, MME or EME)");
}

inline bool uses_covariance(DetectorKind k) { return k == DetectorKind::MME || k == DetectorKind::EME; }

}  // namespace cyclosense
