#pragma once

// Flat `key = value` experiment configuration. '#' starts a comment; unknown
// keys are errors. List values are comma separated; the SNR grid also accepts
// `start:step:stop`.
//
//   scheme              bpsk | qpsk
//   samples_per_symbol  integer >= 1
//   bt_product          real > 0
//   pulse_span_symbols  integer >= 1
//   n_symbols           integer >= 1
//   noise_variance      real > 0 (nominal sigma_w^2)
//   uncertainty_db      list of U >= 0
//   detectors           list of CD, ED, MME, EME
//   target_pf           real in (0, 1)
//   snr_grid_db         list, or start:step:stop
//   pd_trials           integer >= 100
//   pf_trials           integer >= 100
//   calibration_trials  integer
//   master_seed         unsigned 64-bit integer
//   smoothing_factor    integer >= 2 (covariance window L)

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cyclosense/common.hpp"
#include "cyclosense/montecarlo.hpp"

namespace cyclosense {

class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) return std::to_string(x);
  return {buf, end};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
    throw ParameterError("expected a real number, got '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ParameterError("expected an integer, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> parse_real_list(std::string_view s) {
  std::vector<double> out;
  for (auto item : split_list(s)) out.push_back(parse_real(item));
  return out;
}

inline std::vector<double> parse_snr_grid(std::string_view s) {
  if (s.find(':') == std::string_view::npos) return parse_real_list(s);
  std::vector<double> parts;
  while (true) {
    const auto c = s.find(':');
    parts.push_back(parse_real(trim(s.substr(0, c))));
    if (c == std::string_view::npos) break;
    s.remove_prefix(c + 1);
  }
  if (parts.size() != 3) throw ParameterError("range must be start:step:stop");
  const double start = parts[0], step = parts[1], stop = parts[2];
  if (!(step > 0.0) || stop < start) throw ParameterError("range needs step > 0 and stop >= start");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

template <class T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

inline const std::map<std::string, Setter, std::less<>>& config_setters() {
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"scheme", [](ExperimentConfig& c, std::string_view v) { c.modulation.scheme = parse_scheme(v); }},
      {"samples_per_symbol",
       [](ExperimentConfig& c, std::string_view v) { c.modulation.samples_per_symbol = parse_int<int>(v); }},
      {"bt_product", [](ExperimentConfig& c, std::string_view v) { c.modulation.bt_product = parse_real(v); }},
      {"pulse_span_symbols",
       [](ExperimentConfig& c, std::string_view v) { c.modulation.pulse_span_symbols = parse_int<int>(v); }},
      {"n_symbols", [](ExperimentConfig& c, std::string_view v) { c.modulation.n_symbols = parse_int<std::size_t>(v); }},
      {"noise_variance", [](ExperimentConfig& c, std::string_view v) { c.noise_variance = parse_real(v); }},
      {"uncertainty_db", [](ExperimentConfig& c, std::string_view v) { c.uncertainties_db = parse_real_list(v); }},
      {"detectors",
       [](ExperimentConfig& c, std::string_view v) {
         c.detectors.clear();
         for (auto item : split_list(v)) c.detectors.push_back(parse_detector(item));
       }},
      {"target_pf", [](ExperimentConfig& c, std::string_view v) { c.target_pf = parse_real(v); }},
      {"snr_grid_db", [](ExperimentConfig& c, std::string_view v) { c.snr_grid_db = parse_snr_grid(v); }},
      {"pd_trials", [](ExperimentConfig& c, std::string_view v) { c.pd_trials = parse_int<std::size_t>(v); }},
      {"pf_trials", [](ExperimentConfig& c, std::string_view v) { c.pf_trials = parse_int<std::size_t>(v); }},
      {"calibration_trials",
       [](ExperimentConfig& c, std::string_view v) { c.calibration_trials = parse_int<std::size_t>(v); }},
      {"master_seed", [](ExperimentConfig& c, std::string_view v) { c.master_seed = parse_int<std::uint64_t>(v); }},
      {"smoothing_factor",
       [](ExperimentConfig& c, std::string_view v) { c.covariance.smoothing_factor = parse_int<std::size_t>(v); }},
  };
  return setters;
}

}  // namespace detail

/// Parses and validates a configuration; keys not present keep their defaults.
/// Errors carry "<source>:<line>: <key>: <reason>".
inline ExperimentConfig parse_config(std::istream& in, const std::string& source = "config") {
  ExperimentConfig cfg;
  const auto& setters = detail::config_setters();
  std::map<std::string, int, std::less<>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (auto prev = seen.find(key); prev != seen.end())
      throw ConfigError(where + std::string(key) + ": duplicate key (first set on line " +
                        std::to_string(prev->second) + ")");
    seen.emplace(std::string(key), lineno);
    if (value.empty()) throw ConfigError(where + std::string(key) + ": missing value");
    try {
      it->second(cfg, value);
    } catch (const ParameterError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "config") {
  std::istringstream in(text);
  return parse_config(in, source);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse_config(in, path);
}

/// Every key, fully specified; parse_config(to_config_text(c)) reproduces c.
inline std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream o;
  const std::function<std::string(const double&)> real = [](const double& x) { return format_double(x); };
  const std::function<std::string(const DetectorKind&)> det = [](const DetectorKind& d) {
    return std::string(to_string(d));
  };
  o << "scheme = " << to_string(c.modulation.scheme) << "\n"
    << "samples_per_symbol = " << c.modulation.samples_per_symbol << "\n"
    << "bt_product = " << format_double(c.modulation.bt_product) << "\n"
    << "pulse_span_symbols = " << c.modulation.pulse_span_symbols << "\n"
    << "n_symbols = " << c.modulation.n_symbols << "\n"
    << "noise_variance = " << format_double(c.noise_variance) << "\n"
    << "uncertainty_db = " << detail::join(c.uncertainties_db, real) << "\n"
    << "detectors = " << detail::join(c.detectors, det) << "\n"
    << "target_pf = " << format_double(c.target_pf) << "\n"
    << "snr_grid_db = " << detail::join(c.snr_grid_db, real) << "\n"
    << "pd_trials = " << c.pd_trials << "\n"
    << "pf_trials = " << c.pf_trials << "\n"
    << "calibration_trials = " << c.calibration_trials << "\n"
    << "master_seed = " << c.master_seed << "\n"
    << "smoothing_factor = " << c.covariance.smoothing_factor << "\n";
  return o.str();
}

}  // namespace cyclosense
