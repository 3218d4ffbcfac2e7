#pragma once

// CSV, plot-data, table and manifest rendering for experiment results.

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cyclosense/config.hpp"
#include "cyclosense/montecarlo.hpp"

namespace cyclosense {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr const char* kCsvHeader =
    "detector,uncertainty_db,snr_db,pf,pd,pm,trials,wilson_halfwidth,degenerate_trials";

namespace detail {
inline std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
}  // namespace detail

inline void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << "\n";
  for (const auto& r : rows)
    out << to_string(r.detector) << ',' << format_double(r.uncertainty_db) << ',' << detail::opt(r.snr_db) << ','
        << detail::opt(r.pf) << ',' << detail::opt(r.pd) << ',' << detail::opt(r.pm) << ',' << r.trials << ','
        << format_double(r.wilson_halfwidth) << ',' << r.degenerate_trials << "\n";
}

inline std::string rows_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream o;
  write_rows_csv(o, rows);
  return o.str();
}

/// gnuplot-friendly P_d curves for one uncertainty level: SNR then one column per detector.
inline void write_plot_data(std::ostream& out, const std::vector<ResultRow>& rows, double uncertainty_db,
                            const std::vector<DetectorKind>& detectors) {
  std::map<double, std::array<std::optional<double>, 4>> grid;
  for (const auto& r : rows)
    if (!r.is_pf_row() && r.uncertainty_db == uncertainty_db) grid[*r.snr_db][index_of(r.detector)] = r.pd;
  out << "# P_d vs SNR, noise uncertainty +/-" << format_double(uncertainty_db) << " dB\n# snr_db";
  for (auto d : detectors) out << ' ' << to_string(d);
  out << "\n";
  for (const auto& [snr, cells] : grid) {
    out << format_double(snr);
    for (auto d : detectors) {
      const auto& v = cells[index_of(d)];
      out << ' ' << (v ? format_double(*v) : std::string("nan"));
    }
    out << "\n";
  }
}

inline void write_thresholds_csv(std::ostream& out, const ThresholdSet& t, const std::vector<DetectorKind>& detectors,
                                 std::size_t k) {
  out << "detector,target_pf,lambda,provenance,calibration_trials,calibration_seed,k\n";
  for (auto d : detectors) {
    const auto& th = t.at(d);
    out << to_string(d) << ',' << format_double(th.target_pf) << ',' << format_double(th.lambda) << ','
        << to_string(th.provenance.method) << ',' << th.provenance.trials << ',' << th.provenance.seed << ',' << k
        << "\n";
  }
}

inline void write_thresholds_text(std::ostream& out, const ThresholdSet& t, const std::vector<DetectorKind>& detectors,
                                  std::size_t k) {
  char buf[200];
  out << "CFAR thresholds (K = " << k << ")\n";
  for (auto d : detectors) {
    const auto& th = t.at(d);
    std::string prov(to_string(th.provenance.method));
    if (th.provenance.method == CalibrationMethod::Empirical)
      prov += " (" + std::to_string(th.provenance.trials) + " H0 trials, seed " + std::to_string(th.provenance.seed) + ")";
    std::snprintf(buf, sizeof buf, "  %-4s P_f = %-6s lambda = %.10g  %s\n", std::string(to_string(d)).c_str(),
                  format_double(th.target_pf).c_str(), th.lambda, prov.c_str());
    out << buf;
  }
}

/// Published reference cells: P_f and P_d at -12, -10, -8 dB, per (detector, U).
struct ReferenceRow {
  DetectorKind detector;
  double uncertainty_db;
  std::array<double, 4> cells;
};

inline constexpr std::array<ReferenceRow, 12> kReferenceTable1{{
    {DetectorKind::ED, 0, {0.1015, 0.9288, 0.9984, 1.0000}},
    {DetectorKind::ED, 1, {0.4450, 0.5704, 0.6508, 0.7861}},
    {DetectorKind::ED, 2, {0.4663, 0.5425, 0.5739, 0.6429}},
    {DetectorKind::CD, 0, {0.0999, 0.7931, 0.9834, 1.0000}},
    {DetectorKind::CD, 1, {0.1068, 0.7904, 0.9823, 0.9999}},
    {DetectorKind::CD, 2, {0.1202, 0.7960, 0.9785, 0.9998}},
    {DetectorKind::MME, 0, {0.0954, 0.2440, 0.4639, 0.8441}},
    {DetectorKind::MME, 1, {0.0996, 0.2473, 0.4827, 0.8348}},
    {DetectorKind::MME, 2, {0.0981, 0.2567, 0.4979, 0.8039}},
    {DetectorKind::EME, 0, {0.0932, 0.1482, 0.2510, 0.4834}},
    {DetectorKind::EME, 1, {0.0952, 0.1490, 0.2578, 0.5016}},
    {DetectorKind::EME, 2, {0.0957, 0.1644, 0.2760, 0.5178}},
}};

/// Finds the P_f row (snr empty) or P_d row of a result table.
inline const ResultRow* find_row(const std::vector<ResultRow>& rows, DetectorKind d, double u,
                                 std::optional<double> snr) {
  for (const auto& r : rows)
    if (r.detector == d && r.uncertainty_db == u && r.snr_db == snr) return &r;
  return nullptr;
}

/// Twelve-row text table, measured cells with 95% half-widths next to the reference values.
inline void write_table1(std::ostream& out, const std::vector<ResultRow>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s | %-17s | %-17s | %-17s | %-17s\n", "Scheme", "P_f", "P_d (-12 dB)",
                "P_d (-10 dB)", "P_d (-8 dB)");
  out << buf;
  out << std::string(93, '-') << "\n";
  for (const auto& ref : kReferenceTable1) {
    std::snprintf(buf, sizeof buf, "%s - %g dB", std::string(to_string(ref.detector)).c_str(), ref.uncertainty_db);
    std::string line = buf;
    line.resize(12, ' ');
    for (std::size_t c = 0; c < 4; ++c) {
      const auto snr = c == 0 ? std::optional<double>{} : std::optional<double>{kTable1Snrs[c - 1]};
      const ResultRow* r = find_row(rows, ref.detector, ref.uncertainty_db, snr);
      const auto v = r ? (c == 0 ? r->pf : r->pd) : std::nullopt;
      if (v)
        std::snprintf(buf, sizeof buf, " | %.4f+-%.4f     ", *v, r->wilson_halfwidth);
      else
        std::snprintf(buf, sizeof buf, " | %-17s", "n/a");
      line += std::string(buf).substr(0, 20);
    }
    out << line << "\n";
    line = "  reference ";
    for (double v : ref.cells) {
      std::snprintf(buf, sizeof buf, " | %.4f           ", v);
      line += std::string(buf).substr(0, 20);
    }
    out << line << "\n";
  }
}

struct RunInfo {
  std::string command;
  double duration_s = 0.0;
  unsigned workers = 1;
  std::vector<std::string> outputs;
};

/// Manifest written next to every output set. `config_text` alone reproduces the outputs.
inline nlohmann::json make_manifest(const ExperimentConfig& cfg, const ThresholdSet& thresholds, const RunInfo& info) {
  nlohmann::json j;
  j["tool"] = "cyclosense";
  j["version"] = kVersion;
  j["command"] = info.command;
  j["master_seed"] = cfg.master_seed;
  j["workers"] = info.workers;
  j["duration_s"] = info.duration_s;
  j["config_text"] = to_config_text(cfg);
  auto& c = j["config"];
  c["scheme"] = std::string(to_string(cfg.modulation.scheme));
  c["samples_per_symbol"] = cfg.modulation.samples_per_symbol;
  c["bt_product"] = cfg.modulation.bt_product;
  c["pulse_span_symbols"] = cfg.modulation.pulse_span_symbols;
  c["n_symbols"] = cfg.modulation.n_symbols;
  c["noise_variance"] = cfg.noise_variance;
  c["uncertainty_db"] = cfg.uncertainties_db;
  std::vector<std::string> dets;
  for (auto d : cfg.detectors) dets.emplace_back(to_string(d));
  c["detectors"] = dets;
  c["target_pf"] = cfg.target_pf;
  c["snr_grid_db"] = cfg.snr_grid_db;
  c["pd_trials"] = cfg.pd_trials;
  c["pf_trials"] = cfg.pf_trials;
  c["calibration_trials"] = cfg.calibration_trials;
  c["smoothing_factor"] = cfg.covariance.smoothing_factor;
  auto& th = j["thresholds"];
  th = nlohmann::json::array();
  for (auto d : cfg.detectors) {
    if (!thresholds.has(d)) continue;
    const auto& t = thresholds.at(d);
    th.push_back({{"detector", std::string(to_string(d))},
                  {"target_pf", t.target_pf},
                  {"lambda", t.lambda},
                  {"provenance", std::string(to_string(t.provenance.method))},
                  {"calibration_trials", t.provenance.trials},
                  {"calibration_seed", t.provenance.seed}});
  }
  j["outputs"] = info.outputs;
  return j;
}

}  // namespace cyclosense
