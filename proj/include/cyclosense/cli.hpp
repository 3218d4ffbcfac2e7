#pragma once

// Subcommand implementations behind the `cyclosense` executable. Each command
// writes human-readable output to `out`, diagnostics to `err`, and returns the
// process exit code.

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <cstdio>
#include <optional>
#include <sstream>
#include <ostream>
#include <string>
#include <vector>

#include "cyclosense/config.hpp"
#include "cyclosense/cyclic_stats.hpp"
#include "cyclosense/detectors.hpp"
#include "cyclosense/iq_file.hpp"
#include "cyclosense/montecarlo.hpp"
#include "cyclosense/report.hpp"
#include "cyclosense/signal_model.hpp"

namespace cyclosense::cli {

inline constexpr int kExitNoise = 0;
inline constexpr int kExitSignal = 10;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

struct Options {
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::optional<std::size_t> trials;  // P_d trials; P_f and calibration use 10x
  SampleFormat format = SampleFormat::F32;
};

struct SenseOptions {
  std::string input;
  DetectorKind detector = DetectorKind::CD;
  int decimate = 1;  // input is at 2 * decimate samples/symbol
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Config file (or defaults) with command-line overrides applied, validated.
inline ExperimentConfig resolve_config(const Options& opt) {
  ExperimentConfig cfg = opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
  if (opt.seed) cfg.master_seed = *opt.seed;
  if (opt.trials) {
    cfg.pd_trials = *opt.trials;
    cfg.pf_trials = 10 * *opt.trials;
    cfg.calibration_trials = 10 * *opt.trials;
  }
  cfg.validate();
  return cfg;
}

namespace detail {

inline std::filesystem::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << content;
  f.close();
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string plot_file_name(double u) { return "pd_plot_U" + format_double(u) + "dB.dat"; }

/// Runs `body`, mapping exceptions to diagnostics and exit codes.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace detail

inline int cmd_calibrate(const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = resolve_config(opt);
    const auto thresholds = calibrate(cfg, opt.workers);
    write_thresholds_text(out, thresholds, cfg.detectors, cfg.block_length());
    out << "\n";
    write_thresholds_csv(out, thresholds, cfg.detectors, cfg.block_length());
    if (!opt.out_dir.empty()) {
      const auto dir = detail::prepare_dir(opt.out_dir);
      std::ostringstream csv;
      write_thresholds_csv(csv, thresholds, cfg.detectors, cfg.block_length());
      detail::write_file(dir / "thresholds.csv", csv.str());
    }
    return kExitNoise;
  });
}

/// Stage 1 (optional decimation to 2 samples/symbol), Stage 2 (statistic),
/// Stage 3 (threshold), Stage 4 (decision). Exit 0 = noise, 10 = signal.
inline int cmd_sense(const Options& opt, const SenseOptions& sense, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = resolve_config(opt);
    if (sense.decimate < 1) throw ParameterError("--decimate must be >= 1");
    Waveform raw;
    raw.samples = read_iq_file(sense.input, opt.format);
    raw.samples_per_symbol = 2 * sense.decimate;
    if (raw.samples.empty()) throw IqFileError(sense.input + ": no samples");
    const Waveform y = decimate_to_two_sps(raw, sense.decimate);
    const std::size_t k = y.size();

    Threshold threshold;
    switch (sense.detector) {
      case DetectorKind::CD: threshold = cd_threshold(cfg.target_pf, cfg.noise_variance, k); break;
      case DetectorKind::ED: threshold = ed_threshold(cfg.target_pf, cfg.noise_variance, k); break;
      default: {
        if (k < 2 * cfg.covariance.smoothing_factor)
          throw ParameterError("K = " + std::to_string(k) + " samples is too short for L = " +
                               std::to_string(cfg.covariance.smoothing_factor));
        const double var = cfg.noise_variance;
        threshold = empirical_threshold(
            sense.detector, cfg.target_pf, [&](std::uint64_t s) { return noise_waveform(k, var, 2, s); },
            cfg.calibration_trials, calibration_seed(cfg), cfg.covariance, opt.workers);
      }
    }

    const char* fmt = "%-6s %s statistic = %.10g  threshold = %.10g (%s)  K = %zu%s\n";
    char buf[256];
    try {
      const auto d = decide(compute_statistic(sense.detector, y.view(), cfg.covariance), threshold);
      const bool signal = d.hypothesis == Hypothesis::H1;
      std::snprintf(buf, sizeof buf, fmt, signal ? "SIGNAL" : "NOISE", std::string(to_string(sense.detector)).c_str(),
                    d.statistic.value, threshold.lambda, std::string(to_string(threshold.provenance.method)).c_str(), k,
                    "");
      out << buf;
      return signal ? kExitSignal : kExitNoise;
    } catch (const DegenerateCovarianceError&) {
      std::snprintf(buf, sizeof buf, fmt, "NOISE", std::string(to_string(sense.detector)).c_str(), 0.0,
                    threshold.lambda, std::string(to_string(threshold.provenance.method)).c_str(), k,
                    "  [degenerate covariance]");
      out << buf;
      return kExitNoise;
    }
  });
}

inline int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (opt.out_dir.empty()) throw ParameterError("sweep needs --out DIR");
    const auto cfg = resolve_config(opt);
    const auto dir = detail::prepare_dir(opt.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    err << "calibrating thresholds...\n";
    const auto thresholds = calibrate(cfg, opt.workers);
    err << "running " << cfg.detectors.size() << " detectors x " << cfg.uncertainties_db.size() << " uncertainty levels x "
        << cfg.snr_grid_db.size() << " SNRs...\n";
    const auto rows = sweep(cfg, thresholds, opt.workers);

    std::vector<ResultRow> pf_rows, pd_rows;
    for (const auto& r : rows) (r.is_pf_row() ? pf_rows : pd_rows).push_back(r);
    RunInfo info{"sweep", 0.0, resolve_workers(opt.workers), {"pd_curves.csv", "pfa_table.csv", "thresholds.csv"}};
    detail::write_file(dir / "pd_curves.csv", rows_csv(pd_rows));
    detail::write_file(dir / "pfa_table.csv", rows_csv(pf_rows));
    std::ostringstream th;
    write_thresholds_csv(th, thresholds, cfg.detectors, cfg.block_length());
    detail::write_file(dir / "thresholds.csv", th.str());
    for (double u : cfg.uncertainties_db) {
      std::ostringstream plot;
      write_plot_data(plot, rows, u, cfg.detectors);
      detail::write_file(dir / detail::plot_file_name(u), plot.str());
      info.outputs.push_back(detail::plot_file_name(u));
    }
    detail::write_file(dir / "run_config.txt", to_config_text(cfg));
    info.outputs.push_back("run_config.txt");
    info.duration_s = detail::seconds_since(t0);
    detail::write_file(dir / "manifest.json", make_manifest(cfg, thresholds, info).dump(2) + "\n");
    out << "wrote " << rows.size() << " rows to " << dir.string() << " in " << info.duration_s << " s\n";
    return kExitNoise;
  });
}

inline int cmd_table1(const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = table1_config(resolve_config(opt));
    const auto t0 = std::chrono::steady_clock::now();
    err << "calibrating thresholds...\n";
    const auto thresholds = calibrate(cfg, opt.workers);
    err << "estimating P_f (" << cfg.pf_trials << " trials) and P_d (" << cfg.pd_trials << " trials/point)...\n";
    const auto rows = reproduce_table1(cfg, thresholds, opt.workers);
    write_table1(out, rows);
    const double elapsed = detail::seconds_since(t0);
    out << "\nthresholds:\n";
    write_thresholds_text(out, thresholds, cfg.detectors, cfg.block_length());
    if (!opt.out_dir.empty()) {
      const auto dir = detail::prepare_dir(opt.out_dir);
      detail::write_file(dir / "table1.csv", rows_csv(rows));
      detail::write_file(dir / "run_config.txt", to_config_text(cfg));
      RunInfo info{"table1", elapsed, resolve_workers(opt.workers), {"table1.csv", "run_config.txt"}};
      detail::write_file(dir / "manifest.json", make_manifest(cfg, thresholds, info).dump(2) + "\n");
    }
    out << "elapsed " << elapsed << " s\n";
    return kExitNoise;
  });
}

}  // namespace cyclosense::cli
