#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cyclosense/cli.hpp"

namespace cs = cyclosense;

int main(int argc, char** argv) {
  CLI::App app{"Cyclostationary spectrum sensing: CFAR calibration, single-file sensing and Monte Carlo benchmarks"};
  app.require_subcommand(1);

  cs::cli::Options opt;
  std::string format = "f32";
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "key = value experiment config (defaults if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--workers", opt.workers, "worker threads (0 = hardware concurrency)");
    sub->add_option("--trials", trials, "P_d trials per point; P_f and calibration use 10x")->check(CLI::PositiveNumber);
  };

  auto* calibrate = app.add_subcommand("calibrate", "print CFAR thresholds per detector");
  add_common(calibrate);

  cs::cli::SenseOptions sense;
  std::string detector = "CD";
  auto* sense_cmd = app.add_subcommand("sense", "decide SIGNAL/NOISE for one I/Q file (exit 10 = signal, 0 = noise)");
  add_common(sense_cmd);
  sense_cmd->add_option("input", sense.input, "little-endian interleaved I/Q file")->required();
  sense_cmd->add_option("--detector", detector, "CD, ED, MME or EME");
  sense_cmd->add_option("--format", format, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  sense_cmd->add_option("--decimate", sense.decimate, "input is at 2*N samples/symbol; keep every N-th sample");

  auto* sweep = app.add_subcommand("sweep", "P_f / P_d over detectors x uncertainty x SNR; writes CSV + manifest");
  add_common(sweep);

  auto* table1 = app.add_subcommand("table1", "false-alarm / detection table at -12, -10, -8 dB");
  add_common(table1);

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(sense_cmd) || app.got_subcommand(calibrate) || app.got_subcommand(sweep) ||
      app.got_subcommand(table1)) {
    CLI::App* used = app.get_subcommands().front();
    if (used->count("--seed")) opt.seed = seed;
    if (used->count("--trials")) opt.trials = trials;
  }

  try {
    opt.format = cs::parse_sample_format(format);
    if (app.got_subcommand(sense_cmd)) sense.detector = cs::parse_detector(detector);
  } catch (const cs::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return cs::cli::kExitUsage;
  }

  if (app.got_subcommand(calibrate)) return cs::cli::cmd_calibrate(opt, std::cout, std::cerr);
  if (app.got_subcommand(sense_cmd)) return cs::cli::cmd_sense(opt, sense, std::cout, std::cerr);
  if (app.got_subcommand(sweep)) return cs::cli::cmd_sweep(opt, std::cout, std::cerr);
  return cs::cli::cmd_table1(opt, std::cout, std::cerr);
}
