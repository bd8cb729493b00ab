// Experiment CLI for the principal-agent bandit simulator.
//
//   pab run --config cfg.json         run an experiment described by a config
//   pab run --preset figure1          flagship Table-3 comparison
//   pab plot --summary s.csv --out p.svg
//
// Exit codes: 0 success, 2 configuration/input error, 3 protocol violation.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pab/errors.hpp"
#include "pab/harness.hpp"

namespace {

int do_run(const std::string& config_path, const std::string& preset, const std::string& out_dir,
           int horizon_override, int seeds_override, bool no_plot) {
  pab::ExperimentConfig cfg;
  if (!preset.empty()) {
    if (preset != "figure1") throw pab::ConfigError("unknown preset '" + preset + "'");
    cfg = pab::ExperimentConfig::figure1_preset();
  } else if (!config_path.empty()) {
    cfg = pab::ExperimentConfig::load(config_path);
  } else {
    throw pab::ConfigError("run: provide --config <file> or --preset figure1");
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (horizon_override > 0) cfg.horizon = horizon_override;
  if (seeds_override > 0) cfg.seeds.count = seeds_override;
  if (no_plot) cfg.plot = false;
  cfg.validate();

  const auto result = pab::run_experiment(cfg);
  for (const auto& f : result.files_written) std::cout << "wrote " << f << '\n';
  return 0;
}

int do_plot(const std::string& summary_path, const std::string& out_path) {
  std::ifstream in(summary_path);
  if (!in) throw pab::ConfigError("cannot open summary '" + summary_path + "'");
  const auto summary = pab::summary_from_csv(in);
  std::ofstream out(out_path);
  if (!out) throw pab::ConfigError("cannot write '" + out_path + "'");
  out << pab::render_plot_svg(summary);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal-agent bandit experiments"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir;
  int horizon_override = 0, seeds_override = 0;
  bool no_plot = false;
  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)");
  run->add_option("--preset", preset, "Built-in experiment (figure1)");
  run->add_option("--out", out_dir, "Output directory override");
  run->add_option("--horizon", horizon_override, "Horizon T override");
  run->add_option("--seeds", seeds_override, "Seed count override");
  run->add_flag("--no-plot", no_plot, "Skip the SVG plot");

  std::string summary_path, svg_path = "regret.svg";
  auto* plot = app.add_subcommand("plot", "Render a summary CSV as SVG");
  plot->add_option("--summary", summary_path, "summary.csv produced by run")->required();
  plot->add_option("--out", svg_path, "Output SVG path");

  try {
    app.parse(argc, argv);
    if (run->parsed()) {
      return do_run(config_path, preset, out_dir, horizon_override, seeds_override, no_plot);
    }
    return do_plot(summary_path, svg_path);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const pab::ProtocolError& e) {
    std::cerr << "protocol violation: " << e.what() << '\n';
    return 3;
  } catch (const pab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pab::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
