#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pab/cipa.hpp"
#include "pab/env.hpp"
#include "pab/ipa.hpp"

namespace pab {

struct SeedSpec {
  int count = 1;
  std::uint64_t base = 1;
};

/// One algorithm entry of an experiment: ipa (with a subroutine), oracle-ucb,
/// eps-greedy (the approximate principal baseline) or cipa.
struct AlgorithmSpec {
  std::string name;
  std::string subroutine = "ucb";  // ipa only
  int m = 500;                     // eps-greedy exploration scale
  double alpha = 1.0;              // eps-greedy decay

  std::string label() const;
};

struct ExperimentConfig {
  std::string setting;  // "mab" | "contextual"
  MabInstance mab;
  ContextualInstance contextual;
  int horizon = 0;
  SeedSpec seeds;
  std::vector<AlgorithmSpec> algorithms;
  std::string output_dir = "out";
  bool plot = true;

  void validate() const;

  /// Parses a config document; instance file references are resolved
  /// relative to `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  static ExperimentConfig load(const std::string& path);

  /// Table-3 instance, T = 10^4, 100 seeds, ipa+ucb / oracle-ucb / eps-greedy.
  static ExperimentConfig figure1_preset();
};

/// Per-seed cumulative regret curves of one algorithm.
struct AlgorithmResult {
  std::string label;
  std::vector<std::vector<double>> curves;
};

struct ExperimentResult {
  std::vector<AlgorithmResult> algorithms;
  std::vector<std::string> files_written;
};

struct Summary {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> mean;    // [algorithm][t]
  std::vector<std::vector<double>> stderr_; // [algorithm][t]
};

/// Algorithm-3 UCB on the shifted instance with arm means mu_a: the principal
/// knows the optimal incentives and pays them exactly.
Trajectory oracle_ucb_run(const MabInstance& inst, int horizon, std::uint64_t seed);

/// Approximate baseline in the style of the principal's epsilon-greedy:
/// explores a uniform arm with transfer 1 and probability min(1, mK/(alpha t));
/// otherwise exploits the empirical-utility argmax, offering its bracket
/// midpoint until the accept/refuse bracket reaches 1/T precision, then the
/// incentive estimate upper + 1/T.
Trajectory run_eps_greedy_principal(const MabInstance& inst, int horizon, std::uint64_t seed,
                                    int m = 500, double alpha = 1.0,
                                    TieBreak tie = TieBreak::adversarial);

/// Runs every (algorithm, seed) pair, writes per-algorithm CSVs, a summary
/// CSV and optionally an SVG plot into output_dir. Deterministic in the base
/// seed regardless of the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Per-seed curve for a single (algorithm, seed) pair.
std::vector<double> run_algorithm_curve(const ExperimentConfig& cfg, const AlgorithmSpec& algo,
                                        std::uint64_t seed);

Summary summarize(const ExperimentResult& result);
void write_summary_csv(const Summary& summary, std::ostream& out);
Summary summary_from_csv(std::istream& in);

/// Figure-style SVG: one mean line and stderr band per algorithm.
std::string render_plot_svg(const Summary& summary);

/// PAB_WORKERS override, otherwise hardware concurrency (capped).
int worker_count();

}  // namespace pab
