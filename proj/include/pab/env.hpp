#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pab/rng.hpp"

namespace pab {

/// Reward-law descriptor for the principal's observations.
/// Only Gaussian noise is supported; sigma = 0 degenerates to the mean.
struct NoiseSpec {
  std::string kind = "gaussian";
  double sigma = 1.0;
};

/// Tie rule the agent applies when several actions maximize his utility.
/// `adversarial` picks against the principal: an action outside the offer's
/// support if one ties, otherwise the supported action with the smallest
/// transfer; final ties go to the smallest index. `lexicographic` always
/// picks the smallest index.
enum class TieBreak { adversarial, lexicographic };

/// Single-action incentive: `amount` paid iff the agent picks `target`.
struct IncentiveOffer {
  int target = 0;
  double amount = 0.0;
};

/// Finite-support incentive function for the contextual game.
/// Support size is at most 2 everywhere in this artifact.
struct ContextualOffer {
  std::vector<std::pair<int, double>> entries;  // (action index, amount >= 0)

  double amount_on(int action) const;
  bool in_support(int action) const;
};

// ---------------------------------------------------------------------------
// Multi-armed game
// ---------------------------------------------------------------------------

/// The repeated multi-armed principal-agent game: agent means s (deterministic,
/// known to the agent only), principal means theta, noisy principal rewards.
struct MabInstance {
  int k = 0;
  std::vector<double> s;      // agent mean rewards, each in [0,1]
  std::vector<double> theta;  // principal mean rewards, any finite reals
  NoiseSpec noise;

  /// Throws ConfigError naming the offending field if an invariant fails.
  void validate() const;

  double theta_range() const;  // max theta - min theta

  /// The five-arm instance used for the flagship experiment.
  static MabInstance table3();
};

/// Eq.-(1) greedy agent: argmax_a { s_a + 1[a = target] * amount }.
int agent_choice_mab(const MabInstance& inst, const IncentiveOffer& offer,
                     TieBreak tie = TieBreak::adversarial);

/// Infimal incentive making `arm` the agent's choice: max(s) - s_arm.
double optimal_incentive_mab(const MabInstance& inst, int arm);

/// Shifted arm means mu_a = theta_a - pi*_a and their maximum mu*.
struct Benchmark {
  double mu_star = 0.0;
  std::vector<double> mu;
};
Benchmark benchmark_mu(const MabInstance& inst);

/// One sample of the principal's reward on `arm` (mean theta_arm).
double draw_reward(const MabInstance& inst, int arm, Rng& rng);

// ---------------------------------------------------------------------------
// Linear contextual game
// ---------------------------------------------------------------------------

/// Linear contextual game: rewards <theta*, a> + noise for the principal and
/// <s*, a> for the agent, finite action sets regenerated each round from the
/// run seed.
struct ContextualInstance {
  int d = 0;
  Eigen::VectorXd theta_star;  // norm <= 1
  Eigen::VectorXd s_star;      // norm <= 1
  int m = 10;                  // actions per round
  NoiseSpec noise;

  void validate() const;

  /// Round-t action set: m points sampled on the unit sphere and scaled by
  /// uniform radii. Deterministic in (run_seed, t).
  std::vector<Eigen::VectorXd> actions_for_round(std::uint64_t run_seed, int t) const;

  double draw_reward(const Eigen::VectorXd& action, Rng& rng) const;
};

/// Eq.-(7) greedy agent over a finite action set.
int agent_choice_contextual(const std::vector<Eigen::VectorXd>& actions,
                            const Eigen::VectorXd& s_star, const ContextualOffer& offer,
                            TieBreak tie = TieBreak::adversarial);

/// pi*(t,a) = max_{a'} <s*,a'> - <s*,a>; in [0,2] under the unit-ball bounds.
double optimal_incentive_contextual(const Eigen::VectorXd& s_star,
                                    const std::vector<Eigen::VectorXd>& actions, int a);

// ---------------------------------------------------------------------------
// Serialization (JSON documents; rejected with a field diagnostic)
// ---------------------------------------------------------------------------

nlohmann::json to_json(const MabInstance& inst);
nlohmann::json to_json(const ContextualInstance& inst);
MabInstance mab_from_json(const nlohmann::json& j);
ContextualInstance contextual_from_json(const nlohmann::json& j);

}  // namespace pab
