#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pab/env.hpp"

namespace pab {

/// One bandit-phase record: the recommendation, the uniform draw handed to
/// the subroutine and the shifted reward X - pi_hat it observed.
struct ShiftedRecord {
  int recommended = 0;
  double u = 0.0;
  double shifted_reward = 0.0;
};

/// Append-only shifted history fed to the black-box subroutine.
struct ShiftedHistory {
  std::vector<ShiftedRecord> records;

  void append(int recommended, double u, double shifted_reward) {
    records.push_back({recommended, u, shifted_reward});
  }
};

/// Black-box bandit subroutine: Alg: (U_t, G_{t-1}) -> arm. Policies carry
/// their own sufficient statistics; decisions depend only on the observed
/// history and the uniform draw.
class BanditPolicy {
 public:
  virtual ~BanditPolicy() = default;
  /// Recommendation for the current round; `u` is the round's Unif(0,1) draw.
  virtual int next(double u) = 0;
  /// Feedback for the recommended arm (shifted reward).
  virtual void observe(int arm, double reward) = 0;
};

/// Fixed-horizon UCB: arms 0..K-1 once in order, then
/// argmax mean_a + 2 sqrt(log T / T_a), natural log, lexicographic ties.
class UcbPolicy : public BanditPolicy {
 public:
  UcbPolicy(int k, int horizon);
  int next(double u) override;
  void observe(int arm, double reward) override;

  double index(int arm) const;  // current UCB index (inf while unplayed)

 private:
  int k_;
  double log_horizon_;
  std::vector<int> counts_;
  std::vector<double> means_;
  int rounds_ = 0;
};

/// Decaying epsilon-greedy: explore a uniform arm with probability
/// p_t = min(1, m K / (alpha t)), otherwise play the empirical-mean argmax.
/// The single uniform draw decides both the explore coin and the arm.
class EpsGreedyPolicy : public BanditPolicy {
 public:
  EpsGreedyPolicy(int k, int m = 500, double alpha = 1.0);
  int next(double u) override;
  void observe(int arm, double reward) override;

  double explore_probability(int t) const;

 private:
  int k_;
  int m_;
  double alpha_;
  std::vector<int> counts_;
  std::vector<double> means_;
  int rounds_ = 0;
};

/// Replays a recorded history into a fresh policy (determinism checks).
void replay(BanditPolicy& policy, const ShiftedHistory& history);

std::unique_ptr<BanditPolicy> make_policy(const std::string& name, int k, int horizon, int m = 500,
                                          double alpha = 1.0);

/// Numeric value of the Corollary-1 regret bound for UCB as the subroutine:
///   3 + 3 sum gaps + (1 + theta range)(1 + 9 K log2 T)
///     + 8 min{ sqrt(T K ln T), sum 4 ln T / gap }.
/// Gaps are max(theta+s) - (theta_a + s_a); the min term is 0 when no gap is
/// positive.
double corollary1_bound(const MabInstance& inst, int horizon);

/// The reward gaps Delta*_a used by corollary1_bound.
std::vector<double> reward_gaps(const MabInstance& inst);

}  // namespace pab
