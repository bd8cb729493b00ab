#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pab/bandit.hpp"
#include "pab/binsearch.hpp"
#include "pab/env.hpp"

namespace pab {

enum class Phase { search, bandit };

/// One logged round of the multi-armed protocol. `paid` equals the offered
/// amount iff the agent took the targeted arm. Bracket columns carry the
/// searched arm's state during the search phase and are NaN afterwards.
struct RoundRecord {
  int t = 0;
  Phase phase = Phase::search;
  int offer_arm = 0;
  double offer_amount = 0.0;
  int chosen = 0;
  double reward = 0.0;
  double paid = 0.0;
  int recommended = -1;  // -1 during the search phase
  double lower = 0.0;
  double upper = 0.0;
};

/// Full per-round log of a run plus the final per-arm brackets and the
/// incentive estimates pi_hat.
struct Trajectory {
  int horizon = 0;
  std::vector<RoundRecord> rounds;
  std::vector<IncentiveBracket> brackets;
  std::vector<double> pi_hat;
};

/// Smallest horizon T satisfying T > K ceil(log2 T).
int min_horizon(int k);

/// Algorithm-1 run: K ceil(log2 T) binary-search rounds, incentive estimates
/// pi_hat = upper + 1/T, then subroutine-driven play on the shifted instance.
Trajectory run_ipa(const MabInstance& inst, BanditPolicy& policy, int horizon,
                   std::uint64_t seed, TieBreak tie = TieBreak::adversarial);

/// Cumulative conditional expected regret: per round mu* - (theta_At - paid),
/// using the mean rewards theta rather than the noisy draws.
std::vector<double> regret_curve(const Trajectory& traj, const MabInstance& inst);

/// Cumulative realized regret computed from the noisy reward draws.
std::vector<double> regret_curve_realized(const Trajectory& traj, const MabInstance& inst);

/// CSV with columns t,phase,offer_arm,offer_amount,chosen_arm,reward,paid,
/// lower,upper,cum_regret.
void write_trajectory_csv(const Trajectory& traj, const MabInstance& inst, std::ostream& out);

}  // namespace pab
