#pragma once

#include <functional>

namespace pab {

/// Per-arm binary-search state sandwiching the optimal incentive pi*_a.
/// Bounds always stay in [0,1]; the width halves exactly on every step.
struct IncentiveBracket {
  double lower = 0.0;
  double upper = 1.0;
  int steps = 0;

  double width() const { return upper - lower; }
  double midpoint() const { return lower + (upper - lower) / 2.0; }
};

/// Agent response to offering `amount` on `target`: the chosen arm.
using AgentOracle = std::function<int(int target, double amount)>;

/// Invoked after each completed search step with the offered midpoint, the
/// agent's choice and the updated bracket (used for trajectory logging).
using SearchStepHook =
    std::function<void(int step, double mid, int chosen, const IncentiveBracket&)>;

/// Runs `n_steps` rounds of binary search on `arm` against the agent oracle.
/// Accept (chosen == arm) lowers the upper bound to the midpoint, refuse
/// raises the lower bound. `k` bounds the oracle's legal answers.
IncentiveBracket binary_search_arm(const AgentOracle& oracle, int arm, int n_steps, int k,
                                   const SearchStepHook& on_step = nullptr);

/// Safety-margin estimate pi_hat = upper + 1/T; with ceil(log2 T) completed
/// steps it satisfies pi* < pi_hat <= pi* + 2/T.
double estimate_incentive(const IncentiveBracket& bracket, int horizon);

/// Binary-search steps per arm for horizon T: ceil(log2 T). Requires T >= 2.
int search_steps_for_horizon(int horizon);

}  // namespace pab
