#include "pab/binsearch.hpp"

#include <cmath>
#include <string>

#include "pab/errors.hpp"

namespace pab {

IncentiveBracket binary_search_arm(const AgentOracle& oracle, int arm, int n_steps, int k,
                                   const SearchStepHook& on_step) {
  if (n_steps < 0) throw InputError("n_steps must be >= 0");
  if (arm < 0 || arm >= k)
    throw InputError("arm " + std::to_string(arm) + " outside [0," + std::to_string(k) + ")");

  IncentiveBracket br;
  for (int step = 0; step < n_steps; ++step) {
    const double mid = br.midpoint();
    const int chosen = oracle(arm, mid);
    if (chosen < 0 || chosen >= k)
      throw ProtocolError("agent oracle returned arm " + std::to_string(chosen) +
                          " outside [0," + std::to_string(k) + ")");
    if (chosen == arm)
      br.upper = mid;
    else
      br.lower = mid;
    br.steps = step + 1;
    if (on_step) on_step(step, mid, chosen, br);
  }
  return br;
}

double estimate_incentive(const IncentiveBracket& bracket, int horizon) {
  return bracket.upper + 1.0 / static_cast<double>(horizon);
}

int search_steps_for_horizon(int horizon) {
  if (horizon < 2) throw ConfigError("horizon must be >= 2, got " + std::to_string(horizon));
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(horizon))));
}

}  // namespace pab
