#include "pab/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pab/errors.hpp"

namespace pab {

// ---------------------------------------------------------------------------
// UCB (fixed horizon)
// ---------------------------------------------------------------------------

UcbPolicy::UcbPolicy(int k, int horizon)
    : k_(k),
      log_horizon_(std::log(static_cast<double>(horizon))),
      counts_(k, 0),
      means_(k, 0.0) {
  if (k < 1) throw InputError("UcbPolicy: k must be >= 1");
  if (horizon < 2) throw InputError("UcbPolicy: horizon must be >= 2");
}

double UcbPolicy::index(int arm) const {
  if (counts_[arm] == 0) return std::numeric_limits<double>::infinity();
  return means_[arm] + 2.0 * std::sqrt(log_horizon_ / counts_[arm]);
}

int UcbPolicy::next(double /*u*/) {
  ++rounds_;
  if (rounds_ <= k_) return rounds_ - 1;  // initialization sweep
  int best = 0;
  double best_index = index(0);
  for (int a = 1; a < k_; ++a) {
    double idx = index(a);
    if (idx > best_index) {
      best_index = idx;
      best = a;
    }
  }
  return best;
}

void UcbPolicy::observe(int arm, double reward) {
  ++counts_[arm];
  means_[arm] += (reward - means_[arm]) / counts_[arm];
}

// ---------------------------------------------------------------------------
// Epsilon-greedy
// ---------------------------------------------------------------------------

EpsGreedyPolicy::EpsGreedyPolicy(int k, int m, double alpha)
    : k_(k), m_(m), alpha_(alpha), counts_(k, 0), means_(k, 0.0) {
  if (k < 1) throw InputError("EpsGreedyPolicy: k must be >= 1");
  if (m < 1) throw InputError("EpsGreedyPolicy: m must be >= 1");
  if (!(alpha > 0.0)) throw InputError("EpsGreedyPolicy: alpha must be > 0");
}

double EpsGreedyPolicy::explore_probability(int t) const {
  return std::min(1.0, static_cast<double>(m_) * k_ / (alpha_ * t));
}

int EpsGreedyPolicy::next(double u) {
  ++rounds_;
  const double p = explore_probability(rounds_);
  if (u < p) {
    // Reuse the draw: u/p is uniform given the explore branch.
    int arm = static_cast<int>(u / p * k_);
    return std::min(arm, k_ - 1);
  }
  int best = 0;
  for (int a = 1; a < k_; ++a)
    if (means_[a] > means_[best]) best = a;
  return best;
}

void EpsGreedyPolicy::observe(int arm, double reward) {
  ++counts_[arm];
  means_[arm] += (reward - means_[arm]) / counts_[arm];
}

// ---------------------------------------------------------------------------

void replay(BanditPolicy& policy, const ShiftedHistory& history) {
  for (const auto& rec : history.records) {
    policy.next(rec.u);
    policy.observe(rec.recommended, rec.shifted_reward);
  }
}

std::unique_ptr<BanditPolicy> make_policy(const std::string& name, int k, int horizon, int m,
                                          double alpha) {
  if (name == "ucb") return std::make_unique<UcbPolicy>(k, horizon);
  if (name == "eps-greedy") return std::make_unique<EpsGreedyPolicy>(k, m, alpha);
  throw ConfigError("unknown bandit subroutine '" + name + "' (expected ucb|eps-greedy)");
}

std::vector<double> reward_gaps(const MabInstance& inst) {
  std::vector<double> sums(inst.k);
  for (int a = 0; a < inst.k; ++a) sums[a] = inst.theta[a] + inst.s[a];
  const double best = *std::max_element(sums.begin(), sums.end());
  std::vector<double> gaps(inst.k);
  for (int a = 0; a < inst.k; ++a) gaps[a] = best - sums[a];
  return gaps;
}

double corollary1_bound(const MabInstance& inst, int horizon) {
  if (horizon < 2) throw InputError("corollary1_bound: horizon must be >= 2");
  const double T = static_cast<double>(horizon);
  const auto gaps = reward_gaps(inst);

  double gap_sum = 0.0;
  double inv_gap_sum = 0.0;
  bool any_gap = false;
  for (double g : gaps) {
    if (g > 0.0) {
      any_gap = true;
      gap_sum += g;
      inv_gap_sum += 4.0 * std::log(T) / g;
    }
  }

  const double range_term =
      (1.0 + inst.theta_range()) * (1.0 + 9.0 * inst.k * std::log2(T));
  const double min_term =
      any_gap ? std::min(std::sqrt(T * inst.k * std::log(T)), inv_gap_sum) : 0.0;
  return 3.0 + 3.0 * gap_sum + range_term + 8.0 * min_term;
}

}  // namespace pab
