#include "pab/ipa.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "pab/errors.hpp"
#include "pab/rng.hpp"

namespace pab {

namespace {
constexpr std::uint64_t kRewardStream = 0x4e515d;
constexpr std::uint64_t kPolicyStream = 0x90711c;
}  // namespace

int min_horizon(int k) {
  for (int t = 2;; ++t)
    if (t > k * search_steps_for_horizon(t)) return t;
}

Trajectory run_ipa(const MabInstance& inst, BanditPolicy& policy, int horizon,
                   std::uint64_t seed, TieBreak tie) {
  inst.validate();
  const int n_steps = search_steps_for_horizon(horizon);
  if (horizon <= inst.k * n_steps)
    throw ConfigError("horizon " + std::to_string(horizon) + " too small: need T > K ceil(log2 T) = " +
                      std::to_string(inst.k * n_steps) + " (minimum T = " +
                      std::to_string(min_horizon(inst.k)) + ")");

  Rng reward_rng(derive_seed(seed, kRewardStream));
  Rng policy_rng(derive_seed(seed, kPolicyStream));

  Trajectory traj;
  traj.horizon = horizon;
  traj.rounds.reserve(horizon);
  traj.brackets.resize(inst.k);
  traj.pi_hat.resize(inst.k);

  // Phase 1: binary search, arms in order, ceil(log2 T) steps each.
  int t = 0;
  for (int arm = 0; arm < inst.k; ++arm) {
    auto oracle = [&](int target, double amount) {
      return agent_choice_mab(inst, {target, amount}, tie);
    };
    auto log_step = [&](int /*step*/, double mid, int chosen, const IncentiveBracket& br) {
      ++t;
      RoundRecord r;
      r.t = t;
      r.phase = Phase::search;
      r.offer_arm = arm;
      r.offer_amount = mid;
      r.chosen = chosen;
      r.reward = draw_reward(inst, chosen, reward_rng);
      r.paid = (chosen == arm) ? mid : 0.0;
      r.lower = br.lower;
      r.upper = br.upper;
      traj.rounds.push_back(r);
    };
    traj.brackets[arm] = binary_search_arm(oracle, arm, n_steps, inst.k, log_step);
    traj.pi_hat[arm] = estimate_incentive(traj.brackets[arm], horizon);
  }

  // Phase 2: black-box subroutine on the shifted instance.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (t = inst.k * n_steps + 1; t <= horizon; ++t) {
    const double u = policy_rng.uniform();
    const int rec = policy.next(u);
    if (rec < 0 || rec >= inst.k)
      throw ProtocolError("subroutine recommended arm " + std::to_string(rec) + " outside [0," +
                          std::to_string(inst.k) + ")");
    const double offer = traj.pi_hat[rec];
    const int chosen = agent_choice_mab(inst, {rec, offer}, tie);
    const double x = draw_reward(inst, chosen, reward_rng);
    policy.observe(rec, x - offer);

    RoundRecord r;
    r.t = t;
    r.phase = Phase::bandit;
    r.offer_arm = rec;
    r.offer_amount = offer;
    r.chosen = chosen;
    r.reward = x;
    r.paid = (chosen == rec) ? offer : 0.0;
    r.recommended = rec;
    r.lower = nan;
    r.upper = nan;
    traj.rounds.push_back(r);
  }
  return traj;
}

namespace {

std::vector<double> accumulate_regret(const Trajectory& traj, const MabInstance& inst,
                                      bool realized) {
  const Benchmark bench = benchmark_mu(inst);
  std::vector<double> curve;
  curve.reserve(traj.rounds.size());
  double total = 0.0;
  for (const auto& r : traj.rounds) {
    if (r.chosen < 0 || r.chosen >= inst.k)
      throw InputError("trajectory references arm " + std::to_string(r.chosen) +
                       " outside the instance");
    const double gain = (realized ? r.reward : inst.theta[r.chosen]) - r.paid;
    total += bench.mu_star - gain;
    curve.push_back(total);
  }
  return curve;
}

}  // namespace

std::vector<double> regret_curve(const Trajectory& traj, const MabInstance& inst) {
  return accumulate_regret(traj, inst, false);
}

std::vector<double> regret_curve_realized(const Trajectory& traj, const MabInstance& inst) {
  return accumulate_regret(traj, inst, true);
}

void write_trajectory_csv(const Trajectory& traj, const MabInstance& inst, std::ostream& out) {
  const auto curve = regret_curve(traj, inst);
  out << "t,phase,offer_arm,offer_amount,chosen_arm,reward,paid,lower,upper,cum_regret\n";
  char buf[256];
  for (std::size_t i = 0; i < traj.rounds.size(); ++i) {
    const auto& r = traj.rounds[i];
    const bool search = r.phase == Phase::search;
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.12g,%d,%.12g,%.12g,", r.t,
                  search ? "search" : "bandit", r.offer_arm, r.offer_amount, r.chosen, r.reward,
                  r.paid);
    out << buf;
    if (search) {
      std::snprintf(buf, sizeof(buf), "%.12g,%.12g,", r.lower, r.upper);
      out << buf;
    } else {
      out << ",,";
    }
    std::snprintf(buf, sizeof(buf), "%.12g\n", curve[i]);
    out << buf;
  }
}

}  // namespace pab
