#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "pab/env.hpp"
#include "pab/geometry.hpp"

namespace pab {

/// Weighted-ridge parameters for the corruption-robust linear subroutine.
/// Defaults follow the Corollary-2 proof constants: lambda = 1, confidence
/// level 1/T, weight cap alpha = sqrt(d)/4, corruption budget C = 4, and a
/// unit universal constant in the radius.
struct CorruptionRobustParams {
  double lambda = 1.0;
  double alpha = -1.0;       // <= 0 means sqrt(d)/4
  double conf_delta = -1.0;  // <= 0 means 1/T
  double corruption_budget = 4.0;
};

/// CW-OFUL-style linear bandit: weighted regularized least squares with
/// per-sample weights min{1, alpha/||a||_{inv design}} and confidence radius
/// sqrt(lambda) + sqrt(d ln((1+t/lambda)/delta)) + alpha C.
class CorruptionRobustLinUcb {
 public:
  CorruptionRobustLinUcb(int d, int horizon, CorruptionRobustParams params = {});

  /// argmax over the action set of <theta_hat, a> + beta ||a||_{inv design};
  /// ties go to the smallest index.
  int next(const std::vector<Eigen::VectorXd>& actions) const;
  void observe(const Eigen::VectorXd& action, double reward);

  Eigen::VectorXd theta_hat() const;
  double confidence_radius() const;
  double inv_design_norm(const Eigen::VectorXd& a) const;
  double weight(const Eigen::VectorXd& a) const;
  int rounds() const { return rounds_; }

 private:
  int d_;
  CorruptionRobustParams params_;
  Eigen::MatrixXd design_;
  Eigen::VectorXd response_;
  int rounds_ = 0;
};

/// One logged round of the contextual protocol. Search rounds carry the
/// offered pair (a1, a2) with transfers offer1/offer2; bandit rounds carry
/// the recommendation and its estimated incentive.
struct CipaRound {
  int t = 0;
  bool search = false;
  int a1 = -1, a2 = -1;
  int recommended = -1;
  int chosen = 0;
  double offer1 = 0.0, offer2 = 0.0;
  double offer_rec = 0.0;
  double reward = 0.0;
  double paid = 0.0;
  double eps_t = 0.0;  // corruption pi* - pi_hat at the chosen action (E_t rounds)
  int cut_count = 0;   // non-E_t rounds so far, inclusive
  std::vector<Eigen::VectorXd> actions;  // A_t
};

struct CipaTrajectory {
  int horizon = 0;
  int dim = 0;
  std::vector<CipaRound> rounds;
  double corruption_sum = 0.0;  // sum of |eps_t| over E_t rounds
  int cut_count = 0;
};

struct CipaOptions {
  double base_offer = 3.0;  // search-round transfer floor
  int centroid_samples = 4096;
  int centroid_burnin = 200;
  int centroid_thin = 2;
  int thin_search_samples = 512;
  TieBreak tie = TieBreak::adversarial;
};

/// Exhaustive E_t test: true iff every pairwise direction of the action set
/// has projected diameter strictly below 1/T.
bool check_Et(const ConvexBody& body, const std::vector<Eigen::VectorXd>& actions, int horizon);

/// pi_hat(t,a) = max_{a'} <s_hat,a'> - <s_hat,a> + 2/T.
double estimate_incentive_ctx(const Eigen::VectorXd& s_hat,
                              const std::vector<Eigen::VectorXd>& actions, int a, int horizon);

/// Lemma-5 bound on the number of non-E_t rounds: 192 d ln(dT).
double cut_count_bound(int d, int horizon);

/// delta constant for the thin-direction basis: 1 / (16 T^2 d (d+1)^2).
double thin_direction_delta(int d, int horizon);

/// Stateful round-by-round driver, exposed so tests can exercise single
/// protocol steps. Caches per-body-version quantities (sample cloud,
/// centroid, certified diameter bounds) to keep E_t checks cheap.
class CipaState {
 public:
  CipaState(const ContextualInstance& inst, int horizon, std::uint64_t seed,
            CipaOptions options = {});
  ~CipaState();
  CipaState(const CipaState&) = delete;
  CipaState& operator=(const CipaState&) = delete;

  /// Same result as the free check_Et, via cached certified bounds.
  bool is_Et(const std::vector<Eigen::VectorXd>& actions);

  /// Plays round t (dispatching on E_t) and appends the record.
  void play_round(int t, const std::vector<Eigen::VectorXd>& actions, CipaTrajectory& traj);

  const ConvexBody& body() const;
  const DirectionBasis& basis() const;
  const Eigen::VectorXd& s_hat();  // centroid of Cyl(S_t, V_t), lazily refreshed
  const CorruptionRobustLinUcb& subroutine() const;
  int cut_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Full C-IPA run over horizon T.
CipaTrajectory run_cipa(const ContextualInstance& inst, int horizon, std::uint64_t seed,
                        CipaOptions options = {});

/// Lemma-2 regret with mean utilities: per round
/// max_a <theta*+s*, a> - max_a' <s*, a'> - (<theta*, A_t> - paid).
std::vector<double> regret_curve(const CipaTrajectory& traj, const ContextualInstance& inst);

/// CSV columns: t,phase,a1,a2,rec,chosen,reward,paid,epsilon_t,cut_count,cum_regret.
void write_trajectory_csv(const CipaTrajectory& traj, const ContextualInstance& inst,
                          std::ostream& out);

}  // namespace pab
