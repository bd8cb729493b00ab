#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pab/cipa.hpp"
#include "pab/errors.hpp"

using namespace pab;

namespace {

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

ContextualInstance small_instance(int d, double sigma = 1.0) {
  ContextualInstance inst;
  inst.d = d;
  inst.theta_star = Eigen::VectorXd::Zero(d);
  inst.s_star = Eigen::VectorXd::Zero(d);
  inst.theta_star[0] = 0.5;
  inst.s_star[0] = 0.6;
  if (d > 1) {
    inst.theta_star[1] = -0.3;
    inst.s_star[1] = 0.4;
  }
  inst.m = 6;
  inst.noise.sigma = sigma;
  return inst;
}

}  // namespace

TEST_CASE("check_Et: fresh ball fails, tiny box passes, singleton is vacuous") {
  const int T = 100;
  ConvexBody ball(2);
  std::vector<Eigen::VectorXd> actions{vec2(1, 0), vec2(0, 1), vec2(-0.4, 0.2)};
  CHECK_FALSE(check_Et(ball, actions, T));

  // Box of halfwidth 1/(4 T sqrt(d)) around a point: diameter along any unit
  // direction is below 1/T.
  const double h = 1.0 / (4.0 * T * std::sqrt(2.0));
  ConvexBody box(2);
  const Eigen::VectorXd c = vec2(0.3, -0.2);
  box = box.cut(vec2(1, 0), c[0] + h, KeepSide::leq);
  box = box.cut(vec2(1, 0), c[0] - h, KeepSide::geq);
  box = box.cut(vec2(0, 1), c[1] + h, KeepSide::leq);
  box = box.cut(vec2(0, 1), c[1] - h, KeepSide::geq);
  CHECK(check_Et(box, actions, T));

  std::vector<Eigen::VectorXd> singleton{vec2(0.5, 0.5)};
  CHECK(check_Et(ball, singleton, T));
}

TEST_CASE("estimate_incentive_ctx: favorite action costs exactly 2/T") {
  const int T = 500;
  std::vector<Eigen::VectorXd> actions{vec2(1, 0), vec2(0, 1), vec2(0.2, 0.9)};
  const Eigen::VectorXd s_hat = vec2(0.1, 0.7);
  // Favorite under s_hat is action 1.
  CHECK(estimate_incentive_ctx(s_hat, actions, 1, T) == doctest::Approx(2.0 / T).epsilon(1e-12));
  CHECK(estimate_incentive_ctx(s_hat, actions, 0, T) ==
        doctest::Approx(0.7 - 0.1 + 2.0 / T).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_incentive_ctx(s_hat, actions, 7, T), InputError);
}

TEST_CASE("corruption-robust subroutine: prior-only decision maximizes the norm term") {
  CorruptionRobustLinUcb alg(2, 1000);
  std::vector<Eigen::VectorXd> actions{vec2(0.2, 0.0), vec2(0.0, 0.9), vec2(0.5, 0.5)};
  // With design = I, the score is beta * |a|.
  CHECK(alg.next(actions) == 1);
  CHECK(alg.theta_hat().norm() == 0.0);
}

TEST_CASE("corruption-robust subroutine: ridge estimate converges without noise") {
  const int d = 2;
  CorruptionRobustLinUcb alg(d, 10000);
  Eigen::VectorXd theta(2);
  theta << 0.7, -0.4;
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    a[t % 2] = 1.0;
    alg.observe(a, theta.dot(a));
  }
  CHECK((alg.theta_hat() - theta).norm() < 0.05);
}

TEST_CASE("corruption-robust subroutine: weights cap at alpha over the norm") {
  const int d = 2;
  CorruptionRobustLinUcb alg(d, 1000);
  const double alpha = std::sqrt(2.0) / 4.0;
  // Fresh design = I: |a|_inv = |a|.
  Eigen::VectorXd big = vec2(0.9, 0.0);   // norm above alpha -> weight < 1
  Eigen::VectorXd small = vec2(0.1, 0.0); // norm below alpha -> weight 1
  CHECK(alg.weight(big) == doctest::Approx(alpha / 0.9));
  CHECK(alg.weight(big) < 1.0);
  CHECK(alg.weight(small) == 1.0);

  // Radius formula at t = 0: sqrt(lambda) + sqrt(d ln((1+0)/delta)) + alpha C.
  const double expected = 1.0 + std::sqrt(2.0 * std::log(1000.0)) + alpha * 4.0;
  CHECK(alg.confidence_radius() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("projected-volume step: hand-set geometry") {
  ContextualInstance inst;
  inst.d = 2;
  inst.theta_star = vec2(0.0, 0.0);
  inst.s_star = vec2(0.6, 0.8);
  inst.m = 2;
  const int T = 1000;
  CipaState state(inst, T, 7);

  std::vector<Eigen::VectorXd> actions{vec2(1, 0), vec2(0, 1)};
  CHECK_FALSE(state.is_Et(actions));

  CipaTrajectory traj;
  state.play_round(1, actions, traj);
  REQUIRE(traj.rounds.size() == 1);
  const auto& r = traj.rounds[0];
  CHECK(r.search);
  CHECK(r.cut_count == 1);
  // Offers are base and base + <s_hat, a1 - a2>, both at least 3.
  CHECK(r.offer1 == doctest::Approx(3.0));
  CHECK(r.offer2 >= 3.0);
  // The agent (s* = (0.6, 0.8)) must pick within the offered pair.
  CHECK((r.chosen == r.a1 || r.chosen == r.a2));
  // The cut keeps s* inside.
  CHECK(state.body().contains(inst.s_star, 1e-9));
}

TEST_CASE("feedback sign: agent picking a2 keeps the leq side with s* inside") {
  ContextualInstance inst;
  inst.d = 2;
  inst.theta_star = vec2(0.0, 0.0);
  inst.s_star = vec2(-0.7, 0.1);  // prefers -e1-ish directions
  inst.m = 2;
  CipaState state(inst, 1000, 3);
  std::vector<Eigen::VectorXd> actions{vec2(1, 0), vec2(0, 1)};
  CipaTrajectory traj;
  state.play_round(1, actions, traj);
  const auto& r = traj.rounds[0];
  // <s*, a1 - a2> determines the choice; s* stays inside either way.
  CHECK(state.body().contains(inst.s_star, 1e-9));
  CHECK((r.chosen == r.a1 || r.chosen == r.a2));
}

TEST_CASE("cipa run: soundness, compliance and corruption accounting (d=2)") {
  const auto inst = small_instance(2);
  const int T = 300;
  const auto traj = run_cipa(inst, T, 11);
  REQUIRE(static_cast<int>(traj.rounds.size()) == T);

  int bandit_rounds = 0;
  for (const auto& r : traj.rounds) {
    if (r.search) continue;
    ++bandit_rounds;
    CHECK(r.chosen == r.recommended);
    CHECK(std::abs(r.eps_t) <= 4.0 / T + 1e-12);
    CHECK(r.eps_t <= 0.0);  // estimates overshoot pi*
  }
  CHECK(bandit_rounds > 0);
  CHECK(traj.corruption_sum <= 4.0 + 1e-9);
  CHECK(traj.cut_count <= cut_count_bound(2, T));
  CHECK(traj.cut_count + bandit_rounds == T);
}

TEST_CASE("cipa run: search-round regret increments stay below 7") {
  const auto inst = small_instance(2, 0.0);
  const int T = 200;
  const auto traj = run_cipa(inst, T, 5);
  const auto curve = regret_curve(traj, inst);
  double prev = 0.0;
  for (std::size_t i = 0; i < traj.rounds.size(); ++i) {
    if (traj.rounds[i].search) CHECK(curve[i] - prev <= 7.0 + 1e-9);
    prev = curve[i];
  }
}

TEST_CASE("cipa trajectory CSV carries the contextual columns") {
  const auto inst = small_instance(2);
  const auto traj = run_cipa(inst, 128, 2);
  std::ostringstream out;
  write_trajectory_csv(traj, inst, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,phase,a1,a2,rec,chosen,reward,paid,epsilon_t,cut_count,cum_regret");
}

TEST_CASE("cipa run is deterministic in the seed") {
  const auto inst = small_instance(2);
  const auto t1 = run_cipa(inst, 150, 9);
  const auto t2 = run_cipa(inst, 150, 9);
  REQUIRE(t1.rounds.size() == t2.rounds.size());
  for (std::size_t i = 0; i < t1.rounds.size(); ++i) {
    CHECK(t1.rounds[i].chosen == t2.rounds[i].chosen);
    CHECK(t1.rounds[i].reward == t2.rounds[i].reward);
    CHECK(t1.rounds[i].paid == t2.rounds[i].paid);
  }
  CHECK(t1.cut_count == t2.cut_count);
}
