#include <doctest.h>

#include <cmath>
#include <vector>

#include "pab/binsearch.hpp"
#include "pab/env.hpp"
#include "pab/errors.hpp"
#include "pab/rng.hpp"

using namespace pab;

namespace {
AgentOracle oracle_for(const MabInstance& inst, TieBreak tie) {
  return [&inst, tie](int target, double amount) {
    return agent_choice_mab(inst, {target, amount}, tie);
  };
}
}  // namespace

TEST_CASE("hand simulation on table3 arm index 2") {
  const auto inst = MabInstance::table3();  // pi*_2 = 0.26
  const auto br = binary_search_arm(oracle_for(inst, TieBreak::adversarial), 2, 2, inst.k);
  CHECK(br.lower == doctest::Approx(0.25));
  CHECK(br.upper == doctest::Approx(0.5));
  CHECK(br.steps == 2);
}

TEST_CASE("zero steps returns the [0,1] initialization") {
  const auto inst = MabInstance::table3();
  const auto br = binary_search_arm(oracle_for(inst, TieBreak::adversarial), 0, 0, inst.k);
  CHECK(br.lower == 0.0);
  CHECK(br.upper == 1.0);
  CHECK(br.steps == 0);
}

TEST_CASE("argmax arm: every midpoint accepted, bracket [0, 2^-n]") {
  const auto inst = MabInstance::table3();  // arm 1 maximizes s
  for (TieBreak tie : {TieBreak::adversarial, TieBreak::lexicographic}) {
    const auto br = binary_search_arm(oracle_for(inst, tie), 1, 6, inst.k);
    CHECK(br.lower == 0.0);
    CHECK(br.upper == doctest::Approx(std::pow(2.0, -6)).epsilon(1e-15));
  }
}

TEST_CASE("monotone nesting and exact halving across steps") {
  const auto inst = MabInstance::table3();
  double prev_lo = 0.0, prev_hi = 1.0;
  int steps_seen = 0;
  auto hook = [&](int step, double mid, int chosen, const IncentiveBracket& br) {
    CHECK(br.lower >= prev_lo);
    CHECK(br.upper <= prev_hi);
    CHECK(mid >= prev_lo);
    CHECK(mid <= prev_hi);
    CHECK((chosen == 2 ? br.upper : br.lower) == mid);  // exact dyadic arithmetic
    CHECK(std::abs(br.width() - std::pow(2.0, -(step + 1))) < 1e-12);
    prev_lo = br.lower;
    prev_hi = br.upper;
    ++steps_seen;
  };
  binary_search_arm(oracle_for(inst, TieBreak::adversarial), 2, 20, inst.k, hook);
  CHECK(steps_seen == 20);
}

TEST_CASE("containment on random instances, both tie policies") {
  Rng rng(2024);
  for (int it = 0; it < 1000; ++it) {
    MabInstance inst;
    inst.k = 1 + rng.uniform_int(10);
    for (int a = 0; a < inst.k; ++a) {
      inst.s.push_back(rng.uniform());
      inst.theta.push_back(0.0);
    }
    const int arm = rng.uniform_int(inst.k);
    const double pi_star = optimal_incentive_mab(inst, arm);
    const TieBreak tie = (it % 2 == 0) ? TieBreak::adversarial : TieBreak::lexicographic;
    auto hook = [&](int, double, int, const IncentiveBracket& br) {
      CHECK(br.lower <= pi_star);
      CHECK(br.upper >= pi_star);
      CHECK(br.lower >= 0.0);
      CHECK(br.upper <= 1.0);
    };
    binary_search_arm(oracle_for(inst, tie), arm, 1 + rng.uniform_int(16), inst.k, hook);
  }
}

TEST_CASE("midpoint exactly equal to pi*: adversarial refusal keeps containment") {
  // pi*_0 = 0.5 is hit exactly by the first midpoint.
  MabInstance inst;
  inst.k = 2;
  inst.s = {0.25, 0.75};
  inst.theta = {0.0, 0.0};
  const auto br = binary_search_arm(oracle_for(inst, TieBreak::adversarial), 0, 8, inst.k);
  CHECK(br.lower <= 0.5);
  CHECK(br.upper >= 0.5);
  // Lexicographic accepts at equality, so pi* becomes the upper bound.
  const auto br2 = binary_search_arm(oracle_for(inst, TieBreak::lexicographic), 0, 8, inst.k);
  CHECK(br2.upper == doctest::Approx(0.5));
}

TEST_CASE("estimate_incentive formula and sandwich") {
  CHECK(estimate_incentive({0.25, 0.26, 10}, 100) == doctest::Approx(0.27));
  CHECK(estimate_incentive({0.0, 0.0, 5}, 10) == doctest::Approx(0.1));

  // T = 1e4: width 2^-14 plus 1e-4 stays within 2e-4 of pi*.
  const auto inst = MabInstance::table3();
  const int T = 10000;
  const int n = search_steps_for_horizon(T);
  CHECK(n == 14);
  for (int arm = 0; arm < inst.k; ++arm) {
    const auto br = binary_search_arm(oracle_for(inst, TieBreak::adversarial), arm, n, inst.k);
    const double pi_hat = estimate_incentive(br, T);
    const double pi_star = optimal_incentive_mab(inst, arm);
    CHECK(pi_hat > pi_star);
    CHECK(pi_hat - pi_star <= 2.0 / T);
  }
}

TEST_CASE("offering the estimate forces the arm under adversarial ties") {
  Rng rng(88);
  for (int it = 0; it < 200; ++it) {
    MabInstance inst;
    inst.k = 2 + rng.uniform_int(6);
    for (int a = 0; a < inst.k; ++a) {
      inst.s.push_back(rng.uniform());
      inst.theta.push_back(0.0);
    }
    const int T = 100 + rng.uniform_int(5000);
    const int arm = rng.uniform_int(inst.k);
    const auto br = binary_search_arm(oracle_for(inst, TieBreak::adversarial), arm,
                                      search_steps_for_horizon(T), inst.k);
    const double pi_hat = estimate_incentive(br, T);
    CHECK(agent_choice_mab(inst, {arm, pi_hat}, TieBreak::adversarial) == arm);
  }
}

TEST_CASE("protocol and input errors") {
  auto bad_oracle = [](int, double) { return 99; };
  CHECK_THROWS_AS(binary_search_arm(bad_oracle, 0, 3, 5), ProtocolError);
  auto ok = [](int, double) { return 0; };
  CHECK_THROWS_AS(binary_search_arm(ok, -1, 3, 5), InputError);
  CHECK_THROWS_AS(binary_search_arm(ok, 0, -1, 5), InputError);
  CHECK_THROWS_AS(search_steps_for_horizon(1), ConfigError);
}
