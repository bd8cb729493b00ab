#include "pab/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pab/errors.hpp"

namespace pab {

namespace {

constexpr std::uint64_t kActionStream = 0xac710500;

void check_noise(const NoiseSpec& n) {
  if (n.kind != "gaussian")
    throw ConfigError("noise.kind: unsupported value '" + n.kind + "' (expected 'gaussian')");
  if (!(n.sigma >= 0.0) || !std::isfinite(n.sigma))
    throw ConfigError("noise.sigma: must be a finite value >= 0");
}

// Picks one index from the tied argmax set according to the tie rule.
int resolve_tie(const std::vector<int>& tied, const ContextualOffer& offer, TieBreak tie) {
  if (tie == TieBreak::lexicographic) return tied.front();
  // Adversarial: refuse the offer if possible, otherwise take the cheapest
  // supported action.
  for (int a : tied)
    if (!offer.in_support(a)) return a;
  int best = tied.front();
  for (int a : tied)
    if (offer.amount_on(a) < offer.amount_on(best)) best = a;
  return best;
}

}  // namespace

double ContextualOffer::amount_on(int action) const {
  for (const auto& [a, amt] : entries)
    if (a == action) return amt;
  return 0.0;
}

bool ContextualOffer::in_support(int action) const {
  for (const auto& [a, amt] : entries)
    if (a == action) return true;
  return false;
}

// ---------------------------------------------------------------------------
// MabInstance
// ---------------------------------------------------------------------------

void MabInstance::validate() const {
  if (k < 1) throw ConfigError("k: arm count must be >= 1");
  if (static_cast<int>(s.size()) != k)
    throw ConfigError("s: expected " + std::to_string(k) + " entries, got " +
                      std::to_string(s.size()));
  if (static_cast<int>(theta.size()) != k)
    throw ConfigError("theta: expected " + std::to_string(k) + " entries, got " +
                      std::to_string(theta.size()));
  for (int a = 0; a < k; ++a) {
    if (!(s[a] >= 0.0 && s[a] <= 1.0))
      throw ConfigError("s[" + std::to_string(a) + "]: value " + std::to_string(s[a]) +
                        " outside [0,1]");
    if (!std::isfinite(theta[a]))
      throw ConfigError("theta[" + std::to_string(a) + "]: not finite");
  }
  check_noise(noise);
}

double MabInstance::theta_range() const {
  auto [mn, mx] = std::minmax_element(theta.begin(), theta.end());
  return *mx - *mn;
}

MabInstance MabInstance::table3() {
  MabInstance inst;
  inst.k = 5;
  inst.s = {0.64, 0.99, 0.73, 0.61, 0.59};
  inst.theta = {0.30, 0.24, 0.88, 0.07, 0.65};
  inst.noise = NoiseSpec{"gaussian", 1.0};
  return inst;
}

int agent_choice_mab(const MabInstance& inst, const IncentiveOffer& offer, TieBreak tie) {
  if (offer.target < 0 || offer.target >= inst.k)
    throw InputError("offer target " + std::to_string(offer.target) + " outside [0," +
                     std::to_string(inst.k) + ")");
  if (offer.amount < 0.0) throw InputError("offer amount must be >= 0");

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> tied;
  for (int a = 0; a < inst.k; ++a) {
    double u = inst.s[a] + (a == offer.target ? offer.amount : 0.0);
    if (u > best) {
      best = u;
      tied.assign(1, a);
    } else if (u == best) {
      tied.push_back(a);
    }
  }
  ContextualOffer as_map{{{offer.target, offer.amount}}};
  return resolve_tie(tied, as_map, tie);
}

double optimal_incentive_mab(const MabInstance& inst, int arm) {
  if (arm < 0 || arm >= inst.k)
    throw InputError("arm " + std::to_string(arm) + " outside [0," + std::to_string(inst.k) + ")");
  return *std::max_element(inst.s.begin(), inst.s.end()) - inst.s[arm];
}

Benchmark benchmark_mu(const MabInstance& inst) {
  Benchmark b;
  b.mu.resize(inst.k);
  for (int a = 0; a < inst.k; ++a) b.mu[a] = inst.theta[a] - optimal_incentive_mab(inst, a);
  b.mu_star = *std::max_element(b.mu.begin(), b.mu.end());
  return b;
}

double draw_reward(const MabInstance& inst, int arm, Rng& rng) {
  if (arm < 0 || arm >= inst.k)
    throw InputError("arm " + std::to_string(arm) + " outside [0," + std::to_string(inst.k) + ")");
  return rng.gaussian(inst.theta[arm], inst.noise.sigma);
}

// ---------------------------------------------------------------------------
// ContextualInstance
// ---------------------------------------------------------------------------

void ContextualInstance::validate() const {
  if (d < 1) throw ConfigError("d: dimension must be >= 1");
  if (theta_star.size() != d)
    throw ConfigError("theta_star: expected " + std::to_string(d) + " entries, got " +
                      std::to_string(theta_star.size()));
  if (s_star.size() != d)
    throw ConfigError("s_star: expected " + std::to_string(d) + " entries, got " +
                      std::to_string(s_star.size()));
  constexpr double kNormSlack = 1e-9;
  if (theta_star.norm() > 1.0 + kNormSlack)
    throw ConfigError("theta_star: norm " + std::to_string(theta_star.norm()) + " exceeds 1");
  if (s_star.norm() > 1.0 + kNormSlack)
    throw ConfigError("s_star: norm " + std::to_string(s_star.norm()) + " exceeds 1");
  if (m < 1) throw ConfigError("m: actions per round must be >= 1");
  check_noise(noise);
}

std::vector<Eigen::VectorXd> ContextualInstance::actions_for_round(std::uint64_t run_seed,
                                                                   int t) const {
  Rng rng(derive_seed(derive_seed(run_seed, kActionStream), static_cast<std::uint64_t>(t)));
  std::vector<Eigen::VectorXd> actions;
  actions.reserve(m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd v(d);
    double n2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) v[j] = rng.gaussian();
      n2 = v.squaredNorm();
    } while (n2 < 1e-24);
    v *= rng.uniform() / std::sqrt(n2);
    actions.push_back(std::move(v));
  }
  return actions;
}

double ContextualInstance::draw_reward(const Eigen::VectorXd& action, Rng& rng) const {
  return rng.gaussian(theta_star.dot(action), noise.sigma);
}

int agent_choice_contextual(const std::vector<Eigen::VectorXd>& actions,
                            const Eigen::VectorXd& s_star, const ContextualOffer& offer,
                            TieBreak tie) {
  const int n = static_cast<int>(actions.size());
  if (n == 0) throw InputError("action set is empty");
  for (const auto& [a, amt] : offer.entries) {
    if (a < 0 || a >= n)
      throw InputError("offer support index " + std::to_string(a) + " outside action set");
    if (amt < 0.0) throw InputError("offer amount must be >= 0");
  }

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> tied;
  for (int a = 0; a < n; ++a) {
    double u = s_star.dot(actions[a]) + offer.amount_on(a);
    if (u > best) {
      best = u;
      tied.assign(1, a);
    } else if (u == best) {
      tied.push_back(a);
    }
  }
  return resolve_tie(tied, offer, tie);
}

double optimal_incentive_contextual(const Eigen::VectorXd& s_star,
                                    const std::vector<Eigen::VectorXd>& actions, int a) {
  if (a < 0 || a >= static_cast<int>(actions.size()))
    throw InputError("action index " + std::to_string(a) + " outside action set");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& act : actions) best = std::max(best, s_star.dot(act));
  return best - s_star.dot(actions[a]);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

NoiseSpec noise_from_json(const nlohmann::json& j) {
  NoiseSpec n;
  if (j.contains("noise")) {
    const auto& jn = j.at("noise");
    if (!jn.is_object()) throw ConfigError("noise: expected an object {kind, sigma}");
    if (jn.contains("kind")) {
      if (!jn.at("kind").is_string()) throw ConfigError("noise.kind: expected a string");
      n.kind = jn.at("kind").get<std::string>();
    }
    if (jn.contains("sigma")) {
      if (!jn.at("sigma").is_number()) throw ConfigError("noise.sigma: expected a number");
      n.sigma = jn.at("sigma").get<double>();
    }
  }
  return n;
}

std::vector<double> vector_field(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(key + ": missing required field");
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw ConfigError(key + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ConfigError(key + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(arr[i].get<double>());
  }
  return out;
}

int int_field(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(key + ": missing required field");
  if (!j.at(key).is_number_integer()) throw ConfigError(key + ": expected an integer");
  return j.at(key).get<int>();
}

}  // namespace

nlohmann::json to_json(const MabInstance& inst) {
  return nlohmann::json{{"k", inst.k},
                        {"s", inst.s},
                        {"theta", inst.theta},
                        {"noise", {{"kind", inst.noise.kind}, {"sigma", inst.noise.sigma}}}};
}

nlohmann::json to_json(const ContextualInstance& inst) {
  std::vector<double> th(inst.theta_star.data(), inst.theta_star.data() + inst.d);
  std::vector<double> ss(inst.s_star.data(), inst.s_star.data() + inst.d);
  return nlohmann::json{{"d", inst.d},
                        {"theta_star", th},
                        {"s_star", ss},
                        {"m", inst.m},
                        {"noise", {{"kind", inst.noise.kind}, {"sigma", inst.noise.sigma}}}};
}

MabInstance mab_from_json(const nlohmann::json& j) {
  MabInstance inst;
  inst.k = int_field(j, "k");
  inst.s = vector_field(j, "s");
  inst.theta = vector_field(j, "theta");
  inst.noise = noise_from_json(j);
  inst.validate();
  return inst;
}

ContextualInstance contextual_from_json(const nlohmann::json& j) {
  ContextualInstance inst;
  inst.d = int_field(j, "d");
  auto th = vector_field(j, "theta_star");
  auto ss = vector_field(j, "s_star");
  inst.theta_star = Eigen::Map<Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
  inst.s_star = Eigen::Map<Eigen::VectorXd>(ss.data(), static_cast<Eigen::Index>(ss.size()));
  inst.m = j.contains("m") ? int_field(j, "m") : 10;
  inst.noise = noise_from_json(j);
  inst.validate();
  return inst;
}

}  // namespace pab
