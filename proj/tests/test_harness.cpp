#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pab/bandit.hpp"
#include "pab/errors.hpp"
#include "pab/harness.hpp"

using namespace pab;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("oracle ucb plays the shifted instance with mu* = 0.62") {
  const auto inst = MabInstance::table3();
  const auto traj = oracle_ucb_run(inst, 2000, 1);
  const auto bench = benchmark_mu(inst);
  CHECK(bench.mu_star == doctest::Approx(0.62));
  // Every round pays exactly pi*_rec, so the net mean is mu_rec.
  for (const auto& r : traj.rounds) {
    CHECK(r.paid == doctest::Approx(optimal_incentive_mab(inst, r.chosen)));
    CHECK(r.chosen == r.recommended);
  }
}

TEST_CASE("oracle ucb: single arm has zero regret") {
  MabInstance inst;
  inst.k = 1;
  inst.s = {0.2};
  inst.theta = {0.7};
  const auto traj = oracle_ucb_run(inst, 500, 3);
  const auto curve = regret_curve(traj, inst);
  CHECK(curve.back() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("oracle ucb: mean regret at 1e4 below the distribution-free term") {
  const auto inst = MabInstance::table3();
  double total = 0.0;
  const int seeds = 100;
  for (int s = 1; s <= seeds; ++s) {
    const auto traj = oracle_ucb_run(inst, 10000, static_cast<std::uint64_t>(s));
    total += regret_curve(traj, inst).back();
  }
  const double mean = total / seeds;
  CHECK(mean < 8.0 * std::sqrt(1e4 * 5 * std::log(1e4)));
}

TEST_CASE("eps-greedy principal explores heavily early and is much worse than oracle") {
  const auto inst = MabInstance::table3();
  const auto traj = run_eps_greedy_principal(inst, 4000, 2);
  // Rounds t <= mK always explore with transfer 1.
  int paid_full = 0;
  for (int t = 0; t < 2000; ++t)
    if (traj.rounds[t].offer_amount == 1.0) ++paid_full;
  CHECK(paid_full == 2000);
  const auto curve = regret_curve(traj, inst);
  const auto oracle = regret_curve(oracle_ucb_run(inst, 4000, 2), inst);
  CHECK(curve.back() > oracle.back());
}

TEST_CASE("experiment config parsing, presets and validation") {
  const auto cfg = ExperimentConfig::figure1_preset();
  CHECK(cfg.setting == "mab");
  CHECK(cfg.horizon == 10000);
  CHECK(cfg.seeds.count == 100);
  CHECK(cfg.algorithms.size() == 3);

  nlohmann::json j{{"setting", "mab"},
                   {"instance", "table3"},
                   {"T", 500},
                   {"seeds", {{"count", 2}, {"base", 7}}},
                   {"algorithms", {"oracle-ucb"}},
                   {"plot", false}};
  const auto parsed = ExperimentConfig::from_json(j);
  CHECK(parsed.horizon == 500);
  CHECK(parsed.seeds.base == 7);

  auto bad = j;
  bad["T"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
  auto bad2 = j;
  bad2["algorithms"] = nlohmann::json::array({"cipa"});
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad2), ConfigError);
  auto bad3 = j;
  bad3["algorithms"] = nlohmann::json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad3), ConfigError);
}

TEST_CASE("run_experiment writes deterministic CSVs and a summary") {
  ExperimentConfig cfg;
  cfg.setting = "mab";
  cfg.mab = MabInstance::table3();
  cfg.horizon = 300;
  cfg.seeds = {3, 5};
  cfg.algorithms = {{"ipa", "ucb", 500, 1.0}, {"oracle-ucb", "ucb", 500, 1.0}};
  cfg.output_dir = (std::filesystem::temp_directory_path() / "pab_test_out").string();
  cfg.plot = true;
  std::filesystem::remove_all(cfg.output_dir);

  const auto result = run_experiment(cfg);
  REQUIRE(result.algorithms.size() == 2);
  CHECK(result.algorithms[0].label == "ipa_ucb");
  for (const auto& ar : result.algorithms) {
    REQUIRE(ar.curves.size() == 3);
    for (const auto& c : ar.curves) CHECK(c.size() == 300);
  }
  const std::string first = slurp(cfg.output_dir + "/ipa_ucb.csv");
  const std::string summary1 = slurp(cfg.output_dir + "/summary.csv");
  CHECK(std::filesystem::exists(cfg.output_dir + "/regret.svg"));

  // Same base seed, byte-identical outputs.
  run_experiment(cfg);
  CHECK(slurp(cfg.output_dir + "/ipa_ucb.csv") == first);
  CHECK(slurp(cfg.output_dir + "/summary.csv") == summary1);

  // Summary mean/stderr recomputable from the per-seed curves.
  const auto summary = summarize(result);
  for (std::size_t a = 0; a < summary.labels.size(); ++a) {
    for (int t = 0; t < 300; t += 37) {
      double mean = 0.0;
      for (const auto& c : result.algorithms[a].curves) mean += c[t];
      mean /= 3.0;
      CHECK(summary.mean[a][t] == doctest::Approx(mean).epsilon(1e-9));
      double var = 0.0;
      for (const auto& c : result.algorithms[a].curves) var += (c[t] - mean) * (c[t] - mean);
      const double se = std::sqrt(var / 2.0) / std::sqrt(3.0);
      CHECK(summary.stderr_[a][t] == doctest::Approx(se).epsilon(1e-9));
    }
  }
  std::filesystem::remove_all(cfg.output_dir);
}

TEST_CASE("single seed: stderr column is all zeros") {
  ExperimentConfig cfg;
  cfg.setting = "mab";
  cfg.mab = MabInstance::table3();
  cfg.horizon = 200;
  cfg.seeds = {1, 9};
  cfg.algorithms = {{"oracle-ucb", "ucb", 500, 1.0}};
  cfg.output_dir = (std::filesystem::temp_directory_path() / "pab_test_single").string();
  cfg.plot = false;
  const auto result = run_experiment(cfg);
  const auto summary = summarize(result);
  for (double v : summary.stderr_[0]) CHECK(v == 0.0);
  std::filesystem::remove_all(cfg.output_dir);
}

TEST_CASE("summary CSV round trip and plot rendering") {
  Summary s;
  s.labels = {"alpha", "beta", "gamma"};
  const int T = 50;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> mean(T), se(T);
    for (int t = 0; t < T; ++t) {
      mean[t] = (a + 1) * std::sqrt(t + 1.0);
      se[t] = 0.1 * (a + 1);
    }
    s.mean.push_back(mean);
    s.stderr_.push_back(se);
  }
  std::stringstream buf;
  write_summary_csv(s, buf);
  const auto parsed = summary_from_csv(buf);
  REQUIRE(parsed.labels == s.labels);
  CHECK(parsed.mean[2][49] == doctest::Approx(s.mean[2][49]).epsilon(1e-9));

  const std::string svg = render_plot_svg(parsed);
  CHECK(svg.find("<svg") != std::string::npos);
  // One legend entry per algorithm.
  for (const auto& label : s.labels) CHECK(svg.find(label) != std::string::npos);

  // Monotone input series renders monotone polyline y-coordinates.
  const auto poly = svg.find("<polyline");
  REQUIRE(poly != std::string::npos);
  const auto points_start = svg.find("points=\"", poly) + 8;
  const auto points_end = svg.find('"', points_start);
  std::istringstream pts(svg.substr(points_start, points_end - points_start));
  std::string pair;
  double prev_y = 1e300;
  while (pts >> pair) {
    const auto comma = pair.find(',');
    const double y = std::stod(pair.substr(comma + 1));
    CHECK(y <= prev_y + 1e-9);  // SVG y axis points down
    prev_y = y;
  }
}

TEST_CASE("plot rejects empty input") {
  Summary empty;
  CHECK_THROWS_AS(render_plot_svg(empty), InputError);
}

TEST_CASE("cli exit codes: 0 ok, 2 config error") {
  const std::string cli = PAB_CLI_PATH;
  const std::string dir = (std::filesystem::temp_directory_path() / "pab_cli_test").string();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  // Valid tiny run.
  {
    nlohmann::json j{{"setting", "mab"},     {"instance", "table3"},
                     {"T", 128},             {"seeds", {{"count", 1}, {"base", 1}}},
                     {"algorithms", {"oracle-ucb"}}, {"output_dir", dir + "/out"},
                     {"plot", true}};
    std::ofstream(dir + "/cfg.json") << j.dump();
    const int rc = std::system((cli + " run --config " + dir + "/cfg.json > /dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(std::filesystem::exists(dir + "/out/summary.csv"));
    CHECK(std::filesystem::exists(dir + "/out/regret.svg"));
  }
  // Missing config file.
  {
    const int rc =
        std::system((cli + " run --config " + dir + "/nope.json 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
  }
  // Invalid instance field.
  {
    nlohmann::json j{{"setting", "mab"},
                     {"instance", {{"k", 2}, {"s", {0.5, 1.4}}, {"theta", {0.1, 0.2}}}},
                     {"T", 64},
                     {"algorithms", {"oracle-ucb"}},
                     {"output_dir", dir + "/out2"}};
    std::ofstream(dir + "/bad.json") << j.dump();
    const int rc = std::system((cli + " run --config " + dir + "/bad.json 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(rc) == 2);
  }
  std::filesystem::remove_all(dir);
}
