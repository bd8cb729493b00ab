#include "pab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pab/bandit.hpp"
#include "pab/errors.hpp"
#include "pab/rng.hpp"

namespace pab {

namespace {
constexpr std::uint64_t kRewardStream = 0x4e515d;  // matches run_ipa's reward stream
constexpr std::uint64_t kPolicyStream = 0x90711c;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}
}  // namespace

std::string AlgorithmSpec::label() const {
  if (name == "ipa") return "ipa_" + subroutine;
  if (name == "eps-greedy") return "eps_greedy";
  if (name == "oracle-ucb") return "oracle_ucb";
  return name;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (setting != "mab" && setting != "contextual")
    throw ConfigError("setting: expected 'mab' or 'contextual', got '" + setting + "'");
  if (horizon < 2) throw ConfigError("T: horizon must be >= 2");
  if (seeds.count < 1) throw ConfigError("seeds.count: must be >= 1");
  if (algorithms.empty()) throw ConfigError("algorithms: list must be nonempty");
  for (const auto& a : algorithms) {
    const bool mab_algo = a.name == "ipa" || a.name == "oracle-ucb" || a.name == "eps-greedy";
    const bool ctx_algo = a.name == "cipa";
    if (!mab_algo && !ctx_algo)
      throw ConfigError("algorithms: unknown algorithm '" + a.name + "'");
    if (setting == "mab" && !mab_algo)
      throw ConfigError("algorithms: '" + a.name + "' requires the contextual setting");
    if (setting == "contextual" && !ctx_algo)
      throw ConfigError("algorithms: '" + a.name + "' requires the mab setting");
    if (a.name == "ipa" && a.subroutine != "ucb" && a.subroutine != "eps-greedy")
      throw ConfigError("algorithms: unknown subroutine '" + a.subroutine + "'");
  }
  if (setting == "mab")
    mab.validate();
  else
    contextual.validate();
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  ExperimentConfig cfg;
  if (!j.contains("setting")) throw ConfigError("setting: missing required field");
  cfg.setting = j.at("setting").get<std::string>();
  if (!j.contains("T")) throw ConfigError("T: missing required field");
  if (!j.at("T").is_number_integer()) throw ConfigError("T: expected an integer");
  cfg.horizon = j.at("T").get<int>();

  if (!j.contains("instance")) throw ConfigError("instance: missing required field");
  const auto& ji = j.at("instance");
  nlohmann::json inst_doc;
  if (ji.is_string()) {
    const std::string name = ji.get<std::string>();
    if (name != "table3")
      throw ConfigError("instance: unknown built-in '" + name + "' (expected 'table3')");
    if (cfg.setting != "mab") throw ConfigError("instance: 'table3' is a mab instance");
    cfg.mab = MabInstance::table3();
  } else if (ji.is_object() && ji.contains("file")) {
    const std::string path =
        (std::filesystem::path(base_dir) / ji.at("file").get<std::string>()).string();
    std::ifstream in(path);
    if (!in) throw ConfigError("instance.file: cannot open '" + path + "'");
    try {
      in >> inst_doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("instance.file: '" + path + "' is not valid JSON: " + e.what());
    }
  } else if (ji.is_object()) {
    inst_doc = ji;
  } else {
    throw ConfigError("instance: expected 'table3', an inline object or {file: path}");
  }
  if (!inst_doc.is_null() && !inst_doc.empty()) {
    if (cfg.setting == "mab")
      cfg.mab = mab_from_json(inst_doc);
    else
      cfg.contextual = contextual_from_json(inst_doc);
  }

  if (j.contains("seeds")) {
    const auto& js = j.at("seeds");
    if (js.contains("count")) cfg.seeds.count = js.at("count").get<int>();
    if (js.contains("base")) cfg.seeds.base = js.at("base").get<std::uint64_t>();
  }
  if (j.contains("algorithms")) {
    if (!j.at("algorithms").is_array()) throw ConfigError("algorithms: expected an array");
    for (const auto& ja : j.at("algorithms")) {
      AlgorithmSpec a;
      if (ja.is_string()) {
        a.name = ja.get<std::string>();
      } else if (ja.is_object()) {
        if (!ja.contains("name")) throw ConfigError("algorithms[]: missing 'name'");
        a.name = ja.at("name").get<std::string>();
        if (ja.contains("subroutine")) a.subroutine = ja.at("subroutine").get<std::string>();
        if (ja.contains("m")) a.m = ja.at("m").get<int>();
        if (ja.contains("alpha")) a.alpha = ja.at("alpha").get<double>();
      } else {
        throw ConfigError("algorithms[]: expected a string or an object");
      }
      cfg.algorithms.push_back(a);
    }
  }
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("plot")) cfg.plot = j.at("plot").get<bool>();
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

ExperimentConfig ExperimentConfig::figure1_preset() {
  ExperimentConfig cfg;
  cfg.setting = "mab";
  cfg.mab = MabInstance::table3();
  cfg.horizon = 10000;
  cfg.seeds = {100, 1};
  cfg.algorithms = {{"ipa", "ucb", 500, 1.0},
                    {"oracle-ucb", "ucb", 500, 1.0},
                    {"eps-greedy", "ucb", 500, 1.0}};
  cfg.output_dir = "out/figure1";
  cfg.plot = true;
  return cfg;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

Trajectory oracle_ucb_run(const MabInstance& inst, int horizon, std::uint64_t seed) {
  inst.validate();
  if (horizon < 2) throw ConfigError("horizon must be >= 2");
  Rng reward_rng(derive_seed(seed, kRewardStream));
  Rng policy_rng(derive_seed(seed, kPolicyStream));
  UcbPolicy policy(inst.k, horizon);

  Trajectory traj;
  traj.horizon = horizon;
  traj.rounds.reserve(horizon);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int t = 1; t <= horizon; ++t) {
    const int rec = policy.next(policy_rng.uniform());
    const double pi_star = optimal_incentive_mab(inst, rec);
    const double x = draw_reward(inst, rec, reward_rng);
    policy.observe(rec, x - pi_star);  // net reward ~ N(mu_rec, sigma)

    RoundRecord r;
    r.t = t;
    r.phase = Phase::bandit;
    r.offer_arm = rec;
    r.offer_amount = pi_star;
    r.chosen = rec;  // no agent in the loop: the oracle plays the shifted instance
    r.reward = x;
    r.paid = pi_star;
    r.recommended = rec;
    r.lower = nan;
    r.upper = nan;
    traj.rounds.push_back(r);
  }
  return traj;
}

Trajectory run_eps_greedy_principal(const MabInstance& inst, int horizon, std::uint64_t seed,
                                    int m, double alpha, TieBreak tie) {
  inst.validate();
  if (horizon < 2) throw ConfigError("horizon must be >= 2");
  if (m < 1) throw ConfigError("eps-greedy m must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("eps-greedy alpha must be > 0");

  Rng reward_rng(derive_seed(seed, kRewardStream));
  Rng policy_rng(derive_seed(seed, kPolicyStream));

  const int k = inst.k;
  std::vector<int> counts(k, 0);
  std::vector<double> means(k, 0.0);
  std::vector<double> lower(k, 0.0), upper(k, 1.0);  // accept/refuse brackets

  Trajectory traj;
  traj.horizon = horizon;
  traj.rounds.reserve(horizon);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int t = 1; t <= horizon; ++t) {
    const double p = std::min(1.0, static_cast<double>(m) * k / (alpha * t));
    const double u = policy_rng.uniform();
    int target;
    double amount;
    if (u < p) {
      target = std::min(k - 1, static_cast<int>(u / p * k));
      amount = 1.0;  // maximal possible optimal incentive under s in [0,1]
    } else {
      target = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < k; ++a) {
        const double util = means[a] - (upper[a] + 1.0 / horizon);
        if (util > best) {
          best = util;
          target = a;
        }
      }
      amount = (upper[target] - lower[target] > 1.0 / horizon)
                   ? lower[target] + (upper[target] - lower[target]) / 2.0
                   : upper[target] + 1.0 / horizon;
    }

    const int chosen = agent_choice_mab(inst, {target, amount}, tie);
    const double x = draw_reward(inst, chosen, reward_rng);
    ++counts[chosen];
    means[chosen] += (x - means[chosen]) / counts[chosen];
    if (chosen == target)
      upper[target] = std::min(upper[target], amount);
    else
      lower[target] = std::max(lower[target], amount);

    RoundRecord r;
    r.t = t;
    r.phase = Phase::bandit;
    r.offer_arm = target;
    r.offer_amount = amount;
    r.chosen = chosen;
    r.reward = x;
    r.paid = (chosen == target) ? amount : 0.0;
    r.recommended = target;
    r.lower = nan;
    r.upper = nan;
    traj.rounds.push_back(r);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

int worker_count() {
  if (const char* env = std::getenv("PAB_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 2 : static_cast<int>(std::min(hc, 16u));
}

std::vector<double> run_algorithm_curve(const ExperimentConfig& cfg, const AlgorithmSpec& algo,
                                        std::uint64_t seed) {
  if (algo.name == "ipa") {
    auto policy = make_policy(algo.subroutine, cfg.mab.k, cfg.horizon, algo.m, algo.alpha);
    const Trajectory traj = run_ipa(cfg.mab, *policy, cfg.horizon, seed);
    return regret_curve(traj, cfg.mab);
  }
  if (algo.name == "oracle-ucb") {
    const Trajectory traj = oracle_ucb_run(cfg.mab, cfg.horizon, seed);
    return regret_curve(traj, cfg.mab);
  }
  if (algo.name == "eps-greedy") {
    const Trajectory traj =
        run_eps_greedy_principal(cfg.mab, cfg.horizon, seed, algo.m, algo.alpha);
    return regret_curve(traj, cfg.mab);
  }
  if (algo.name == "cipa") {
    const CipaTrajectory traj = run_cipa(cfg.contextual, cfg.horizon, seed);
    return regret_curve(traj, cfg.contextual);
  }
  throw ConfigError("unknown algorithm '" + algo.name + "'");
}

namespace {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;
  for (int w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          failed.store(true);
          if (error.empty()) error = e.what();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load()) throw ProtocolError(error);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw ConfigError("output_dir '" + cfg.output_dir + "': " + ec.message());
  {
    const auto probe = std::filesystem::path(cfg.output_dir) / ".write_probe";
    std::ofstream test(probe);
    if (!test) throw ConfigError("output_dir '" + cfg.output_dir + "' is not writable");
    test.close();
    std::filesystem::remove(probe, ec);
  }

  ExperimentResult result;
  const int workers = worker_count();
  for (const auto& algo : cfg.algorithms) {
    AlgorithmResult ar;
    ar.label = algo.label();
    ar.curves.resize(cfg.seeds.count);
    parallel_for(cfg.seeds.count, workers, [&](int i) {
      ar.curves[i] = run_algorithm_curve(cfg, algo, cfg.seeds.base + static_cast<std::uint64_t>(i));
    });
    result.algorithms.push_back(std::move(ar));
  }

  for (const auto& ar : result.algorithms) {
    const std::string path =
        (std::filesystem::path(cfg.output_dir) / (ar.label + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "seed,t,cum_regret\n";
    for (int i = 0; i < static_cast<int>(ar.curves.size()); ++i) {
      const std::uint64_t seed = cfg.seeds.base + static_cast<std::uint64_t>(i);
      const auto& curve = ar.curves[i];
      for (int t = 0; t < static_cast<int>(curve.size()); ++t)
        out << seed << ',' << (t + 1) << ',' << fmt(curve[t]) << '\n';
    }
    result.files_written.push_back(path);
  }

  const Summary summary = summarize(result);
  const std::string summary_path =
      (std::filesystem::path(cfg.output_dir) / "summary.csv").string();
  {
    std::ofstream out(summary_path);
    if (!out) throw ConfigError("cannot write '" + summary_path + "'");
    write_summary_csv(summary, out);
  }
  result.files_written.push_back(summary_path);

  if (cfg.plot) {
    const std::string svg_path = (std::filesystem::path(cfg.output_dir) / "regret.svg").string();
    std::ofstream out(svg_path);
    if (!out) throw ConfigError("cannot write '" + svg_path + "'");
    out << render_plot_svg(summary);
    result.files_written.push_back(svg_path);
  }
  return result;
}

Summary summarize(const ExperimentResult& result) {
  Summary s;
  for (const auto& ar : result.algorithms) {
    s.labels.push_back(ar.label);
    const int n = static_cast<int>(ar.curves.size());
    const int horizon = n > 0 ? static_cast<int>(ar.curves.front().size()) : 0;
    std::vector<double> mean(horizon, 0.0), se(horizon, 0.0);
    for (int t = 0; t < horizon; ++t) {
      double acc = 0.0;
      for (const auto& c : ar.curves) acc += c[t];
      mean[t] = acc / n;
      if (n > 1) {
        double var = 0.0;
        for (const auto& c : ar.curves) var += (c[t] - mean[t]) * (c[t] - mean[t]);
        se[t] = std::sqrt(var / (n - 1)) / std::sqrt(static_cast<double>(n));
      }
    }
    s.mean.push_back(std::move(mean));
    s.stderr_.push_back(std::move(se));
  }
  return s;
}

void write_summary_csv(const Summary& summary, std::ostream& out) {
  out << "t";
  for (const auto& label : summary.labels) out << ',' << label << "_mean," << label << "_stderr";
  out << '\n';
  const int horizon = summary.mean.empty() ? 0 : static_cast<int>(summary.mean.front().size());
  for (int t = 0; t < horizon; ++t) {
    out << (t + 1);
    for (std::size_t a = 0; a < summary.labels.size(); ++a)
      out << ',' << fmt(summary.mean[a][t]) << ',' << fmt(summary.stderr_[a][t]);
    out << '\n';
  }
}

Summary summary_from_csv(std::istream& in) {
  Summary s;
  std::string line;
  if (!std::getline(in, line)) throw InputError("summary CSV is empty");
  std::vector<std::string> headers;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) headers.push_back(cell);
  }
  if (headers.size() < 3 || headers[0] != "t" || (headers.size() - 1) % 2 != 0)
    throw InputError("summary CSV: expected header t,<label>_mean,<label>_stderr,...");
  const int n_algos = static_cast<int>((headers.size() - 1) / 2);
  for (int a = 0; a < n_algos; ++a) {
    std::string h = headers[1 + 2 * a];
    const std::string suffix = "_mean";
    if (h.size() <= suffix.size() || h.substr(h.size() - suffix.size()) != suffix)
      throw InputError("summary CSV: malformed header column '" + h + "'");
    s.labels.push_back(h.substr(0, h.size() - suffix.size()));
  }
  s.mean.assign(n_algos, {});
  s.stderr_.assign(n_algos, {});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // t column
    for (int a = 0; a < n_algos; ++a) {
      if (!std::getline(ss, cell, ',')) throw InputError("summary CSV: short row");
      s.mean[a].push_back(std::stod(cell));
      if (!std::getline(ss, cell, ',')) throw InputError("summary CSV: short row");
      s.stderr_[a].push_back(std::stod(cell));
    }
  }
  if (s.mean.empty() || s.mean.front().empty()) throw InputError("summary CSV has no data rows");
  return s;
}

// ---------------------------------------------------------------------------
// SVG plot
// ---------------------------------------------------------------------------

namespace {
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
}

std::string render_plot_svg(const Summary& summary) {
  if (summary.labels.empty() || summary.mean.empty() || summary.mean.front().empty())
    throw InputError("plot: summary contains no algorithms or no rows");

  const int width = 860, height = 540;
  const double ml = 70, mr = 20, mt = 20, mb = 55;
  const double pw = width - ml - mr, ph = height - mt - mb;

  const int horizon = static_cast<int>(summary.mean.front().size());
  double ymax = 0.0;
  for (std::size_t a = 0; a < summary.labels.size(); ++a)
    for (int t = 0; t < horizon; ++t)
      ymax = std::max(ymax, summary.mean[a][t] + summary.stderr_[a][t]);
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.05;

  auto px = [&](double t) { return ml + pw * (t / horizon); };
  auto py = [&](double v) { return mt + ph * (1.0 - v / ymax); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes and ticks.
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double tx = horizon * i / 5.0;
    const double vy = ymax / 1.05 * i / 5.0;
    svg << "<line x1=\"" << px(tx) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(tx) << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px(tx) << "\" y=\"" << mt + ph + 20
        << "\" font-size=\"12\" text-anchor=\"middle\">" << static_cast<long long>(tx)
        << "</text>\n";
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(vy) << "\" x2=\"" << ml << "\" y2=\""
        << py(vy) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(vy) + 4
        << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(std::round(vy * 10) / 10)
        << "</text>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"14\" text-anchor=\"middle\">t</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
      << ")\">cumulative regret</text>\n";

  const int stride = std::max(1, horizon / 400);
  for (std::size_t a = 0; a < summary.labels.size(); ++a) {
    const char* color = kPalette[a % 6];
    // stderr band: upper edge forward, lower edge back
    std::vector<std::pair<double, double>> ring;
    for (int t = 0; t < horizon; t += stride)
      ring.emplace_back(px(t + 1), py(summary.mean[a][t] + summary.stderr_[a][t]));
    for (int t = horizon - 1; t >= 0; t -= stride)
      ring.emplace_back(px(t + 1), py(std::max(0.0, summary.mean[a][t] - summary.stderr_[a][t])));
    svg << "<path d=\"M" << ring[0].first << ' ' << ring[0].second;
    for (std::size_t p = 1; p < ring.size(); ++p)
      svg << " L" << ring[p].first << ' ' << ring[p].second;
    svg << " Z\" fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (int t = 0; t < horizon; t += stride)
      svg << px(t + 1) << ',' << py(summary.mean[a][t]) << ' ';
    svg << px(horizon) << ',' << py(summary.mean[a][horizon - 1]);
    svg << "\"/>\n";

    const double ly = mt + 18 + 18 * static_cast<double>(a);
    svg << "<line x1=\"" << ml + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + 40 << "\" y2=\""
        << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
    svg << "<text x=\"" << ml + 46 << "\" y=\"" << ly + 4 << "\" font-size=\"13\">"
        << summary.labels[a] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pab
