#include "pab/cipa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "pab/errors.hpp"

namespace pab {

namespace {
constexpr std::uint64_t kRewardStream = 0xc1fa01;
constexpr std::uint64_t kGeometryStream = 0xc1fa02;
constexpr std::uint64_t kBasisStream = 0xc1fa03;
}  // namespace

// ---------------------------------------------------------------------------
// Corruption-robust weighted ridge subroutine
// ---------------------------------------------------------------------------

CorruptionRobustLinUcb::CorruptionRobustLinUcb(int d, int horizon, CorruptionRobustParams params)
    : d_(d), params_(params) {
  if (d < 1) throw InputError("CorruptionRobustLinUcb: d must be >= 1");
  if (horizon < 2) throw InputError("CorruptionRobustLinUcb: horizon must be >= 2");
  if (params_.alpha <= 0.0) params_.alpha = std::sqrt(static_cast<double>(d)) / 4.0;
  if (params_.conf_delta <= 0.0) params_.conf_delta = 1.0 / horizon;
  design_ = params_.lambda * Eigen::MatrixXd::Identity(d, d);
  response_ = Eigen::VectorXd::Zero(d);
}

Eigen::VectorXd CorruptionRobustLinUcb::theta_hat() const {
  return design_.ldlt().solve(response_);
}

double CorruptionRobustLinUcb::inv_design_norm(const Eigen::VectorXd& a) const {
  return std::sqrt(std::max(0.0, a.dot(design_.ldlt().solve(a))));
}

double CorruptionRobustLinUcb::weight(const Eigen::VectorXd& a) const {
  const double n = inv_design_norm(a);
  if (n < 1e-300) return 1.0;
  return std::min(1.0, params_.alpha / n);
}

double CorruptionRobustLinUcb::confidence_radius() const {
  const double t = static_cast<double>(rounds_);
  return std::sqrt(params_.lambda) +
         std::sqrt(d_ * std::log((1.0 + t / params_.lambda) / params_.conf_delta)) +
         params_.alpha * params_.corruption_budget;
}

int CorruptionRobustLinUcb::next(const std::vector<Eigen::VectorXd>& actions) const {
  if (actions.empty()) throw InputError("CorruptionRobustLinUcb: empty action set");
  const Eigen::VectorXd th = theta_hat();
  const double beta = confidence_radius();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(design_);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(actions.size()); ++i) {
    const double norm = std::sqrt(std::max(0.0, actions[i].dot(ldlt.solve(actions[i]))));
    const double score = th.dot(actions[i]) + beta * norm;
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

void CorruptionRobustLinUcb::observe(const Eigen::VectorXd& action, double reward) {
  if (action.size() != d_) throw InputError("CorruptionRobustLinUcb: action dimension mismatch");
  const double w = weight(action);
  design_ += w * (action * action.transpose());
  response_ += w * reward * action;
  ++rounds_;
}

// ---------------------------------------------------------------------------
// Free helpers
// ---------------------------------------------------------------------------

bool check_Et(const ConvexBody& body, const std::vector<Eigen::VectorXd>& actions, int horizon) {
  const double threshold = 1.0 / horizon;
  const int n = static_cast<int>(actions.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd dir = actions[i] - actions[j];
      const double nn = dir.norm();
      if (nn < 1e-12) continue;
      if (body.projected_diameter(dir / nn) >= threshold) return false;
    }
  }
  return true;
}

double estimate_incentive_ctx(const Eigen::VectorXd& s_hat,
                              const std::vector<Eigen::VectorXd>& actions, int a, int horizon) {
  if (a < 0 || a >= static_cast<int>(actions.size()))
    throw InputError("estimate_incentive_ctx: action index outside the set");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& act : actions) best = std::max(best, s_hat.dot(act));
  return best - s_hat.dot(actions[a]) + 2.0 / horizon;
}

double cut_count_bound(int d, int horizon) {
  return 192.0 * d * std::log(static_cast<double>(d) * horizon);
}

double thin_direction_delta(int d, int horizon) {
  const double t = static_cast<double>(horizon);
  return 1.0 / (16.0 * t * t * d * (d + 1.0) * (d + 1.0));
}

// ---------------------------------------------------------------------------
// CipaState
// ---------------------------------------------------------------------------

struct CipaState::Impl {
  ContextualInstance inst;
  int horizon;
  CipaOptions opt;
  double delta;
  double threshold;  // 1/T

  ConvexBody body;
  DirectionBasis basis;
  CorruptionRobustLinUcb subroutine;

  Rng reward_rng;
  std::uint64_t geom_seed;
  std::uint64_t basis_seed;

  int version = 0;  // bumped on every cut
  int cut_count = 0;

  // Per-version cache.
  bool cache_ready = false;
  std::vector<Eigen::VectorXd> samples;
  Eigen::VectorXd centroid;
  std::vector<Eigen::VectorXd> extremes;   // hull-ish subset of samples for lower bounds
  std::vector<Eigen::VectorXd> probe_dirs; // fixed probe directions (extremes, eigen frame)
  Eigen::MatrixXd frame;                   // columns: certified box frame
  Eigen::VectorXd frame_width;             // exact widths along frame columns
  double box_diag = 0.0;                   // certified bound on any diameter

  // d == 2 certified support net.
  int net_size = 0;
  std::vector<double> net_values;

  Impl(const ContextualInstance& instance, int T, std::uint64_t seed, CipaOptions options)
      : inst(instance),
        horizon(T),
        opt(options),
        delta(thin_direction_delta(instance.d, T)),
        threshold(1.0 / T),
        body(instance.d),
        subroutine(instance.d, T),
        reward_rng(derive_seed(seed, kRewardStream)),
        geom_seed(derive_seed(seed, kGeometryStream)),
        basis_seed(derive_seed(seed, kBasisStream)) {
    basis.delta = delta;
    Rng probe_rng(derive_seed(seed, 0x9e0b));
    const int n_probe = 64;
    for (int i = 0; i < n_probe; ++i) {
      Eigen::VectorXd v(inst.d);
      if (inst.d == 2) {
        const double phi = 2.0 * M_PI * i / n_probe;
        v << std::cos(phi), std::sin(phi);
      } else {
        double n2 = 0.0;
        do {
          for (int j = 0; j < inst.d; ++j) v[j] = probe_rng.gaussian();
          n2 = v.squaredNorm();
        } while (n2 < 1e-24);
        v /= std::sqrt(n2);
      }
      probe_dirs.push_back(v);
    }
  }

  void ensure_cache() {
    if (cache_ready) return;
    Rng rng(derive_seed(geom_seed, static_cast<std::uint64_t>(version)));
    samples = hit_and_run(body, rng, opt.centroid_samples, opt.centroid_burnin, opt.centroid_thin);
    centroid = centroid_from_samples(body, basis, samples);

    // Extreme subset of the cloud along the probe directions.
    extremes.clear();
    for (const auto& dir : probe_dirs) {
      int arg = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
        const double v = samples[i].dot(dir);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      extremes.push_back(samples[arg]);
    }

    // Certified rotated box from the sample covariance eigenframe.
    const int d = inst.d;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : samples) cov += (s - mean) * (s - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    frame = eig.eigenvectors();
    frame_width.resize(d);
    double diag2 = 0.0;
    for (int j = 0; j < d; ++j) {
      frame_width[j] = body.projected_diameter(frame.col(j));
      diag2 += frame_width[j] * frame_width[j];
    }
    box_diag = std::sqrt(diag2);

    // d == 2: dense support net for certified directional upper bounds.
    if (d == 2) {
      net_size = 64;
      net_values.assign(net_size, 0.0);
      Eigen::VectorXd v(2);
      for (int i = 0; i < net_size; ++i) {
        const double phi = 2.0 * M_PI * i / net_size;
        v << std::cos(phi), std::sin(phi);
        net_values[i] = body.support(v);
      }
    }
    cache_ready = true;
  }

  // Certified lower bound on diam(S, u) from points known to lie in the body.
  double diam_lower(const Eigen::VectorXd& u) const {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& p : extremes) {
      const double v = p.dot(u);
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    return hi - lo;
  }

  // Certified upper bound on the support along unit u (d == 2 wedge bound).
  double net_upper(const Eigen::VectorXd& u) const {
    const double phi = std::atan2(u[1], u[0]);
    const double step = 2.0 * M_PI / net_size;
    double pos = phi / step;
    int ia = static_cast<int>(std::floor(pos));
    const double alpha = (pos - ia) * step;  // angle from net dir ia to u
    const double beta = step - alpha;
    ia = ((ia % net_size) + net_size) % net_size;
    const int ib = (ia + 1) % net_size;
    const double denom = std::sin(step);
    // Support of the wedge formed by the two neighboring net halfplanes.
    return (net_values[ia] * std::sin(beta) + net_values[ib] * std::sin(alpha)) / denom;
  }

  // Certified upper bound on diam(S, u).
  double diam_upper(const Eigen::VectorXd& u) const {
    double ub = box_diag;
    double along = 0.0;
    for (int j = 0; j < frame.cols(); ++j) along += std::abs(u.dot(frame.col(j))) * frame_width[j];
    ub = std::min(ub, along);
    if (inst.d == 2) ub = std::min(ub, net_upper(u) + net_upper(-u));
    return ub;
  }

  double exact_diam(const Eigen::VectorXd& u) const { return body.projected_diameter(u); }

  bool et_true(const std::vector<Eigen::VectorXd>& actions) {
    ensure_cache();
    if (box_diag < threshold) return true;
    const int n = static_cast<int>(actions.size());
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Eigen::VectorXd dir = actions[i] - actions[j];
        const double nn = dir.norm();
        if (nn < 1e-12) continue;
        dir /= nn;
        if (diam_lower(dir) >= threshold) return false;
        if (diam_upper(dir) < threshold) continue;
        if (exact_diam(dir) >= threshold) return false;
      }
    }
    return true;
  }

  // Max-width pair (lexicographic ties), certified by bound-guided pruning.
  std::pair<int, int> widest_pair(const std::vector<Eigen::VectorXd>& actions) {
    ensure_cache();
    const int n = static_cast<int>(actions.size());
    struct Entry {
      int i, j;
      Eigen::VectorXd u;
      double lb, ub;
    };
    std::vector<Entry> entries;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Eigen::VectorXd dir = actions[i] - actions[j];
        const double nn = dir.norm();
        if (nn < 1e-12) continue;
        dir /= nn;
        entries.push_back({i, j, dir, diam_lower(dir), diam_upper(dir)});
      }
    }
    if (entries.empty()) throw ProtocolError("projected volume step with a degenerate action set");
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.lb != b.lb) return a.lb > b.lb;
      if (a.i != b.i) return a.i < b.i;
      return a.j < b.j;
    });
    double best_val = -1.0;
    std::pair<int, int> best{entries[0].i, entries[0].j};
    for (const auto& e : entries) {
      if (e.ub <= best_val) continue;
      const double v = exact_diam(e.u);
      if (v > best_val + 1e-15) {
        best_val = v;
        best = {e.i, e.j};
      }
    }
    return best;
  }

  void bump_version() {
    ++version;
    cache_ready = false;
  }
};

CipaState::CipaState(const ContextualInstance& inst, int horizon, std::uint64_t seed,
                     CipaOptions options) {
  inst.validate();
  if (horizon < 2) throw ConfigError("horizon must be >= 2");
  impl_ = std::make_unique<Impl>(inst, horizon, seed, options);
}

CipaState::~CipaState() = default;

bool CipaState::is_Et(const std::vector<Eigen::VectorXd>& actions) {
  return impl_->et_true(actions);
}

const ConvexBody& CipaState::body() const { return impl_->body; }
const DirectionBasis& CipaState::basis() const { return impl_->basis; }
const CorruptionRobustLinUcb& CipaState::subroutine() const { return impl_->subroutine; }
int CipaState::cut_count() const { return impl_->cut_count; }

const Eigen::VectorXd& CipaState::s_hat() {
  impl_->ensure_cache();
  return impl_->centroid;
}

void CipaState::play_round(int t, const std::vector<Eigen::VectorXd>& actions,
                           CipaTrajectory& traj) {
  Impl& st = *impl_;
  CipaRound round;
  round.t = t;
  round.actions = actions;

  if (!st.et_true(actions)) {
    // Multidimensional binary-search step along the widest pair direction.
    auto [i, j] = st.widest_pair(actions);
    const Eigen::VectorXd& s_hat = st.centroid;
    int a1 = i, a2 = j;
    if (s_hat.dot(actions[i] - actions[j]) < 0.0) std::swap(a1, a2);
    const double gap = s_hat.dot(actions[a1] - actions[a2]);  // >= 0 by orientation

    ContextualOffer offer;
    offer.entries = {{a1, st.opt.base_offer}, {a2, st.opt.base_offer + gap}};
    const int chosen = agent_choice_contextual(actions, st.inst.s_star, offer, st.opt.tie);
    if (chosen != a1 && chosen != a2)
      throw ProtocolError("agent chose outside the offered pair on a search round (t=" +
                          std::to_string(t) + ")");

    Eigen::VectorXd w = actions[a1] - actions[a2];
    w /= w.norm();
    const double x_t = s_hat.dot(w);
    st.body = st.body.cut(w, x_t, chosen == a1 ? KeepSide::geq : KeepSide::leq);
    st.bump_version();
    Rng basis_rng(derive_seed(st.basis_seed, static_cast<std::uint64_t>(st.version)));
    st.basis =
        update_small_directions(st.body, st.basis, st.delta, basis_rng, st.opt.thin_search_samples);
    ++st.cut_count;

    round.search = true;
    round.a1 = a1;
    round.a2 = a2;
    round.chosen = chosen;
    round.offer1 = st.opt.base_offer;
    round.offer2 = st.opt.base_offer + gap;
    round.paid = offer.amount_on(chosen);
    round.reward = st.inst.draw_reward(actions[chosen], st.reward_rng);
  } else {
    const Eigen::VectorXd& s_hat = st.centroid;
    const int rec = st.subroutine.next(actions);
    const double pi_hat = estimate_incentive_ctx(s_hat, actions, rec, st.horizon);
    ContextualOffer offer;
    offer.entries = {{rec, pi_hat}};
    const int chosen = agent_choice_contextual(actions, st.inst.s_star, offer, st.opt.tie);
    const double reward = st.inst.draw_reward(actions[chosen], st.reward_rng);
    const double paid = offer.amount_on(chosen);
    st.subroutine.observe(actions[chosen], reward - paid);

    round.search = false;
    round.recommended = rec;
    round.chosen = chosen;
    round.offer_rec = pi_hat;
    round.paid = paid;
    round.reward = reward;
    round.eps_t = optimal_incentive_contextual(st.inst.s_star, actions, chosen) -
                  estimate_incentive_ctx(s_hat, actions, chosen, st.horizon);
    traj.corruption_sum += std::abs(round.eps_t);
  }
  round.cut_count = st.cut_count;
  traj.cut_count = st.cut_count;
  traj.rounds.push_back(std::move(round));
}

CipaTrajectory run_cipa(const ContextualInstance& inst, int horizon, std::uint64_t seed,
                        CipaOptions options) {
  CipaState state(inst, horizon, seed, options);
  CipaTrajectory traj;
  traj.horizon = horizon;
  traj.dim = inst.d;
  traj.rounds.reserve(horizon);
  for (int t = 1; t <= horizon; ++t) {
    const auto actions = inst.actions_for_round(seed, t);
    state.play_round(t, actions, traj);
  }
  return traj;
}

std::vector<double> regret_curve(const CipaTrajectory& traj, const ContextualInstance& inst) {
  std::vector<double> curve;
  curve.reserve(traj.rounds.size());
  double total = 0.0;
  for (const auto& r : traj.rounds) {
    double best_joint = -std::numeric_limits<double>::infinity();
    double best_agent = -std::numeric_limits<double>::infinity();
    for (const auto& a : r.actions) {
      best_joint = std::max(best_joint, (inst.theta_star + inst.s_star).dot(a));
      best_agent = std::max(best_agent, inst.s_star.dot(a));
    }
    const double mu_star_t = best_joint - best_agent;
    const double gain = inst.theta_star.dot(r.actions[r.chosen]) - r.paid;
    total += mu_star_t - gain;
    curve.push_back(total);
  }
  return curve;
}

void write_trajectory_csv(const CipaTrajectory& traj, const ContextualInstance& inst,
                          std::ostream& out) {
  const auto curve = regret_curve(traj, inst);
  out << "t,phase,a1,a2,rec,chosen,reward,paid,epsilon_t,cut_count,cum_regret\n";
  char buf[256];
  for (std::size_t i = 0; i < traj.rounds.size(); ++i) {
    const auto& r = traj.rounds[i];
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%d,%d,%d,%.12g,%.12g,%.12g,%d,%.12g\n", r.t,
                  r.search ? "search" : "bandit", r.a1, r.a2, r.recommended, r.chosen, r.reward,
                  r.paid, r.eps_t, r.cut_count, curve[i]);
    out << buf;
  }
}

}  // namespace pab
