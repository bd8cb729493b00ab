#include "pab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pab/errors.hpp"

namespace pab {

namespace {

constexpr double kFeasTol = 1e-11;     // feasibility slack accepted on polished points
constexpr double kEmptyTol = 1e-15;    // interior margin below which a cut is rejected
constexpr double kGapTarget = 1e-7;    // barrier duality-gap target before polishing

double ball_margin(const Eigen::VectorXd& x) { return 1.0 - x.norm(); }

double min_margin(const std::vector<Halfspace>& hs, const Eigen::VectorXd& x) {
  double m = ball_margin(x);
  for (const auto& h : hs) m = std::min(m, h.offset - h.normal.dot(x));
  return m;
}

// Barrier objective for max <w,x>: phi(x) = -t<w,x> - log(1-|x|^2) - sum log s_i.
// Returns +inf outside the strict interior.
double barrier_value(const std::vector<Halfspace>& hs, const Eigen::VectorXd& w, double t,
                     const Eigen::VectorXd& x) {
  const double ball = 1.0 - x.squaredNorm();
  if (ball <= 0.0) return std::numeric_limits<double>::infinity();
  double phi = -t * w.dot(x) - std::log(ball);
  for (const auto& h : hs) {
    const double s = h.offset - h.normal.dot(x);
    if (s <= 0.0) return std::numeric_limits<double>::infinity();
    phi -= std::log(s);
  }
  return phi;
}

// Hessian of the log barrier (ball + halfspaces) at a strictly interior x.
Eigen::MatrixXd barrier_hessian(const std::vector<Halfspace>& hs, const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  const double ball = 1.0 - x.squaredNorm();
  Eigen::MatrixXd hess = (2.0 / ball) * Eigen::MatrixXd::Identity(d, d) +
                         (4.0 / (ball * ball)) * (x * x.transpose());
  for (const auto& h : hs) {
    const double s = h.offset - h.normal.dot(x);
    hess += (h.normal * h.normal.transpose()) / (s * s);
  }
  return hess;
}

// Damped Newton stage at fixed t. Mutates x; stops on a small decrement.
void newton_stage(const std::vector<Halfspace>& hs, const Eigen::VectorXd& w, double t,
                  Eigen::VectorXd& x, int max_iters) {
  const int d = static_cast<int>(x.size());
  Eigen::VectorXd grad(d), step(d), trial(d);
  Eigen::MatrixXd hess(d, d);
  for (int it = 0; it < max_iters; ++it) {
    const double ball = 1.0 - x.squaredNorm();
    grad = -t * w + (2.0 / ball) * x;
    hess = barrier_hessian(hs, x);
    for (const auto& h : hs) {
      const double s = h.offset - h.normal.dot(x);
      grad += h.normal / s;
    }
    step = hess.ldlt().solve(-grad);
    const double decrement = -grad.dot(step);
    if (!std::isfinite(decrement) || decrement <= 1e-18) break;

    const double phi0 = barrier_value(hs, w, t, x);
    double eta = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 70; ++ls) {
      trial = x + eta * step;
      const double phi1 = barrier_value(hs, w, t, trial);
      if (phi1 < phi0 - 0.2 * eta * decrement) {
        x = trial;
        moved = true;
        break;
      }
      eta *= 0.5;
    }
    if (!moved) break;
    if (decrement < 1e-14) break;
  }
}

// Path-following barrier solve; x0 must be strictly feasible.
Eigen::VectorXd barrier_maximize(const std::vector<Halfspace>& hs, const Eigen::VectorXd& w,
                                 const Eigen::VectorXd& x0, double gap_target) {
  Eigen::VectorXd x = x0;
  const double n_constraints = static_cast<double>(hs.size() + 1);
  double t = 8.0;
  for (int stage = 0; stage < 16; ++stage) {
    newton_stage(hs, w, t, x, 40);
    if (n_constraints / t < gap_target) break;
    t *= 16.0;
  }
  return x;
}

// Analytic-center style polish: recenters a feasible point (w = 0, t = 1).
Eigen::VectorXd center_point(const std::vector<Halfspace>& hs, const Eigen::VectorXd& start) {
  Eigen::VectorXd x = start;
  newton_stage(hs, Eigen::VectorXd::Zero(x.size()), 1.0, x, 30);
  return x;
}

struct SupportResult {
  double value = 0.0;
  Eigen::VectorXd point;
};

// Exact-ish support via barrier + active-set polish. `w` must be unit length.
SupportResult support_impl(int d, const std::vector<Halfspace>& hs, const Eigen::VectorXd& w,
                           const Eigen::VectorXd& interior) {
  Eigen::VectorXd xb = barrier_maximize(hs, w, interior, kGapTarget);

  SupportResult best;
  best.value = w.dot(xb);
  best.point = xb;

  // Candidate active sets: halfspaces with small slack at the barrier point.
  const int m = static_cast<int>(hs.size());
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> slack(m);
  for (int i = 0; i < m; ++i) slack[i] = hs[i].offset - hs[i].normal.dot(xb);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return slack[a] < slack[b]; });

  std::vector<int> near;
  for (int idx : order) {
    if (slack[idx] < 1e-3 || static_cast<int>(near.size()) < d + 3) near.push_back(idx);
    if (static_cast<int>(near.size()) >= 12) break;
  }

  const int n_near = static_cast<int>(near.size());
  const int max_size = std::min(d, std::min(n_near, 5));

  auto try_subset = [&](const std::vector<int>& sel) {
    const int k = static_cast<int>(sel.size());
    Eigen::MatrixXd at(d, k);  // columns = normals of the active set
    Eigen::VectorXd bs(k);
    for (int i = 0; i < k; ++i) {
      at.col(i) = hs[sel[i]].normal;
      bs[i] = hs[sel[i]].offset;
    }
    Eigen::VectorXd x_aff(d), u(d);
    if (k == 0) {
      x_aff.setZero();
      u = w;
    } else {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(at);
      if (qr.rank() < k) return;  // dependent set; an independent subset covers it
      // Min-norm solution of A x = b with A = at^T, and w's component
      // orthogonal to the active normals.
      Eigen::MatrixXd gram = at.transpose() * at;
      Eigen::LDLT<Eigen::MatrixXd> gram_ldlt(gram);
      x_aff = at * gram_ldlt.solve(bs);
      u = w - at * gram_ldlt.solve(at.transpose() * w);
    }
    const double r2 = 1.0 - x_aff.squaredNorm();
    if (r2 < -kFeasTol) return;
    Eigen::VectorXd cand = x_aff;
    const double un = u.norm();
    if (un > 1e-13 && r2 > 0.0) cand += std::sqrt(r2) * (u / un);
    if (cand.norm() > 1.0 + kFeasTol) return;
    for (const auto& h : hs)
      if (h.normal.dot(cand) > h.offset + kFeasTol) return;
    const double val = w.dot(cand);
    if (val > best.value) {
      best.value = val;
      best.point = cand;
    }
  };

  // Enumerate subsets of the near-active list up to size max_size.
  try_subset({});
  for (int size = 1; size <= max_size; ++size) {
    std::vector<int> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      std::vector<int> sel(size);
      for (int i = 0; i < size; ++i) sel[i] = near[idx[i]];
      try_subset(sel);
      int pos = size - 1;
      while (pos >= 0 && idx[pos] == n_near - size + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int i = pos + 1; i < size; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvexBody
// ---------------------------------------------------------------------------

ConvexBody::ConvexBody(int dim) : d_(dim), interior_(Eigen::VectorXd::Zero(dim)) {
  if (dim < 1) throw InputError("ConvexBody: dimension must be >= 1");
}

double ConvexBody::margin(const Eigen::VectorXd& x) const { return min_margin(hs_, x); }

bool ConvexBody::contains(const Eigen::VectorXd& x, double tol) const {
  return margin(x) >= -tol;
}

void ConvexBody::refresh_interior(const Eigen::VectorXd& start) {
  if (min_margin(hs_, start) > 1e-12) {
    interior_ = center_point(hs_, start);
    if (min_margin(hs_, interior_) <= 0.0) interior_ = start;  // centering must not regress
    return;
  }
  // Walk from the stale interior point toward the kept side's extreme point.
  // The fresh constraint's slack is linear along the segment, so the feasible
  // window (tau_c, 1] is computed analytically; it can be a sliver.
  const Halfspace& fresh = hs_.back();
  std::vector<Halfspace> old_hs(hs_.begin(), hs_.end() - 1);
  Eigen::VectorXd away = -fresh.normal;
  SupportResult far = support_impl(d_, old_hs, away, start);
  const double slack_start = fresh.offset - fresh.normal.dot(start);
  const double slack_far = fresh.offset - fresh.normal.dot(far.point);
  if (slack_far <= kEmptyTol)
    throw ProtocolError("cut empties the localization set (no interior on the kept side)");
  double tau_c = 0.0;
  if (slack_start < 0.0) tau_c = slack_start / (slack_start - slack_far);

  std::vector<double> offsets;
  for (int i = 1; i <= 96; ++i) offsets.push_back(static_cast<double>(i) / 97.0);
  for (int k = 1; k <= 45; ++k) {
    offsets.push_back(std::pow(0.5, k));
    offsets.push_back(1.0 - std::pow(0.5, k));
  }
  double best_margin = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = start;
  for (double g : offsets) {
    const double tau = tau_c + (1.0 - tau_c) * g;
    Eigen::VectorXd x = (1.0 - tau) * start + tau * far.point;
    const double mg = min_margin(hs_, x);
    if (mg > best_margin) {
      best_margin = mg;
      best = x;
    }
  }
  if (best_margin <= kEmptyTol)
    throw ProtocolError("cut empties the localization set (interior search failed)");
  interior_ = center_point(hs_, best);
  if (min_margin(hs_, interior_) <= 0.0) interior_ = best;
}

ConvexBody ConvexBody::cut(const Eigen::VectorXd& direction, double offset, KeepSide keep) const {
  if (direction.size() != d_) throw InputError("cut: direction dimension mismatch");
  const double n = direction.norm();
  if (n < 1e-12) throw InputError("cut: zero direction");

  Halfspace h;
  if (keep == KeepSide::leq) {
    h.normal = direction / n;
    h.offset = offset / n;
  } else {
    h.normal = -direction / n;
    h.offset = -offset / n;
  }

  ConvexBody out(*this);
  out.hs_.push_back(std::move(h));
  out.refresh_interior(interior_);
  if (out.hs_.size() > static_cast<std::size_t>(64 * d_))
    out.prune_redundant(static_cast<std::size_t>(64 * d_));
  return out;
}

double ConvexBody::support(const Eigen::VectorXd& w, const Eigen::VectorXd* hint) const {
  if (w.size() != d_) throw InputError("support: direction dimension mismatch");
  const double n = w.norm();
  if (n < 1e-12) throw InputError("support: zero direction");
  Eigen::VectorXd wn = w / n;
  const Eigen::VectorXd* start = &interior_;
  if (hint && hint->size() == d_ && min_margin(hs_, *hint) > 1e-13) start = hint;
  return n * support_impl(d_, hs_, wn, *start).value;
}

double ConvexBody::projected_diameter(const Eigen::VectorXd& w) const {
  return support(w) + support(-w);
}

void ConvexBody::prune_redundant(std::size_t max_count) {
  bool removed_any = true;
  while (hs_.size() > max_count && removed_any) {
    removed_any = false;
    for (std::size_t i = 0; i < hs_.size() && hs_.size() > max_count;) {
      std::vector<Halfspace> rest;
      rest.reserve(hs_.size() - 1);
      for (std::size_t j = 0; j < hs_.size(); ++j)
        if (j != i) rest.push_back(hs_[j]);
      const double val = support_impl(d_, rest, hs_[i].normal, interior_).value;
      if (val <= hs_[i].offset + 1e-10) {
        hs_.erase(hs_.begin() + static_cast<std::ptrdiff_t>(i));
        removed_any = true;
      } else {
        ++i;
      }
    }
  }
}

nlohmann::json ConvexBody::debug_json() const {
  nlohmann::json normals = nlohmann::json::array();
  nlohmann::json offsets = nlohmann::json::array();
  for (const auto& h : hs_) {
    normals.push_back(std::vector<double>(h.normal.data(), h.normal.data() + d_));
    offsets.push_back(h.offset);
  }
  return nlohmann::json{{"d", d_}, {"normals", normals}, {"offsets", offsets}};
}

// ---------------------------------------------------------------------------
// DirectionBasis
// ---------------------------------------------------------------------------

Eigen::VectorXd DirectionBasis::project_out(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = x;
  for (const auto& v : dirs) out -= v.dot(x) * v;
  return out;
}

Eigen::MatrixXd complement_basis(const DirectionBasis& basis, int dim) {
  const int n = basis.size();
  if (n == 0) return Eigen::MatrixXd::Identity(dim, dim);
  if (n >= dim) return Eigen::MatrixXd(dim, 0);
  Eigen::MatrixXd v(dim, n);
  for (int i = 0; i < n; ++i) v.col(i) = basis.dirs[i];
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(dim - n);
}

// ---------------------------------------------------------------------------
// Sampling and centroids
// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd> hit_and_run(const ConvexBody& body, Rng& rng, int n_samples,
                                         int burnin, int thin) {
  if (n_samples < 1) throw InputError("hit_and_run: n_samples must be >= 1");
  thin = std::max(1, thin);
  const int d = body.dim();
  const auto& hs = body.halfspaces();

  Eigen::VectorXd x = body.interior_point();
  if (body.margin(x) <= 0.0)
    throw InternalError("hit_and_run: no strictly interior starting point");

  // Directions are drawn from the Dikin ellipsoid at the interior point:
  // u = L^{-T} g with H = L L^T the barrier Hessian. A fixed direction law
  // keeps the uniform target exact, and the preconditioning keeps chords
  // long in thin bodies where isotropic steps would stall.
  const Eigen::LLT<Eigen::MatrixXd> hess_llt(barrier_hessian(hs, x));

  std::vector<Eigen::VectorXd> samples;
  samples.reserve(n_samples);
  Eigen::VectorXd u(d), g(d);
  const int total = burnin + n_samples * thin;
  for (int step = 0; step < total; ++step) {
    double un2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) g[j] = rng.gaussian();
      u = hess_llt.matrixU().solve(g);
      un2 = u.squaredNorm();
    } while (un2 < 1e-24);
    u /= std::sqrt(un2);

    // Chord of the body through x along u.
    const double xu = x.dot(u);
    const double disc = xu * xu + (1.0 - x.squaredNorm());
    if (disc <= 0.0) {  // boundary drift; re-center on the interior point
      x = body.interior_point();
      continue;
    }
    double thi = -xu + std::sqrt(disc);
    double tlo = -xu - std::sqrt(disc);
    for (const auto& h : hs) {
      const double den = h.normal.dot(u);
      const double s = h.offset - h.normal.dot(x);
      if (den > 1e-14)
        thi = std::min(thi, s / den);
      else if (den < -1e-14)
        tlo = std::max(tlo, s / den);
    }
    if (thi > tlo) x += (tlo + rng.uniform() * (thi - tlo)) * u;
    const double nx = x.norm();
    if (nx >= 1.0) x *= (1.0 - 1e-15) / nx;

    const int past = step - burnin + 1;
    if (past > 0 && past % thin == 0) samples.push_back(x);
  }
  return samples;
}

Eigen::VectorXd centroid_from_samples(const ConvexBody& body, const DirectionBasis& basis,
                                      const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw InternalError("centroid: empty sample cloud");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(body.dim());
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());

  Eigen::VectorXd out = basis.project_out(mean);
  for (const auto& v : basis.dirs) {
    const double hi = body.support(v);
    const double lo = -body.support(-v);
    out += (0.5 * (lo + hi)) * v;
  }
  return out;
}

Eigen::VectorXd centroid_cyl(const ConvexBody& body, const DirectionBasis& basis, Rng& rng,
                             int n_samples, int burnin) {
  return centroid_from_samples(body, basis, hit_and_run(body, rng, n_samples, burnin));
}

DirectionBasis update_small_directions(const ConvexBody& body, DirectionBasis basis, double delta,
                                       Rng& rng, int n_samples) {
  if (!(delta > 0.0)) throw InputError("update_small_directions: delta must be > 0");
  basis.delta = delta;
  const int d = body.dim();

  while (basis.size() < d) {
    Eigen::MatrixXd q = complement_basis(basis, d);
    const int k = static_cast<int>(q.cols());
    if (k == 0) break;

    const auto samples = hit_and_run(body, rng, n_samples, 100, 1);
    Eigen::MatrixXd y(k, static_cast<int>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) y.col(static_cast<int>(i)) = q.transpose() * samples[i];
    const Eigen::VectorXd mean = y.rowwise().mean();
    y.colwise() -= mean;
    Eigen::MatrixXd cov = y * y.transpose() / static_cast<double>(samples.size());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    bool added = false;
    for (int e = 0; e < k && !added; ++e) {  // ascending eigenvalues
      Eigen::VectorXd v = q * eig.eigenvectors().col(e);
      for (const auto& b : basis.dirs) v -= b.dot(v) * b;
      const double vn = v.norm();
      if (vn < 1e-10) continue;
      v /= vn;
      if (body.projected_diameter(v) <= delta) {
        basis.dirs.push_back(v);
        added = true;
      }
    }
    if (!added) break;
  }
  return basis;
}

}  // namespace pab
