#pragma once

#include <Eigen/Dense>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pab/rng.hpp"

namespace pab {

/// Halfspace { x : <x, normal> <= offset } with unit normal.
struct Halfspace {
  Eigen::VectorXd normal;
  double offset = 0.0;
};

enum class KeepSide { leq, geq };

/// Localization set S_t: the unit ball intersected with halfspaces. The body
/// keeps a strictly interior point up to date across cuts, which anchors the
/// support solver and the hit-and-run sampler. Value-like: cut() returns a
/// new body.
class ConvexBody {
 public:
  explicit ConvexBody(int dim);

  int dim() const { return d_; }
  const std::vector<Halfspace>& halfspaces() const { return hs_; }
  const Eigen::VectorXd& interior_point() const { return interior_; }

  /// min slack over the ball and all halfspaces; > 0 strictly inside.
  double margin(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;

  /// Adds the halfspace keeping the requested side of <x, direction> = offset.
  /// Throws ProtocolError when the kept side misses the body's interior.
  ConvexBody cut(const Eigen::VectorXd& direction, double offset, KeepSide keep) const;

  /// max_{x in body} <w, x>, solved by a log-barrier Newton stage followed by
  /// an active-set polish; accurate to ~1e-10 on unit-scale bodies. `hint`
  /// optionally warm-starts the solver with a strictly interior point.
  double support(const Eigen::VectorXd& w, const Eigen::VectorXd* hint = nullptr) const;

  /// Width along w: support(w) + support(-w).
  double projected_diameter(const Eigen::VectorXd& w) const;

  /// Drops halfspaces proven redundant by the support test until at most
  /// `max_count` remain (or none is redundant).
  void prune_redundant(std::size_t max_count);

  nlohmann::json debug_json() const;

 private:
  int d_;
  std::vector<Halfspace> hs_;
  Eigen::VectorXd interior_;

  void refresh_interior(const Eigen::VectorXd& start);
};

/// Orthonormal directions along which the body is already thin (width <= delta
/// at insertion time).
struct DirectionBasis {
  std::vector<Eigen::VectorXd> dirs;
  double delta = 0.0;

  int size() const { return static_cast<int>(dirs.size()); }
  /// x minus its components along the stored directions.
  Eigen::VectorXd project_out(const Eigen::VectorXd& x) const;
};

/// Uniform-ish samples of the body: hit-and-run chain from the interior
/// point, `burnin` discarded steps, then one sample every `thin` steps.
std::vector<Eigen::VectorXd> hit_and_run(const ConvexBody& body, Rng& rng, int n_samples,
                                         int burnin = 200, int thin = 2);

/// Approximate centroid of Cyl(body, V): interval midpoints along each basis
/// direction, sample mean of the projection on the orthogonal complement.
Eigen::VectorXd centroid_cyl(const ConvexBody& body, const DirectionBasis& basis, Rng& rng,
                             int n_samples = 4096, int burnin = 200);

/// Same, reusing an existing sample cloud of the body.
Eigen::VectorXd centroid_from_samples(const ConvexBody& body, const DirectionBasis& basis,
                                      const std::vector<Eigen::VectorXd>& samples);

/// Greedily adds orthonormal directions of width <= delta (searched via the
/// smallest-eigenvalue direction of the sample covariance restricted to the
/// current orthogonal complement) until none is found. Sampling noise can
/// only delay additions; every inserted direction is re-verified against the
/// exact width.
DirectionBasis update_small_directions(const ConvexBody& body, DirectionBasis basis, double delta,
                                       Rng& rng, int n_samples = 512);

/// Orthonormal basis of the complement of `basis` in R^d (d x (d-n) columns).
Eigen::MatrixXd complement_basis(const DirectionBasis& basis, int dim);

}  // namespace pab
