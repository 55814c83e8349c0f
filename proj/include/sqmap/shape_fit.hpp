#pragma once

// Size from point-cloud extent and shape exponents by weighted
// Levenberg-Marquardt on the radial distance, seeded from a grid search.

#include <algorithm>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "sqmap/common.hpp"
#include "sqmap/geometry.hpp"

namespace sqmap {

struct FitConfig {
  int grid_steps = 10;
  int max_iterations = 50;
  double convergence_tol = 1e-10;
  double lm_lambda_init = 1e-3;
  double lm_lambda_factor = 10.0;
  /// Central-difference step for the Jacobian, in exponent units.
  double jacobian_step = 1e-4;

  void validate() const {
    if (grid_steps < 2) throw DataError("fit.grid_steps must be >= 2");
    if (max_iterations < 1 || !(convergence_tol > 0.0) || !(lm_lambda_init > 0.0) ||
        !(lm_lambda_factor > 0.0) || !(jacobian_step > 0.0))
      throw DataError("fit: iteration counts and solver scalars must be positive");
  }
};

inline constexpr std::size_t kMinFitPoints = 8;

/// Half the component-wise extent of an object-frame cloud.
inline SizeParams size_from_extent(const PointList& points_obj) {
  if (points_obj.size() < 2) throw DataError("size_from_extent needs at least 2 points");
  Vec3 lo = points_obj.front();
  Vec3 hi = points_obj.front();
  for (const auto& p : points_obj) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 a = (hi - lo) / 2.0;
  if ((a.array() <= 0.0).any()) throw DataError("degenerate cloud: zero extent along an axis");
  return SizeParams(a);
}

/// Per-point weights growing linearly with distance from the center: 0 at
/// the nearest point, 1 at the farthest. Equal norms give uniform weight 1.
inline std::vector<double> compute_weights(const PointList& points_obj) {
  if (points_obj.empty()) return {};
  std::vector<double> norms(points_obj.size());
  for (std::size_t i = 0; i < points_obj.size(); ++i) norms[i] = points_obj[i].norm();
  const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
  const double range = *hi - *lo;
  std::vector<double> w(points_obj.size(), 1.0);
  if (range <= 0.0) return w;
  for (std::size_t i = 0; i < norms.size(); ++i) w[i] = (norms[i] - *lo) / range;
  return w;
}

/// Weighted radial-distance residuals for a fixed cloud and size, evaluated
/// at unclamped exponents. Coordinates are kept in log form so each
/// evaluation costs a handful of exp calls per point.
class ShapeProblem {
 public:
  ShapeProblem(const PointList& points_obj, const std::vector<double>& weights,
               const SizeParams& size)
      : size_(size) {
    if (weights.size() != points_obj.size()) throw DataError("weights/points size mismatch");
    const std::size_t n = points_obj.size();
    log_abs_.resize(n, 3);
    norm_.resize(n);
    sqrt_w_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = points_obj[i];
      for (int k = 0; k < 3; ++k)
        log_abs_(i, k) = std::log(std::abs(p(k) / size.vec()(k)));  // -inf at 0 is fine
      norm_(i) = p.norm();
      sqrt_w_(i) = std::sqrt(std::max(0.0, weights[i]));
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(norm_.size()); }

  /// sqrt(alpha_i) * ||p|| * (1 - F^(-eps1/2)); the sign is dropped from the
  /// cost, so its square equals alpha_i * G^2.
  Eigen::VectorXd residuals(double e1, double e2) const {
    Eigen::VectorXd r(norm_.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (norm_(i) == 0.0) {
        r(i) = sqrt_w_(i) * size_.min_axis();
        continue;
      }
      const double xy = std::exp(2.0 / e2 * log_abs_(i, 0)) + std::exp(2.0 / e2 * log_abs_(i, 1));
      const double f = std::pow(xy, e2 / e1) + std::exp(2.0 / e1 * log_abs_(i, 2));
      r(i) = sqrt_w_(i) * norm_(i) * (1.0 - std::pow(f, -0.5 * e1));
    }
    return r;
  }

  double cost(double e1, double e2) const { return residuals(e1, e2).squaredNorm(); }

  /// N x 2 central-difference Jacobian of the residuals.
  Eigen::MatrixX2d jacobian(double e1, double e2, double h) const {
    Eigen::MatrixX2d j(norm_.size(), 2);
    j.col(0) = (residuals(e1 + h, e2) - residuals(e1 - h, e2)) / (2.0 * h);
    j.col(1) = (residuals(e1, e2 + h) - residuals(e1, e2 - h)) / (2.0 * h);
    return j;
  }

 private:
  SizeParams size_;
  Eigen::MatrixX3d log_abs_;
  Eigen::VectorXd norm_;
  Eigen::VectorXd sqrt_w_;
};

struct ShapeFit {
  ShapeParams shape;
  double cost = 0.0;
  ShapeParams init;
  double init_cost = 0.0;
  int iterations = 0;
};

/// Fits (eps1, eps2) within [0.1, 1.9]^2 with size held fixed. The grid
/// sample of lowest cost (lexicographically first on ties) seeds a
/// box-projected Levenberg-Marquardt.
inline ShapeFit fit_shape(const PointList& points_obj, const SizeParams& size,
                          const FitConfig& cfg = {}) {
  cfg.validate();
  if (points_obj.size() < kMinFitPoints) throw DataError("too few points for a shape fit");
  const ShapeProblem prob(points_obj, compute_weights(points_obj), size);

  const auto grid_value = [&](int k) {
    return kMinShapeExponent + (kMaxShapeExponent - kMinShapeExponent) * k / (cfg.grid_steps - 1);
  };
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d x(1.0, 1.0);
  for (int i = 0; i < cfg.grid_steps; ++i) {
    for (int j = 0; j < cfg.grid_steps; ++j) {
      const double c = prob.cost(grid_value(i), grid_value(j));
      if (std::isfinite(c) && c < best) {
        best = c;
        x = {grid_value(i), grid_value(j)};
      }
    }
  }
  if (!std::isfinite(best)) throw NumericalError("shape cost is non-finite at every grid sample");

  ShapeFit out;
  out.init = ShapeParams(x(0), x(1));
  out.init_cost = best;

  const auto project = [](Eigen::Vector2d v) {
    return Eigen::Vector2d(std::clamp(v(0), kMinShapeExponent, kMaxShapeExponent),
                           std::clamp(v(1), kMinShapeExponent, kMaxShapeExponent));
  };
  double cost = best;
  double lambda = cfg.lm_lambda_init;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const Eigen::MatrixX2d jac = prob.jacobian(x(0), x(1), cfg.jacobian_step);
    const Eigen::VectorXd r = prob.residuals(x(0), x(1));
    const Eigen::Matrix2d h = jac.transpose() * jac;
    const Eigen::Vector2d g = jac.transpose() * r;
    if (!h.allFinite() || !g.allFinite()) break;
    bool accepted = false;
    bool stalled = false;
    while (!accepted && lambda < 1e12) {
      Eigen::Matrix2d damped = h;
      damped.diagonal() += lambda * (h.diagonal().array() + 1e-12).matrix();
      const Eigen::Vector2d xn = project(x - damped.ldlt().solve(g));
      if ((xn - x).norm() < 1e-12) {
        stalled = true;
        break;
      }
      const double cn = prob.cost(xn(0), xn(1));
      if (std::isfinite(cn) && cn < cost) {
        const double drop = cost - cn;
        x = xn;
        cost = cn;
        lambda = std::max(lambda / cfg.lm_lambda_factor, 1e-12);
        accepted = true;
        if (drop <= cfg.convergence_tol * std::max(cost, 1e-300)) stalled = true;
      } else {
        lambda *= cfg.lm_lambda_factor;
      }
    }
    if (!accepted || stalled) break;
  }
  out.shape = ShapeParams(x(0), x(1));
  out.cost = cost;
  out.iterations = it;
  return out;
}

/// Object-frame cloud of a world cloud under a pose.
inline PointList to_object_frame(const PointList& points_world, const ObjectPose& pose) {
  PointList out;
  out.reserve(points_world.size());
  for (const auto& p : points_world) out.push_back(world_to_object(pose, p));
  return out;
}

/// Size from extent, then shape, for a cloud expressed in the object frame
/// of `pose`.
inline Superquadric fit_landmark(const PointList& points_world, const ObjectPose& pose,
                                 const FitConfig& cfg = {}) {
  if (points_world.size() < kMinFitPoints) throw DataError("too few points for a landmark fit");
  const PointList obj = to_object_frame(points_world, pose);
  const SizeParams size = size_from_extent(obj);
  const ShapeFit fit = fit_shape(obj, size, cfg);
  return Superquadric{size, fit.shape, pose};
}

/// Same fit with exponents pinned to (1, 1), i.e. an ellipsoid of the same
/// pose and size.
inline Superquadric fit_landmark_ellipsoid(const PointList& points_world, const ObjectPose& pose) {
  const PointList obj = to_object_frame(points_world, pose);
  return Superquadric{size_from_extent(obj), ShapeParams(1.0, 1.0), pose};
}

}  // namespace sqmap
