#pragma once

// Student-t machinery for centroid-history hypothesis tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sqmap/common.hpp"

namespace sqmap {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// CDF of Student's t with `df` degrees of freedom.
inline double student_t_cdf(double t, double df) {
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

/// Two-sided critical value t_{alpha/2, df}: the (1 - alpha/2) quantile,
/// found by bisecting the CDF.
inline double t_critical(double alpha, double df) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("t_critical: alpha must lie in (0, 1)");
  if (!(df >= 1.0)) throw DataError("t_critical: df must be >= 1");
  const double target = 1.0 - alpha / 2.0;
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, df) < target) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, df) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Per-observation centroids of one landmark, with per-axis mean and sample
/// standard deviation kept consistent with the samples.
class CentroidHistory {
 public:
  CentroidHistory() = default;
  explicit CentroidHistory(PointList samples) : samples_(std::move(samples)) { recompute(); }

  void add(const Vec3& c) {
    samples_.push_back(c);
    recompute();
  }

  void append(const CentroidHistory& other) {
    samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
    recompute();
  }

  std::size_t size() const { return samples_.size(); }
  const PointList& samples() const { return samples_; }
  const Vec3& mean() const { return mean_; }
  const Vec3& stddev() const { return std_; }

 private:
  void recompute() {
    mean_ = mean_of(samples_);
    std_.setZero();
    if (samples_.size() < 2) return;
    Vec3 ss = Vec3::Zero();
    for (const auto& s : samples_) ss += (s - mean_).cwiseAbs2();
    std_ = (ss / static_cast<double>(samples_.size() - 1)).cwiseSqrt();
  }

  PointList samples_;
  Vec3 mean_ = Vec3::Zero();
  Vec3 std_ = Vec3::Zero();
};

inline constexpr double kDegenerateMeanTol = 1e-6;

/// Per-axis t statistics and their degrees of freedom. A degenerate axis
/// (zero spread) carries t = 0 when the means agree within 1e-6, +inf otherwise.
struct AxisTTest {
  Vec3 t = Vec3::Zero();
  double df = 0.0;

  double max_abs() const { return t.cwiseAbs().maxCoeff(); }
  bool passes(double critical) const { return (t.array().abs() <= critical).all(); }
};

/// t = sqrt(n) (mean - c) / sigma per axis, df = n - 1.
inline AxisTTest t_statistic_single(const CentroidHistory& h, const Vec3& centroid) {
  if (h.size() < 2) throw DataError("single-sample t test needs at least 2 history samples");
  AxisTTest r;
  r.df = static_cast<double>(h.size() - 1);
  const double rn = std::sqrt(static_cast<double>(h.size()));
  for (int k = 0; k < 3; ++k) {
    const double diff = h.mean()(k) - centroid(k);
    if (h.stddev()(k) > 0.0)
      r.t(k) = rn * diff / h.stddev()(k);
    else
      r.t(k) = std::abs(diff) <= kDegenerateMeanTol ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return r;
}

/// Pooled-variance two-sample t per axis, df = n1 + n2 - 2.
inline AxisTTest t_statistic_double(const CentroidHistory& h1, const CentroidHistory& h2) {
  if (h1.size() < 2 || h2.size() < 2)
    throw DataError("double-sample t test needs at least 2 samples per history");
  const double n1 = static_cast<double>(h1.size());
  const double n2 = static_cast<double>(h2.size());
  AxisTTest r;
  r.df = n1 + n2 - 2.0;
  for (int k = 0; k < 3; ++k) {
    const double s1 = h1.stddev()(k);
    const double s2 = h2.stddev()(k);
    const double pooled = std::sqrt(((n1 - 1.0) * s1 * s1 + (n2 - 1.0) * s2 * s2) / r.df);
    const double diff = h1.mean()(k) - h2.mean()(k);
    if (pooled > 0.0)
      r.t(k) = diff / (pooled * std::sqrt(1.0 / n1 + 1.0 / n2));
    else
      r.t(k) = std::abs(diff) <= kDegenerateMeanTol ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace sqmap
