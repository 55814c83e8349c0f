#pragma once

// Reference computations written independently of the library: plain scalar
// transcriptions, voxel counting, bisection and Richardson extrapolation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

struct Body {
  double ax, ay, az;
  double e1, e2;
  double yaw;
  double tx, ty, tz;
};

inline double spow(double x, double e) {
  const double m = std::pow(std::fabs(x), e);
  return x < 0.0 ? -m : m;
}

/// Surface point at (eta, omega), object frame.
inline std::array<double, 3> surface(const Body& b, double eta, double omega) {
  return {b.ax * spow(std::cos(eta), b.e1) * spow(std::cos(omega), b.e2),
          b.ay * spow(std::cos(eta), b.e1) * spow(std::sin(omega), b.e2),
          b.az * spow(std::sin(eta), b.e1)};
}

/// Implicit function, object frame.
inline double implicit(const Body& b, double x, double y, double z) {
  const double px = std::pow(std::fabs(x) / b.ax, 2.0 / b.e2);
  const double py = std::pow(std::fabs(y) / b.ay, 2.0 / b.e2);
  const double pz = std::pow(std::fabs(z) / b.az, 2.0 / b.e1);
  return std::pow(px + py, b.e2 / b.e1) + pz;
}

inline bool inside_world(const Body& b, double x, double y, double z) {
  const double dx = x - b.tx;
  const double dy = y - b.ty;
  const double dz = z - b.tz;
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double ox = c * dx + s * dy;
  const double oy = -s * dx + c * dy;
  if (std::fabs(ox) > b.ax || std::fabs(oy) > b.ay || std::fabs(dz) > b.az) return false;
  return implicit(b, ox, oy, dz) <= 1.0;
}

inline void bounds(const Body& b, double lo[3], double hi[3]) {
  const double c = std::fabs(std::cos(b.yaw));
  const double s = std::fabs(std::sin(b.yaw));
  const double hx = c * b.ax + s * b.ay;
  const double hy = s * b.ax + c * b.ay;
  lo[0] = b.tx - hx;
  hi[0] = b.tx + hx;
  lo[1] = b.ty - hy;
  hi[1] = b.ty + hy;
  lo[2] = b.tz - b.az;
  hi[2] = b.tz + b.az;
}

/// Volumetric IoU by counting voxel centers on an n^3 grid over the union box.
inline double voxel_iou(const Body& a, const Body& b, int n = 200) {
  double la[3], ha[3], lb[3], hb[3];
  bounds(a, la, ha);
  bounds(b, lb, hb);
  double lo[3], hi[3];
  for (int k = 0; k < 3; ++k) {
    lo[k] = std::min(la[k], lb[k]);
    hi[k] = std::max(ha[k], hb[k]);
  }
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo[0] + (hi[0] - lo[0]) * (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double y = lo[1] + (hi[1] - lo[1]) * (j + 0.5) / n;
      for (int k = 0; k < n; ++k) {
        const double z = lo[2] + (hi[2] - lo[2]) * (k + 0.5) / n;
        const bool ia = inside_world(a, x, y, z);
        const bool ib = inside_world(b, x, y, z);
        inter += ia && ib;
        uni += ia || ib;
      }
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Distance from p to the surface along the ray from the origin through p,
/// from a bisection root of implicit(s * u) = 1.
inline double radial_distance_bisect(const Body& b, double x, double y, double z) {
  const double r = std::sqrt(x * x + y * y + z * z);
  const double ux = x / r;
  const double uy = y / r;
  const double uz = z / r;
  double lo = 0.0;
  double hi = 1.0;
  while (implicit(b, hi * ux, hi * uy, hi * uz) < 1.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (implicit(b, mid * ux, mid * uy, mid * uz) < 1.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  return std::fabs(r - 0.5 * (lo + hi));
}

/// Weighted residual vector sqrt(w_i) * ||p_i|| * (1 - F^(-e1/2)) for a cloud
/// given as xyz triples, with linear distance weights.
inline std::vector<double> weighted_residuals(const std::vector<std::array<double, 3>>& pts,
                                              double ax, double ay, double az, double e1,
                                              double e2) {
  std::vector<double> norms;
  for (const auto& p : pts) norms.push_back(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
  const double lo = *std::min_element(norms.begin(), norms.end());
  const double hi = *std::max_element(norms.begin(), norms.end());
  const Body b{ax, ay, az, e1, e2, 0.0, 0.0, 0.0, 0.0};
  std::vector<double> r;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double w = hi > lo ? (norms[i] - lo) / (hi - lo) : 1.0;
    const double f = implicit(b, pts[i][0], pts[i][1], pts[i][2]);
    r.push_back(std::sqrt(w) * norms[i] * (1.0 - std::pow(f, -0.5 * e1)));
  }
  return r;
}

/// Derivative by Richardson extrapolation of central differences.
inline double richardson(const std::function<double(double)>& f, double x, double h = 1e-2) {
  constexpr int kLevels = 6;
  double t[kLevels][kLevels];
  for (int i = 0; i < kLevels; ++i) {
    t[i][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    double p = 4.0;
    for (int j = 1; j <= i; ++j) {
      t[i][j] = t[i][j - 1] + (t[i][j - 1] - t[i - 1][j - 1]) / (p - 1.0);
      p *= 4.0;
    }
    h /= 2.0;
  }
  return t[kLevels - 1][kLevels - 1];
}

}  // namespace oracle
