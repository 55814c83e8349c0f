#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sqmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using PointList = std::vector<Vec3, Eigen::aligned_allocator<Vec3>>;
using Mask = std::vector<bool>;

inline constexpr double kPi = std::numbers::pi;

/// Malformed input data (bad files, degenerate point clouds, violated preconditions).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative or numerical routine could not produce a finite answer.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// sign(x) * |x|^e, the sign-preserving power used by the parametric superquadric.
inline double signed_pow(double x, double e) {
  if (x == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(x), e), x);
}

inline Mat3 rot_z(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

/// SplitMix64 finalizer; used to derive independent random streams from
/// (seed, index) pairs so generation order never matters.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(seed ^ mix_seed(a)) ^ mix_seed(b + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

/// SplitMix64 as a standard random bit generator. Seeding is free, which
/// matters where many short streams are needed (one per isolation tree).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

template <class Engine>
Vec3 gaussian_vec3(Engine& rng, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return {x, y, z};
}

inline Vec3 mean_of(const PointList& pts) {
  Vec3 m = Vec3::Zero();
  for (const auto& p : pts) m += p;
  return pts.empty() ? m : Vec3(m / static_cast<double>(pts.size()));
}

}  // namespace sqmap
