/**
 * Shared planar geometry, angle conventions and the deterministic random
 * stream used across rfnav.
 *
 * Frames: world is x-east / y-north with counter-clockwise-positive
 * headings; the body frame is the world frame rotated by the pose heading.
 * All angles are radians internally.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfnav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline Vec2 normalized(const Vec2& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw std::domain_error("cannot normalize a zero-length vector");
  return v / n;
}

inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

/// Counter-clockwise rotation by `a` radians.
inline Vec2 rotate(const Vec2& v, double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/**
 * Maps any finite angle to (-pi, pi]. Throws std::domain_error on NaN/inf.
 */
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) throw std::domain_error("wrap_angle: non-finite angle");
  double r = std::remainder(a, kTwoPi);  // exact, in [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

struct Pose {
  Vec2 position;
  double heading = 0.0;

  Pose() = default;
  Pose(Vec2 p, double h) : position(p), heading(wrap_angle(h)) {}

  Vec2 to_world(const Vec2& body) const { return position + rotate(body, heading); }
  Vec2 dir_to_world(const Vec2& body_dir) const { return rotate(body_dir, heading); }
  Vec2 dir_to_body(const Vec2& world_dir) const { return rotate(world_dir, -heading); }
};

/**
 * Ordered waypoints. `points.front()` is the start of the descent.
 * `stalled` marks early termination (local minimum or fully blocked step);
 * `reached` marks that the goal itself was appended.
 */
struct Trajectory {
  std::vector<Vec2> points;
  bool stalled = false;
  bool reached = false;

  std::size_t size() const { return points.size(); }
  const Vec2& back() const { return points.back(); }
};

/**
 * Counter-based random stream: draw i of stream (seed, stream_id) is a pure
 * function of (seed, stream_id, i), so identical ids give identical
 * sequences on every platform and independent streams can be evaluated in
 * any order. Mixing is splitmix64; uniforms use the top 53 bits.
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id), key_(mix(mix(seed) ^ (stream_id * 0xD1B54A32D192ED03ull))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t draws() const { return counter_; }

  std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RngStream::below: empty range");
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Derives an independent child stream; does not advance this stream.
  RngStream split(std::uint64_t child_id) const { return RngStream(key_, child_id); }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/**
 * Normal draw by the Box-Muller cosine branch; consumes exactly two
 * uniforms. sigma == 0 returns mu exactly without consuming draws.
 */
inline double gaussian(RngStream& rng, double mu, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian: sigma must be >= 0");
  if (sigma == 0.0) return mu;
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace rfnav
