/**
 * Source direction from two dipole readings.
 *
 * Each dipole contributes a ray from its midpoint at angle theta (CCW from
 * body +x). The source satisfies m12 + k12 d12 = s = m34 + k34 d34, solved
 * as a 4x4 linear system in (s_x, s_y, k12, k34). For the square array the
 * system collapses to cot(theta0) = (cot(theta1) + cot(theta2)) / 2.
 *
 * Degenerate systems (|det A| <= kDetEps) fall back to d12: parallel rays
 * (source effectively at infinity) or rays collinear with both midpoints.
 * Solutions with a negative scale factor are rejected as divergent.
 */
#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "rfnav/core.hpp"
#include "rfnav/rfsim.hpp"

namespace rfnav {

inline constexpr double kDetEps = 1e-6;

// ---------------------------------------------------------------- validation

struct ArrayCheck {
  bool ok = true;
  std::string constraint;  // "spacing", "balance" or "collinear" when !ok
  double measured = 0.0;
  double limit = 0.0;
};

/**
 * Checks, in order: dipole spacing <= lambda / 2, antenna positions summing
 * to zero (four-antenna arrays only), and that the antennas do not all lie
 * on one line. Returns the first violation with the measured value.
 */
inline ArrayCheck validate_array(const AntennaArray& array) {
  const std::size_t n = array.body_positions.size();
  if (n != 3 && n != 4) return {false, "count", static_cast<double>(n), 4.0};
  for (int p = 0; p < 2; ++p) {
    const double s = array.spacing(p);
    if (s > array.wavelength / 2.0 + 1e-12) return {false, "spacing", s, array.wavelength / 2.0};
    if (s == 0.0) return {false, "spacing", 0.0, array.wavelength / 2.0};
  }
  if (n == 4) {
    Vec2 sum;
    for (const Vec2& r : array.body_positions) sum += r;
    if (sum.norm() > 1e-9) return {false, "balance", sum.norm(), 1e-9};
  }
  // Largest |sin| between any two antenna difference vectors; zero means all
  // antennas share one line.
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          const Vec2 u = array.body_positions[i] - array.body_positions[j];
          const Vec2 v = array.body_positions[k] - array.body_positions[l];
          const double nu = u.norm();
          const double nv = v.norm();
          if (nu == 0.0 || nv == 0.0) continue;
          worst = std::max(worst, std::abs(cross(u, v)) / (nu * nv));
        }
  if (worst <= std::sin(1e-6)) return {false, "collinear", worst, std::sin(1e-6)};
  return {};
}

// ------------------------------------------------------------------- solvers

struct DipolePair {
  Vec2 midpoint;
  Vec2 unit_dir;
  double theta = 0.0;

  static DipolePair at(Vec2 midpoint, double theta) { return {midpoint, unit_from_angle(theta), theta}; }
};

enum class AoaCase { Unique, ParallelFallback, CollinearFallback, RejectedDivergent };

inline const char* to_string(AoaCase c) {
  switch (c) {
    case AoaCase::Unique: return "unique";
    case AoaCase::ParallelFallback: return "parallel_fallback";
    case AoaCase::CollinearFallback: return "collinear_fallback";
    case AoaCase::RejectedDivergent: return "rejected_divergent";
  }
  return "?";
}

struct AoaSolution {
  std::optional<Vec2> source_body;
  Vec2 direction;
  std::optional<double> k12;
  std::optional<double> k34;
  AoaCase kind = AoaCase::Unique;
  double det = 0.0;

  bool usable() const { return kind != AoaCase::RejectedDivergent; }
};

namespace detail {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

/// LU with partial pivoting. Returns det(A); `x` is only meaningful when the
/// returned determinant is non-zero.
inline double solve4(const Mat4& a, const Vec4& b, Vec4& x) {
  const Eigen::PartialPivLU<Mat4> lu(a);
  const double det = lu.determinant();
  if (det != 0.0) x = lu.solve(b);
  return det;
}

/// Rows: ray from m34, ray from m12; unknowns (s_x, s_y, k12, k34). The
/// direction endpoints are midpoint + unit_dir, so each entry is -unit_dir.
inline void build_system(const DipolePair& p12, const DipolePair& p34, Mat4& a, Vec4& b) {
  const Vec2 e34 = p34.midpoint + p34.unit_dir;
  const Vec2 e12 = p12.midpoint + p12.unit_dir;
  a << 1.0, 0.0, 0.0, p34.midpoint.x - e34.x,  //
      0.0, 1.0, 0.0, p34.midpoint.y - e34.y,      //
      1.0, 0.0, p12.midpoint.x - e12.x, 0.0,      //
      0.0, 1.0, p12.midpoint.y - e12.y, 0.0;
  b << p34.midpoint.x, p34.midpoint.y, p12.midpoint.x, p12.midpoint.y;
}

}  // namespace detail

/// Numerical det(A) of the two-ray system.
inline double system_determinant(const DipolePair& p12, const DipolePair& p34) {
  detail::Mat4 a;
  detail::Vec4 b;
  detail::Vec4 x = detail::Vec4::Zero();
  detail::build_system(p12, p34, a, b);
  return detail::solve4(a, b, x);
}

inline AoaSolution solve_general(const DipolePair& p12, const DipolePair& p34) {
  if (!p12.midpoint.finite() || !p12.unit_dir.finite() || !p34.midpoint.finite() || !p34.unit_dir.finite())
    throw std::domain_error("solve_general: non-finite dipole input");
  detail::Mat4 a;
  detail::Vec4 b;
  detail::Vec4 x = detail::Vec4::Zero();
  detail::build_system(p12, p34, a, b);
  const double det = detail::solve4(a, b, x);

  AoaSolution sol;
  sol.det = det;
  sol.direction = p12.unit_dir;
  if (std::abs(det) <= kDetEps) {
    const Vec2 join = p34.midpoint - p12.midpoint;
    const double jn = join.norm();
    const bool collinear = jn == 0.0 || std::abs(cross(join / jn, p12.unit_dir)) <= kDetEps;
    sol.kind = collinear ? AoaCase::CollinearFallback : AoaCase::ParallelFallback;
    return sol;
  }
  const Vec2 s{x[0], x[1]};
  sol.source_body = s;
  sol.k12 = x[2];
  sol.k34 = x[3];
  if (!(x[2] > 0.0) || !(x[3] > 0.0)) {
    sol.kind = AoaCase::RejectedDivergent;
    return sol;
  }
  sol.kind = AoaCase::Unique;
  if (s.norm() > 0.0) sol.direction = s / s.norm();
  return sol;
}

/// Three-antenna variant with A2 shared by both dipoles (A1A2, A2A4). The
/// linear system is the four-antenna one with r3 replaced by r2.
inline AoaSolution three_antenna_solve(const DipolePair& p12, const DipolePair& p24) {
  return solve_general(p12, p24);
}

// ------------------------------------------------------------ square array

enum class HalfPlane { RightOfO, LeftOfO, Indeterminate };

inline const char* to_string(HalfPlane h) {
  switch (h) {
    case HalfPlane::RightOfO: return "right";
    case HalfPlane::LeftOfO: return "left";
    case HalfPlane::Indeterminate: return "indeterminate";
  }
  return "?";
}

/// theta1 > theta2: source on the A1A2 side (right of O); the reverse puts
/// it on the A3A4 side. Angles within `tol` are indeterminate.
inline HalfPlane half_plane(double theta1, double theta2, double tol = 1e-9) {
  if (std::abs(theta1 - theta2) <= tol) return HalfPlane::Indeterminate;
  return theta1 > theta2 ? HalfPlane::RightOfO : HalfPlane::LeftOfO;
}

struct SquareAngles {
  double theta1 = 0.0;
  double theta2 = 0.0;
  HalfPlane side = HalfPlane::Indeterminate;
  bool on_axis = false;  // both readings zero: source on the x axis
};

/**
 * Maps front-facing dipole readings of the square array to ray angles at
 * the dipole midpoints P = (d, 0) and Q = (-d, 0).
 *
 * `front1`, `front2` are angles off the +x broadside, positive towards +y
 * (see `front_reading`). The vertical side comes from the sign of the
 * readings; the left/right side from `half_plane` on the readings folded
 * into the upper half. Equal readings leave only the configuration where
 * the source lies between the two dipoles (theta1 = pi - front1,
 * theta2 = front2). Zero readings put the source on the x axis, which the
 * vertical dipoles cannot orient; `behind` selects -x over +x there.
 */
inline SquareAngles resolve_square(double front1, double front2, double d, bool behind = false,
                                   double tol = 1e-9) {
  if (!(d > 0.0)) throw std::invalid_argument("resolve_square: half side must be > 0");
  if (!std::isfinite(front1) || !std::isfinite(front2)) throw std::domain_error("resolve_square: non-finite reading");
  SquareAngles out;
  if (std::abs(front1) <= tol && std::abs(front2) <= tol) {
    out.on_axis = true;
    out.theta1 = out.theta2 = behind ? kPi : 0.0;
    return out;
  }
  const double sign = (front1 + front2) >= 0.0 ? 1.0 : -1.0;
  out.side = half_plane(sign * front1, sign * front2, tol);
  switch (out.side) {
    case HalfPlane::RightOfO:
      out.theta1 = front1;
      out.theta2 = front2;
      break;
    case HalfPlane::LeftOfO:
      out.theta1 = sign * kPi - front1;
      out.theta2 = sign * kPi - front2;
      break;
    case HalfPlane::Indeterminate:
      out.theta1 = sign * kPi - front1;
      out.theta2 = front2;
      break;
  }
  return out;
}

/**
 * Direction angle from the origin: cot(theta0) = (cot(theta1) + cot(theta2)) / 2,
 * on the same side of the x axis as theta1. Equal angles give theta0 =
 * theta1, which is the parallel-ray fallback direction. Throws
 * std::domain_error when either sine vanishes (rays along the x axis).
 */
inline double square_aoa(double theta1, double theta2) {
  const double s1 = std::sin(theta1);
  const double s2 = std::sin(theta2);
  if (s1 == 0.0 || s2 == 0.0) throw std::domain_error("square_aoa: reading on the x axis");
  const double cot0 = 0.5 * (std::cos(theta1) / s1 + std::cos(theta2) / s2);
  const double side = s1 > 0.0 ? 1.0 : -1.0;
  return std::atan2(side, side * cot0);
}

// ------------------------------------------------------------------ pipeline

/// Raw dipole reading in the array's sign convention. Phase differences past
/// the geometric bound saturate to endfire (noise near +-90 degrees).
inline double dipole_reading(const AntennaArray& array, const PhaseReading& phases, int dipole) {
  const auto [a, b] = array.pairs.at(static_cast<std::size_t>(dipole));
  const double s = array.spacing(dipole);
  const double delta = wrap_angle(phases.phases.at(static_cast<std::size_t>(b)) -
                                  phases.phases.at(static_cast<std::size_t>(a)));
  const double arg = delta * array.wavelength / (kTwoPi * s);
  if (std::abs(arg) > 1.0 + 1e-9) return std::copysign(kPi / 2.0, arg);
  return dipole_aoa(phases.phases.at(static_cast<std::size_t>(a)), phases.phases.at(static_cast<std::size_t>(b)), s,
                    array.wavelength);
}

/// Converts a raw reading of a vertical square dipole to the +y-positive
/// convention used by resolve_square.
inline double front_reading(const AntennaArray& array, int dipole, double raw) {
  return array.endfire(dipole).y >= 0.0 ? raw : -raw;
}

struct DirectionEstimate {
  bool valid = false;
  Vec2 world_dir;
  Vec2 body_dir;
  AoaCase kind = AoaCase::Unique;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

namespace detail {

/// Non-square arrays: each reading is ambiguous about which side of its
/// broadside the source lies on. Of the four combinations, prefer converging
/// rays that are closest to parallel (far field); otherwise a fallback.
inline AoaSolution solve_ambiguous(const AntennaArray& array, double raw1, double raw2, double& th1, double& th2) {
  std::array<DipolePair, 2> front;
  std::array<DipolePair, 2> back;
  const std::array<double, 2> raw{raw1, raw2};
  for (int p = 0; p < 2; ++p) {
    const Vec2 e = array.endfire(p);
    const Vec2 n{e.y, -e.x};  // broadside normal
    const Vec2 uf = n * std::cos(raw[p]) + e * std::sin(raw[p]);
    const Vec2 ub = -n * std::cos(raw[p]) + e * std::sin(raw[p]);
    front[p] = DipolePair{array.midpoint(p), uf, std::atan2(uf.y, uf.x)};
    back[p] = DipolePair{array.midpoint(p), ub, std::atan2(ub.y, ub.x)};
  }
  std::optional<AoaSolution> best;
  std::optional<AoaSolution> fallback;
  double best_gap = 1e300;
  for (int c = 0; c < 4; ++c) {
    const DipolePair& a = (c & 1) ? back[0] : front[0];
    const DipolePair& b = (c & 2) ? back[1] : front[1];
    const AoaSolution s = solve_general(a, b);
    if (s.kind == AoaCase::Unique) {
      const double gap = std::acos(std::clamp(dot(a.unit_dir, b.unit_dir), -1.0, 1.0));
      if (gap < best_gap) {
        best_gap = gap;
        best = s;
        th1 = a.theta;
        th2 = b.theta;
      }
    } else if (s.usable() && !fallback && dot(a.unit_dir, b.unit_dir) > 0.0) {
      fallback = s;
      if (!best) {
        th1 = a.theta;
        th2 = b.theta;
      }
    }
  }
  if (best) return *best;
  if (fallback) return *fallback;
  AoaSolution rejected;
  rejected.kind = AoaCase::RejectedDivergent;
  return rejected;
}

}  // namespace detail

namespace detail {

/// Direction implied by a square-array ray pair, or nothing when the rays
/// diverge or point in opposite directions.
inline std::optional<std::pair<Vec2, AoaCase>> square_candidate(const AntennaArray& array, double theta1,
                                                                double theta2) {
  const DipolePair p12 = DipolePair::at(array.midpoint(0), theta1);
  const DipolePair p34 = DipolePair::at(array.midpoint(1), theta2);
  const AoaSolution sol = solve_general(p12, p34);
  if (sol.kind == AoaCase::RejectedDivergent) return std::nullopt;
  if (sol.kind != AoaCase::Unique) {
    if (dot(p12.unit_dir, p34.unit_dir) <= 0.0) return std::nullopt;
    return std::pair{p12.unit_dir, sol.kind};
  }
  if (std::sin(theta1) == 0.0 || std::sin(theta2) == 0.0) return std::pair{sol.direction, sol.kind};
  return std::pair{unit_from_angle(square_aoa(theta1, theta2)), AoaCase::Unique};
}

}  // namespace detail

/**
 * Full estimator: dipole readings -> ray angles -> body direction -> world
 * direction through the pose heading. Square arrays use the half-plane test
 * and the closed form; other arrays the linear system. Divergent readings
 * give an invalid estimate and callers keep their previous direction.
 *
 * `prior_world` is a tracker's previous estimate. For the square array it
 * can override the left/right decision: when the result points away from
 * the prior (negative dot product) but its mirror image across the array's
 * y axis (the other half-plane) does not, the mirror is returned. The
 * half-plane margin vanishes near the array's x axis, where a noisy test is
 * a coin flip.
 */
inline DirectionEstimate estimate_direction(const AntennaArray& array, const PhaseReading& phases, const Pose& pose,
                                            const std::optional<Vec2>& prior_world = std::nullopt) {
  DirectionEstimate est;
  const double raw1 = dipole_reading(array, phases, 0);
  const double raw2 = dipole_reading(array, phases, 1);

  if (array.is_square()) {
    const SquareAngles ang =
        resolve_square(front_reading(array, 0, raw1), front_reading(array, 1, raw2), array.half_side());
    est.theta1 = ang.theta1;
    est.theta2 = ang.theta2;
    const auto cand = detail::square_candidate(array, ang.theta1, ang.theta2);
    if (!cand) {
      est.kind = AoaCase::RejectedDivergent;
      return est;
    }
    est.body_dir = cand->first;
    est.kind = cand->second;
    if (prior_world) {
      const Vec2 prior = pose.dir_to_body(*prior_world);
      const Vec2 mirrored{-est.body_dir.x, est.body_dir.y};
      if (dot(est.body_dir, prior) < 0.0 && dot(mirrored, prior) > 0.0) est.body_dir = mirrored;
    }
  } else {
    const AoaSolution sol = detail::solve_ambiguous(array, raw1, raw2, est.theta1, est.theta2);
    est.kind = sol.kind;
    if (!sol.usable()) return est;
    est.body_dir = sol.direction;
  }
  est.valid = true;
  est.world_dir = pose.dir_to_world(est.body_dir);
  return est;
}

}  // namespace rfnav
