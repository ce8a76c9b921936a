/**
 * RF wavefield simulation at the antenna positions, single-bin phase
 * extraction and two-antenna (dipole) angle of arrival.
 *
 * Wave model: W = A sin(k d + w (t - t0) + phi) with d the antenna-source
 * distance and k = 2 pi / lambda. The phase therefore grows with distance,
 * and a dipole (a, b) sees delta = phase_b - phase_a = k (d_b - d_a), which
 * is positive when the source lies towards antenna a.
 */
#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "rfnav/core.hpp"

namespace rfnav {

inline constexpr double kSpeedOfLight = 299792458.0;

struct RfSource {
  Vec2 position;
  double amplitude = 1.0;
  double frequency = 300e6;  // Hz
  double initial_phase = 0.0;
  double t0 = 0.0;
  double dz = 0.0;  // source height above the antenna plane

  double wavelength() const { return kSpeedOfLight / frequency; }
};

struct AntennaArray {
  std::vector<Vec2> body_positions;
  std::array<std::pair<int, int>, 2> pairs{{{0, 1}, {2, 3}}};
  double wavelength = 1.0;

  Vec2 position(int i) const { return body_positions.at(static_cast<std::size_t>(i)); }
  Vec2 midpoint(int dipole) const {
    const auto [a, b] = pairs.at(static_cast<std::size_t>(dipole));
    return (position(a) + position(b)) * 0.5;
  }
  double spacing(int dipole) const {
    const auto [a, b] = pairs.at(static_cast<std::size_t>(dipole));
    return distance(position(a), position(b));
  }
  /// Unit vector from antenna b towards antenna a: a positive dipole reading
  /// means the source lies on this side of the broadside line.
  Vec2 endfire(int dipole) const {
    const auto [a, b] = pairs.at(static_cast<std::size_t>(dipole));
    return normalized(position(a) - position(b));
  }

  /// A1 (d,-d), A2 (d,d), A3 (-d,d), A4 (-d,-d); dipoles A1A2 and A3A4.
  static AntennaArray square(double half_side, double wavelength) {
    AntennaArray arr;
    arr.body_positions = {{half_side, -half_side}, {half_side, half_side},
                          {-half_side, half_side}, {-half_side, -half_side}};
    arr.pairs = {{{0, 1}, {2, 3}}};
    arr.wavelength = wavelength;
    return arr;
  }

  /// Three antennas with A2 shared: dipoles A1A2 and A2A4 (stored as 0-1, 1-2).
  static AntennaArray three(Vec2 a1, Vec2 a2, Vec2 a4, double wavelength) {
    AntennaArray arr;
    arr.body_positions = {a1, a2, a4};
    arr.pairs = {{{0, 1}, {1, 2}}};
    arr.wavelength = wavelength;
    return arr;
  }

  bool is_square(double tol = 1e-12) const {
    if (body_positions.size() != 4 || pairs[0] != std::pair{0, 1} || pairs[1] != std::pair{2, 3}) return false;
    const double d = body_positions[0].x;
    const AntennaArray ref = square(d, wavelength);
    for (std::size_t i = 0; i < 4; ++i)
      if (distance(ref.body_positions[i], body_positions[i]) > tol) return false;
    return d > 0.0;
  }

  double half_side() const { return body_positions.at(0).x; }
};

struct PhaseReading {
  std::vector<double> phases;     // wrapped, one per antenna
  std::vector<double> bin_power;  // |projection|^2 / N^2, one per antenna
};

/// Field value at an antenna. Throws when the antenna sits on the source.
inline double sample_wave(const RfSource& src, const Vec2& antenna, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("sample_wave: t must be >= 0");
  const Vec2 rel = antenna - src.position;
  const double d = std::sqrt(rel.squared_norm() + src.dz * src.dz);
  if (d == 0.0) throw std::domain_error("sample_wave: antenna coincides with the source");
  const double k = kTwoPi / src.wavelength();
  const double omega = kTwoPi * src.frequency;
  return src.amplitude * std::sin(k * d + omega * (t - src.t0) + src.initial_phase);
}

/**
 * Phase of the projection of `samples` onto the carrier, with samples taken
 * at t_n = n / sample_rate. For A sin(w t + psi) over whole periods the
 * projection is -j (N A / 2) e^{j psi}, so psi = arg(X) + pi / 2.
 */
inline double extract_phase(std::span<const double> samples, double sample_rate, double carrier,
                            double* bin_power = nullptr) {
  if (!(carrier > 0.0) || !(sample_rate >= 8.0 * carrier))
    throw std::invalid_argument("extract_phase: sample_rate must be >= 8x the carrier");
  const double n = static_cast<double>(samples.size());
  const double periods = n * carrier / sample_rate;
  if (samples.empty() || std::abs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods) ||
      std::round(periods) < 1.0)
    throw std::invalid_argument("extract_phase: window is not a whole number of carrier periods");

  const double cycles_per_sample = carrier / sample_rate;
  std::complex<double> acc{0.0, 0.0};
  bool any = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double phase = kTwoPi * std::fmod(cycles_per_sample * static_cast<double>(i), 1.0);
    acc += samples[i] * std::complex<double>(std::cos(phase), -std::sin(phase));
    any = any || samples[i] != 0.0;
  }
  if (!any || std::abs(acc) == 0.0) throw std::domain_error("extract_phase: window has no carrier energy");
  if (bin_power) *bin_power = std::norm(acc) / (n * n);
  return wrap_angle(std::arg(acc) + kPi / 2.0);
}

/**
 * Angle off the dipole broadside, theta = asin(delta * lambda / (2 pi s))
 * with delta = wrap(phase_b - phase_a). Positive towards antenna a.
 * Arguments past 1 + 1e-9 in magnitude throw; the sliver in between clamps.
 */
inline double dipole_aoa(double phase_a, double phase_b, double spacing, double wavelength) {
  if (!(spacing > 0.0) || !(wavelength > 0.0)) throw std::invalid_argument("dipole_aoa: bad geometry");
  const double delta = wrap_angle(phase_b - phase_a);
  double arg = delta * wavelength / (kTwoPi * spacing);
  if (std::abs(arg) > 1.0 + 1e-9) throw std::domain_error("dipole_aoa: phase exceeds geometric bound");
  arg = std::clamp(arg, -1.0, 1.0);
  return std::asin(arg);
}

struct RfConfig {
  double frequency = 300e6;
  double half_side = 0.225;  // square side 2d = 0.45 m
  int periods = 8;
  int oversample = 16;
  double amplitude = 1.0;
  double initial_phase = 0.0;
  double noise_sigma = 0.0;  // additive white noise on samples, units of amplitude

  double wavelength() const { return kSpeedOfLight / frequency; }
  double sample_rate() const { return frequency * oversample; }
  std::size_t window() const { return static_cast<std::size_t>(periods) * static_cast<std::size_t>(oversample); }
};

/**
 * Samples the field at every antenna of `array` mounted on `pose` and
 * extracts the per-antenna carrier phase. Noise, when enabled, is drawn from
 * `rng` in antenna-major order.
 */
inline PhaseReading measure_phases(const AntennaArray& array, const Pose& pose, const RfSource& src,
                                   const RfConfig& cfg, RngStream* rng = nullptr) {
  PhaseReading out;
  const std::size_t n = cfg.window();
  const double fs = cfg.sample_rate();
  std::vector<double> buf(n);
  for (const Vec2& body : array.body_positions) {
    const Vec2 world = pose.to_world(body);
    for (std::size_t i = 0; i < n; ++i) {
      buf[i] = sample_wave(src, world, static_cast<double>(i) / fs);
      if (cfg.noise_sigma > 0.0 && rng) buf[i] += gaussian(*rng, 0.0, cfg.noise_sigma * src.amplitude);
    }
    double power = 0.0;
    out.phases.push_back(extract_phase(buf, fs, src.frequency, &power));
    out.bin_power.push_back(power);
  }
  return out;
}

}  // namespace rfnav
