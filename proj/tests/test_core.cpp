#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rfnav/core.hpp"

using namespace rfnav;

TEST(WrapAngle, FixedPoints) {
  EXPECT_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(3.0 * kPi), kPi);
  EXPECT_NEAR(wrap_angle(-3.5 * kPi), 0.5 * kPi, 1e-12);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
}

TEST(WrapAngle, RangeAndCongruence) {
  RngStream rng(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(-100.0, 100.0);
    const double w = wrap_angle(a);
    ASSERT_GT(w, -kPi);
    ASSERT_LE(w, kPi);
    // a - w must be a whole number of turns
    const double turns = (a - w) / kTwoPi;
    ASSERT_NEAR(turns, std::round(turns), 1e-9);
  }
}

TEST(Pose, HeadingIsWrapped) {
  const Pose p({1.0, 2.0}, 5.0 * kPi);
  EXPECT_DOUBLE_EQ(p.heading, kPi);
}

TEST(Pose, BodyWorldRoundTrip) {
  const Pose p({0.0, 0.0}, kPi / 2.0);
  const Vec2 w = p.dir_to_world({1.0, 0.0});
  EXPECT_NEAR(w.x, 0.0, 1e-15);
  EXPECT_NEAR(w.y, 1.0, 1e-15);
  const Vec2 b = p.dir_to_body(w);
  EXPECT_NEAR(b.x, 1.0, 1e-15);
  EXPECT_NEAR(b.y, 0.0, 1e-15);
}

TEST(RngStream, SameIdsSameSequence) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DifferentStreamsDiffer) {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_b = 0, same_c = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_b += x == b.next_u64();
    same_c += x == c.next_u64();
  }
  EXPECT_EQ(same_b, 0);
  EXPECT_EQ(same_c, 0);
}

TEST(RngStream, SplitDoesNotAdvanceParent) {
  RngStream a(3, 0), b(3, 0);
  (void)a.split(5);
  EXPECT_EQ(a.draws(), 0u);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  RngStream c1 = a.split(9), c2 = b.split(9);
  EXPECT_EQ(c1.next_u64(), c2.next_u64());
}

// Pinned values guard the cross-platform reproducibility claim: the stream
// is pure integer arithmetic, so these must never change.
TEST(RngStream, PinnedDraws) {
  RngStream a(0, 0);
  const std::uint64_t first = a.next_u64();
  RngStream b(0, 0);
  EXPECT_EQ(first, b.next_u64());
  // splitmix64 oracle computed independently of the class
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  const std::uint64_t key = mix(mix(0) ^ 0);
  EXPECT_EQ(first, mix(key + 0x9E3779B97F4A7C15ull));
}

TEST(RngStream, UniformRange) {
  RngStream r(5, 5);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(7), 7u);
  }
  EXPECT_THROW(r.below(0), std::invalid_argument);
}

TEST(Gaussian, ZeroSigmaReturnsMuWithoutDrawing) {
  RngStream r(1, 1);
  EXPECT_EQ(gaussian(r, 5.0, 0.0), 5.0);
  EXPECT_EQ(r.draws(), 0u);
}

TEST(Gaussian, NegativeSigmaThrows) {
  RngStream r(1, 1);
  EXPECT_THROW(gaussian(r, 0.0, -1.0), std::invalid_argument);
}

TEST(Gaussian, Moments) {
  RngStream r(11, 0);
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += gaussian(r, 0.0, 1.0);
  EXPECT_NEAR(s / n, 0.0, 0.02);

  RngStream q(12, 0);
  std::vector<double> xs(n);
  double m = 0.0;
  for (double& x : xs) m += x = gaussian(q, 0.0, 2.0);
  m /= n;
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  EXPECT_NEAR(v / n, 4.0, 0.1);
}

TEST(Vec2, Arithmetic) {
  const Vec2 a{3.0, 4.0};
  EXPECT_EQ(a.norm(), 5.0);
  EXPECT_EQ(distance(a, {0.0, 0.0}), 5.0);
  EXPECT_EQ(dot(a, {1.0, 0.0}), 3.0);
  EXPECT_EQ(cross({1.0, 0.0}, {0.0, 1.0}), 1.0);
  const Vec2 u = normalized(a);
  EXPECT_DOUBLE_EQ(u.x, 0.6);
  EXPECT_DOUBLE_EQ(u.y, 0.8);
}
