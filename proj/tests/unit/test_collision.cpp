#include <gtest/gtest.h>

#include <cmath>

#include "cppo/collision.hpp"
#include "cppo/rng.hpp"

using namespace cppo;

namespace {

// Signed separation along the four edge normals: > 0 means a gap, < 0 overlap.
double axis_separation(const OrientedRect& a, const OrientedRect& b) {
  double best = -INFINITY;
  for (const OrientedRect* r : {&a, &b}) {
    for (double h : {r->heading, r->heading + M_PI / 2}) {
      const Vec2 axis{std::cos(h), std::sin(h)};
      double amin = INFINITY, amax = -INFINITY, bmin = INFINITY, bmax = -INFINITY;
      for (Vec2 c : a.corners()) {
        amin = std::min(amin, dot(c, axis));
        amax = std::max(amax, dot(c, axis));
      }
      for (Vec2 c : b.corners()) {
        bmin = std::min(bmin, dot(c, axis));
        bmax = std::max(bmax, dot(c, axis));
      }
      best = std::max(best, std::max(bmin - amax, amin - bmax));
    }
  }
  return best;
}

// Point-sampling oracle: boundary of each rectangle at `step` spacing tested against the other.
bool sampled_intersect(const OrientedRect& a, const OrientedRect& b, double step) {
  for (int pass = 0; pass < 2; ++pass) {
    const OrientedRect& p = pass == 0 ? a : b;
    const OrientedRect& q = pass == 0 ? b : a;
    const auto c = p.corners();
    for (int e = 0; e < 4; ++e) {
      const Vec2 from = c[e], to = c[(e + 1) % 4];
      const int n = static_cast<int>(norm(to - from) / step) + 1;
      for (int i = 0; i <= n; ++i) {
        if (q.contains(from + (static_cast<double>(i) / n) * (to - from))) return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST(Collision, BasicCases) {
  const OrientedRect a{{0, 0}, 0.3, 5, 2};
  EXPECT_TRUE(rects_intersect(a, a));
  EXPECT_FALSE(rects_intersect(a, {{100, 0}, 0.0, 5, 2}));
  // touching edges count as intersecting
  EXPECT_TRUE(rects_intersect({{0, 0}, 0.0, 4, 2}, {{4, 0}, 0.0, 4, 2}));
  EXPECT_FALSE(rects_intersect({{0, 0}, 0.0, 4, 2}, {{4.001, 0}, 0.0, 4, 2}));
  // one inside the other
  EXPECT_TRUE(rects_intersect({{0, 0}, 0.0, 10, 10}, {{1, 1}, 0.7, 1, 1}));
}

TEST(Collision, CornersAndContainment) {
  const OrientedRect r{{1, 2}, M_PI / 2, 4, 2};
  for (Vec2 c : r.corners()) {
    EXPECT_NEAR(std::abs(c.x - 1), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(c.y - 2), 2.0, 1e-12);
  }
  EXPECT_TRUE(r.contains({1.9, 3.9}));
  EXPECT_FALSE(r.contains({2.1, 2}));
}

TEST(Collision, AgreesWithSamplingOracle) {
  Rng rng = make_rng(31);
  int disagreements = 0;
  const int pairs = 2000;
  for (int i = 0; i < pairs; ++i) {
    const OrientedRect a{{0, 0}, uniform(rng, -M_PI, M_PI), uniform(rng, 1, 6), uniform(rng, 0.5, 3)};
    const OrientedRect b{{uniform(rng, -6, 6), uniform(rng, -6, 6)}, uniform(rng, -M_PI, M_PI), uniform(rng, 1, 6),
                         uniform(rng, 0.5, 3)};
    if (rects_intersect(a, b) != sampled_intersect(a, b, 0.0005)) {
      ++disagreements;
      EXPECT_LT(std::abs(axis_separation(a, b)), 0.01);
    }
  }
  EXPECT_LE(disagreements, pairs / 1000);
}
