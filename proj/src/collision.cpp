#include "cppo/collision.hpp"

#include <algorithm>
#include <cmath>

namespace cppo {

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 u = unit_from_heading(heading);
  const Vec2 n{-u.y, u.x};
  const Vec2 hl = (0.5 * length) * u;
  const Vec2 hw = (0.5 * width) * n;
  return {center + hl + hw, center - hl + hw, center - hl - hw, center + hl - hw};
}

bool OrientedRect::contains(Vec2 p) const {
  const Vec2 u = unit_from_heading(heading);
  const Vec2 rel = p - center;
  return std::abs(dot(rel, u)) <= 0.5 * length && std::abs(cross(u, rel)) <= 0.5 * width;
}

namespace {

// Half-extent of the rectangle's shadow on a unit axis.
double projected_radius(const OrientedRect& r, Vec2 axis) {
  const Vec2 u = unit_from_heading(r.heading);
  const Vec2 n{-u.y, u.x};
  return 0.5 * r.length * std::abs(dot(u, axis)) + 0.5 * r.width * std::abs(dot(n, axis));
}

}  // namespace

bool rects_intersect(const OrientedRect& a, const OrientedRect& b) {
  const Vec2 between = b.center - a.center;
  for (const OrientedRect* r : {&a, &b}) {
    const Vec2 u = unit_from_heading(r->heading);
    for (Vec2 axis : {u, Vec2{-u.y, u.x}}) {
      if (std::abs(dot(between, axis)) > projected_radius(a, axis) + projected_radius(b, axis)) return false;
    }
  }
  return true;
}

}  // namespace cppo
