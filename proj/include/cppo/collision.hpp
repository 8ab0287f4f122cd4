#pragma once

#include <array>

#include "cppo/road_net.hpp"

namespace cppo {

struct OrientedRect {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;  // along the heading
  double width = 0.0;

  std::array<Vec2, 4> corners() const;
  bool contains(Vec2 p) const;
};

/// Separating-axis test; touching rectangles count as intersecting.
bool rects_intersect(const OrientedRect& a, const OrientedRect& b);

}  // namespace cppo
