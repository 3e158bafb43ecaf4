#pragma once

#include <string>
#include <vector>

#include "morph/geom.hpp"

namespace morph {

// Displacements and forces reuse the point type as a 2-vector.
using Vec2 = Point2;

struct Segment {
  Point2 a;
  Point2 b;
  friend bool operator==(const Segment &, const Segment &) = default;
};

struct TargetPoint {
  std::string name;
  Point2 point;
  Vec2 u_target;  // mm
  friend bool operator==(const TargetPoint &, const TargetPoint &) = default;
};

struct TargetState {
  std::vector<TargetPoint> targets;
  friend bool operator==(const TargetState &, const TargetState &) = default;
};

// Fixed region, actuated region with its prescribed displacement, and the
// target displacements of every state.
struct BoundarySpec {
  std::vector<Segment> fixed;
  std::vector<Segment> actuated;
  Vec2 u_actuation;  // mm
  std::vector<TargetState> states;
  friend bool operator==(const BoundarySpec &, const BoundarySpec &) = default;
};

}  // namespace morph
