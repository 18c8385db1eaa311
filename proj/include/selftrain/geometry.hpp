#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace selftrain {

/// Axis-aligned box, (x, y) top-left corner, real-valued pixel units.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
           std::isfinite(h) && w > 0.0 && h > 0.0;
  }

  bool operator==(const BoundingBox&) const = default;
};

/// Intersection-over-union of two valid boxes. Symmetric, 0 when disjoint,
/// 1 for identical boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Identifies one frame of one video. Plain images use frame 0.
struct FrameRef {
  std::string video;
  std::int64_t frame = 0;

  auto operator<=>(const FrameRef&) const = default;
};

struct Detection {
  FrameRef frame;
  BoundingBox box;
  double score = 0.0;  // normalized detector confidence in [0,1]

  bool operator==(const Detection&) const = default;
};

struct GroundTruthBox {
  FrameRef frame;
  BoundingBox box;
  std::vector<std::string> tags;  // sorted, unique; sub-domain labels etc.

  bool operator==(const GroundTruthBox&) const = default;
};

}  // namespace selftrain
