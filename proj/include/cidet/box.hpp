#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cidet {

// Axis-aligned box in image pixel coordinates. Ground-truth boxes carry no
// score; detections do.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  int class_id = 0;
  std::optional<double> score;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  bool valid() const {
    return x_min < x_max && y_min < y_max && class_id >= 0 &&
           (!score || (*score >= 0.0 && *score <= 1.0));
  }
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

// Intersection over union on real-valued coordinates (no +1 pixel
// convention). Symmetric; 1 for identical boxes, 0 for disjoint ones.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

inline BoundingBox clip_box(BoundingBox box, double width, double height) {
  box.x_min = std::clamp(box.x_min, 0.0, width);
  box.x_max = std::clamp(box.x_max, 0.0, width);
  box.y_min = std::clamp(box.y_min, 0.0, height);
  box.y_max = std::clamp(box.y_max, 0.0, height);
  return box;
}

}  // namespace cidet
