#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cidet/box.hpp"
#include "cidet/tensor.hpp"

namespace cidet {

// Dense training targets for one image at output-map resolution.
//
//   center      [C, H, W]    Gaussian peaks, 1.0 at object centers
//   size        [C, 2, H, W] (width, height) in output-stride cells
//   offset      [C, 2, H, W] (x, y) sub-cell fraction of the true center
//   center_mask [C, H, W]    exact object-center cells
//
// size/offset are nonzero only on masked cells; losses read them through the
// mask. Two same-class objects whose centers land in the same cell collapse
// to one mask entry (the later box wins the size/offset payload, the center
// map keeps the pointwise max).
template <typename T>
struct TargetMaps {
  int num_classes = 0;
  int height = 0;
  int width = 0;
  std::vector<T> center;
  std::vector<T> size;
  std::vector<T> offset;
  std::vector<std::uint8_t> center_mask;
  int n_objects = 0;

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }

  std::size_t center_index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  std::size_t pair_index(int c, int ch, int y, int x) const {
    return ((static_cast<std::size_t>(c) * 2 + ch) * height + y) * width + x;
  }

  int mask_count() const {
    int n = 0;
    for (auto m : center_mask) n += m != 0;
    return n;
  }
};

// Radius (in output cells) of the Gaussian splat for a box of the given size
// such that any detection displaced by up to the radius — by translation, by
// shrinking both corners inward, or by expanding both corners outward —
// still overlaps the ground truth with IoU >= min_overlap. Each case is the
// smaller root of a quadratic; the result is the tightest of the three,
// floor-clamped at 1 cell.
inline double gaussian_radius(double box_w, double box_h, double min_overlap = 0.7) {
  if (!(box_w > 0.0) || !(box_h > 0.0))
    throw std::invalid_argument("gaussian_radius: box dimensions must be positive");
  if (!(min_overlap > 0.0) || !(min_overlap < 1.0))
    throw std::invalid_argument("gaussian_radius: min_overlap must be in (0, 1)");

  const double w = box_w, h = box_h, o = min_overlap;

  // Translation by (r, r): (w-r)(h-r) >= o * (2wh - (w-r)(h-r)).
  const double b1 = h + w;
  const double c1 = w * h * (1.0 - o) / (1.0 + o);
  const double r1 = (b1 - std::sqrt(b1 * b1 - 4.0 * c1)) / 2.0;

  // Both corners inward by r: (w-2r)(h-2r) >= o * wh.
  const double a2 = 4.0;
  const double b2 = 2.0 * (h + w);
  const double c2 = (1.0 - o) * w * h;
  const double r2 = (b2 - std::sqrt(b2 * b2 - 4.0 * a2 * c2)) / (2.0 * a2);

  // Both corners outward by r: wh >= o * (w+2r)(h+2r).
  const double a3 = 4.0 * o;
  const double b3 = -2.0 * o * (h + w);
  const double c3 = (o - 1.0) * w * h;
  const double r3 = (-b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / (2.0 * a3);

  return std::max(1.0, std::min({r1, r2, r3}));
}

// Stamps an exact-peak Gaussian (value 1 at (cx, cy)) onto one class plane,
// combining with existing values by elementwise max.
template <typename T>
void splat_gaussian(T* plane, int height, int width, int cx, int cy, double radius) {
  const int r = std::max(1, static_cast<int>(radius));
  const double sigma = (2.0 * r + 1.0) / 6.0;
  const double denom = 2.0 * sigma * sigma;
  for (int dy = -r; dy <= r; ++dy) {
    const int y = cy + dy;
    if (y < 0 || y >= height) continue;
    for (int dx = -r; dx <= r; ++dx) {
      const int x = cx + dx;
      if (x < 0 || x >= width) continue;
      const T value = static_cast<T>(std::exp(-(dx * dx + dy * dy) / denom));
      T& cell = plane[static_cast<std::size_t>(y) * width + x];
      cell = std::max(cell, value);
    }
  }
}

// Encodes ground-truth boxes into target maps at image_size / stride
// resolution. Boxes are clipped to the image; a box degenerate after
// clipping, or with a class id outside [0, num_classes), is a contract
// violation.
template <typename T>
TargetMaps<T> encode(const std::vector<BoundingBox>& boxes, int image_size, int stride,
                     int num_classes, double min_overlap = 0.7) {
  if (stride <= 0 || image_size <= 0 || image_size % stride != 0)
    throw std::invalid_argument("encode: stride must divide image_size");
  if (num_classes <= 0) throw std::invalid_argument("encode: num_classes must be positive");

  const int hs = image_size / stride;
  const int ws = hs;

  TargetMaps<T> t;
  t.num_classes = num_classes;
  t.height = hs;
  t.width = ws;
  t.center.assign(static_cast<std::size_t>(num_classes) * hs * ws, T(0));
  t.size.assign(static_cast<std::size_t>(num_classes) * 2 * hs * ws, T(0));
  t.offset.assign(static_cast<std::size_t>(num_classes) * 2 * hs * ws, T(0));
  t.center_mask.assign(static_cast<std::size_t>(num_classes) * hs * ws, 0);
  t.n_objects = static_cast<int>(boxes.size());

  for (const auto& raw : boxes) {
    if (raw.class_id < 0 || raw.class_id >= num_classes)
      throw std::invalid_argument("encode: class_id out of range");
    const BoundingBox box = clip_box(raw, image_size, image_size);
    const double w = box.width();
    const double h = box.height();
    if (w <= 0.0 || h <= 0.0)
      throw std::invalid_argument("encode: box degenerate after clipping to image");

    const double cx_cells = box.center_x() / stride;
    const double cy_cells = box.center_y() / stride;
    const int cx = std::min(static_cast<int>(cx_cells), ws - 1);
    const int cy = std::min(static_cast<int>(cy_cells), hs - 1);

    const double w_cells = w / stride;
    const double h_cells = h / stride;
    const double radius = gaussian_radius(w_cells, h_cells, min_overlap);

    const int c = box.class_id;
    splat_gaussian(t.center.data() + t.center_index(c, 0, 0), hs, ws, cx, cy, radius);
    t.center[t.center_index(c, cy, cx)] = T(1);
    t.center_mask[t.center_index(c, cy, cx)] = 1;
    t.size[t.pair_index(c, 0, cy, cx)] = static_cast<T>(w_cells);
    t.size[t.pair_index(c, 1, cy, cx)] = static_cast<T>(h_cells);
    t.offset[t.pair_index(c, 0, cy, cx)] = static_cast<T>(cx_cells - cx);
    t.offset[t.pair_index(c, 1, cy, cx)] = static_cast<T>(cy_cells - cy);
  }
  return t;
}

// Extracts scored boxes from predicted maps. A cell is a peak iff its center
// value equals the maximum over its 3x3 neighborhood (ties kept). Peaks
// below score_threshold are dropped, the rest are ranked by score and capped
// at top_k; boxes are reconstructed in pixels and clipped to the image.
template <typename T>
std::vector<BoundingBox> decode(const T* center, const T* size, const T* offset,
                                int num_classes, int height, int width, int stride,
                                double score_threshold, int top_k) {
  if (score_threshold < 0.0 || score_threshold > 1.0)
    throw std::invalid_argument("decode: score_threshold must be in [0, 1]");
  if (top_k < 1) throw std::invalid_argument("decode: top_k must be >= 1");

  const std::size_t plane = static_cast<std::size_t>(height) * width;
  const double image_w = static_cast<double>(width) * stride;
  const double image_h = static_cast<double>(height) * stride;

  std::vector<BoundingBox> peaks;
  for (int c = 0; c < num_classes; ++c) {
    const T* cc = center + static_cast<std::size_t>(c) * plane;
    const T* cs = size + static_cast<std::size_t>(c) * 2 * plane;
    const T* co = offset + static_cast<std::size_t>(c) * 2 * plane;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const T v = cc[static_cast<std::size_t>(y) * width + x];
        if (static_cast<double>(v) < score_threshold) continue;
        bool is_peak = true;
        for (int dy = -1; dy <= 1 && is_peak; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= height) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= width) continue;
            if (cc[static_cast<std::size_t>(yy) * width + xx] > v) {
              is_peak = false;
              break;
            }
          }
        }
        if (!is_peak) continue;

        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        const double cx = (x + static_cast<double>(co[i])) * stride;
        const double cy = (y + static_cast<double>(co[plane + i])) * stride;
        const double w = static_cast<double>(cs[i]) * stride;
        const double h = static_cast<double>(cs[plane + i]) * stride;

        BoundingBox box;
        box.x_min = cx - 0.5 * w;
        box.x_max = cx + 0.5 * w;
        box.y_min = cy - 0.5 * h;
        box.y_max = cy + 0.5 * h;
        box.class_id = c;
        box.score = static_cast<double>(v);
        box = clip_box(box, image_w, image_h);
        if (box.width() > 0.0 && box.height() > 0.0) peaks.push_back(box);
      }
    }
  }

  std::sort(peaks.begin(), peaks.end(), [](const BoundingBox& a, const BoundingBox& b) {
    if (*a.score != *b.score) return *a.score > *b.score;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    if (a.y_min != b.y_min) return a.y_min < b.y_min;
    return a.x_min < b.x_min;
  });
  if (static_cast<int>(peaks.size()) > top_k) peaks.resize(static_cast<std::size_t>(top_k));
  return peaks;
}

// Shape-checked convenience overload on [C,H,W] / [C,2,H,W] tensors.
template <typename T>
std::vector<BoundingBox> decode(const Tensor<T>& center, const Tensor<T>& size,
                                const Tensor<T>& offset, int stride, double score_threshold,
                                int top_k) {
  if (center.rank() != 3 || size.rank() != 4 || offset.rank() != 4)
    throw std::invalid_argument("decode: expected center [C,H,W], size/offset [C,2,H,W]");
  const int c = center.dim(0), h = center.dim(1), w = center.dim(2);
  const std::vector<int> pair_shape{c, 2, h, w};
  if (size.shape() != pair_shape || offset.shape() != pair_shape)
    throw std::invalid_argument("decode: map stacks disagree on shape, center " +
                                shape_string(center.shape()) + " vs size " +
                                shape_string(size.shape()) + " vs offset " +
                                shape_string(offset.shape()));
  return decode(center.data(), size.data(), offset.data(), c, h, w, stride, score_threshold,
                top_k);
}

}  // namespace cidet
