#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "cidet/errors.hpp"
#include "cidet/image.hpp"
#include "cidet/rng.hpp"

namespace cidet {

// Supplies tight grayscale digit glyphs for scene composition. The built-in
// source keeps the repository self-contained; a directory source can swap in
// scans of real handwritten digits without touching the generator.
class GlyphSource {
 public:
  virtual ~GlyphSource() = default;
  virtual int num_classes() const = 0;
  // Returns a tight-cropped grayscale glyph for the class.
  virtual const ImageU8& sample(int class_id, Rng& rng) = 0;
};

namespace detail {

struct Stroke {
  // Elliptic arc; a polyline segment is emitted as many short arcs via from_line.
  double cx, cy, rx, ry;
  double deg0, deg1;
  bool is_line = false;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  static Stroke arc(double cx, double cy, double rx, double ry, double deg0, double deg1) {
    return Stroke{cx, cy, rx, ry, deg0, deg1};
  }
  static Stroke line(double x0, double y0, double x1, double y1) {
    Stroke s{};
    s.is_line = true;
    s.x0 = x0;
    s.y0 = y0;
    s.x1 = x1;
    s.y1 = y1;
    return s;
  }
};

// Unit-square stroke paths for digits 0..9 (x right, y down).
inline const std::vector<std::vector<Stroke>>& digit_strokes() {
  using S = Stroke;
  static const std::vector<std::vector<S>> strokes = {
      // 0
      {S::arc(0.50, 0.50, 0.27, 0.40, 0, 360)},
      // 1
      {S::line(0.32, 0.26, 0.54, 0.10), S::line(0.54, 0.10, 0.54, 0.90),
       S::line(0.32, 0.90, 0.74, 0.90)},
      // 2
      {S::arc(0.50, 0.30, 0.26, 0.21, 160, 370), S::line(0.74, 0.37, 0.25, 0.90),
       S::line(0.25, 0.90, 0.78, 0.90)},
      // 3
      {S::arc(0.46, 0.30, 0.25, 0.20, 150, 360), S::line(0.71, 0.30, 0.71, 0.32),
       S::arc(0.46, 0.68, 0.27, 0.22, 270, 560)},
      // 4
      {S::line(0.60, 0.10, 0.20, 0.62), S::line(0.20, 0.62, 0.82, 0.62),
       S::line(0.64, 0.34, 0.64, 0.90)},
      // 5
      {S::line(0.76, 0.10, 0.28, 0.10), S::line(0.28, 0.10, 0.25, 0.46),
       S::arc(0.47, 0.66, 0.27, 0.24, 195, 500)},
      // 6
      {S::arc(0.48, 0.64, 0.24, 0.25, 0, 360), S::arc(0.55, 0.40, 0.31, 0.31, 180, 265)},
      // 7
      {S::line(0.22, 0.10, 0.78, 0.10), S::line(0.78, 0.10, 0.40, 0.90)},
      // 8
      {S::arc(0.50, 0.29, 0.22, 0.19, 0, 360), S::arc(0.50, 0.68, 0.26, 0.22, 0, 360)},
      // 9
      {S::arc(0.51, 0.35, 0.24, 0.25, 0, 360), S::arc(0.44, 0.60, 0.30, 0.30, 0, 85)},
  };
  return strokes;
}

inline void stamp_disk(std::vector<float>& canvas, int size, double px, double py, double radius) {
  const int x_lo = std::max(0, static_cast<int>(px - radius - 2));
  const int x_hi = std::min(size - 1, static_cast<int>(px + radius + 2));
  const int y_lo = std::max(0, static_cast<int>(py - radius - 2));
  const int y_hi = std::min(size - 1, static_cast<int>(py + radius + 2));
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) {
      const double d = std::hypot(x - px, y - py);
      const float v = static_cast<float>(std::clamp((radius + 0.5 - d) / 1.5, 0.0, 1.0));
      float& cell = canvas[static_cast<std::size_t>(y) * size + x];
      cell = std::max(cell, v);
    }
}

inline ImageU8 tight_crop(const std::vector<float>& canvas, int size, float threshold) {
  int x0 = size, y0 = size, x1 = -1, y1 = -1;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (canvas[static_cast<std::size_t>(y) * size + x] >= threshold) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < x0) throw std::logic_error("glyph rendered empty");
  ImageU8 out(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      out.at(x - x0, y - y0) = static_cast<std::uint8_t>(
          std::lround(255.0f * canvas[static_cast<std::size_t>(y) * size + x]));
  return out;
}

inline ImageU8 render_digit(int digit, double thickness, double slant, int canvas_size = 64) {
  const auto& strokes = digit_strokes()[static_cast<std::size_t>(digit)];
  std::vector<float> canvas(static_cast<std::size_t>(canvas_size) * canvas_size, 0.0f);
  const double scale = canvas_size * 0.92;
  const double margin = canvas_size * 0.04;
  for (const auto& s : strokes) {
    const int steps = 160;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      double ux, uy;
      if (s.is_line) {
        ux = s.x0 + (s.x1 - s.x0) * t;
        uy = s.y0 + (s.y1 - s.y0) * t;
      } else {
        const double a = (s.deg0 + (s.deg1 - s.deg0) * t) * 3.14159265358979323846 / 180.0;
        ux = s.cx + s.rx * std::cos(a);
        uy = s.cy + s.ry * std::sin(a);
      }
      ux += slant * (0.5 - uy);  // shear for variant diversity
      stamp_disk(canvas, canvas_size, margin + ux * scale, margin + uy * scale,
                 thickness * canvas_size);
    }
  }
  return tight_crop(canvas, canvas_size, 0.1f);
}

}  // namespace detail

// Procedurally rendered stroke digits, a few thickness/slant variants each.
class BuiltinGlyphs : public GlyphSource {
 public:
  BuiltinGlyphs() {
    const std::array<std::pair<double, double>, 4> variants{
        {{0.045, 0.0}, {0.060, -0.10}, {0.075, 0.12}, {0.055, 0.06}}};
    for (int d = 0; d < 10; ++d)
      for (const auto& [thick, slant] : variants)
        glyphs_[static_cast<std::size_t>(d)].push_back(detail::render_digit(d, thick, slant));
  }

  int num_classes() const override { return 10; }

  const ImageU8& sample(int class_id, Rng& rng) override {
    const auto& pool = glyphs_.at(static_cast<std::size_t>(class_id));
    return pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
  }

 private:
  std::array<std::vector<ImageU8>, 10> glyphs_;
};

// Glyphs loaded from <dir>/<class_id>/*.pgm, tight-cropped on load.
class DirectoryGlyphs : public GlyphSource {
 public:
  explicit DirectoryGlyphs(const std::string& dir, int num_classes = 10)
      : num_classes_(num_classes) {
    namespace fs = std::filesystem;
    glyphs_.resize(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
      const fs::path class_dir = fs::path(dir) / std::to_string(c);
      if (!fs::is_directory(class_dir))
        throw LoadError("glyph directory missing class folder: " + class_dir.string());
      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(class_dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm")
          files.push_back(e.path().string());
      std::sort(files.begin(), files.end());
      if (files.empty()) throw LoadError("no .pgm glyphs for class " + std::to_string(c));
      for (const auto& f : files) glyphs_[static_cast<std::size_t>(c)].push_back(tighten(load_pgm(f)));
    }
  }

  int num_classes() const override { return num_classes_; }

  const ImageU8& sample(int class_id, Rng& rng) override {
    const auto& pool = glyphs_.at(static_cast<std::size_t>(class_id));
    return pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
  }

 private:
  static ImageU8 tighten(const ImageU8& img) {
    std::vector<float> canvas(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) canvas[i] = img.pixels[i] / 255.0f;
    // Re-uses the renderer's crop; throws if the image is fully black.
    std::vector<float> square;
    const int size = std::max(img.width, img.height);
    square.assign(static_cast<std::size_t>(size) * size, 0.0f);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        square[static_cast<std::size_t>(y) * size + x] = canvas[static_cast<std::size_t>(y) * img.width + x];
    return detail::tight_crop(square, size, 0.1f);
  }

  int num_classes_;
  std::vector<std::vector<ImageU8>> glyphs_;
};

}  // namespace cidet
