#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "cidet/errors.hpp"

namespace cidet {

// 8-bit grayscale raster.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  ImageU8() = default;
  ImageU8(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// 8-bit RGB raster, used only for visualization output.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  ImageRGB() = default;
  ImageRGB(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

inline ImageRGB to_rgb(const ImageU8& src) {
  ImageRGB out(src.width, src.height);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      auto* p = out.at(x, y);
      p[0] = p[1] = p[2] = src.at(x, y);
    }
  return out;
}

inline void save_pgm(const ImageU8& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "P5\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw LoadError("short write: " + path);
}

inline ImageU8 load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open image: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5") throw LoadError("not a binary PGM: " + path);
  int w = 0, h = 0, maxval = 0;
  f >> w >> h >> maxval;
  if (!f || w <= 0 || h <= 0 || maxval != 255) throw LoadError("bad PGM header: " + path);
  f.get();  // single whitespace after header
  ImageU8 img(w, h);
  f.read(reinterpret_cast<char*>(img.pixels.data()),
         static_cast<std::streamsize>(img.pixels.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw LoadError("truncated PGM payload: " + path);
  return img;
}

inline void save_ppm(const ImageRGB& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open for writing: " + path);
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw LoadError("short write: " + path);
}

// Bilinear resampling on float planes (align-corners-false convention).
inline void resize_bilinear(const float* src, int sw, int sh, float* dst, int dw, int dh) {
  const double sx = static_cast<double>(sw) / dw;
  const double sy = static_cast<double>(sh) / dh;
  for (int y = 0; y < dh; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), sh - 1);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dw; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), sw - 1);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double wx = fx - x0;
      const double top = src[static_cast<std::size_t>(y0) * sw + x0] * (1.0 - wx) +
                         src[static_cast<std::size_t>(y0) * sw + x1] * wx;
      const double bot = src[static_cast<std::size_t>(y1) * sw + x0] * (1.0 - wx) +
                         src[static_cast<std::size_t>(y1) * sw + x1] * wx;
      dst[static_cast<std::size_t>(y) * dw + x] = static_cast<float>(top * (1.0 - wy) + bot * wy);
    }
  }
}

inline ImageU8 resize_bilinear(const ImageU8& src, int dw, int dh) {
  std::vector<float> fsrc(src.pixels.size());
  for (std::size_t i = 0; i < src.pixels.size(); ++i) fsrc[i] = src.pixels[i];
  std::vector<float> fdst(static_cast<std::size_t>(dw) * dh);
  resize_bilinear(fsrc.data(), src.width, src.height, fdst.data(), dw, dh);
  ImageU8 out(dw, dh);
  for (std::size_t i = 0; i < fdst.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(fdst[i]), 0l, 255l));
  return out;
}

inline void draw_rect(ImageRGB& img, double x_min, double y_min, double x_max, double y_max,
                      Rgb color, int thickness = 2) {
  const int x0 = std::clamp(static_cast<int>(std::lround(x_min)), 0, img.width - 1);
  const int x1 = std::clamp(static_cast<int>(std::lround(x_max)), 0, img.width - 1);
  const int y0 = std::clamp(static_cast<int>(std::lround(y_min)), 0, img.height - 1);
  const int y1 = std::clamp(static_cast<int>(std::lround(y_max)), 0, img.height - 1);
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    auto* p = img.at(x, y);
    p[0] = color.r;
    p[1] = color.g;
    p[2] = color.b;
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = x0; x <= x1; ++x) {
      put(x, y0 + t);
      put(x, y1 - t);
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0 + t, y);
      put(x1 - t, y);
    }
  }
}

namespace detail {

// 3x5 digit/punctuation glyphs for score labels.
inline const std::uint16_t* tiny_font(char c) {
  // Each glyph: 5 rows x 3 bits, MSB = left pixel.
  static const std::uint16_t digits[10][5] = {
      {0b111, 0b101, 0b101, 0b101, 0b111},  // 0
      {0b010, 0b110, 0b010, 0b010, 0b111},  // 1
      {0b111, 0b001, 0b111, 0b100, 0b111},  // 2
      {0b111, 0b001, 0b111, 0b001, 0b111},  // 3
      {0b101, 0b101, 0b111, 0b001, 0b001},  // 4
      {0b111, 0b100, 0b111, 0b001, 0b111},  // 5
      {0b111, 0b100, 0b111, 0b101, 0b111},  // 6
      {0b111, 0b001, 0b010, 0b010, 0b010},  // 7
      {0b111, 0b101, 0b111, 0b101, 0b111},  // 8
      {0b111, 0b101, 0b111, 0b001, 0b111},  // 9
  };
  static const std::uint16_t dot[5] = {0b000, 0b000, 0b000, 0b000, 0b010};
  static const std::uint16_t colon[5] = {0b000, 0b010, 0b000, 0b010, 0b000};
  static const std::uint16_t blank[5] = {0, 0, 0, 0, 0};
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c == '.') return dot;
  if (c == ':') return colon;
  return blank;
}

}  // namespace detail

// Renders digits/'.'/':' with a tiny built-in bitmap font (2x scale).
inline void draw_label(ImageRGB& img, int x, int y, const std::string& text, Rgb color) {
  const int scale = 2;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto* glyph = detail::tiny_font(text[i]);
    for (int row = 0; row < 5; ++row)
      for (int col = 0; col < 3; ++col) {
        if (!((glyph[row] >> (2 - col)) & 1)) continue;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx) {
            const int px = x + static_cast<int>(i) * 4 * scale + col * scale + dx;
            const int py = y + row * scale + dy;
            if (px < 0 || py < 0 || px >= img.width || py >= img.height) continue;
            auto* p = img.at(px, py);
            p[0] = color.r;
            p[1] = color.g;
            p[2] = color.b;
          }
      }
  }
}

}  // namespace cidet
