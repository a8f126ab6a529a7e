#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cidet/box.hpp"
#include "cidet/checksum.hpp"
#include "cidet/errors.hpp"
#include "cidet/glyphs.hpp"
#include "cidet/image.hpp"
#include "cidet/rng.hpp"

namespace cidet {

// Parameters of the synthetic digit-detection benchmark: black canvases with
// 1..5 digits of 50..200 px a side, classes drawn uniformly over all ten
// digits regardless of any incremental state (this is what creates background
// shift in the incremental splits).
struct SceneSpec {
  int image_size = 512;
  int min_count = 1;
  int max_count = 5;
  double min_side = 50.0;
  double max_side = 200.0;
  int num_classes = 10;
  int train_images = 5000;
  int val_images = 1000;
  double max_overlap_iou = 0.2;  // rejection-sampling bound on pairwise box IoU
  int max_place_attempts = 100;
  std::uint64_t seed = 0;
  std::string glyph_dir;  // empty: built-in procedural glyphs

  void validate() const {
    if (image_size <= 0) throw ConfigError("SceneSpec: image_size must be positive");
    if (min_count < 1 || max_count < min_count)
      throw ConfigError("SceneSpec: digit count range invalid");
    if (!(min_side > 0.0) || !(max_side >= min_side))
      throw ConfigError("SceneSpec: digit side range invalid");
    if (max_side > image_size) throw ConfigError("SceneSpec: max_side exceeds image size");
    if (num_classes < 1 || num_classes > 10)
      throw ConfigError("SceneSpec: num_classes must be in [1, 10]");
    if (train_images < 0 || val_images < 0) throw ConfigError("SceneSpec: negative split size");
    if (!(max_overlap_iou >= 0.0) || !(max_overlap_iou < 1.0))
      throw ConfigError("SceneSpec: max_overlap_iou must be in [0, 1)");
    if (max_place_attempts < 1) throw ConfigError("SceneSpec: max_place_attempts must be >= 1");
  }
};

inline nlohmann::json to_json(const SceneSpec& s) {
  return nlohmann::json{{"image_size", s.image_size},
                        {"min_count", s.min_count},
                        {"max_count", s.max_count},
                        {"min_side", s.min_side},
                        {"max_side", s.max_side},
                        {"num_classes", s.num_classes},
                        {"train_images", s.train_images},
                        {"val_images", s.val_images},
                        {"max_overlap_iou", s.max_overlap_iou},
                        {"max_place_attempts", s.max_place_attempts},
                        {"seed", s.seed},
                        {"glyph_dir", s.glyph_dir}};
}

inline SceneSpec scene_spec_from_json(const nlohmann::json& j);

struct Scene {
  ImageU8 image;
  std::vector<BoundingBox> boxes;
  int regenerations = 0;  // scenes rebuilt with fewer digits after placement failure
};

namespace detail {

// Tight pixel bounds of a glyph patch at or above the binarization threshold.
struct PixelBounds {
  int x0, y0, x1, y1;  // inclusive
  bool empty;
};

inline PixelBounds tight_bounds(const ImageU8& img, int threshold) {
  PixelBounds b{img.width, img.height, -1, -1, true};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) >= threshold) {
        b.x0 = std::min(b.x0, x);
        b.x1 = std::max(b.x1, x);
        b.y0 = std::min(b.y0, y);
        b.y1 = std::max(b.y1, y);
        b.empty = false;
      }
  return b;
}

constexpr int kGlyphThreshold = 26;  // 0.1 * 255

}  // namespace detail

// Generates one scene: digits scaled anisotropically to sampled side lengths,
// placed fully inside the canvas with pairwise box IoU below the spec bound,
// composited by per-pixel maximum. Every emitted box is the tight bound of
// its glyph's thresholded pixels, re-checked against the side-length range.
// If a digit cannot be placed within max_place_attempts the whole scene is
// regenerated with one digit fewer.
inline Scene generate_scene(const SceneSpec& spec, Rng& rng, GlyphSource& glyphs) {
  spec.validate();
  const int size = spec.image_size;
  int count = rng.uniform_int(spec.min_count, spec.max_count);

  Scene scene;
  for (;;) {
    scene.image = ImageU8(size, size);
    scene.boxes.clear();
    bool scene_ok = true;

    for (int d = 0; d < count && scene_ok; ++d) {
      bool placed = false;
      for (int attempt = 0; attempt < spec.max_place_attempts; ++attempt) {
        const int cls = rng.uniform_int(0, spec.num_classes - 1);
        const int w = static_cast<int>(std::lround(rng.uniform(spec.min_side, spec.max_side)));
        const int h = static_cast<int>(std::lround(rng.uniform(spec.min_side, spec.max_side)));
        const ImageU8 scaled = resize_bilinear(glyphs.sample(cls, rng), w, h);
        const auto tight = detail::tight_bounds(scaled, detail::kGlyphThreshold);
        if (tight.empty) continue;
        const double tw = tight.x1 - tight.x0 + 1;
        const double th = tight.y1 - tight.y0 + 1;
        if (tw < spec.min_side || th < spec.min_side || tw > spec.max_side || th > spec.max_side)
          continue;

        const int px = rng.uniform_int(0, size - w);
        const int py = rng.uniform_int(0, size - h);
        BoundingBox box;
        box.x_min = px + tight.x0;
        box.y_min = py + tight.y0;
        box.x_max = px + tight.x1 + 1;
        box.y_max = py + tight.y1 + 1;
        box.class_id = cls;

        bool overlaps = false;
        for (const auto& other : scene.boxes)
          if (iou(box, other) >= spec.max_overlap_iou) {
            overlaps = true;
            break;
          }
        if (overlaps) continue;

        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            std::uint8_t& dst = scene.image.at(px + x, py + y);
            dst = std::max(dst, scaled.at(x, y));
          }
        scene.boxes.push_back(box);
        placed = true;
        break;
      }
      if (!placed) scene_ok = false;
    }

    if (scene_ok) return scene;
    count = std::max(1, count - 1);
    ++scene.regenerations;
  }
}

struct DatasetRecord {
  std::string image_path;  // relative to the dataset root
  int width = 0;
  int height = 0;
  std::vector<BoundingBox> boxes;
  std::uint64_t image_checksum = 0;
};

inline nlohmann::json to_json(const DatasetRecord& r) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : r.boxes)
    boxes.push_back({{"x_min", b.x_min},
                     {"y_min", b.y_min},
                     {"x_max", b.x_max},
                     {"y_max", b.y_max},
                     {"class_id", b.class_id}});
  return nlohmann::json{{"image_path", r.image_path},
                        {"width", r.width},
                        {"height", r.height},
                        {"boxes", boxes},
                        {"image_checksum", to_hex(r.image_checksum)}};
}

namespace detail {

inline std::uint64_t stream_key(const std::string& split) { return fnv1a64(split); }

}  // namespace detail

// Writes `count` scenes plus a line-delimited manifest:
//   line 1   header {format, split, seed, count, checksum, spec}
//   line 2.. one record per image {image_path, width, height, boxes, image_checksum}
// The split checksum covers every record line, and each record pins its image
// bytes, so a reload can verify integrity without trusting timestamps.
// Returns the split checksum. Fully determined by (spec, split name).
inline std::uint64_t generate_split(const SceneSpec& spec, GlyphSource& glyphs,
                                    const std::string& out_dir, const std::string& split,
                                    int count) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "images");

  std::vector<std::string> record_lines;
  record_lines.reserve(static_cast<std::size_t>(count));
  int regenerations = 0;
  Fnv1a64 split_hash;
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(spec.seed, detail::stream_key(split), static_cast<std::uint64_t>(i)));
    Scene scene = generate_scene(spec, rng, glyphs);
    regenerations += scene.regenerations;

    char name[64];
    std::snprintf(name, sizeof(name), "images/%s_%05d.pgm", split.c_str(), i);
    save_pgm(scene.image, (fs::path(out_dir) / name).string());

    DatasetRecord rec;
    rec.image_path = name;
    rec.width = scene.image.width;
    rec.height = scene.image.height;
    rec.boxes = scene.boxes;
    Fnv1a64 img_hash;
    img_hash.update(scene.image.pixels.data(), scene.image.pixels.size());
    rec.image_checksum = img_hash.digest();

    std::string line = to_json(rec).dump();
    split_hash.update(line);
    record_lines.push_back(std::move(line));
  }
  if (regenerations > 0)
    std::clog << "[dataset] " << split << ": regenerated " << regenerations
              << " scene(s) with fewer digits after placement failures\n";

  nlohmann::json header{{"format", "cidet-manifest-v1"},
                        {"split", split},
                        {"seed", spec.seed},
                        {"count", count},
                        {"checksum", to_hex(split_hash.digest())},
                        {"spec", to_json(spec)}};

  const fs::path manifest_path = fs::path(out_dir) / (split + "_manifest.jsonl");
  std::ofstream f(manifest_path);
  if (!f) throw LoadError("cannot write manifest: " + manifest_path.string());
  f << header.dump() << "\n";
  for (const auto& line : record_lines) f << line << "\n";
  if (!f) throw LoadError("short manifest write: " + manifest_path.string());
  return split_hash.digest();
}

// Loaded view of one split. Images stay on disk and are verified against the
// per-record checksum when read; image reads are counted so tests can assert
// which samples a training state actually touched.
class DatasetIndex {
 public:
  static DatasetIndex load(const std::string& manifest_path,
                           const std::vector<int>* class_filter = nullptr) {
    std::ifstream f(manifest_path);
    if (!f) throw LoadError("cannot open manifest: " + manifest_path);

    DatasetIndex idx;
    idx.root_ = std::filesystem::path(manifest_path).parent_path().string();

    std::string line;
    if (!std::getline(f, line)) throw LoadError("empty manifest: " + manifest_path);
    nlohmann::json header;
    try {
      header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(std::string("malformed manifest header: ") + e.what());
    }
    if (header.value("format", "") != "cidet-manifest-v1")
      throw LoadError("unknown manifest format in " + manifest_path);
    idx.split_ = header.at("split").get<std::string>();
    idx.spec_ = scene_spec_from_json(header.at("spec"));
    const std::string expect_checksum = header.at("checksum").get<std::string>();
    const int expect_count = header.at("count").get<int>();

    Fnv1a64 split_hash;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      split_hash.update(line);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed manifest record: ") + e.what());
      }
      DatasetRecord rec;
      try {
        rec.image_path = j.at("image_path").get<std::string>();
        rec.width = j.at("width").get<int>();
        rec.height = j.at("height").get<int>();
        rec.image_checksum = std::stoull(j.at("image_checksum").get<std::string>(), nullptr, 16);
        for (const auto& jb : j.at("boxes")) {
          BoundingBox b;
          b.x_min = jb.at("x_min").get<double>();
          b.y_min = jb.at("y_min").get<double>();
          b.x_max = jb.at("x_max").get<double>();
          b.y_max = jb.at("y_max").get<double>();
          b.class_id = jb.at("class_id").get<int>();
          if (!b.valid() || b.x_max > rec.width || b.y_max > rec.height || b.x_min < 0 ||
              b.y_min < 0 || b.class_id >= idx.spec_.num_classes)
            throw LoadError("manifest record violates box invariants: " + line);
          rec.boxes.push_back(b);
        }
      } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed manifest record: ") + e.what());
      }
      if (class_filter) {
        std::vector<BoundingBox> kept;
        for (const auto& b : rec.boxes)
          if (std::find(class_filter->begin(), class_filter->end(), b.class_id) !=
              class_filter->end())
            kept.push_back(b);
        rec.boxes = std::move(kept);
      }
      idx.records_.push_back(std::move(rec));
    }

    if (static_cast<int>(idx.records_.size()) != expect_count)
      throw LoadError("truncated manifest: expected " + std::to_string(expect_count) +
                      " records, found " + std::to_string(idx.records_.size()));
    if (to_hex(split_hash.digest()) != expect_checksum)
      throw LoadError("manifest checksum mismatch in " + manifest_path);

    idx.access_counts_.assign(idx.records_.size(), 0);
    return idx;
  }

  const std::vector<DatasetRecord>& records() const { return records_; }
  const SceneSpec& spec() const { return spec_; }
  const std::string& split() const { return split_; }
  const std::string& root() const { return root_; }

  ImageU8 load_image(std::size_t i) const {
    const auto& rec = records_.at(i);
    ImageU8 img = load_pgm((std::filesystem::path(root_) / rec.image_path).string());
    if (img.width != rec.width || img.height != rec.height)
      throw LoadError("image size disagrees with manifest: " + rec.image_path);
    Fnv1a64 h;
    h.update(img.pixels.data(), img.pixels.size());
    if (h.digest() != rec.image_checksum)
      throw LoadError("image checksum mismatch: " + rec.image_path);
    ++access_counts_[i];
    return img;
  }

  // Per-record image read counters (rehearsal-free assertions in tests).
  const std::vector<std::uint64_t>& access_counts() const { return access_counts_; }
  void reset_access_counts() const {
    std::fill(access_counts_.begin(), access_counts_.end(), 0);
  }

 private:
  std::string root_;
  std::string split_;
  SceneSpec spec_;
  std::vector<DatasetRecord> records_;
  mutable std::vector<std::uint64_t> access_counts_;
};

inline SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.image_size = j.at("image_size").get<int>();
  s.min_count = j.at("min_count").get<int>();
  s.max_count = j.at("max_count").get<int>();
  s.min_side = j.at("min_side").get<double>();
  s.max_side = j.at("max_side").get<double>();
  s.num_classes = j.at("num_classes").get<int>();
  s.train_images = j.at("train_images").get<int>();
  s.val_images = j.at("val_images").get<int>();
  s.max_overlap_iou = j.at("max_overlap_iou").get<double>();
  s.max_place_attempts = j.at("max_place_attempts").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.glyph_dir = j.value("glyph_dir", "");
  s.validate();
  return s;
}

// Opens the configured glyph source.
inline std::unique_ptr<GlyphSource> open_glyphs(const SceneSpec& spec) {
  if (spec.glyph_dir.empty()) return std::make_unique<BuiltinGlyphs>();
  return std::make_unique<DirectoryGlyphs>(spec.glyph_dir, spec.num_classes);
}

}  // namespace cidet
