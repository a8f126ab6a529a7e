#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cidet/box.hpp"

namespace cidet {

enum class NmsStrategy { none, inter_class, class_wise, soft };

inline const char* to_string(NmsStrategy s) {
  switch (s) {
    case NmsStrategy::none: return "none";
    case NmsStrategy::inter_class: return "inter_class";
    case NmsStrategy::class_wise: return "class_wise";
    case NmsStrategy::soft: return "soft";
  }
  return "?";
}

inline NmsStrategy nms_strategy_from_string(const std::string& s) {
  if (s == "none") return NmsStrategy::none;
  if (s == "inter_class") return NmsStrategy::inter_class;
  if (s == "class_wise") return NmsStrategy::class_wise;
  if (s == "soft") return NmsStrategy::soft;
  throw std::invalid_argument("unknown NMS strategy: " + s);
}

struct NmsConfig {
  NmsStrategy strategy = NmsStrategy::class_wise;
  double iou_threshold = 0.5;
  double soft_sigma = 0.5;        // Gaussian decay width, soft strategy only
  double post_score_floor = 0.01; // decayed boxes below this are dropped

  void validate() const {
    if (!(iou_threshold > 0.0) || !(iou_threshold < 1.0))
      throw std::invalid_argument("NmsConfig: iou_threshold must be in (0, 1)");
    if (strategy == NmsStrategy::soft && !(soft_sigma > 0.0))
      throw std::invalid_argument("NmsConfig: soft_sigma must be positive");
  }
};

namespace detail {

inline void require_scores(const std::vector<BoundingBox>& dets, const char* what) {
  for (const auto& d : dets)
    if (!d.score) throw std::invalid_argument(std::string(what) + ": detection without score");
}

// Deterministic ranking: score desc, then class id, then input index.
inline std::vector<std::size_t> rank_by_score(const std::vector<BoundingBox>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (*dets[a].score != *dets[b].score) return *dets[a].score > *dets[b].score;
    if (dets[a].class_id != dets[b].class_id) return dets[a].class_id < dets[b].class_id;
    return a < b;
  });
  return order;
}

}  // namespace detail

// Greedy suppression applied independently within each class: keep the
// highest-confidence box, discard same-class boxes overlapping it with
// IoU >= threshold, repeat. Co-located boxes of different classes are never
// suppressed. Output is grouped by ascending class id, descending score
// within a class.
inline std::vector<BoundingBox> class_wise_nms(const std::vector<BoundingBox>& dets,
                                               double threshold) {
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw std::invalid_argument("class_wise_nms: threshold must be in (0, 1)");
  detail::require_scores(dets, "class_wise_nms");

  std::vector<int> classes;
  for (const auto& d : dets) classes.push_back(d.class_id);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  const auto order = detail::rank_by_score(dets);
  std::vector<BoundingBox> kept;
  for (int cls : classes) {
    std::vector<std::size_t> pool;
    for (std::size_t i : order)
      if (dets[i].class_id == cls) pool.push_back(i);
    std::vector<bool> removed(pool.size(), false);
    for (std::size_t a = 0; a < pool.size(); ++a) {
      if (removed[a]) continue;
      kept.push_back(dets[pool[a]]);
      for (std::size_t b = a + 1; b < pool.size(); ++b) {
        if (removed[b]) continue;
        if (iou(dets[pool[a]], dets[pool[b]]) >= threshold) removed[b] = true;
      }
    }
  }
  return kept;
}

// Standard greedy NMS over the global score ranking, suppressing across
// classes. Output in descending score order.
inline std::vector<BoundingBox> inter_class_nms(const std::vector<BoundingBox>& dets,
                                                double threshold) {
  if (!(threshold > 0.0) || !(threshold < 1.0))
    throw std::invalid_argument("inter_class_nms: threshold must be in (0, 1)");
  detail::require_scores(dets, "inter_class_nms");

  const auto order = detail::rank_by_score(dets);
  std::vector<bool> removed(order.size(), false);
  std::vector<BoundingBox> kept;
  for (std::size_t a = 0; a < order.size(); ++a) {
    if (removed[a]) continue;
    kept.push_back(dets[order[a]]);
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (removed[b]) continue;
      if (iou(dets[order[a]], dets[order[b]]) >= threshold) removed[b] = true;
    }
  }
  return kept;
}

// Soft-NMS with Gaussian score decay exp(-iou^2 / sigma), pooled per class.
// Instead of discarding overlaps it rescales their confidence; boxes whose
// decayed score falls below score_floor are dropped.
inline std::vector<BoundingBox> soft_nms(const std::vector<BoundingBox>& dets, double sigma,
                                         double score_floor) {
  if (!(sigma > 0.0)) throw std::invalid_argument("soft_nms: sigma must be positive");
  detail::require_scores(dets, "soft_nms");

  std::vector<int> classes;
  for (const auto& d : dets) classes.push_back(d.class_id);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  std::vector<BoundingBox> kept;
  for (int cls : classes) {
    std::vector<BoundingBox> pool;
    for (const auto& d : dets)
      if (d.class_id == cls) pool.push_back(d);
    while (!pool.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < pool.size(); ++i)
        if (*pool[i].score > *pool[best].score) best = i;
      const BoundingBox top = pool[best];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
      kept.push_back(top);
      std::vector<BoundingBox> next;
      for (auto& d : pool) {
        const double v = iou(top, d);
        d.score = *d.score * std::exp(-(v * v) / sigma);
        if (*d.score >= score_floor) next.push_back(d);
      }
      pool = std::move(next);
    }
  }
  return kept;
}

inline std::vector<BoundingBox> no_nms(const std::vector<BoundingBox>& dets) { return dets; }

inline std::vector<BoundingBox> apply_nms(const std::vector<BoundingBox>& dets,
                                          const NmsConfig& cfg) {
  cfg.validate();
  switch (cfg.strategy) {
    case NmsStrategy::none: return no_nms(dets);
    case NmsStrategy::inter_class: return inter_class_nms(dets, cfg.iou_threshold);
    case NmsStrategy::class_wise: return class_wise_nms(dets, cfg.iou_threshold);
    case NmsStrategy::soft: return soft_nms(dets, cfg.soft_sigma, cfg.post_score_floor);
  }
  return dets;
}

}  // namespace cidet
