#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cidet/box.hpp"

namespace cidet {

// Greedy detection/ground-truth matching for one image. Detections are
// processed in descending score order; each one matches the highest-IoU
// not-yet-matched ground truth of the same class with IoU >= threshold (TP)
// or counts as a false positive. Returned labels are aligned with the input
// detection order (1 = TP).
inline std::vector<std::uint8_t> match_detections(const std::vector<BoundingBox>& dets,
                                                  const std::vector<BoundingBox>& gts,
                                                  double iou_threshold) {
  for (const auto& d : dets)
    if (!d.score) throw std::invalid_argument("match_detections: detection without score");

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (*dets[a].score != *dets[b].score) return *dets[a].score > *dets[b].score;
    return a < b;
  });

  std::vector<std::uint8_t> labels(dets.size(), 0);
  std::vector<bool> gt_used(gts.size(), false);
  for (std::size_t i : order) {
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].class_id != dets[i].class_id) continue;
      const double v = iou(dets[i], gts[g]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best_iou >= iou_threshold) {
      gt_used[best_gt] = true;
      labels[i] = 1;
    }
  }
  return labels;
}

// Area under the monotonized precision-recall curve (all-points integration
// with the precision envelope). The historical VOC 11-point interpolation is
// available behind a flag for comparisons. n_gt must be positive; classes
// absent from the ground truth are the caller's job to exclude.
inline double average_precision(const std::vector<std::uint8_t>& tp_fp_labels,
                                const std::vector<double>& scores, int n_gt,
                                bool eleven_point = false) {
  if (n_gt <= 0) throw std::invalid_argument("average_precision: n_gt must be positive");
  if (tp_fp_labels.size() != scores.size())
    throw std::invalid_argument("average_precision: labels/scores size mismatch");
  if (tp_fp_labels.empty()) return 0.0;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::vector<double> precision(order.size()), recall(order.size());
  int tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    tp += tp_fp_labels[order[k]] != 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / n_gt;
  }

  if (eleven_point) {
    double acc = 0.0;
    for (int j = 0; j <= 10; ++j) {
      const double r = j / 10.0;
      double p = 0.0;
      for (std::size_t k = 0; k < order.size(); ++k)
        if (recall[k] >= r) p = std::max(p, precision[k]);
      acc += p;
    }
    return acc / 11.0;
  }

  // Precision envelope, then sum over recall increments.
  for (std::size_t k = order.size() - 1; k-- > 0;)
    precision[k] = std::max(precision[k], precision[k + 1]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (recall[k] > prev_recall) {
      ap += (recall[k] - prev_recall) * precision[k];
      prev_recall = recall[k];
    }
  }
  return ap;
}

// Harmonic mean of past- and new-class mAP; 0 when both sides are 0 (total
// failure on one side already forces 0 through the product).
inline double f_map(double map_past, double map_new) {
  const double s = map_past + map_new;
  if (s <= 0.0) return 0.0;
  return 2.0 * map_past * map_new / s;
}

struct EvalOptions {
  bool eleven_point = false;
};

constexpr double kEvalNaN = std::numeric_limits<double>::quiet_NaN();

struct EvalReport {
  int state_index = 0;
  std::vector<int> past_class_ids;
  std::vector<int> new_class_ids;
  std::vector<double> iou_thresholds;            // 0.50, 0.55, ..., 0.95
  std::vector<std::vector<double>> per_class_ap; // [threshold][class]; NaN = absent from GT
  double map50 = 0.0;
  double map_range = 0.0;
  double map_past = kEvalNaN;  // at IoU 0.5; NaN when the split is empty
  double map_new = kEvalNaN;
  double fmap = kEvalNaN;
  std::int64_t n_detections = 0;
  std::int64_t n_ground_truth = 0;
  std::string nms_strategy;
  std::string config_hash;
  std::uint64_t seed = 0;
};

namespace detail {

inline nlohmann::json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double number_or_nan(const nlohmann::json& j) {
  if (j.is_null()) return kEvalNaN;
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["state_index"] = r.state_index;
  j["past_class_ids"] = r.past_class_ids;
  j["new_class_ids"] = r.new_class_ids;
  j["iou_thresholds"] = r.iou_thresholds;
  nlohmann::json ap = nlohmann::json::array();
  for (const auto& row : r.per_class_ap) {
    nlohmann::json jrow = nlohmann::json::array();
    for (double v : row) jrow.push_back(detail::json_number(v));
    ap.push_back(jrow);
  }
  j["per_class_ap"] = ap;
  j["map50"] = r.map50;
  j["map_range"] = r.map_range;
  j["map_past"] = detail::json_number(r.map_past);
  j["map_new"] = detail::json_number(r.map_new);
  j["f_map"] = detail::json_number(r.fmap);
  j["n_detections"] = r.n_detections;
  j["n_ground_truth"] = r.n_ground_truth;
  j["nms_strategy"] = r.nms_strategy;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  return j;
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.state_index = j.at("state_index").get<int>();
  r.past_class_ids = j.at("past_class_ids").get<std::vector<int>>();
  r.new_class_ids = j.at("new_class_ids").get<std::vector<int>>();
  r.iou_thresholds = j.at("iou_thresholds").get<std::vector<double>>();
  for (const auto& jrow : j.at("per_class_ap")) {
    std::vector<double> row;
    for (const auto& v : jrow) row.push_back(detail::number_or_nan(v));
    r.per_class_ap.push_back(std::move(row));
  }
  r.map50 = j.at("map50").get<double>();
  r.map_range = j.at("map_range").get<double>();
  r.map_past = detail::number_or_nan(j.at("map_past"));
  r.map_new = detail::number_or_nan(j.at("map_new"));
  r.fmap = detail::number_or_nan(j.at("f_map"));
  r.n_detections = j.at("n_detections").get<std::int64_t>();
  r.n_ground_truth = j.at("n_ground_truth").get<std::int64_t>();
  r.nms_strategy = j.at("nms_strategy").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

// Full detection evaluation over a set of images. `class_ids` lists the
// classes under evaluation (all classes seen so far); past/new partition
// them for the forgetting metrics. Classes without any ground-truth
// instance are excluded from every mAP average.
inline EvalReport evaluate_detections(const std::vector<std::vector<BoundingBox>>& dets,
                                      const std::vector<std::vector<BoundingBox>>& gts,
                                      const std::vector<int>& class_ids,
                                      const std::vector<int>& past_class_ids,
                                      const std::vector<int>& new_class_ids,
                                      const EvalOptions& opts = {}) {
  if (dets.size() != gts.size())
    throw std::invalid_argument("evaluate_detections: per-image lists differ in length");

  EvalReport report;
  report.past_class_ids = past_class_ids;
  report.new_class_ids = new_class_ids;
  for (int t = 0; t < 10; ++t) report.iou_thresholds.push_back(0.50 + 0.05 * t);

  const int num_classes =
      class_ids.empty() ? 0 : *std::max_element(class_ids.begin(), class_ids.end()) + 1;
  std::vector<std::int64_t> gt_count(static_cast<std::size_t>(num_classes), 0);
  for (const auto& image_gts : gts)
    for (const auto& g : image_gts) {
      if (g.class_id < 0 || g.class_id >= num_classes)
        throw std::invalid_argument("evaluate_detections: ground-truth class outside class set");
      ++gt_count[static_cast<std::size_t>(g.class_id)];
      ++report.n_ground_truth;
    }
  for (const auto& image_dets : dets) report.n_detections += static_cast<std::int64_t>(image_dets.size());

  report.per_class_ap.assign(report.iou_thresholds.size(),
                             std::vector<double>(static_cast<std::size_t>(num_classes), kEvalNaN));

  for (std::size_t ti = 0; ti < report.iou_thresholds.size(); ++ti) {
    const double thr = report.iou_thresholds[ti];
    // Pool scored labels per class across all images.
    std::vector<std::vector<double>> scores(static_cast<std::size_t>(num_classes));
    std::vector<std::vector<std::uint8_t>> labels(static_cast<std::size_t>(num_classes));
    for (std::size_t img = 0; img < dets.size(); ++img) {
      const auto image_labels = match_detections(dets[img], gts[img], thr);
      for (std::size_t i = 0; i < dets[img].size(); ++i) {
        const int c = dets[img][i].class_id;
        if (c < 0 || c >= num_classes) continue;  // detection for an unseen class
        scores[static_cast<std::size_t>(c)].push_back(*dets[img][i].score);
        labels[static_cast<std::size_t>(c)].push_back(image_labels[i]);
      }
    }
    for (int c : class_ids) {
      const auto cs = static_cast<std::size_t>(c);
      if (gt_count[cs] == 0) continue;
      report.per_class_ap[ti][cs] = average_precision(labels[cs], scores[cs],
                                                      static_cast<int>(gt_count[cs]),
                                                      opts.eleven_point);
    }
  }

  auto mean_over = [&](std::size_t ti, const std::vector<int>& ids) -> double {
    double acc = 0.0;
    int n = 0;
    for (int c : ids) {
      const double ap = report.per_class_ap[ti][static_cast<std::size_t>(c)];
      if (std::isnan(ap)) continue;
      acc += ap;
      ++n;
    }
    return n == 0 ? kEvalNaN : acc / n;
  };

  report.map50 = mean_over(0, class_ids);
  double range_acc = 0.0;
  for (std::size_t ti = 0; ti < report.iou_thresholds.size(); ++ti) {
    const double m = mean_over(ti, class_ids);
    range_acc += std::isnan(m) ? 0.0 : m;
  }
  report.map_range = range_acc / static_cast<double>(report.iou_thresholds.size());
  if (std::isnan(report.map50)) report.map50 = 0.0;

  report.map_past = mean_over(0, past_class_ids);
  report.map_new = mean_over(0, new_class_ids);
  if (!std::isnan(report.map_past) && !std::isnan(report.map_new))
    report.fmap = f_map(report.map_past, report.map_new);
  return report;
}

}  // namespace cidet
