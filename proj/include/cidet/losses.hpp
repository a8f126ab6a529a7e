#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "cidet/targets.hpp"

namespace cidet {

struct LossConfig {
  double alpha = 2.0;   // focal exponent on the prediction
  double beta = 4.0;    // focal exponent on soft negatives
  double lambda_focal = 1.0;
  double lambda_size = 0.1;
  double lambda_offset = 1.0;
  double epsilon = 1e-6;  // clamp for log arguments

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0))
      throw std::invalid_argument("LossConfig: alpha and beta must be positive");
    if (!(epsilon > 0.0) || !(epsilon < 0.5))
      throw std::invalid_argument("LossConfig: epsilon must be in (0, 0.5)");
    if (lambda_focal < 0.0 || lambda_size < 0.0 || lambda_offset < 0.0)
      throw std::invalid_argument("LossConfig: loss weights must be >= 0");
  }
};

namespace detail {

inline double pow_fast(double x, double e) {
  if (e == 2.0) return x * x;
  if (e == 4.0) {
    const double x2 = x * x;
    return x2 * x2;
  }
  if (e == 1.0) return x;
  if (e == 3.0) return x * x * x;
  return std::pow(x, e);
}

template <typename T>
void check_unit_range(const T* pred, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(pred[i]);
    if (!(v >= 0.0) || !(v <= 1.0))
      throw std::invalid_argument(std::string(what) + ": prediction outside [0, 1]");
  }
}

}  // namespace detail

// Penalty-reduced focal loss over the per-class center maps:
//
//   -(1/max(N,1)) * sum_xyc  (1-p)^alpha * log(p)            at center cells
//                            (1-Y)^beta * p^alpha * log(1-p) elsewhere
//
// Predictions are clamped to [eps, 1-eps] before the logs; the clamp is
// treated as pass-through when differentiating. grad, when non-null, receives
// d(loss)/d(pred) over the full [C,H,W] map.
template <typename T>
double focal_loss(const T* pred, const TargetMaps<T>& t, const LossConfig& cfg,
                  T* grad = nullptr) {
  const std::size_t n = static_cast<std::size_t>(t.num_classes) * t.plane();
  detail::check_unit_range(pred, n, "focal_loss");

  const double eps = cfg.epsilon;
  const double inv_n = 1.0 / std::max(t.n_objects, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(static_cast<double>(pred[i]), eps, 1.0 - eps);
    double g;
    if (t.center_mask[i]) {
      const double om = 1.0 - p;
      acc += detail::pow_fast(om, cfg.alpha) * std::log(p);
      g = -cfg.alpha * detail::pow_fast(om, cfg.alpha - 1.0) * std::log(p) +
          detail::pow_fast(om, cfg.alpha) / p;
    } else {
      const double soft = detail::pow_fast(1.0 - static_cast<double>(t.center[i]), cfg.beta);
      acc += soft * detail::pow_fast(p, cfg.alpha) * std::log(1.0 - p);
      g = soft * (cfg.alpha * detail::pow_fast(p, cfg.alpha - 1.0) * std::log(1.0 - p) -
                  detail::pow_fast(p, cfg.alpha) / (1.0 - p));
    }
    if (grad) grad[i] = static_cast<T>(-inv_n * g);
  }
  return -inv_n * acc;
}

namespace detail {

// Shared L1 core for size/offset targets. `multihead` selects whether the
// prediction carries one channel pair per class ([C,2,H,W]) or a single pair
// shared by all classes ([2,H,W]). Only masked center cells contribute; the
// sum runs over classes then cells so that the C = 1 multihead case is
// bit-for-bit the shared case.
template <typename T>
double masked_l1(const T* pred, const T* target_maps, const TargetMaps<T>& t, bool multihead,
                 T* grad) {
  const std::size_t plane = t.plane();
  const std::size_t pred_len =
      (multihead ? static_cast<std::size_t>(t.num_classes) : 1u) * 2 * plane;
  if (grad) std::fill(grad, grad + pred_len, T(0));

  const double inv_n = 1.0 / std::max(t.n_objects, 1);
  double acc = 0.0;
  for (int c = 0; c < t.num_classes; ++c) {
    const std::size_t tgt_base = static_cast<std::size_t>(c) * 2 * plane;
    const std::size_t pred_base = multihead ? tgt_base : 0u;
    const std::uint8_t* mask = t.center_mask.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask[i]) continue;
      for (int ch = 0; ch < 2; ++ch) {
        const std::size_t pi = pred_base + static_cast<std::size_t>(ch) * plane + i;
        const std::size_t ti = tgt_base + static_cast<std::size_t>(ch) * plane + i;
        const double d = static_cast<double>(pred[pi]) - static_cast<double>(target_maps[ti]);
        acc += std::abs(d);
        if (grad) grad[pi] += static_cast<T>(inv_n * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)));
      }
    }
  }
  return inv_n * acc;
}

}  // namespace detail

// L1 size loss with a single (width, height) pair shared by all classes,
// evaluated on object-center cells only. pred is [2, H, W].
template <typename T>
double size_loss_shared(const T* pred, const TargetMaps<T>& t, T* grad = nullptr) {
  return detail::masked_l1(pred, t.size.data(), t, /*multihead=*/false, grad);
}

// L1 offset loss, shared channel pair. pred is [2, H, W].
template <typename T>
double offset_loss_shared(const T* pred, const TargetMaps<T>& t, T* grad = nullptr) {
  return detail::masked_l1(pred, t.offset.data(), t, /*multihead=*/false, grad);
}

// L1 size loss with one (width, height) pair per class: the per-class sums
// are accumulated and divided by the total object count. pred is [C, 2, H, W].
template <typename T>
double size_loss_multihead(const T* pred, const TargetMaps<T>& t, T* grad = nullptr) {
  return detail::masked_l1(pred, t.size.data(), t, /*multihead=*/true, grad);
}

// L1 offset loss, one channel pair per class. pred is [C, 2, H, W].
template <typename T>
double offset_loss_multihead(const T* pred, const TargetMaps<T>& t, T* grad = nullptr) {
  return detail::masked_l1(pred, t.offset.data(), t, /*multihead=*/true, grad);
}

struct LossBreakdown {
  double total = 0.0;
  double focal = 0.0;
  double size = 0.0;
  double offset = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o) {
    total += o.total;
    focal += o.focal;
    size += o.size;
    offset += o.offset;
    return *this;
  }
  LossBreakdown& operator*=(double s) {
    total *= s;
    focal *= s;
    size *= s;
    offset *= s;
    return *this;
  }
};

// Weighted combination of the three multihead losses for one image. When
// grad buffers are given they receive the gradients of the *weighted* total
// w.r.t. each prediction stack.
template <typename T>
LossBreakdown total_loss(const T* center, const T* size, const T* offset,
                         const TargetMaps<T>& t, const LossConfig& cfg,
                         T* grad_center = nullptr, T* grad_size = nullptr,
                         T* grad_offset = nullptr) {
  cfg.validate();
  LossBreakdown out;
  out.focal = focal_loss(center, t, cfg, grad_center);
  out.size = size_loss_multihead(size, t, grad_size);
  out.offset = offset_loss_multihead(offset, t, grad_offset);
  out.total = cfg.lambda_focal * out.focal + cfg.lambda_size * out.size +
              cfg.lambda_offset * out.offset;

  const std::size_t plane = t.plane();
  const std::size_t n1 = static_cast<std::size_t>(t.num_classes) * plane;
  if (grad_center)
    for (std::size_t i = 0; i < n1; ++i) grad_center[i] *= static_cast<T>(cfg.lambda_focal);
  if (grad_size)
    for (std::size_t i = 0; i < 2 * n1; ++i) grad_size[i] *= static_cast<T>(cfg.lambda_size);
  if (grad_offset)
    for (std::size_t i = 0; i < 2 * n1; ++i) grad_offset[i] *= static_cast<T>(cfg.lambda_offset);
  return out;
}

}  // namespace cidet
