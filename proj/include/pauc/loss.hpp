// Copyright 2026 The pauc-embed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pauc/error.hpp"
#include "pauc/metrics.hpp"

namespace pauc {

/// Hyperparameters of the pAUC objective: FPR window [alpha, beta] and the
/// squared-hinge margin delta.
class PaucConfig {
 public:
  PaucConfig(double alpha, double beta, double delta)
      : alpha_(alpha), beta_(beta), delta_(delta) {
    detail::check_fraction_range(alpha, beta);
    // Cosine score differences live in [-2, 2].
    if (!(delta >= 0.0 && delta < 2.0)) {
      throw Error("bad-delta", "margin must lie in [0, 2)",
                  {{"delta", detail::to_detail(delta)}});
    }
  }

  static PaucConfig auc(double delta) { return PaucConfig(0.0, 1.0, delta); }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double delta() const { return delta_; }

 private:
  double alpha_;
  double beta_;
  double delta_;
};

struct HardNegatives {
  std::vector<std::size_t> indices;
  std::int64_t j_alpha;
  std::int64_t j_beta;
};

struct LossOutput {
  double value = 0.0;
  std::vector<double> grad_pos;
  std::vector<double> grad_neg_selected;
};

/// Picks N0: the negatives ranked j_alpha..j_beta under a stable descending
/// sort. Selection is treated as constant when differentiating.
inline HardNegatives select_hard_negatives(std::span<const double> neg_scores,
                                           double alpha, double beta) {
  if (neg_scores.empty()) {
    throw Error("empty-class", "no negative scores to select from");
  }
  const PaucWindow window = pauc_window(neg_scores.size(), alpha, beta);
  if (window.empty()) throw empty_window_error(window, alpha, beta);
  return {rank_window(neg_scores, window), window.j_alpha, window.j_beta};
}

/// Mean squared hinge max(0, delta - (s_i - s_k))^2 over P x N0, with its
/// gradient with respect to each score.
inline LossOutput pauc_loss(std::span<const double> pos_scores,
                            std::span<const double> neg_selected_scores,
                            double delta) {
  if (pos_scores.empty() || neg_selected_scores.empty()) {
    throw Error("empty-class", "pauc_loss needs positives and selected negatives",
                {{"num_positives", detail::to_detail(pos_scores.size())},
                 {"num_negatives", detail::to_detail(neg_selected_scores.size())}});
  }
  if (!(delta >= 0.0)) {
    throw Error("bad-delta", "margin must be nonnegative",
                {{"delta", detail::to_detail(delta)}});
  }
  const std::size_t num_pos = pos_scores.size();
  const std::size_t num_neg = neg_selected_scores.size();
  const double scale = 1.0 / (static_cast<double>(num_pos) * static_cast<double>(num_neg));

  LossOutput out;
  out.grad_pos.assign(num_pos, 0.0);
  out.grad_neg_selected.assign(num_neg, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < num_pos; ++i) {
    for (std::size_t k = 0; k < num_neg; ++k) {
      const double slack = delta - (pos_scores[i] - neg_selected_scores[k]);
      if (slack <= 0.0) continue;
      total += slack * slack;
      out.grad_pos[i] -= 2.0 * slack;
      out.grad_neg_selected[k] += 2.0 * slack;
    }
  }
  out.value = total * scale;
  for (double& g : out.grad_pos) g *= scale;
  for (double& g : out.grad_neg_selected) g *= scale;
  return out;
}

namespace detail {

inline void check_nonzero(const Eigen::Ref<const Eigen::VectorXd>& v,
                          const char* which) {
  if (!(v.squaredNorm() > 0.0)) {
    throw Error("zero-vector", "cosine similarity of a zero-norm vector",
                {{"argument", which}});
  }
}

}  // namespace detail

inline double cosine_sim(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) {
    throw Error("shape-error", "cosine similarity of vectors of different size",
                {{"x", detail::to_detail(x.size())}, {"y", detail::to_detail(y.size())}});
  }
  detail::check_nonzero(x, "x");
  detail::check_nonzero(y, "y");
  return x.dot(y) / (x.norm() * y.norm());
}

struct CosineGrad {
  Eigen::VectorXd ds_dx;
  Eigen::VectorXd ds_dy;
};

// ds/dx = y / (|x||y|) - s x / |x|^2, and symmetrically for y.
inline CosineGrad cosine_sim_grad(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& y) {
  const double s = cosine_sim(x, y);
  const double nx = x.norm();
  const double ny = y.norm();
  CosineGrad g;
  g.ds_dx = y / (nx * ny) - (s / (nx * nx)) * x;
  g.ds_dy = x / (nx * ny) - (s / (ny * ny)) * y;
  return g;
}

struct SoftmaxOutput {
  double value = 0.0;
  Eigen::MatrixXd grad_logits;  // classes x samples
};

/// Mean cross-entropy of softmax posteriors. `logits` holds one column per
/// sample and one row per class.
inline SoftmaxOutput softmax_ce_loss(const Eigen::Ref<const Eigen::MatrixXd>& logits,
                                     std::span<const std::size_t> labels) {
  const auto num_classes = static_cast<std::size_t>(logits.rows());
  const auto num_samples = static_cast<std::size_t>(logits.cols());
  if (num_samples == 0 || labels.size() != num_samples) {
    throw Error("shape-error", "need one label per logit column",
                {{"columns", detail::to_detail(num_samples)},
                 {"labels", detail::to_detail(labels.size())}});
  }
  SoftmaxOutput out;
  out.grad_logits.resize(logits.rows(), logits.cols());
  const double inv_r = 1.0 / static_cast<double>(num_samples);
  double total = 0.0;
  for (std::size_t r = 0; r < num_samples; ++r) {
    if (labels[r] >= num_classes) {
      throw Error("bad-label", "label out of range",
                  {{"label", detail::to_detail(labels[r])},
                   {"classes", detail::to_detail(num_classes)}});
    }
    const auto col = logits.col(static_cast<Eigen::Index>(r));
    const double peak = col.maxCoeff();
    const Eigen::VectorXd shifted = (col.array() - peak).exp().matrix();
    const double z = shifted.sum();
    total -= col(static_cast<Eigen::Index>(labels[r])) - peak - std::log(z);
    auto g = out.grad_logits.col(static_cast<Eigen::Index>(r));
    g = shifted / z;
    g(static_cast<Eigen::Index>(labels[r])) -= 1.0;
    g *= inv_r;
  }
  out.value = total * inv_r;
  return out;
}

struct TripletOutput {
  double value = 0.0;
  double grad_s_ap = 0.0;
  double grad_s_an = 0.0;
};

/// Hinge on the triplet constraint s_ap - s_an > sigma. Subgradient 0 at the
/// kink.
inline TripletOutput triplet_loss(double s_ap, double s_an, double sigma) {
  const double slack = sigma - (s_ap - s_an);
  if (slack <= 0.0) return {};
  return {slack, -1.0, 1.0};
}

}  // namespace pauc
