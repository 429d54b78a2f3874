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
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "pauc/error.hpp"

namespace pauc {

/// Similarity scores split into target (positive) and impostor (negative)
/// trials.
struct LabeledScoreSet {
  std::vector<double> positives;
  std::vector<double> negatives;
};

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

/// Operating points ordered by descending threshold. The implicit starting
/// point (0, 0) above the maximum score is not stored; the last stored point
/// is always (1, 1).
struct RocCurve {
  std::vector<RocPoint> points;
};

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

struct DetPoint {
  double fpr;
  double fnr;
  double probit_fpr;
  double probit_fnr;
};

/// 1-based rank window [j_alpha, j_beta] of the negatives (sorted descending)
/// whose false positive rate falls in [alpha, beta].
struct PaucWindow {
  std::int64_t j_alpha;
  std::int64_t j_beta;
  std::size_t num_negatives;

  bool empty() const { return j_beta < j_alpha; }
  std::size_t size() const {
    return empty() ? 0 : static_cast<std::size_t>(j_beta - j_alpha + 1);
  }
};

namespace detail {

inline void check_fraction_range(double alpha, double beta) {
  if (!(alpha >= 0.0 && alpha < beta && beta <= 1.0)) {
    throw Error("bad-pauc-range", "require 0 <= alpha < beta <= 1",
                {{"alpha", to_detail(alpha)}, {"beta", to_detail(beta)}});
  }
}

inline void check_scores(const LabeledScoreSet& scores) {
  if (scores.positives.empty() || scores.negatives.empty()) {
    throw Error("empty-class", "need at least one positive and one negative",
                {{"num_positives", to_detail(scores.positives.size())},
                 {"num_negatives", to_detail(scores.negatives.size())}});
  }
  auto finite = [](double s) { return std::isfinite(s); };
  if (!std::all_of(scores.positives.begin(), scores.positives.end(), finite) ||
      !std::all_of(scores.negatives.begin(), scores.negatives.end(), finite)) {
    throw Error("non-finite-score", "scores must be finite");
  }
}

}  // namespace detail

/// Computes j_alpha = ceil(J*alpha) + 1 and j_beta = floor(J*beta). The
/// products are nudged by 1e-9 before rounding so that e.g. 10 * 0.3 lands
/// on 3 rather than 3.0000000000000004.
inline PaucWindow pauc_window(std::size_t num_negatives, double alpha,
                              double beta) {
  detail::check_fraction_range(alpha, beta);
  const double count = static_cast<double>(num_negatives);
  constexpr double kSlack = 1e-9;
  PaucWindow w;
  w.j_alpha = static_cast<std::int64_t>(std::ceil(count * alpha - kSlack)) + 1;
  w.j_beta = static_cast<std::int64_t>(std::floor(count * beta + kSlack));
  w.num_negatives = num_negatives;
  return w;
}

inline Error empty_window_error(const PaucWindow& w, double alpha,
                                double beta) {
  return Error("empty-pauc-window",
               "no negatives fall inside the [alpha, beta] FPR window",
               {{"j_alpha", detail::to_detail(w.j_alpha)},
                {"j_beta", detail::to_detail(w.j_beta)},
                {"J", detail::to_detail(w.num_negatives)},
                {"alpha", detail::to_detail(alpha)},
                {"beta", detail::to_detail(beta)}});
}

/// Indices of the negatives ranked j_alpha..j_beta in descending score order.
/// Ties keep ascending original index.
inline std::vector<std::size_t> rank_window(std::span<const double> negatives,
                                            const PaucWindow& w) {
  std::vector<std::size_t> order(negatives.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return negatives[a] > negatives[b];
  });
  if (w.empty()) return {};
  const auto first = order.begin() + (w.j_alpha - 1);
  return std::vector<std::size_t>(first, first + static_cast<std::ptrdiff_t>(w.size()));
}

inline RocCurve roc_curve(const LabeledScoreSet& scores) {
  detail::check_scores(scores);
  std::vector<double> pos = scores.positives;
  std::vector<double> neg = scores.negatives;
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());

  const double num_pos = static_cast<double>(pos.size());
  const double num_neg = static_cast<double>(neg.size());
  RocCurve curve;
  std::size_t ip = 0;
  std::size_t in = 0;
  while (ip < pos.size() || in < neg.size()) {
    double threshold;
    if (ip == pos.size()) {
      threshold = neg[in];
    } else if (in == neg.size()) {
      threshold = pos[ip];
    } else {
      threshold = std::max(pos[ip], neg[in]);
    }
    // Every score >= threshold is accepted.
    while (ip < pos.size() && pos[ip] >= threshold) ++ip;
    while (in < neg.size() && neg[in] >= threshold) ++in;
    curve.points.push_back({threshold, static_cast<double>(in) / num_neg,
                            static_cast<double>(ip) / num_pos});
  }
  return curve;
}

/// Normalized area under the ROC curve restricted to FPR in [alpha, beta],
/// evaluated exactly over P x N0 with ties counted as one half.
inline double pauc_empirical(const LabeledScoreSet& scores, double alpha,
                             double beta) {
  detail::check_scores(scores);
  const PaucWindow window = pauc_window(scores.negatives.size(), alpha, beta);
  if (window.empty()) throw empty_window_error(window, alpha, beta);

  std::vector<double> hard;
  hard.reserve(window.size());
  for (std::size_t k : rank_window(scores.negatives, window)) {
    hard.push_back(scores.negatives[k]);
  }
  std::sort(hard.begin(), hard.end());

  // Twice the (half-weighted) inversion count, kept integral until the end.
  std::uint64_t twice_inversions = 0;
  for (double s : scores.positives) {
    const auto lo = std::upper_bound(hard.begin(), hard.end(), s);
    const auto eq = std::lower_bound(hard.begin(), hard.end(), s);
    const auto above = static_cast<std::uint64_t>(hard.end() - lo);
    const auto ties = static_cast<std::uint64_t>(lo - eq);
    twice_inversions += 2 * above + ties;
  }
  const double pairs = static_cast<double>(scores.positives.size()) *
                       static_cast<double>(hard.size());
  return 1.0 - static_cast<double>(twice_inversions) / (2.0 * pairs);
}

inline double auc(const LabeledScoreSet& scores) {
  return pauc_empirical(scores, 0.0, 1.0);
}

/// Equal error rate. Linear interpolation between the two ROC operating
/// points where FPR - FNR changes sign.
inline double eer(const LabeledScoreSet& scores) {
  const RocCurve curve = roc_curve(scores);
  double prev_fpr = 0.0;
  double prev_fnr = 1.0;
  for (const RocPoint& p : curve.points) {
    const double fnr = 1.0 - p.tpr;
    const double gap = p.fpr - fnr;
    if (gap >= 0.0) {
      const double prev_gap = prev_fpr - prev_fnr;
      if (gap == 0.0) return p.fpr;
      const double t = -prev_gap / (gap - prev_gap);
      return prev_fpr + t * (p.fpr - prev_fpr);
    }
    prev_fpr = p.fpr;
    prev_fnr = fnr;
  }
  return 1.0;  // unreachable: the last point is (1, 1)
}

/// Minimum normalized detection cost over all thresholds, including
/// accept-all and reject-all.
inline double min_dcf(const LabeledScoreSet& scores, const DcfParams& params) {
  if (!(params.p_target > 0.0 && params.p_target < 1.0) ||
      !(params.c_miss > 0.0) || !(params.c_fa > 0.0)) {
    throw Error("bad-dcf-params", "require 0 < p_target < 1 and positive costs",
                {{"p_target", detail::to_detail(params.p_target)},
                 {"c_miss", detail::to_detail(params.c_miss)},
                 {"c_fa", detail::to_detail(params.c_fa)}});
  }
  const RocCurve curve = roc_curve(scores);
  const double w_miss = params.c_miss * params.p_target;
  const double w_fa = params.c_fa * (1.0 - params.p_target);
  const double norm = std::min(w_miss, w_fa);

  double best = w_miss;  // reject all: P_miss = 1, P_fa = 0
  for (const RocPoint& p : curve.points) {
    best = std::min(best, w_miss * (1.0 - p.tpr) + w_fa * p.fpr);
  }
  return best / norm;
}

/// Inverse of the standard normal CDF (Wichura, AS241 PPND16; relative
/// accuracy about 1e-16).
inline double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error("bad-probability", "probit needs p in (0, 1)",
                {{"p", detail::to_detail(p)}});
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                  0.24178072517745061177) * r + 1.27045825245236838258) * r +
                3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                  0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                  0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                  1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

/// DET operating points: interior ROC points (0 < FPR < 1, 0 < FNR < 1) in
/// probit coordinates. Where several points share an FPR only the one with
/// the lowest FNR is kept, so FPR is strictly increasing.
inline std::vector<DetPoint> det_points(const LabeledScoreSet& scores) {
  const RocCurve curve = roc_curve(scores);
  std::vector<DetPoint> out;
  for (const RocPoint& p : curve.points) {
    const double fnr = 1.0 - p.tpr;
    if (!(p.fpr > 0.0 && p.fpr < 1.0 && fnr > 0.0 && fnr < 1.0)) continue;
    if (!out.empty() && out.back().fpr == p.fpr) out.pop_back();
    out.push_back({p.fpr, fnr, probit(p.fpr), probit(fnr)});
  }
  return out;
}

}  // namespace pauc
