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

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pauc/loss.hpp"

namespace pauc {
namespace {

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

TEST(PaucConfig, ValidatesRangeAndMargin) {
  EXPECT_NO_THROW(PaucConfig(0.0, 0.01, 0.0));
  EXPECT_NO_THROW(PaucConfig(0.0, 1.0, 1.999));
  EXPECT_EQ(error_code([] { PaucConfig(0.0, 0.1, 2.0); }), "bad-delta");
  EXPECT_EQ(error_code([] { PaucConfig(0.0, 0.1, -0.1); }), "bad-delta");
  EXPECT_EQ(error_code([] { PaucConfig(0.2, 0.1, 0.4); }), "bad-pauc-range");
  const PaucConfig a = PaucConfig::auc(0.4);
  EXPECT_EQ(a.alpha(), 0.0);
  EXPECT_EQ(a.beta(), 1.0);
}

TEST(SelectHardNegatives, TopThreeOfTen) {
  const std::vector<double> neg{0.1, 0.9, 0.3, 0.8, 0.2, 0.7, 0.0, 0.4, 0.5, 0.6};
  const HardNegatives h = select_hard_negatives(neg, 0.0, 0.3);
  EXPECT_EQ(h.j_alpha, 1);
  EXPECT_EQ(h.j_beta, 3);
  EXPECT_EQ(h.indices, (std::vector<std::size_t>{1, 3, 5}));
}

TEST(SelectHardNegatives, EmptyWindowCarriesBookkeeping) {
  const std::vector<double> neg(10, 0.0);
  try {
    select_hard_negatives(neg, 0.0, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty-pauc-window");
    EXPECT_EQ(e.details().at("j_alpha"), "1");
    EXPECT_EQ(e.details().at("j_beta"), "0");
    EXPECT_EQ(e.details().at("J"), "10");
  }
}

TEST(SelectHardNegatives, FullRangeSelectsAll) {
  const std::vector<double> neg{0.3, -0.1, 0.5, 0.2, 0.0};
  const HardNegatives h = select_hard_negatives(neg, 0.0, 1.0);
  EXPECT_EQ(h.indices.size(), 5u);
  EXPECT_EQ(h.indices, (std::vector<std::size_t>{2, 0, 3, 4, 1}));
}

TEST(SelectHardNegatives, TiesBrokenByIndex) {
  const std::vector<double> neg{0.5, 0.7, 0.5, 0.7, 0.5};
  const HardNegatives h = select_hard_negatives(neg, 0.2, 0.8);
  // Ranks 2..4 of the stable order 1,3,0,2,4.
  EXPECT_EQ(h.indices, (std::vector<std::size_t>{3, 0, 2}));
}

TEST(SelectHardNegatives, SizeAndDominanceProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t j = 1 + rng.index(60);
    std::vector<double> neg(j);
    for (double& v : neg) v = trial % 2 ? static_cast<double>(rng.index(5)) : rng.normal();
    const double alpha = rng.uniform(0.0, 0.5);
    const double beta = std::min(1.0, alpha + rng.uniform(0.01, 0.8));
    long ja, jb;
    testing::window_by_scan(j, alpha, beta, ja, jb);
    if (jb < ja) {
      EXPECT_EQ(error_code([&] { select_hard_negatives(neg, alpha, beta); }), "empty-pauc-window");
      continue;
    }
    const HardNegatives h = select_hard_negatives(neg, alpha, beta);
    EXPECT_EQ(h.j_alpha, ja);
    EXPECT_EQ(h.j_beta, jb);
    ASSERT_EQ(static_cast<long>(h.indices.size()), jb - ja + 1);
    std::vector<bool> chosen(j, false);
    for (std::size_t k : h.indices) {
      EXPECT_FALSE(chosen[k]);
      chosen[k] = true;
    }
    // Count how many negatives rank strictly above each selected one.
    std::vector<double> sorted = neg;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double lowest_selected = sorted[static_cast<std::size_t>(jb - 1)];
    const double highest_selected = sorted[static_cast<std::size_t>(ja - 1)];
    for (std::size_t k = 0; k < j; ++k) {
      if (chosen[k]) {
        EXPECT_GE(neg[k], lowest_selected);
        EXPECT_LE(neg[k], highest_selected);
      }
    }
    for (long r = jb; r < static_cast<long>(j); ++r) {
      EXPECT_GE(lowest_selected, sorted[static_cast<std::size_t>(r)]);
    }
  }
}

TEST(PaucLoss, SingleActivePair) {
  const std::vector<double> pos{0.5}, neg{0.3};
  const LossOutput out = pauc_loss(pos, neg, 0.4);
  EXPECT_NEAR(out.value, 0.04, 1e-15);
  EXPECT_NEAR(out.grad_pos[0], -0.4, 1e-15);
  EXPECT_NEAR(out.grad_neg_selected[0], 0.4, 1e-15);
}

TEST(PaucLoss, SatisfiedMarginsGiveZero) {
  const std::vector<double> pos{0.9}, neg{0.2, -0.5};
  const LossOutput out = pauc_loss(pos, neg, 0.4);
  EXPECT_EQ(out.value, 0.0);
  EXPECT_EQ(out.grad_pos[0], 0.0);
  EXPECT_EQ(out.grad_neg_selected, (std::vector<double>{0.0, 0.0}));
}

TEST(PaucLoss, EqualScoresWideMargin) {
  const std::vector<double> pos{0.0}, neg{0.0};
  const LossOutput out = pauc_loss(pos, neg, 1.2);
  EXPECT_NEAR(out.value, 1.44, 1e-15);
  EXPECT_NEAR(out.grad_pos[0], -2.4, 1e-15);
  EXPECT_NEAR(out.grad_neg_selected[0], 2.4, 1e-15);
}

TEST(PaucLoss, RejectsEmptyInput) {
  const std::vector<double> one{0.1}, none;
  EXPECT_EQ(error_code([&] { pauc_loss(none, one, 0.4); }), "empty-class");
  EXPECT_EQ(error_code([&] { pauc_loss(one, none, 0.4); }), "empty-class");
}

TEST(PaucLoss, RandomizedProperties) {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> pos(1 + rng.index(8)), neg(1 + rng.index(8));
    // Quarter lattice keeps the shifted copy exact.
    for (double& v : pos) v = static_cast<double>(rng.index(9)) / 4.0 - 1.0;
    for (double& v : neg) v = static_cast<double>(rng.index(9)) / 4.0 - 1.0;
    const double delta = static_cast<double>(rng.index(8)) / 4.0;
    const LossOutput out = pauc_loss(pos, neg, delta);

    // Value matches its own definition and depends only on differences.
    double direct = 0.0;
    for (double a : pos) {
      for (double b : neg) direct += std::pow(std::max(0.0, delta - (a - b)), 2);
    }
    direct /= static_cast<double>(pos.size() * neg.size());
    EXPECT_NEAR(out.value, direct, 1e-14);
    std::vector<double> pos2 = pos, neg2 = neg;
    for (double& v : pos2) v += 2.0;
    for (double& v : neg2) v += 2.0;
    EXPECT_EQ(pauc_loss(pos2, neg2, delta).value, out.value);

    for (double g : out.grad_pos) EXPECT_LE(g, 0.0);
    for (double g : out.grad_neg_selected) EXPECT_GE(g, 0.0);
    const double gap = *std::min_element(pos.begin(), pos.end()) -
                       *std::max_element(neg.begin(), neg.end());
    EXPECT_EQ(out.value == 0.0, gap >= delta);
    if (out.value == 0.0) {
      for (double g : out.grad_pos) EXPECT_EQ(g, 0.0);
      for (double g : out.grad_neg_selected) EXPECT_EQ(g, 0.0);
    }
  }
}

TEST(PaucLoss, FullWindowEqualsLossOnAllNegatives) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos(1 + rng.index(6)), neg(1 + rng.index(12));
    for (double& v : pos) v = rng.uniform(-1.0, 1.0);
    for (double& v : neg) v = rng.uniform(-1.0, 1.0);
    const HardNegatives h = select_hard_negatives(neg, 0.0, 1.0);
    std::vector<double> selected;
    for (std::size_t k : h.indices) selected.push_back(neg[k]);
    EXPECT_NEAR(pauc_loss(pos, selected, 0.6).value, pauc_loss(pos, neg, 0.6).value, 1e-15);
  }
}

TEST(Cosine, Examples) {
  Eigen::VectorXd x(2), y(2);
  x << 1, 0;
  y << 1, 1;
  EXPECT_NEAR(cosine_sim(x, y), 0.7071067811865476, 1e-15);
  EXPECT_NEAR(cosine_sim(y, y), 1.0, 1e-15);
  Eigen::VectorXd z(2);
  z << 0, 3;
  EXPECT_EQ(cosine_sim(x, z), 0.0);
}

TEST(Cosine, Errors) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3), y = Eigen::VectorXd::Ones(3), w = Eigen::VectorXd::Ones(2);
  EXPECT_EQ(error_code([&] { cosine_sim(x, y); }), "zero-vector");
  EXPECT_EQ(error_code([&] { cosine_sim(y, x); }), "zero-vector");
  EXPECT_EQ(error_code([&] { cosine_sim_grad(x, y); }), "zero-vector");
  EXPECT_EQ(error_code([&] { cosine_sim(w, y); }), "shape-error");
}

TEST(Cosine, GradientExamples) {
  Eigen::VectorXd x(2), y(2);
  x << 1, 0;
  y << 0, 1;
  const CosineGrad g = cosine_sim_grad(x, y);
  EXPECT_EQ(g.ds_dx, y);
  EXPECT_EQ(g.ds_dy, x);
  Eigen::VectorXd u(3);
  u << 0.6, 0.0, 0.8;
  EXPECT_LT(cosine_sim_grad(u, u).ds_dx.norm(), 1e-15);
}

TEST(Cosine, ScaleInvarianceOrthogonalityAndFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    // In one dimension the cosine is a constant +-1 with zero gradient.
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.index(15));
    Eigen::VectorXd x(d), y(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      x(i) = rng.normal();
      y(i) = rng.normal();
    }
    const double s = cosine_sim(x, y);
    EXPECT_LE(std::abs(s), 1.0 + 1e-15);
    EXPECT_NEAR(cosine_sim(3.7 * x, y), s, 1e-14);
    EXPECT_NEAR(cosine_sim(y, x), s, 1e-15);
    const CosineGrad g = cosine_sim_grad(x, y);
    EXPECT_NEAR(g.ds_dx.dot(x), 0.0, 1e-12);
    EXPECT_NEAR(g.ds_dy.dot(y), 0.0, 1e-12);
    std::vector<double> analytic, numeric;
    for (Eigen::Index i = 0; i < d; ++i) {
      analytic.push_back(g.ds_dx(i));
      numeric.push_back(testing::central_difference([&] { return cosine_sim(x, y); }, x(i), 1e-6));
    }
    EXPECT_LT(testing::norm_rel_error(analytic, numeric), 1e-7);
  }
}

// Loss of cosine scores between embeddings with N0 frozen, differentiated by
// hand through cosine_sim_grad and compared with central differences.
TEST(PaucLoss, ChainedThroughCosineMatchesFiniteDifferences) {
  Rng rng(77);
  int checked = 0;
  while (checked < 100) {
    const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng.index(15));
    const std::size_t ni = 1 + rng.index(8), nk = 1 + rng.index(8);
    Eigen::MatrixXd anchor(dim, static_cast<Eigen::Index>(ni)), pos(dim, static_cast<Eigen::Index>(ni));
    Eigen::MatrixXd na(dim, static_cast<Eigen::Index>(nk)), nb(dim, static_cast<Eigen::Index>(nk));
    for (auto* m : {&anchor, &pos, &na, &nb}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.normal();
    }
    const double delta = rng.uniform(0.0, 1.9);
    auto scores = [&](std::vector<double>& sp, std::vector<double>& sn) {
      sp.clear();
      sn.clear();
      for (Eigen::Index i = 0; i < anchor.cols(); ++i) sp.push_back(cosine_sim(anchor.col(i), pos.col(i)));
      for (Eigen::Index k = 0; k < na.cols(); ++k) sn.push_back(cosine_sim(na.col(k), nb.col(k)));
    };
    std::vector<double> sp, sn;
    scores(sp, sn);
    bool near_kink = false;
    for (double a : sp) {
      for (double b : sn) near_kink |= std::abs(delta - (a - b)) < 1e-3;
    }
    if (near_kink) continue;
    ++checked;

    const LossOutput out = pauc_loss(sp, sn, delta);
    auto value = [&] {
      std::vector<double> p, n;
      scores(p, n);
      return pauc_loss(p, n, delta).value;
    };
    std::vector<double> analytic, numeric;
    for (Eigen::Index i = 0; i < anchor.cols(); ++i) {
      const CosineGrad g = cosine_sim_grad(anchor.col(i), pos.col(i));
      for (Eigen::Index r = 0; r < dim; ++r) {
        analytic.push_back(out.grad_pos[static_cast<std::size_t>(i)] * g.ds_dx(r));
        numeric.push_back(testing::central_difference(value, anchor(r, i), 1e-5));
        analytic.push_back(out.grad_pos[static_cast<std::size_t>(i)] * g.ds_dy(r));
        numeric.push_back(testing::central_difference(value, pos(r, i), 1e-5));
      }
    }
    for (Eigen::Index k = 0; k < na.cols(); ++k) {
      const CosineGrad g = cosine_sim_grad(na.col(k), nb.col(k));
      for (Eigen::Index r = 0; r < dim; ++r) {
        analytic.push_back(out.grad_neg_selected[static_cast<std::size_t>(k)] * g.ds_dx(r));
        numeric.push_back(testing::central_difference(value, na(r, k), 1e-5));
        analytic.push_back(out.grad_neg_selected[static_cast<std::size_t>(k)] * g.ds_dy(r));
        numeric.push_back(testing::central_difference(value, nb(r, k), 1e-5));
      }
    }
    EXPECT_LE(testing::norm_rel_error(analytic, numeric), 1e-6);
  }
}

TEST(Softmax, Examples) {
  Eigen::MatrixXd two = Eigen::MatrixXd::Constant(2, 1, 0.3);
  const std::vector<std::size_t> label0{0}, label1{1};
  EXPECT_NEAR(softmax_ce_loss(two, label1).value, std::log(2.0), 1e-15);

  Eigen::MatrixXd three(3, 1);
  three << 1, 0, 0;
  EXPECT_NEAR(softmax_ce_loss(three, label0).value, 0.55144471393205, 1e-12);

  Eigen::MatrixXd confident(2, 1);
  confident << 800.0, 0.0;
  const SoftmaxOutput out = softmax_ce_loss(confident, label0);
  EXPECT_EQ(out.value, 0.0);
  EXPECT_TRUE(out.grad_logits.allFinite());
}

TEST(Softmax, ErrorsAndGradient) {
  Eigen::MatrixXd logits(3, 2);
  logits << 0.2, -1.0, 0.5, 0.3, -0.7, 2.0;
  const std::vector<std::size_t> bad{0, 3}, good{2, 0}, short_labels{1};
  EXPECT_EQ(error_code([&] { softmax_ce_loss(logits, bad); }), "bad-label");
  EXPECT_EQ(error_code([&] { softmax_ce_loss(logits, short_labels); }), "shape-error");
  const SoftmaxOutput out = softmax_ce_loss(logits, good);
  std::vector<double> analytic, numeric;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    analytic.push_back(out.grad_logits.data()[i]);
    numeric.push_back(testing::central_difference(
        [&] { return softmax_ce_loss(logits, good).value; }, logits.data()[i], 1e-6));
  }
  EXPECT_LT(testing::norm_rel_error(analytic, numeric), 1e-8);
  // Each column of (softmax - onehot) sums to zero.
  EXPECT_NEAR(out.grad_logits.colwise().sum().cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Triplet, Examples) {
  TripletOutput t = triplet_loss(0.9, 0.1, 0.5);
  EXPECT_EQ(t.value, 0.0);
  EXPECT_EQ(t.grad_s_ap, 0.0);
  EXPECT_EQ(t.grad_s_an, 0.0);
  t = triplet_loss(0.4, 0.3, 0.5);
  EXPECT_NEAR(t.value, 0.4, 1e-15);
  EXPECT_EQ(t.grad_s_ap, -1.0);
  EXPECT_EQ(t.grad_s_an, 1.0);
  t = triplet_loss(0.2, 0.2, 0.0);
  EXPECT_EQ(t.value, 0.0);
  EXPECT_EQ(t.grad_s_ap, 0.0);
}

}  // namespace
}  // namespace pauc
