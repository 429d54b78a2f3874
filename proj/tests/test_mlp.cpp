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

#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pauc/mlp.hpp"

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

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

TEST(Mlp, IdentityLayerPassesInputThrough) {
  const Mlp m({DenseLayer{Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4)}});
  Rng rng(1);
  const Eigen::MatrixXd x = random_matrix(4, 3, rng);
  EXPECT_EQ(m.forward(x), x);
}

TEST(Mlp, ZeroWeightsGiveZeroEmbedding) {
  const Mlp m({DenseLayer{Eigen::MatrixXd::Zero(3, 5), Eigen::VectorXd::Zero(3)}});
  EXPECT_EQ(m.forward_one(Eigen::VectorXd::Ones(5)), Eigen::VectorXd::Zero(3));
}

TEST(Mlp, BatchEqualsSingleCalls) {
  Rng rng(2);
  const std::vector<std::size_t> dims{6, 9, 7, 4};
  const Mlp m = Mlp::random(dims, rng);
  const Eigen::MatrixXd x = random_matrix(6, 3, rng);
  const Eigen::MatrixXd y = m.forward(x);
  for (Eigen::Index c = 0; c < 3; ++c) EXPECT_EQ(y.col(c), m.forward_one(x.col(c)));
  // A column's embedding does not depend on its batch neighbours.
  EXPECT_EQ(m.forward(x.leftCols(2)), y.leftCols(2));
  ForwardCache cache;
  EXPECT_LT((m.forward(x, cache) - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mlp, ShapeErrors) {
  Rng rng(3);
  const std::vector<std::size_t> dims{4, 3};
  const Mlp m = Mlp::random(dims, rng);
  EXPECT_EQ(error_code([&] { m.forward(Eigen::MatrixXd::Ones(5, 2)); }), "shape-error");
  EXPECT_EQ(error_code([&] {
              Mlp({DenseLayer{Eigen::MatrixXd::Ones(3, 4), Eigen::VectorXd::Ones(3)},
                   DenseLayer{Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2)}});
            }),
            "shape-error");
  const std::vector<std::size_t> bad{4};
  EXPECT_EQ(error_code([&] { Mlp::random(bad, rng); }), "shape-error");
}

TEST(Mlp, InitIsFanInScaledWithZeroBias) {
  Rng rng(4);
  const std::vector<std::size_t> dims{24, 10, 5};
  const Mlp m = Mlp::random(dims, rng);
  EXPECT_LE(m.layers()[0].weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 24.0));
  EXPECT_LE(m.layers()[1].weight.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 10.0));
  EXPECT_EQ(m.layers()[0].bias, Eigen::VectorXd::Zero(10));
  Rng again(4);
  EXPECT_EQ(Mlp::random(dims, again).layers()[1].weight, m.layers()[1].weight);
}

TEST(Mlp, BackwardRequiresForwardState) {
  Rng rng(5);
  const std::vector<std::size_t> dims{3, 4, 2};
  const Mlp m = Mlp::random(dims, rng);
  ForwardCache cache;
  EXPECT_EQ(error_code([&] { m.backward(cache, Eigen::MatrixXd::Ones(2, 1)); }), "no-forward-state");
  m.forward(Eigen::MatrixXd::Ones(3, 2), cache);
  EXPECT_EQ(error_code([&] { m.backward(cache, Eigen::MatrixXd::Ones(2, 5)); }), "no-forward-state");
}

TEST(Mlp, ZeroUpstreamGivesZeroGradients) {
  Rng rng(6);
  const std::vector<std::size_t> dims{3, 4, 2};
  const Mlp m = Mlp::random(dims, rng);
  ForwardCache cache;
  m.forward(random_matrix(3, 4, rng), cache);
  const MlpGradients g = m.backward(cache, Eigen::MatrixXd::Zero(2, 4));
  for (const auto& l : g.layers) {
    EXPECT_EQ(l.weight.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Mlp, LinearLayerSumLossGradient) {
  // L = sum of all outputs of y = W x + b, so dL/dW = 1 (sum_c x_c)^T.
  Rng rng(7);
  const Mlp m({DenseLayer{random_matrix(3, 4, rng), Eigen::VectorXd::Zero(3)}});
  const Eigen::MatrixXd x = random_matrix(4, 5, rng);
  ForwardCache cache;
  m.forward(x, cache);
  const MlpGradients g = m.backward(cache, Eigen::MatrixXd::Ones(3, 5));
  const Eigen::RowVectorXd col_sum = x.rowwise().sum().transpose();
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_LT((g.layers[0].weight.row(i) - col_sum).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_EQ(g.layers[0].bias(i), 5.0);
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(8);
  int checked = 0;
  while (checked < 30) {
    std::vector<std::size_t> dims{1 + rng.index(6)};
    const std::size_t depth = 1 + rng.index(3);
    for (std::size_t l = 0; l < depth; ++l) dims.push_back(1 + rng.index(7));
    Mlp m = Mlp::random(dims, rng);
    for (auto& l : m.layers()) {
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * rng.normal();
    }
    const Eigen::MatrixXd x = random_matrix(m.input_dim(), 1 + static_cast<Eigen::Index>(rng.index(4)), rng);
    const Eigen::MatrixXd upstream = random_matrix(m.output_dim(), x.cols(), rng);
    ForwardCache cache;
    m.forward(x, cache);
    // Keep ReLU inputs away from the kink so central differences are valid.
    bool near_kink = false;
    for (std::size_t l = 0; l + 1 < cache.preactivations.size(); ++l) {
      near_kink |= cache.preactivations[l].cwiseAbs().minCoeff() < 1e-3;
    }
    if (near_kink) continue;
    ++checked;
    Eigen::MatrixXd grad_x;
    const MlpGradients g = m.backward(cache, upstream, &grad_x);
    auto loss = [&] { return (m.forward(x).array() * upstream.array()).sum(); };
    std::vector<double> analytic, numeric;
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
      auto& layer = m.layers()[l];
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        analytic.push_back(g.layers[l].weight.data()[i]);
        numeric.push_back(testing::central_difference(loss, layer.weight.data()[i], 1e-6));
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
        analytic.push_back(g.layers[l].bias(i));
        numeric.push_back(testing::central_difference(loss, layer.bias(i), 1e-6));
      }
    }
    EXPECT_LE(testing::norm_rel_error(analytic, numeric), 1e-6);
    Eigen::MatrixXd xm = x;
    std::vector<double> ax, nx;
    auto loss_x = [&] { return (m.forward(xm).array() * upstream.array()).sum(); };
    for (Eigen::Index i = 0; i < xm.size(); ++i) {
      ax.push_back(grad_x.data()[i]);
      nx.push_back(testing::central_difference(loss_x, xm.data()[i], 1e-6));
    }
    EXPECT_LE(testing::norm_rel_error(ax, nx), 1e-6);
  }
}

TEST(Mlp, CheckpointRoundTripIsExact) {
  Rng rng(9);
  const std::vector<std::size_t> dims{5, 8, 3};
  const Mlp m = Mlp::random(dims, rng);
  std::stringstream ss;
  m.save(ss);
  const Mlp back = Mlp::load(ss);
  EXPECT_EQ(back.dims(), dims);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(back.layers()[l].weight, m.layers()[l].weight);
    EXPECT_EQ(back.layers()[l].bias, m.layers()[l].bias);
  }
  std::stringstream again;
  back.save(again);
  EXPECT_EQ(again.str(), ss.str());
}

TEST(Mlp, RejectsBadCheckpoints) {
  for (const char* text : {"nonsense 1\n", "pauc-mlp 2\n2 1 1\n0\n0\n", "pauc-mlp 1\n2 2 1\n0.5\n",
                           "pauc-mlp 1\n2 1 1\nnan\n0\n", "pauc-mlp 1\n1 3\n"}) {
    std::stringstream ss(text);
    EXPECT_EQ(error_code([&] { Mlp::load(ss); }), "bad-checkpoint") << text;
  }
}

TEST(Adam, ZeroGradientLeavesParametersButCountsTheStep) {
  Eigen::VectorXd w(3);
  w << 1.0, -2.0, 0.5;
  const Eigen::VectorXd before = w;
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
  AdamState s;
  const std::vector<ParamRef> params{{as_span(w), as_span(g)}};
  adam_step(s, params);
  adam_step(s, params);
  EXPECT_EQ(w, before);
  EXPECT_EQ(s.step, 2u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd g(4);
  g << 0.3, -7.0, 1e-3, 250.0;
  AdamState s;
  const std::vector<ParamRef> params{{as_span(w), as_span(g)}};
  adam_step(s, params);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double expected = -0.001 * g(i) / (std::abs(g(i)) + 1e-8);
    EXPECT_NEAR(w(i), expected, 1e-15);
    EXPECT_NEAR(std::abs(w(i)), 0.001, 1e-8);
  }
}

TEST(Adam, MatchesClosedFormOverSeveralSteps) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 0.7);
  Eigen::VectorXd g(1);
  AdamState s;
  s.learning_rate = 0.01;
  double m = 0.0, v = 0.0, ref = 0.7;
  const std::vector<ParamRef> params{{as_span(w), as_span(g)}};
  for (int t = 1; t <= 20; ++t) {
    g(0) = std::sin(t) + 0.2;
    m = 0.9 * m + 0.1 * g(0);
    v = 0.999 * v + 0.001 * g(0) * g(0);
    ref -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    adam_step(s, params);
    EXPECT_NEAR(w(0), ref, 1e-14);
  }
}

TEST(Adam, ShapeMismatch) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
  AdamState s;
  const std::vector<ParamRef> params{{as_span(w), as_span(g)}};
  EXPECT_EQ(error_code([&] { adam_step(s, params); }), "shape-error");
}

TEST(Adam, IdenticalRunsGiveIdenticalTrajectories) {
  auto run = [] {
    Rng rng(10);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(5), g(5);
    AdamState s;
    const std::vector<ParamRef> params{{as_span(w), as_span(g)}};
    for (int t = 0; t < 50; ++t) {
      for (Eigen::Index i = 0; i < 5; ++i) g(i) = rng.normal() + w(i);
      adam_step(s, params);
    }
    return w;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace pauc
