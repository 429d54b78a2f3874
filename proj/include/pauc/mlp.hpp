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

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pauc/error.hpp"
#include "pauc/random.hpp"

namespace pauc {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Activations kept from a forward pass; consumed by Mlp::backward.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // input to each layer
  std::vector<Eigen::MatrixXd> preactivations;

  bool empty() const { return inputs.empty(); }
};

struct MlpGradients {
  std::vector<DenseLayer> layers;
};

/// Feed-forward network: rectifier on hidden layers, identity on the output.
/// Batches are matrices with one sample per column.
class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    check_shapes();
  }

  /// Fan-in scaled uniform weights, zero biases.
  static Mlp random(std::span<const std::size_t> dims, Rng& rng) {
    if (dims.size() < 2) throw Error("shape-error", "need at least input and output dims");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      if (dims[l] == 0 || dims[l + 1] == 0) throw Error("shape-error", "layer dims must be >= 1");
      const auto in = static_cast<Eigen::Index>(dims[l]);
      const auto out = static_cast<Eigen::Index>(dims[l + 1]);
      const double limit = std::sqrt(6.0 / static_cast<double>(in));
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
      for (Eigen::Index j = 0; j < in; ++j) {
        for (Eigen::Index i = 0; i < out; ++i) layer.weight(i, j) = rng.uniform(-limit, limit);
      }
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
  }

  std::size_t num_layers() const { return layers_.size(); }
  Eigen::Index input_dim() const { return layers_.empty() ? 0 : layers_.front().weight.cols(); }
  Eigen::Index output_dim() const { return layers_.empty() ? 0 : layers_.back().weight.rows(); }

  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    if (layers_.empty()) return d;
    d.push_back(static_cast<std::size_t>(input_dim()));
    for (const auto& l : layers_) d.push_back(static_cast<std::size_t>(l.weight.rows()));
    return d;
  }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Inference runs one column at a time so an embedding never depends on
  // which batch it was computed in.
  Eigen::MatrixXd forward(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    check_input(x);
    Eigen::MatrixXd out(output_dim(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = forward_column(x.col(c));
    return out;
  }

  Eigen::VectorXd forward_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_input(x);
    return forward_column(x);
  }

  Eigen::MatrixXd forward(const Eigen::Ref<const Eigen::MatrixXd>& x,
                          ForwardCache& cache) const {
    check_input(x);
    cache.inputs.clear();
    cache.preactivations.clear();
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      cache.inputs.push_back(h);
      Eigen::MatrixXd z = layers_[l].weight * h;
      z.colwise() += layers_[l].bias;
      h = is_hidden(l) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
      cache.preactivations.push_back(std::move(z));
    }
    return h;
  }

  /// Reverse-mode gradients given dL/d(output) for the cached batch.
  MlpGradients backward(const ForwardCache& cache,
                        const Eigen::Ref<const Eigen::MatrixXd>& grad_output,
                        Eigen::MatrixXd* grad_input = nullptr) const {
    if (cache.empty() || cache.inputs.size() != layers_.size() ||
        cache.inputs.front().cols() != grad_output.cols() ||
        grad_output.rows() != output_dim()) {
      throw Error("no-forward-state", "backward needs a forward cache for the same batch");
    }
    MlpGradients grads;
    grads.layers.resize(layers_.size());
    Eigen::MatrixXd delta = grad_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (is_hidden(l)) {
        delta = (cache.preactivations[l].array() > 0.0).select(delta, 0.0);
      }
      grads.layers[l].weight = delta * cache.inputs[l].transpose();
      grads.layers[l].bias = delta.rowwise().sum();
      if (l > 0 || grad_input != nullptr) {
        delta = layers_[l].weight.transpose() * delta;
      }
    }
    if (grad_input != nullptr) *grad_input = std::move(delta);
    return grads;
  }

  bool all_finite() const {
    for (const auto& l : layers_) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
  }

  // Checkpoint format (text, version 1):
  //   pauc-mlp 1
  //   <num_dims> <d0> <d1> ... <dL>
  //   per layer: weight rows (row-major, one row per line), then the bias line
  // Values are written with 17 significant digits so reloading is exact.
  void save(std::ostream& os) const {
    os << "pauc-mlp 1\n";
    const auto d = dims();
    os << d.size();
    for (std::size_t v : d) os << ' ' << v;
    os << '\n';
    char buf[32];
    auto put = [&](double v, bool last) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf << (last ? '\n' : ' ');
    };
    for (const auto& l : layers_) {
      for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.weight.cols(); ++j) put(l.weight(i, j), j + 1 == l.weight.cols());
      }
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) put(l.bias(i), i + 1 == l.bias.size());
    }
  }

  static Mlp load(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "pauc-mlp") {
      throw Error("bad-checkpoint", "not a pauc-mlp checkpoint");
    }
    if (version != 1) {
      throw Error("bad-checkpoint", "unsupported checkpoint version",
                  {{"version", detail::to_detail(version)}});
    }
    std::size_t count = 0;
    if (!(is >> count) || count < 2) throw Error("bad-checkpoint", "bad layer count");
    std::vector<std::size_t> d(count);
    for (auto& v : d) {
      if (!(is >> v) || v == 0) throw Error("bad-checkpoint", "bad layer dim");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < count; ++l) {
      const auto in = static_cast<Eigen::Index>(d[l]);
      const auto out = static_cast<Eigen::Index>(d[l + 1]);
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
      for (Eigen::Index i = 0; i < out; ++i) {
        for (Eigen::Index j = 0; j < in; ++j) read_value(is, layer.weight(i, j));
      }
      for (Eigen::Index i = 0; i < out; ++i) read_value(is, layer.bias(i));
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
  }

 private:
  bool is_hidden(std::size_t l) const { return l + 1 < layers_.size(); }

  Eigen::VectorXd forward_column(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::VectorXd z = layers_[l].weight * h + layers_[l].bias;
      h = is_hidden(l) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    return h;
  }

  void check_input(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    if (layers_.empty()) throw Error("shape-error", "model has no layers");
    if (x.rows() != input_dim()) {
      throw Error("shape-error", "input dimension does not match the model",
                  {{"expected", detail::to_detail(input_dim())},
                   {"got", detail::to_detail(x.rows())}});
    }
  }

  void check_shapes() const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.weight.rows() < 1 || layer.weight.cols() < 1 ||
          layer.bias.size() != layer.weight.rows() ||
          (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows())) {
        throw Error("shape-error", "inconsistent layer shapes",
                    {{"layer", detail::to_detail(l)}});
      }
    }
  }

  static void read_value(std::istream& is, double& out) {
    std::string token;
    if (!(is >> token)) throw Error("bad-checkpoint", "truncated parameter data");
    char* end = nullptr;
    out = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || !std::isfinite(out)) {
      throw Error("bad-checkpoint", "bad parameter value", {{"token", token}});
    }
  }

  std::vector<DenseLayer> layers_;
};

/// A parameter block and its gradient, both contiguous and of equal length.
struct ParamRef {
  std::span<double> value;
  std::span<const double> grad;
};

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// Bias-corrected Adam update applied in place to every block. Moment buffers
/// are created on the first call and must keep their shapes afterwards.
inline void adam_step(AdamState& state, std::span<const ParamRef> params) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const ParamRef& p : params) {
      state.first_moment.emplace_back(p.value.size(), 0.0);
      state.second_moment.emplace_back(p.value.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw Error("shape-error", "parameter block count changed between Adam steps");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].value.size() != params[b].grad.size() ||
        params[b].value.size() != state.first_moment[b].size()) {
      throw Error("shape-error", "parameter and gradient shapes disagree",
                  {{"block", detail::to_detail(b)}});
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    const ParamRef& p = params[b];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

inline std::span<double> as_span(Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<double> as_span(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<const double> as_span(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace pauc
