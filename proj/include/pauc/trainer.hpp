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
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pauc/backend.hpp"
#include "pauc/dataset.hpp"
#include "pauc/error.hpp"
#include "pauc/loss.hpp"
#include "pauc/mlp.hpp"
#include "pauc/random.hpp"
#include "pauc/synth.hpp"
#include "pauc/trials.hpp"

namespace pauc {

enum class LossKind { kPaucR, kPaucL, kAucL, kSoftmax, kTriplet };

inline std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kPaucR: return "pauc_r";
    case LossKind::kPaucL: return "pauc_l";
    case LossKind::kAucL: return "auc_l";
    case LossKind::kSoftmax: return "softmax";
    case LossKind::kTriplet: return "triplet";
  }
  return "unknown";
}

inline LossKind parse_loss_kind(const std::string& name) {
  for (LossKind k : {LossKind::kPaucR, LossKind::kPaucL, LossKind::kAucL,
                     LossKind::kSoftmax, LossKind::kTriplet}) {
    if (to_string(k) == name) return k;
  }
  throw Error("bad-loss", "unknown loss kind", {{"loss", name}});
}

/// Random-sampling kinds draw t speakers per batch; the others draw t1
/// utterances.
inline bool uses_random_sampling(LossKind kind) {
  return kind == LossKind::kPaucR || kind == LossKind::kTriplet;
}

inline bool uses_centers(LossKind kind) {
  return kind == LossKind::kPaucL || kind == LossKind::kAucL;
}

/// What a batch is scored against. For auc_l the FPR window is forced to
/// [0, 1]; `delta` doubles as the triplet margin sigma.
struct Objective {
  LossKind kind = LossKind::kPaucL;
  double alpha = 0.0;
  double beta = 0.01;
  double delta = 0.4;

  PaucConfig pauc() const {
    return kind == LossKind::kAucL ? PaucConfig::auc(delta) : PaucConfig(alpha, beta, delta);
  }
};

struct TrainConfig {
  Objective objective;
  /// t for pauc_r / triplet, t1 otherwise.
  std::size_t batch = 128;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t embed_dim = 32;
  double learning_rate = 0.001;
  double held_out_fraction = 0.2;
  ReportOptions report;
};

/// Everything a training run updates.
struct TrainState {
  Mlp model;
  std::optional<SpeakerCenters> centers;
  std::optional<DenseLayer> classifier;  // softmax output layer, U x E
};

struct BatchEval {
  double loss = 0.0;
  /// N0 as indices into the batch's negative-trial list (pAUC kinds only).
  std::vector<std::size_t> selected;
  /// Smallest |delta - (s_i - s_k)| over P x N0 (pAUC kinds) or
  /// |sigma - (s_ap - s_an)| over triplets.
  double min_kink_distance = std::numeric_limits<double>::infinity();
  MlpGradients model_grad;
  Eigen::MatrixXd center_grad;
  DenseLayer classifier_grad;
};

namespace detail {

inline std::unordered_map<std::size_t, Eigen::Index> column_lookup(const TrialBatch& batch) {
  std::unordered_map<std::size_t, Eigen::Index> col;
  for (std::size_t c = 0; c < batch.utterances.size(); ++c) {
    col.emplace(batch.utterances[c], static_cast<Eigen::Index>(c));
  }
  return col;
}

// Unit-normalized copies of the embedding columns and their norms.
struct NormalizedColumns {
  Eigen::MatrixXd unit;
  Eigen::VectorXd norm;

  explicit NormalizedColumns(const Eigen::MatrixXd& m) : unit(m), norm(m.cols()) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      norm(c) = m.col(c).norm();
      if (!(norm(c) > 0.0)) {
        throw Error("zero-vector", "embedding with zero norm", {{"column", to_detail(c)}});
      }
      unit.col(c) /= norm(c);
    }
  }
};

// Scores for every pair of the batch with dL/ds pushed back into the
// utterance embeddings and centers. Uses the cosine derivative in the form
// ds/dx = (y/|y| - s x/|x|) / |x|.
inline double pairwise_pauc(const TrainState& state, const TrialBatch& batch,
                            const Objective& objective, const Eigen::MatrixXd& emb,
                            const std::vector<std::size_t>* frozen, BatchEval& out,
                            Eigen::MatrixXd& grad_emb) {
  const auto col = column_lookup(batch);
  const NormalizedColumns utt(emb);
  std::optional<NormalizedColumns> ctr;
  if (state.centers) ctr.emplace(state.centers->vectors);

  struct Side {
    const NormalizedColumns* table;
    Eigen::MatrixXd* grad;
    Eigen::Index index;
  };
  auto side = [&](const EmbeddingRef& r) -> Side {
    if (r.kind == EmbeddingRef::Kind::kCenter) {
      if (!ctr) throw Error("bad-state", "center trial without centers");
      return {&*ctr, &out.center_grad, static_cast<Eigen::Index>(r.index)};
    }
    return {&utt, &grad_emb, col.at(r.index)};
  };

  std::vector<double> pos, neg;
  std::vector<std::size_t> pos_pair, neg_pair;
  for (std::size_t p = 0; p < batch.pairs.size(); ++p) {
    const Side a = side(batch.pairs[p].left);
    const Side b = side(batch.pairs[p].right);
    const double s = a.table->unit.col(a.index).dot(b.table->unit.col(b.index));
    if (batch.pairs[p].target) {
      pos.push_back(s);
      pos_pair.push_back(p);
    } else {
      neg.push_back(s);
      neg_pair.push_back(p);
    }
  }
  if (pos.empty() || neg.empty()) {
    throw Error("empty-class", "training batch lacks target or impostor trials");
  }
  const PaucConfig cfg = objective.pauc();
  if (frozen != nullptr) {
    out.selected = *frozen;
  } else {
    out.selected = select_hard_negatives(neg, cfg.alpha(), cfg.beta()).indices;
  }
  std::vector<double> hard;
  hard.reserve(out.selected.size());
  for (std::size_t k : out.selected) hard.push_back(neg.at(k));

  for (double si : pos) {
    for (double sk : hard) {
      out.min_kink_distance = std::min(out.min_kink_distance, std::abs(cfg.delta() - (si - sk)));
    }
  }

  const LossOutput loss = pauc_loss(pos, hard, cfg.delta());

  auto push = [&](std::size_t pair_index, double score, double g) {
    if (g == 0.0) return;
    const Side a = side(batch.pairs[pair_index].left);
    const Side b = side(batch.pairs[pair_index].right);
    const auto ua = a.table->unit.col(a.index);
    const auto ub = b.table->unit.col(b.index);
    a.grad->col(a.index) += (g / a.table->norm(a.index)) * (ub - score * ua);
    b.grad->col(b.index) += (g / b.table->norm(b.index)) * (ua - score * ub);
  };
  if (state.centers) {
    out.center_grad = Eigen::MatrixXd::Zero(state.centers->vectors.rows(), state.centers->vectors.cols());
  }
  for (std::size_t i = 0; i < pos.size(); ++i) push(pos_pair[i], pos[i], loss.grad_pos[i]);
  for (std::size_t k = 0; k < hard.size(); ++k) {
    push(neg_pair[out.selected[k]], hard[k], loss.grad_neg_selected[k]);
  }
  return loss.value;
}

// Each target pair (a, p) of a random-sampling batch against every batch
// utterance n of another speaker, anchored on a.
inline double triplet_objective(const Dataset& data, const TrialBatch& batch,
                                const Objective& objective, const Eigen::MatrixXd& emb,
                                BatchEval& out, Eigen::MatrixXd& grad_emb) {
  const auto col = column_lookup(batch);
  std::size_t count = 0;
  double total = 0.0;
  struct Term {
    Eigen::Index a, p, n;
  };
  std::vector<Term> active;
  for (const TrialPair& pr : batch.pairs) {
    if (!pr.target) continue;
    const Eigen::Index a = col.at(pr.left.index);
    const Eigen::Index p = col.at(pr.right.index);
    const std::size_t speaker = data.utterances[pr.left.index].speaker;
    const double s_ap = cosine_sim(emb.col(a), emb.col(p));
    for (std::size_t c = 0; c < batch.utterances.size(); ++c) {
      if (data.utterances[batch.utterances[c]].speaker == speaker) continue;
      const auto n = static_cast<Eigen::Index>(c);
      const double s_an = cosine_sim(emb.col(a), emb.col(n));
      out.min_kink_distance = std::min(out.min_kink_distance, std::abs(objective.delta - (s_ap - s_an)));
      const TripletOutput t = triplet_loss(s_ap, s_an, objective.delta);
      total += t.value;
      ++count;
      if (t.value > 0.0) active.push_back({a, p, n});
    }
  }
  if (count == 0) throw Error("empty-class", "triplet batch has no impostors");
  const double scale = 1.0 / static_cast<double>(count);
  for (const Term& t : active) {
    const CosineGrad ap = cosine_sim_grad(emb.col(t.a), emb.col(t.p));
    const CosineGrad an = cosine_sim_grad(emb.col(t.a), emb.col(t.n));
    grad_emb.col(t.a) += scale * (an.ds_dx - ap.ds_dx);
    grad_emb.col(t.p) -= scale * ap.ds_dy;
    grad_emb.col(t.n) += scale * an.ds_dy;
  }
  return total * scale;
}

inline double softmax_objective(const TrainState& state, const Dataset& data,
                                const TrialBatch& batch, const Eigen::MatrixXd& emb,
                                BatchEval& out, Eigen::MatrixXd& grad_emb) {
  const DenseLayer& head = *state.classifier;
  Eigen::MatrixXd logits = head.weight * emb;
  logits.colwise() += head.bias;
  std::vector<std::size_t> labels;
  for (std::size_t i : batch.utterances) labels.push_back(data.utterances[i].speaker);
  const SoftmaxOutput sm = softmax_ce_loss(logits, labels);
  out.classifier_grad.weight = sm.grad_logits * emb.transpose();
  out.classifier_grad.bias = sm.grad_logits.rowwise().sum();
  grad_emb = head.weight.transpose() * sm.grad_logits;
  return sm.value;
}

}  // namespace detail

/// Loss and exact gradients for one batch. With `frozen_selection` the N0
/// membership is taken as given instead of re-ranked.
inline BatchEval evaluate_batch(const TrainState& state, const Dataset& data,
                                const TrialBatch& batch, const Objective& objective,
                                const std::vector<std::size_t>* frozen_selection = nullptr) {
  BatchEval out;
  const Eigen::MatrixXd x = feature_matrix(data, batch.utterances);
  ForwardCache cache;
  const Eigen::MatrixXd emb = state.model.forward(x, cache);
  Eigen::MatrixXd grad_emb = Eigen::MatrixXd::Zero(emb.rows(), emb.cols());

  switch (objective.kind) {
    case LossKind::kPaucL:
    case LossKind::kAucL:
      if (!state.centers) throw Error("bad-state", "class-center loss without centers");
      out.loss = detail::pairwise_pauc(state, batch, objective, emb, frozen_selection, out, grad_emb);
      break;
    case LossKind::kPaucR:
      out.loss = detail::pairwise_pauc(state, batch, objective, emb, frozen_selection, out, grad_emb);
      break;
    case LossKind::kTriplet:
      out.loss = detail::triplet_objective(data, batch, objective, emb, out, grad_emb);
      break;
    case LossKind::kSoftmax:
      if (!state.classifier) throw Error("bad-state", "softmax loss without a classifier layer");
      out.loss = detail::softmax_objective(state, data, batch, emb, out, grad_emb);
      break;
  }
  out.model_grad = state.model.backward(cache, grad_emb);
  return out;
}

inline TrainState init_state(const TrainConfig& config, std::size_t input_dim,
                             std::size_t num_speakers, Rng& rng) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(config.embed_dim);
  Rng model_rng = rng.fork();
  Rng extra_rng = rng.fork();
  TrainState state{Mlp::random(dims, model_rng), std::nullopt, std::nullopt};
  if (uses_centers(config.objective.kind)) {
    state.centers = init_centers(num_speakers, config.embed_dim, extra_rng);
  } else if (config.objective.kind == LossKind::kSoftmax) {
    std::vector<std::size_t> head_dims{config.embed_dim, num_speakers};
    state.classifier = Mlp::random(head_dims, extra_rng).layers().front();
  }
  return state;
}

inline void apply_adam(AdamState& adam, TrainState& state, BatchEval& grads) {
  std::vector<ParamRef> params;
  auto& layers = state.model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    params.push_back({as_span(layers[l].weight), as_span(grads.model_grad.layers[l].weight)});
    params.push_back({as_span(layers[l].bias), as_span(grads.model_grad.layers[l].bias)});
  }
  if (state.centers) params.push_back({as_span(state.centers->vectors), as_span(grads.center_grad)});
  if (state.classifier) {
    params.push_back({as_span(state.classifier->weight), as_span(grads.classifier_grad.weight)});
    params.push_back({as_span(state.classifier->bias), as_span(grads.classifier_grad.bias)});
  }
  adam_step(adam, params);
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean batch loss
  std::optional<MetricsReport> eval;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> history;
  DataSplit split;
};

/// Held-out metrics with cosine scoring on the split's trial list.
inline MetricsReport evaluate_heldout(const Mlp& model, const DataSplit& split,
                                      const ReportOptions& options) {
  return report(score_trials(embed_all(model, split.eval), split.trials), options);
}

/// Runs the epoch/batch loop on an existing split.
inline TrainResult train_on_split(DataSplit split, const TrainConfig& config) {
  const Objective& objective = config.objective;
  if (objective.kind != LossKind::kSoftmax) objective.pauc();  // validates the window and margin
  if (config.batch == 0) throw Error("bad-argument", "batch size must be positive");
  split.train.validate();
  if (split.train.size() == 0) throw Error("bad-dataset", "empty training set");

  Rng root(config.seed);
  const auto input_dim = static_cast<std::size_t>(split.train.feature_dim());
  const std::size_t num_speakers = split.train.num_speakers();
  TrainResult result{init_state(config, input_dim, num_speakers, root), {}, std::move(split)};
  const Dataset& train = result.split.train;
  Rng batch_rng = root.fork();
  AdamState adam;
  adam.learning_rate = config.learning_rate;
  TrainState& state = result.state;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<TrialBatch> batches;
    if (uses_random_sampling(objective.kind)) {
      const std::size_t per_batch = 2 * config.batch;
      const std::size_t count = std::max<std::size_t>(1, (train.size() + per_batch - 1) / per_batch);
      for (std::size_t b = 0; b < count; ++b) {
        batches.push_back(random_sampling_batch(train, config.batch, batch_rng));
      }
    } else {
      for (const auto& chunk : epoch_chunks(train.size(), config.batch, batch_rng)) {
        batches.push_back(class_center_batch_for(train, chunk));
      }
    }

    double loss_sum = 0.0;
    for (const TrialBatch& batch : batches) {
      BatchEval eval = evaluate_batch(state, train, batch, objective);
      if (!std::isfinite(eval.loss)) {
        throw Error("non-finite", "training loss is not finite",
                    {{"epoch", detail::to_detail(epoch)}});
      }
      loss_sum += eval.loss;
      apply_adam(adam, state, eval);
      if (!state.model.all_finite() ||
          (state.centers && !state.centers->vectors.allFinite())) {
        throw Error("non-finite", "parameters became non-finite",
                    {{"epoch", detail::to_detail(epoch)}});
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.loss = loss_sum / static_cast<double>(batches.size());
    if (config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      record.eval = evaluate_heldout(state.model, result.split, config.report);
    }
    result.history.push_back(record);
  }
  return result;
}

/// Splits `data` (seeded by config.seed) and trains.
inline TrainResult train(const Dataset& data, const TrainConfig& config) {
  data.validate();
  return train_on_split(split(data, config.held_out_fraction, config.seed), config);
}

}  // namespace pauc
