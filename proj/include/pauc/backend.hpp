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

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pauc/dataset.hpp"
#include "pauc/error.hpp"
#include "pauc/loss.hpp"
#include "pauc/metrics.hpp"
#include "pauc/mlp.hpp"

namespace pauc {

/// Utterance embeddings in insertion order with id lookup.
class EmbeddingTable {
 public:
  void add(std::string id, Eigen::VectorXd embedding) {
    if (!index_.emplace(id, ids_.size()).second) {
      throw Error("duplicate-id", "embedding id already present", {{"id", id}});
    }
    ids_.push_back(std::move(id));
    rows_.push_back(std::move(embedding));
  }

  const Eigen::VectorXd& at(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw Error("missing-embedding", "no embedding for id", {{"id", id}});
    }
    return rows_[it->second];
  }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<Eigen::VectorXd>& rows() const { return rows_; }

 private:
  std::vector<std::string> ids_;
  std::vector<Eigen::VectorXd> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Stacks the features of `utterances` (indices into `data`) as columns.
inline Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> utterances) {
  Eigen::MatrixXd x(data.feature_dim(), static_cast<Eigen::Index>(utterances.size()));
  for (std::size_t c = 0; c < utterances.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = data.utterances[utterances[c]].features;
  }
  return x;
}

inline Eigen::MatrixXd feature_matrix(const Dataset& data) {
  Eigen::MatrixXd x(data.feature_dim(), static_cast<Eigen::Index>(data.size()));
  for (std::size_t c = 0; c < data.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = data.utterances[c].features;
  }
  return x;
}

inline EmbeddingTable embed_all(const Mlp& model, const Dataset& data) {
  EmbeddingTable table;
  if (data.size() == 0) return table;
  if (data.feature_dim() != model.input_dim()) {
    throw Error("shape-error", "feature dimension does not match the model",
                {{"expected", detail::to_detail(model.input_dim())},
                 {"got", detail::to_detail(data.feature_dim())}});
  }
  const Eigen::MatrixXd emb = model.forward(feature_matrix(data));
  for (std::size_t i = 0; i < data.size(); ++i) {
    table.add(data.utterances[i].id, emb.col(static_cast<Eigen::Index>(i)));
  }
  return table;
}

/// Raw features as embeddings (identity model).
inline EmbeddingTable feature_table(const Dataset& data) {
  EmbeddingTable table;
  for (const Utterance& u : data.utterances) table.add(u.id, u.features);
  return table;
}

struct ScoredTrial {
  Trial trial;
  double score;
};

inline std::vector<ScoredTrial> score_trials(const EmbeddingTable& table, const TrialList& trials) {
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (const Trial& t : trials) {
    out.push_back({t, cosine_sim(table.at(t.enroll_id), table.at(t.test_id))});
  }
  return out;
}

inline LabeledScoreSet to_score_set(const std::vector<ScoredTrial>& scored) {
  LabeledScoreSet set;
  for (const ScoredTrial& s : scored) {
    (s.trial.label == TrialLabel::kTarget ? set.positives : set.negatives).push_back(s.score);
  }
  return set;
}

struct ReportOptions {
  double c_miss = 1.0;
  double c_fa = 1.0;
  double pauc_alpha = 0.0;
  double pauc_beta = 0.1;
};

struct MetricsReport {
  double eer = 0.0;
  double dcf_1e2 = 0.0;
  double dcf_1e3 = 0.0;
  double pauc = 0.0;
  double auc = 0.0;
  std::size_t num_target = 0;
  std::size_t num_nontarget = 0;
};

inline MetricsReport report(const LabeledScoreSet& scores, const ReportOptions& options = {}) {
  MetricsReport r;
  r.eer = eer(scores);
  r.dcf_1e2 = min_dcf(scores, {1e-2, options.c_miss, options.c_fa});
  r.dcf_1e3 = min_dcf(scores, {1e-3, options.c_miss, options.c_fa});
  r.pauc = pauc_empirical(scores, options.pauc_alpha, options.pauc_beta);
  r.auc = auc(scores);
  r.num_target = scores.positives.size();
  r.num_nontarget = scores.negatives.size();
  return r;
}

inline MetricsReport report(const std::vector<ScoredTrial>& scored, const ReportOptions& options = {}) {
  return report(to_score_set(scored), options);
}

}  // namespace pauc
