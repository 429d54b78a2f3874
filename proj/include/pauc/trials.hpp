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
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pauc/dataset.hpp"
#include "pauc/error.hpp"
#include "pauc/random.hpp"

namespace pauc {

/// One side of a training trial: an utterance (index into the dataset) or a
/// speaker center (index into SpeakerCenters).
struct EmbeddingRef {
  enum class Kind { kUtterance, kCenter };
  Kind kind;
  std::size_t index;

  static EmbeddingRef utterance(std::size_t i) { return {Kind::kUtterance, i}; }
  static EmbeddingRef center(std::size_t u) { return {Kind::kCenter, u}; }

  bool operator==(const EmbeddingRef&) const = default;
};

struct TrialPair {
  EmbeddingRef left;
  EmbeddingRef right;
  bool target;
};

struct TrialBatch {
  std::vector<TrialPair> pairs;
  /// Distinct utterances referenced by `pairs`, in first-use order.
  std::vector<std::size_t> utterances;

  std::size_t num_targets() const {
    return static_cast<std::size_t>(std::count_if(
        pairs.begin(), pairs.end(), [](const TrialPair& p) { return p.target; }));
  }
};

/// Trainable per-speaker vectors in embedding space, one column per speaker.
struct SpeakerCenters {
  Eigen::MatrixXd vectors;  // embed_dim x num_speakers

  std::size_t size() const { return static_cast<std::size_t>(vectors.cols()); }
};

/// Unit-norm centers drawn from a spherical Gaussian.
inline SpeakerCenters init_centers(std::size_t num_speakers, std::size_t embed_dim,
                                   Rng& rng) {
  if (num_speakers == 0 || embed_dim == 0) {
    throw Error("bad-argument", "centers need U >= 1 and E >= 1");
  }
  SpeakerCenters c;
  c.vectors.resize(static_cast<Eigen::Index>(embed_dim),
                   static_cast<Eigen::Index>(num_speakers));
  for (Eigen::Index u = 0; u < c.vectors.cols(); ++u) {
    auto col = c.vectors.col(u);
    do {
      for (Eigen::Index e = 0; e < col.size(); ++e) col(e) = rng.normal();
    } while (col.squaredNorm() == 0.0);
    col.normalize();
  }
  return c;
}

/// Random-sampling construction: t distinct speakers, two distinct utterances
/// each, all C(2t, 2) unordered pairs of the 2t utterances. Speakers with
/// fewer than two utterances are never drawn.
inline TrialBatch random_sampling_batch(const Dataset& dataset, std::size_t t,
                                        Rng& rng) {
  if (t < 2) {
    throw Error("degenerate-batch", "random sampling needs t >= 2 to form impostor trials",
                {{"t", detail::to_detail(t)}});
  }
  if (t > dataset.num_speakers()) {
    throw Error("not-enough-speakers", "t exceeds the number of speakers",
                {{"t", detail::to_detail(t)},
                 {"U", detail::to_detail(dataset.num_speakers())}});
  }
  const auto groups = dataset.by_speaker();
  std::vector<std::size_t> eligible;
  for (std::size_t u = 0; u < groups.size(); ++u) {
    if (groups[u].size() >= 2) eligible.push_back(u);
  }
  if (eligible.size() < t) {
    throw Error("not-enough-utterances", "too few speakers with two or more utterances",
                {{"t", detail::to_detail(t)},
                 {"eligible", detail::to_detail(eligible.size())}});
  }

  TrialBatch batch;
  std::vector<std::size_t> speakers;
  for (std::size_t pick : rng.sample_without_replacement(eligible.size(), t)) {
    const auto& utts = groups[eligible[pick]];
    for (std::size_t v : rng.sample_without_replacement(utts.size(), 2)) {
      batch.utterances.push_back(utts[v]);
      speakers.push_back(eligible[pick]);
    }
  }
  const std::size_t n = batch.utterances.size();
  batch.pairs.reserve(n * (n - 1) / 2);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      batch.pairs.push_back({EmbeddingRef::utterance(batch.utterances[a]),
                             EmbeddingRef::utterance(batch.utterances[b]),
                             speakers[a] == speakers[b]});
    }
  }
  return batch;
}

/// Pairs each given utterance with every speaker center.
inline TrialBatch class_center_batch_for(const Dataset& dataset,
                                         std::span<const std::size_t> utterances) {
  const std::size_t num_speakers = dataset.num_speakers();
  if (num_speakers < 2) {
    throw Error("not-enough-speakers", "class-center trials need U >= 2",
                {{"U", detail::to_detail(num_speakers)}});
  }
  if (utterances.empty()) {
    throw Error("bad-argument", "class-center batch needs t1 >= 1");
  }
  TrialBatch batch;
  batch.utterances.assign(utterances.begin(), utterances.end());
  batch.pairs.reserve(utterances.size() * num_speakers);
  for (std::size_t i : utterances) {
    if (i >= dataset.size()) {
      throw Error("bad-argument", "utterance index out of range",
                  {{"index", detail::to_detail(i)}});
    }
    for (std::size_t u = 0; u < num_speakers; ++u) {
      batch.pairs.push_back({EmbeddingRef::utterance(i), EmbeddingRef::center(u),
                             dataset.utterances[i].speaker == u});
    }
  }
  return batch;
}

/// Class-center construction: t1 utterances drawn without replacement, each
/// paired with all U centers.
inline TrialBatch class_center_batch(const Dataset& dataset, std::size_t t1, Rng& rng) {
  if (dataset.num_speakers() < 2) {
    throw Error("not-enough-speakers", "class-center trials need U >= 2",
                {{"U", detail::to_detail(dataset.num_speakers())}});
  }
  if (t1 == 0 || t1 > dataset.size()) {
    throw Error("not-enough-utterances", "t1 must be in [1, number of utterances]",
                {{"t1", detail::to_detail(t1)},
                 {"utterances", detail::to_detail(dataset.size())}});
  }
  const auto picks = rng.sample_without_replacement(dataset.size(), t1);
  return class_center_batch_for(dataset, picks);
}

/// Shuffled partition of [0, n) into consecutive chunks of `chunk` indices;
/// the final chunk may be shorter. Every index appears exactly once.
inline std::vector<std::vector<std::size_t>> epoch_chunks(std::size_t n, std::size_t chunk,
                                                          Rng& rng) {
  if (chunk == 0) throw Error("bad-argument", "chunk size must be positive");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> chunks;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t stop = std::min(n, start + chunk);
    chunks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return chunks;
}

}  // namespace pauc
