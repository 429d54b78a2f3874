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
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pauc/dataset.hpp"
#include "pauc/error.hpp"
#include "pauc/random.hpp"

namespace pauc {

/// Gaussian speaker-cluster generator settings.
struct SynthSpec {
  std::size_t num_speakers = 20;
  std::size_t utts_per_speaker = 20;
  std::size_t feature_dim = 20;
  double between_speaker_std = 1.0;
  double within_speaker_std = 1.0;
  /// Fraction of speakers whose mean is re-drawn close to another speaker's.
  double impostor_hardness = 0.0;
  /// Distance of a hard speaker from its anchor, in units of within_speaker_std
  /// per dimension.
  double hard_offset = 1.0;
  /// Optional session (channel) variability: each utterance is shifted by a
  /// Gaussian draw of this std inside a fixed random subspace of this rank.
  /// Raw cosine scoring suffers from it; a trained embedder can project it
  /// out. Rank 0 disables it.
  std::size_t session_rank = 0;
  double session_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_speakers < 1 || utts_per_speaker < 1 || feature_dim < 1) {
      throw Error("bad-synth-spec", "counts must be >= 1");
    }
    if (!(between_speaker_std > 0.0) || !(within_speaker_std > 0.0) || !(hard_offset > 0.0)) {
      throw Error("bad-synth-spec", "standard deviations must be positive");
    }
    if (!(impostor_hardness >= 0.0 && impostor_hardness <= 1.0)) {
      throw Error("bad-synth-spec", "impostor_hardness must be in [0, 1]");
    }
    if (session_rank > feature_dim || !(session_std >= 0.0)) {
      throw Error("bad-synth-spec", "session subspace must fit the feature dim with std >= 0");
    }
  }
};

inline std::string speaker_name(std::size_t u) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%04zu", u);
  return buf;
}

inline std::string utterance_name(std::size_t u, std::size_t v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "spk%04zu-utt%04zu", u, v);
  return buf;
}

inline Dataset generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto dim = static_cast<Eigen::Index>(spec.feature_dim);
  const std::size_t num_speakers = spec.num_speakers;

  auto gaussian = [&](double stddev) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = stddev * rng.normal();
    return v;
  };

  std::vector<Eigen::VectorXd> means;
  means.reserve(num_speakers);
  for (std::size_t u = 0; u < num_speakers; ++u) means.push_back(gaussian(spec.between_speaker_std));

  // Confusable speakers: re-centre a subset next to anchors drawn from the
  // remaining speakers.
  const auto num_hard = static_cast<std::size_t>(
      std::llround(spec.impostor_hardness * static_cast<double>(num_speakers)));
  if (num_hard > 0 && num_speakers > 1) {
    const auto hard = rng.sample_without_replacement(num_speakers, std::min(num_hard, num_speakers - 1));
    std::vector<bool> is_hard(num_speakers, false);
    for (std::size_t u : hard) is_hard[u] = true;
    std::vector<std::size_t> anchors;
    for (std::size_t u = 0; u < num_speakers; ++u) {
      if (!is_hard[u]) anchors.push_back(u);
    }
    for (std::size_t u : hard) {
      const std::size_t anchor = anchors[rng.index(anchors.size())];
      means[u] = means[anchor] + gaussian(spec.hard_offset * spec.within_speaker_std);
    }
  }

  Eigen::MatrixXd session_basis;
  if (spec.session_rank > 0) {
    Eigen::MatrixXd raw(dim, static_cast<Eigen::Index>(spec.session_rank));
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw.col(j) = gaussian(1.0);
    session_basis = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() *
                    Eigen::MatrixXd::Identity(dim, raw.cols());
  }

  Dataset data;
  for (std::size_t u = 0; u < num_speakers; ++u) data.speaker_names.push_back(speaker_name(u));
  data.utterances.reserve(num_speakers * spec.utts_per_speaker);
  for (std::size_t u = 0; u < num_speakers; ++u) {
    for (std::size_t v = 0; v < spec.utts_per_speaker; ++v) {
      Eigen::VectorXd x = means[u] + gaussian(spec.within_speaker_std);
      if (spec.session_rank > 0) {
        Eigen::VectorXd z(session_basis.cols());
        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = spec.session_std * rng.normal();
        x += session_basis * z;
      }
      data.utterances.push_back({utterance_name(u, v), u, std::move(x)});
    }
  }
  return data;
}

/// All unordered pairs (i < j) of the given utterances as a trial list.
inline TrialList all_pairs_trials(const Dataset& data) {
  TrialList trials;
  const std::size_t n = data.size();
  trials.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = data.utterances[i].speaker == data.utterances[j].speaker;
      trials.push_back({data.utterances[i].id, data.utterances[j].id,
                        same ? TrialLabel::kTarget : TrialLabel::kNontarget});
    }
  }
  return trials;
}

struct DataSplit {
  Dataset train;
  Dataset eval;
  TrialList trials;  // all pairs among eval utterances
};

/// Speaker-stratified hold-out: round(fraction * V_u) utterances of each
/// speaker go to the eval side. Both sides keep the full speaker table and
/// the original utterance order.
inline DataSplit split(const Dataset& data, double held_out_fraction, std::uint64_t seed) {
  if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0)) {
    throw Error("split-error", "held-out fraction must be in (0, 1)",
                {{"fraction", detail::to_detail(held_out_fraction)}});
  }
  Rng rng(seed);
  std::vector<bool> held(data.size(), false);
  const auto groups = data.by_speaker();
  for (std::size_t u = 0; u < groups.size(); ++u) {
    const auto& utts = groups[u];
    const auto num_eval = static_cast<std::size_t>(
        std::llround(held_out_fraction * static_cast<double>(utts.size())));
    if (utts.size() - num_eval < 2) {
      throw Error("split-error", "speaker would keep fewer than 2 training utterances",
                  {{"speaker", data.speaker_names[u]},
                   {"utterances", detail::to_detail(utts.size())},
                   {"held_out", detail::to_detail(num_eval)}});
    }
    for (std::size_t pick : rng.sample_without_replacement(utts.size(), num_eval)) {
      held[utts[pick]] = true;
    }
  }
  DataSplit out;
  out.train.speaker_names = data.speaker_names;
  out.eval.speaker_names = data.speaker_names;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (held[i] ? out.eval : out.train).utterances.push_back(data.utterances[i]);
  }
  out.trials = all_pairs_trials(out.eval);
  return out;
}

}  // namespace pauc
