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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pauc/error.hpp"

namespace pauc {

struct Utterance {
  std::string id;
  std::size_t speaker = 0;
  Eigen::VectorXd features;
};

/// Labeled feature vectors. Speaker indices are dense in [0, num_speakers);
/// `speaker_names[u]` is the external id of speaker u.
struct Dataset {
  std::vector<Utterance> utterances;
  std::vector<std::string> speaker_names;

  std::size_t num_speakers() const { return speaker_names.size(); }
  std::size_t size() const { return utterances.size(); }
  Eigen::Index feature_dim() const {
    return utterances.empty() ? 0 : utterances.front().features.size();
  }

  /// Utterance indices grouped by speaker.
  std::vector<std::vector<std::size_t>> by_speaker() const {
    std::vector<std::vector<std::size_t>> groups(num_speakers());
    for (std::size_t i = 0; i < utterances.size(); ++i) {
      groups[utterances[i].speaker].push_back(i);
    }
    return groups;
  }

  void validate() const {
    const Eigen::Index dim = feature_dim();
    for (const Utterance& u : utterances) {
      if (u.speaker >= num_speakers()) {
        throw Error("bad-dataset", "speaker index out of range",
                    {{"utt_id", u.id}, {"speaker", detail::to_detail(u.speaker)}});
      }
      if (u.features.size() != dim) {
        throw Error("shape-error", "inconsistent feature dimension",
                    {{"utt_id", u.id}});
      }
    }
  }
};

enum class TrialLabel { kNontarget = 0, kTarget = 1 };

struct Trial {
  std::string enroll_id;
  std::string test_id;
  TrialLabel label;
};

using TrialList = std::vector<Trial>;

}  // namespace pauc
