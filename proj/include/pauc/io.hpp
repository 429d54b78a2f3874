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

// File formats:
//   features    CSV, header `utt_id,speaker_id,f0,...,f{D-1}`
//   embeddings  CSV, header `utt_id,e0,...,e{E-1}`
//   centers     CSV, header `speaker_id,c0,...,c{E-1}`
//   trials      whitespace separated `enroll_id test_id target|nontarget`
//   scores      `enroll_id test_id score`
//   report      JSON object with the MetricsReport fields
//   det         CSV `fpr,fnr,probit_fpr,probit_fnr`
// Reals are written with at most 17 significant digits and round-trip exactly.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "pauc/backend.hpp"
#include "pauc/dataset.hpp"
#include "pauc/error.hpp"
#include "pauc/metrics.hpp"
#include "pauc/trials.hpp"

namespace pauc::io {

// Shortest of %.15g..%.17g that reads back to the same double.
inline std::string format_real(double v) {
  char buf[32];
  for (int precision = 15; precision < 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline double parse_real(const std::string& token, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || !std::isfinite(v)) {
    throw Error("parse-error", "expected a finite real number",
                {{"token", token}, {"line", pauc::detail::to_detail(line_no)}});
  }
  return v;
}

inline void expect_header(const std::vector<std::string>& got, std::size_t leading,
                          const std::vector<std::string>& names, const std::string& prefix) {
  bool ok = got.size() > leading;
  for (std::size_t i = 0; ok && i < leading; ++i) ok = got[i] == names[i];
  for (std::size_t i = leading; ok && i < got.size(); ++i) {
    ok = got[i] == prefix + std::to_string(i - leading);
  }
  if (!ok) throw Error("parse-error", "unexpected CSV header", {{"expected_prefix", prefix}});
}

// Rows of `id, v0, ..., vN` after a validated header.
inline std::vector<std::pair<std::vector<std::string>, Eigen::VectorXd>> read_rows(
    std::istream& is, std::size_t leading, const std::vector<std::string>& names,
    const std::string& prefix) {
  std::string line;
  if (!std::getline(is, line)) throw Error("parse-error", "missing CSV header");
  strip_cr(line);
  const auto header = split_csv(line);
  expect_header(header, leading, names, prefix);
  const std::size_t width = header.size();
  std::vector<std::pair<std::vector<std::string>, Eigen::VectorXd>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != width) {
      throw Error("parse-error", "wrong number of CSV fields",
                  {{"line", pauc::detail::to_detail(line_no)}});
    }
    std::vector<std::string> keys(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(leading));
    Eigen::VectorXd values(static_cast<Eigen::Index>(width - leading));
    for (std::size_t i = leading; i < width; ++i) {
      values(static_cast<Eigen::Index>(i - leading)) = parse_real(fields[i], line_no);
    }
    rows.emplace_back(std::move(keys), std::move(values));
  }
  return rows;
}

inline void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_real(v(i));
  os << '\n';
}

inline void write_header(std::ostream& os, const std::string& lead, const std::string& prefix,
                         Eigen::Index count) {
  os << lead;
  for (Eigen::Index i = 0; i < count; ++i) os << ',' << prefix << i;
  os << '\n';
}

}  // namespace detail

inline void write_features(std::ostream& os, const Dataset& data) {
  detail::write_header(os, "utt_id,speaker_id", "f", data.feature_dim());
  for (const Utterance& u : data.utterances) {
    os << u.id << ',' << data.speaker_names[u.speaker];
    detail::write_vector(os, u.features);
  }
}

/// Speakers are indexed in sorted order of their ids.
inline Dataset read_features(std::istream& is) {
  const auto rows = detail::read_rows(is, 2, {"utt_id", "speaker_id"}, "f");
  std::set<std::string> names;
  for (const auto& r : rows) names.insert(r.first[1]);
  Dataset data;
  data.speaker_names.assign(names.begin(), names.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t u = 0; u < data.speaker_names.size(); ++u) index[data.speaker_names[u]] = u;
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (!seen.insert(r.first[0]).second) {
      throw Error("parse-error", "duplicate utterance id", {{"utt_id", r.first[0]}});
    }
    data.utterances.push_back({r.first[0], index[r.first[1]], r.second});
  }
  return data;
}

inline void write_embeddings(std::ostream& os, const EmbeddingTable& table) {
  const Eigen::Index dim = table.size() == 0 ? 0 : table.rows().front().size();
  detail::write_header(os, "utt_id", "e", dim);
  for (std::size_t i = 0; i < table.size(); ++i) {
    os << table.ids()[i];
    detail::write_vector(os, table.rows()[i]);
  }
}

inline EmbeddingTable read_embeddings(std::istream& is) {
  EmbeddingTable table;
  for (auto& r : detail::read_rows(is, 1, {"utt_id"}, "e")) table.add(r.first[0], std::move(r.second));
  return table;
}

inline void write_centers(std::ostream& os, const SpeakerCenters& centers,
                          const std::vector<std::string>& speaker_names) {
  detail::write_header(os, "speaker_id", "c", centers.vectors.rows());
  for (std::size_t u = 0; u < centers.size(); ++u) {
    os << speaker_names.at(u);
    detail::write_vector(os, centers.vectors.col(static_cast<Eigen::Index>(u)));
  }
}

inline void write_trials(std::ostream& os, const TrialList& trials) {
  for (const Trial& t : trials) {
    os << t.enroll_id << ' ' << t.test_id << ' '
       << (t.label == TrialLabel::kTarget ? "target" : "nontarget") << '\n';
  }
}

inline TrialList read_trials(std::istream& is) {
  TrialList trials;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string enroll, test, label, extra;
    if (!(ls >> enroll)) continue;
    if (!(ls >> test >> label) || (ls >> extra)) {
      throw Error("parse-error", "trial lines need exactly three fields",
                  {{"line", pauc::detail::to_detail(line_no)}});
    }
    TrialLabel l;
    if (label == "target") {
      l = TrialLabel::kTarget;
    } else if (label == "nontarget") {
      l = TrialLabel::kNontarget;
    } else {
      throw Error("parse-error", "label must be target or nontarget",
                  {{"label", label}, {"line", pauc::detail::to_detail(line_no)}});
    }
    if (!seen.emplace(enroll, test).second) {
      throw Error("duplicate-trial", "repeated (enroll, test) row",
                  {{"enroll_id", enroll}, {"test_id", test}});
    }
    trials.push_back({enroll, test, l});
  }
  return trials;
}

inline void write_scores(std::ostream& os, const std::vector<ScoredTrial>& scored) {
  for (const ScoredTrial& s : scored) {
    os << s.trial.enroll_id << ' ' << s.trial.test_id << ' ' << format_real(s.score) << '\n';
  }
}

struct ScoreLine {
  std::string enroll_id;
  std::string test_id;
  double score;
};

inline std::vector<ScoreLine> read_scores(std::istream& is) {
  std::vector<ScoreLine> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string enroll, test, value, extra;
    if (!(ls >> enroll)) continue;
    if (!(ls >> test >> value) || (ls >> extra)) {
      throw Error("parse-error", "score lines need exactly three fields",
                  {{"line", pauc::detail::to_detail(line_no)}});
    }
    out.push_back({enroll, test, detail::parse_real(value, line_no)});
  }
  return out;
}

/// Attaches trial labels to scores; every trial must have a score.
inline std::vector<ScoredTrial> join_scores(const std::vector<ScoreLine>& scores,
                                            const TrialList& trials) {
  std::map<std::pair<std::string, std::string>, double> lookup;
  for (const ScoreLine& s : scores) lookup[{s.enroll_id, s.test_id}] = s.score;
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (const Trial& t : trials) {
    const auto it = lookup.find({t.enroll_id, t.test_id});
    if (it == lookup.end()) {
      throw Error("missing-score", "trial has no score",
                  {{"enroll_id", t.enroll_id}, {"test_id", t.test_id}});
    }
    out.push_back({t, it->second});
  }
  return out;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["eer"] = r.eer;
  j["dcf_1e2"] = r.dcf_1e2;
  j["dcf_1e3"] = r.dcf_1e3;
  j["pauc"] = r.pauc;
  j["auc"] = r.auc;
  j["num_target"] = r.num_target;
  j["num_nontarget"] = r.num_nontarget;
  return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.eer = j.at("eer").get<double>();
  r.dcf_1e2 = j.at("dcf_1e2").get<double>();
  r.dcf_1e3 = j.at("dcf_1e3").get<double>();
  r.pauc = j.at("pauc").get<double>();
  r.auc = j.at("auc").get<double>();
  r.num_target = j.at("num_target").get<std::size_t>();
  r.num_nontarget = j.at("num_nontarget").get<std::size_t>();
  return r;
}

inline void write_det(std::ostream& os, const std::vector<DetPoint>& points) {
  os << "fpr,fnr,probit_fpr,probit_fnr\n";
  for (const DetPoint& p : points) {
    os << format_real(p.fpr) << ',' << format_real(p.fnr) << ',' << format_real(p.probit_fpr)
       << ',' << format_real(p.probit_fnr) << '\n';
  }
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("io-error", "cannot open file for reading", {{"path", path}});
  return is;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("io-error", "cannot open file for writing", {{"path", path}});
  return os;
}

}  // namespace pauc::io
