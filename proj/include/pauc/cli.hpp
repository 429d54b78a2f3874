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

// Command-line driver. Subcommands: gen-data, train, embed, score, report,
// det, sweep. Exit codes: 0 success, 2 configuration/input errors, 3
// degenerate-training errors. Errors are printed to stderr as one JSON object.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pauc/backend.hpp"
#include "pauc/error.hpp"
#include "pauc/io.hpp"
#include "pauc/metrics.hpp"
#include "pauc/mlp.hpp"
#include "pauc/synth.hpp"
#include "pauc/trainer.hpp"

namespace pauc::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDegenerate = 3;

/// Error codes that mark a training configuration as numerically degenerate
/// rather than malformed.
inline bool is_degenerate(const std::string& code) {
  static const std::set<std::string> kCodes{"empty-pauc-window", "non-finite", "zero-vector"};
  return kCodes.count(code) > 0;
}

inline Json error_json(const Error& e) {
  Json j;
  j["error"] = e.code();
  j["message"] = e.what();
  Json details = Json::object();
  for (const auto& [k, v] : e.details()) details[k] = v;
  j["details"] = details;
  return j;
}

namespace detail {

namespace fs = std::filesystem;

// Write to a sibling temp file then rename, so readers never see partial
// output.
inline void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("io-error", "cannot open file for writing", {{"path", tmp.string()}});
    os << content;
    if (!os) throw Error("io-error", "write failed", {{"path", tmp.string()}});
  }
  fs::rename(tmp, path);
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_atomic(path, os.str());
}

inline fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io-error", "cannot create output directory", {{"path", dir}});
  return fs::path(dir);
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct SynthFlags {
  std::size_t speakers = 20;
  std::size_t utts = 20;
  std::size_t dim = 20;
  double between_std = 1.0;
  double within_std = 1.0;
  double hardness = 0.0;
  double hard_offset = 1.0;
  std::size_t session_rank = 0;
  double session_std = 0.0;

  void add(CLI::App* app) {
    app->add_option("--speakers", speakers, "number of speakers U")->capture_default_str();
    app->add_option("--utts", utts, "utterances per speaker V")->capture_default_str();
    app->add_option("--dim", dim, "feature dimension D")->capture_default_str();
    app->add_option("--between-std", between_std, "std of speaker means")->capture_default_str();
    app->add_option("--within-std", within_std, "std of utterances around their mean")->capture_default_str();
    app->add_option("--hardness", hardness, "fraction of speakers placed next to another speaker")
        ->capture_default_str();
    app->add_option("--hard-offset", hard_offset, "distance of hard speakers from their anchor")
        ->capture_default_str();
    app->add_option("--session-rank", session_rank, "rank of the session-variability subspace")
        ->capture_default_str();
    app->add_option("--session-std", session_std, "std of session offsets")->capture_default_str();
  }

  SynthSpec spec(std::uint64_t seed) const {
    SynthSpec s;
    s.num_speakers = speakers;
    s.utts_per_speaker = utts;
    s.feature_dim = dim;
    s.between_speaker_std = between_std;
    s.within_speaker_std = within_std;
    s.impostor_hardness = hardness;
    s.hard_offset = hard_offset;
    s.session_rank = session_rank;
    s.session_std = session_std;
    s.seed = seed;
    return s;
  }

  Json to_json() const {
    Json j;
    j["speakers"] = speakers;
    j["utts"] = utts;
    j["dim"] = dim;
    j["between_std"] = between_std;
    j["within_std"] = within_std;
    j["hardness"] = hardness;
    j["hard_offset"] = hard_offset;
    j["session_rank"] = session_rank;
    j["session_std"] = session_std;
    return j;
  }
};

struct TrainFlags {
  std::string features;
  std::string loss = "pauc_l";
  double alpha = 0.0;
  double beta = 0.01;
  double delta = 0.4;
  std::size_t t = 16;
  std::size_t t1 = 128;
  std::size_t epochs = 50;
  std::size_t eval_every = 1;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t embed_dim = 32;
  double lr = 0.001;
  double held_out = 0.2;
  double report_alpha = 0.0;
  double report_beta = 0.1;

  void add(CLI::App* app, bool with_window) {
    app->add_option("--features", features, "features CSV; synthetic data is generated when omitted");
    app->add_option("--loss", loss, "pauc_r | pauc_l | auc_l | softmax | triplet")->capture_default_str();
    app->add_option("--alpha", alpha, "lower FPR bound of the pAUC window")->capture_default_str();
    if (with_window) {
      app->add_option("--beta", beta, "upper FPR bound of the pAUC window")->capture_default_str();
      app->add_option("--delta", delta, "squared-hinge margin (triplet: sigma)")->capture_default_str();
    }
    app->add_option("--t", t, "speakers per random-sampling batch (pauc_r, triplet)")->capture_default_str();
    app->add_option("--t1", t1, "utterances per class-center / softmax batch")->capture_default_str();
    app->add_option("--epochs", epochs)->capture_default_str();
    app->add_option("--eval-every", eval_every, "held-out evaluation cadence in epochs")->capture_default_str();
    app->add_option("--hidden", hidden, "hidden layer widths")->delimiter(',')->capture_default_str();
    app->add_option("--embed-dim", embed_dim)->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--held-out", held_out, "fraction of each speaker held out for evaluation")
        ->capture_default_str();
    app->add_option("--report-alpha", report_alpha, "pAUC window of the metrics report")->capture_default_str();
    app->add_option("--report-beta", report_beta)->capture_default_str();
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.objective.kind = parse_loss_kind(loss);
    c.objective.alpha = alpha;
    c.objective.beta = beta;
    c.objective.delta = delta;
    c.batch = uses_random_sampling(c.objective.kind) ? t : t1;
    c.epochs = epochs;
    c.seed = seed;
    c.eval_every = eval_every;
    c.hidden = hidden;
    c.embed_dim = embed_dim;
    c.learning_rate = lr;
    c.held_out_fraction = held_out;
    c.report.pauc_alpha = report_alpha;
    c.report.pauc_beta = report_beta;
    return c;
  }

  Json to_json(bool with_window) const {
    Json j;
    j["features"] = features;
    j["loss"] = loss;
    j["alpha"] = alpha;
    if (with_window) {
      j["beta"] = beta;
      j["delta"] = delta;
    }
    j["t"] = t;
    j["t1"] = t1;
    j["epochs"] = epochs;
    j["eval_every"] = eval_every;
    j["hidden"] = hidden;
    j["embed_dim"] = embed_dim;
    j["lr"] = lr;
    j["held_out"] = held_out;
    j["report_alpha"] = report_alpha;
    j["report_beta"] = report_beta;
    return j;
  }
};

struct ReportFlags {
  double alpha = 0.0;
  double beta = 0.1;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "pAUC window lower bound")->capture_default_str();
    app->add_option("--beta", beta, "pAUC window upper bound")->capture_default_str();
    app->add_option("--c-miss", c_miss)->capture_default_str();
    app->add_option("--c-fa", c_fa)->capture_default_str();
  }

  ReportOptions options() const { return {c_miss, c_fa, alpha, beta}; }

  Json to_json() const {
    Json j;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["c_miss"] = c_miss;
    j["c_fa"] = c_fa;
    return j;
  }
};

inline Dataset load_or_generate(const TrainFlags& train, const SynthFlags& synth, std::uint64_t seed) {
  if (!train.features.empty()) {
    auto is = io::open_in(train.features);
    return io::read_features(is);
  }
  return generate(synth.spec(seed));
}

inline Json history_json(const std::vector<EpochRecord>& history) {
  Json rows = Json::array();
  for (const EpochRecord& r : history) {
    Json row;
    row["epoch"] = r.epoch;
    row["loss"] = r.loss;
    if (r.eval) row["eval"] = io::to_json(*r.eval);
    rows.push_back(row);
  }
  return rows;
}

inline void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,loss,eer,dcf_1e2,dcf_1e3,pauc,auc\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << ',' << io::format_real(r.loss);
    if (r.eval) {
      os << ',' << io::format_real(r.eval->eer) << ',' << io::format_real(r.eval->dcf_1e2) << ','
         << io::format_real(r.eval->dcf_1e3) << ',' << io::format_real(r.eval->pauc) << ','
         << io::format_real(r.eval->auc);
    } else {
      os << ",,,,,";
    }
    os << '\n';
  }
}

inline std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') {
      throw Error("bad-argument", "expected a comma-separated list of numbers",
                  {{"option", what}, {"token", item}});
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error("bad-argument", "empty list", {{"option", what}});
  return out;
}

inline std::vector<ScoredTrial> load_scored(const std::string& scores, const std::string& trials) {
  auto ss = io::open_in(scores);
  auto ts = io::open_in(trials);
  return io::join_scores(io::read_scores(ss), io::read_trials(ts));
}

}  // namespace detail

/// Runs the CLI; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  using detail::fs::path;
  CLI::App app{"pAUC embedding training and verification metrics"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--out-dir", out_dir, "directory for output artifacts")->capture_default_str();

  detail::SynthFlags synth;
  detail::TrainFlags train_flags;
  detail::ReportFlags report_flags;
  std::string model_path, features_path, embeddings_path, trials_path, scores_path;
  std::string betas_text = "0.001,0.01,0.1", deltas_text = "0.0,0.4,0.8,1.2,1.6";
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* gen = app.add_subcommand("gen-data", "write a synthetic features CSV");
  synth.add(gen);

  auto* train_cmd = app.add_subcommand("train", "train an embedder and evaluate it on held-out trials");
  train_flags.add(train_cmd, true);
  synth.add(train_cmd);

  auto* embed_cmd = app.add_subcommand("embed", "embed a features CSV with a trained model");
  embed_cmd->add_option("--model", model_path, "model checkpoint")->required();
  embed_cmd->add_option("--features", features_path, "features CSV")->required();

  auto* score_cmd = app.add_subcommand("score", "cosine-score a trial list");
  score_cmd->add_option("--embeddings", embeddings_path, "embeddings CSV")->required();
  score_cmd->add_option("--trials", trials_path, "trial list")->required();

  auto* report_cmd = app.add_subcommand("report", "metrics report for scored trials");
  report_cmd->add_option("--scores", scores_path, "scores file")->required();
  report_cmd->add_option("--trials", trials_path, "trial list")->required();
  report_flags.add(report_cmd);

  auto* det_cmd = app.add_subcommand("det", "DET curve points for scored trials");
  det_cmd->add_option("--scores", scores_path, "scores file")->required();
  det_cmd->add_option("--trials", trials_path, "trial list")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "grid of held-out EER over (beta, delta)");
  train_flags.add(sweep_cmd, false);
  synth.add(sweep_cmd);
  sweep_cmd->add_option("--betas", betas_text, "comma-separated beta values")->capture_default_str();
  sweep_cmd->add_option("--deltas", deltas_text, "comma-separated delta values")->capture_default_str();
  sweep_cmd->add_option("--jobs", jobs, "parallel cells")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    Json j;
    j["error"] = "bad-arguments";
    j["message"] = e.what();
    err << j.dump() << '\n';
    return kExitConfig;
  }

  // Phase marks whether an error came from training (exit 3 when degenerate).
  bool in_training = false;
  try {
    const path dir = detail::prepare_out_dir(out_dir);
    Json run_json;
    run_json["seed"] = seed;
    run_json["out_dir"] = out_dir;

    if (gen->parsed()) {
      run_json["command"] = "gen-data";
      run_json["options"] = synth.to_json();
      const Dataset data = generate(synth.spec(seed));
      detail::write_file(dir / "features.csv", [&](std::ostream& os) { io::write_features(os, data); });
      detail::write_atomic(dir / "run.json", detail::dump(run_json));
      out << (dir / "features.csv").string() << '\n';
    } else if (train_cmd->parsed()) {
      run_json["command"] = "train";
      Json options = train_flags.to_json(true);
      if (train_flags.features.empty()) options["synth"] = synth.to_json();
      run_json["options"] = options;
      const TrainConfig config = train_flags.config(seed);
      const Dataset data = detail::load_or_generate(train_flags, synth, seed);
      detail::write_atomic(dir / "run.json", detail::dump(run_json));
      in_training = true;
      const TrainResult result = train(data, config);
      in_training = false;
      detail::write_file(dir / "model.txt", [&](std::ostream& os) { result.state.model.save(os); });
      if (result.state.centers) {
        detail::write_file(dir / "centers.csv", [&](std::ostream& os) {
          io::write_centers(os, *result.state.centers, result.split.train.speaker_names);
        });
      }
      detail::write_file(dir / "trials.txt", [&](std::ostream& os) { io::write_trials(os, result.split.trials); });
      detail::write_file(dir / "history.csv",
                         [&](std::ostream& os) { detail::write_history_csv(os, result.history); });
      if (!result.history.empty() && result.history.back().eval) {
        detail::write_atomic(dir / "eval_report.json", detail::dump(io::to_json(*result.history.back().eval)));
      }
      if (data.size() > 0 && train_flags.features.empty()) {
        detail::write_file(dir / "features.csv", [&](std::ostream& os) { io::write_features(os, data); });
      }
      out << detail::dump(detail::history_json(result.history));
    } else if (embed_cmd->parsed()) {
      run_json["command"] = "embed";
      run_json["options"] = Json{{"model", model_path}, {"features", features_path}};
      auto ms = io::open_in(model_path);
      const Mlp model = Mlp::load(ms);
      auto fs_in = io::open_in(features_path);
      const Dataset data = io::read_features(fs_in);
      const EmbeddingTable table = embed_all(model, data);
      detail::write_atomic(dir / "run.json", detail::dump(run_json));
      detail::write_file(dir / "embeddings.csv", [&](std::ostream& os) { io::write_embeddings(os, table); });
      out << (dir / "embeddings.csv").string() << '\n';
    } else if (score_cmd->parsed()) {
      run_json["command"] = "score";
      run_json["options"] = Json{{"embeddings", embeddings_path}, {"trials", trials_path}};
      auto es = io::open_in(embeddings_path);
      const EmbeddingTable table = io::read_embeddings(es);
      auto ts = io::open_in(trials_path);
      const auto scored = score_trials(table, io::read_trials(ts));
      detail::write_atomic(dir / "run.json", detail::dump(run_json));
      detail::write_file(dir / "scores.txt", [&](std::ostream& os) { io::write_scores(os, scored); });
      out << (dir / "scores.txt").string() << '\n';
    } else if (report_cmd->parsed()) {
      run_json["command"] = "report";
      Json options = report_flags.to_json();
      options["scores"] = scores_path;
      options["trials"] = trials_path;
      run_json["options"] = options;
      const MetricsReport r = report(detail::load_scored(scores_path, trials_path), report_flags.options());
      detail::write_atomic(dir / "run.json", detail::dump(run_json));
      detail::write_atomic(dir / "report.json", detail::dump(io::to_json(r)));
      out << io::to_json(r).dump() << '\n';
    } else if (det_cmd->parsed()) {
      run_json["command"] = "det";
      run_json["options"] = Json{{"scores", scores_path}, {"trials", trials_path}};
      const auto points = det_points(to_score_set(detail::load_scored(scores_path, trials_path)));
      detail::write_atomic(dir / "run.json", detail::dump(run_json));
      detail::write_file(dir / "det.csv", [&](std::ostream& os) { io::write_det(os, points); });
      out << (dir / "det.csv").string() << '\n';
    } else if (sweep_cmd->parsed()) {
      const auto betas = detail::parse_list(betas_text, "--betas");
      const auto deltas = detail::parse_list(deltas_text, "--deltas");
      run_json["command"] = "sweep";
      Json options = train_flags.to_json(false);
      if (train_flags.features.empty()) options["synth"] = synth.to_json();
      options["betas"] = betas;
      options["deltas"] = deltas;
      options["jobs"] = jobs;
      run_json["options"] = options;

      struct Cell {
        double beta;
        double delta;
        TrainConfig config;
        std::optional<double> eer;
        Json failure;
      };
      std::vector<Cell> cells;
      for (double b : betas) {
        for (double d : deltas) {
          detail::TrainFlags f = train_flags;
          f.beta = b;
          f.delta = d;
          TrainConfig c = f.config(seed);
          if (c.objective.kind != LossKind::kSoftmax) c.objective.pauc();  // reject bad cells up front
          cells.push_back({b, d, c, std::nullopt, Json()});
        }
      }
      const Dataset data = detail::load_or_generate(train_flags, synth, seed);
      detail::write_atomic(dir / "run.json", detail::dump(run_json));
      const path cell_dir = dir / "cells";
      detail::prepare_out_dir(cell_dir.string());

      std::atomic<std::size_t> next{0};
      std::mutex fail_mutex;
      std::optional<Error> hard_failure;
      auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          Cell& cell = cells[i];
          Json cj;
          cj["beta"] = cell.beta;
          cj["delta"] = cell.delta;
          try {
            const TrainResult r = train(data, cell.config);
            if (r.history.empty() || !r.history.back().eval) {
              throw Error("bad-argument", "sweep cells need at least one evaluated epoch");
            }
            cell.eer = r.history.back().eval->eer;
            cj["status"] = "ok";
            cj["eer"] = *cell.eer;
          } catch (const Error& e) {
            if (!is_degenerate(e.code())) {
              std::lock_guard<std::mutex> lock(fail_mutex);
              if (!hard_failure) hard_failure = e;
              continue;
            }
            cell.failure = error_json(e);
            cj["status"] = "NaN-guarded";
            cj["failure"] = cell.failure;
          }
          char name[96];
          std::snprintf(name, sizeof(name), "beta=%s_delta=%s.json", io::format_real(cell.beta).c_str(),
                        io::format_real(cell.delta).c_str());
          detail::write_atomic(cell_dir / name, detail::dump(cj));
        }
      };
      std::vector<std::thread> pool;
      const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, cells.size()));
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
      if (hard_failure) throw *hard_failure;

      detail::write_file(dir / "sweep.csv", [&](std::ostream& os) {
        os << "beta,delta,eer,status\n";
        for (const Cell& c : cells) {
          os << io::format_real(c.beta) << ',' << io::format_real(c.delta) << ','
             << (c.eer ? io::format_real(*c.eer) : std::string()) << ','
             << (c.eer ? "ok" : "NaN-guarded") << '\n';
        }
      });
      out << (dir / "sweep.csv").string() << '\n';
    }
  } catch (const Error& e) {
    err << error_json(e).dump() << '\n';
    return in_training && is_degenerate(e.code()) ? kExitDegenerate : kExitConfig;
  } catch (const std::exception& e) {
    Json j;
    j["error"] = "internal";
    j["message"] = e.what();
    err << j.dump() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace pauc::cli
