// Copyright (c) 2026 The attnscore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// attnscore command-line driver.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "attnscore/attention.h"
#include "attnscore/error.h"
#include "attnscore/eval.h"
#include "attnscore/feature_store.h"
#include "attnscore/lda.h"
#include "attnscore/scoring.h"
#include "attnscore/synth.h"

namespace fs = std::filesystem;

namespace attnscore {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

std::string Sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) Fail(ErrorKind::kIo, "cannot write " + path.string());
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) Fail(ErrorKind::kIo, "cannot read " + path.string());
  std::string out;
  char buf[65536];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), f)) > 0;) out.append(buf, n);
  std::fclose(f);
  return out;
}

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

struct GlobalOptions {
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

struct ScoringOptions {
  std::string system = "att-post";
  std::string metric = "cosine";
  std::string lda_path;
  std::string bn_manifest;
  std::string phonetic_kind;
  double kl_floor = 1e-6;
  double dist_floor = 1e-6;
  double posterior_floor = 1e-10;
  bool symmetrize = false;

  void Register(CLI::App* cmd, bool multi) {
    cmd->add_option("--system", system,
                    multi ? "Systems, comma-separated (baseline, att-spk, att-post, "
                            "att-bn) or 'all'"
                          : "baseline, att-spk, att-post or att-bn")
        ->capture_default_str();
    cmd->add_option(
           "--metric", metric,
           multi ? "Metrics, comma-separated (cosine, lda-cosine)" : "cosine or lda-cosine")
        ->capture_default_str();
    cmd->add_option("--lda", lda_path, "LDA transform file (required for lda-cosine)");
    cmd->add_option("--bn-manifest", bn_manifest,
                    "Manifest with bottleneck phonetic features, used for att-bn");
    cmd->add_option("--phonetic-kind", phonetic_kind,
                    "Kind of the manifest's phonetic column: posterior or bottleneck "
                    "(default follows the system)");
    cmd->add_option("--kl-floor", kl_floor, "KL floor")->capture_default_str();
    cmd->add_option("--dist-floor", dist_floor, "Squared-distance floor")->capture_default_str();
    cmd->add_option("--posterior-floor", posterior_floor, "Posterior entry floor")
        ->capture_default_str();
    cmd->add_flag("--symmetrize", symmetrize, "Average both scoring directions");
  }

  std::vector<System> Systems() const {
    if (system == "all") {
      return {System::kBaseline, System::kAttSpk, System::kAttPost, System::kAttBn};
    }
    std::vector<System> out;
    for (const auto& s : SplitCommas(system)) out.push_back(ParseSystem(s));
    return out;
  }

  std::vector<Metric> Metrics() const {
    std::vector<Metric> out;
    for (const auto& m : SplitCommas(metric)) out.push_back(ParseMetric(m));
    return out;
  }

  // Validated before any data is read.
  void Check() const {
    const auto metrics = Metrics();
    Systems();
    if (!phonetic_kind.empty() && ParseFeatureKind(phonetic_kind) == FeatureKind::kSpeaker) {
      Fail(ErrorKind::kConfig, "--phonetic-kind must be posterior or bottleneck");
    }
    if (lda_path.empty() &&
        std::find(metrics.begin(), metrics.end(), Metric::kLdaCosine) != metrics.end()) {
      Fail(ErrorKind::kConfig, "metric lda-cosine needs --lda");
    }
    AffinityConfig probe;
    probe.kl_floor = kl_floor;
    probe.dist_floor = dist_floor;
    probe.posterior_floor = posterior_floor;
    probe.Validate();
  }

  FeatureKind KindFor(System s) const {
    return phonetic_kind.empty() ? PhoneticKindFor(s) : ParseFeatureKind(phonetic_kind);
  }

  ScoringConfig ConfigFor(System s, Metric m, const std::optional<LdaTransform>& lda) const {
    ScoringConfig cfg = ScoringConfig::For(s, m);
    cfg.symmetrize = symmetrize;
    cfg.affinity.kl_floor = kl_floor;
    cfg.affinity.dist_floor = dist_floor;
    cfg.affinity.posterior_floor = posterior_floor;
    if (m == Metric::kLdaCosine) cfg.lda = lda;
    return cfg;
  }

  std::optional<LdaTransform> LoadTransform() const {
    if (lda_path.empty()) return std::nullopt;
    return LoadLda(lda_path);
  }
};

// Manifests are loaded once per system family. att-bn reads --bn-manifest
// when given; everything else reads --manifest.
class StoreCache {
 public:
  StoreCache(fs::path manifest, const ScoringOptions& so)
      : manifest_(std::move(manifest)), so_(so) {}

  const FeatureStore& For(System system) {
    const bool bn = system == System::kAttBn && !so_.bn_manifest.empty();
    const FeatureKind kind = bn ? FeatureKind::kBottleneck : so_.KindFor(system);
    auto& slot = bn ? bn_ : kind == FeatureKind::kBottleneck ? main_bn_ : main_post_;
    if (!slot) slot = LoadManifest(bn ? fs::path(so_.bn_manifest) : manifest_, kind).store;
    return *slot;
  }

 private:
  fs::path manifest_;
  const ScoringOptions& so_;
  std::optional<FeatureStore> main_post_;
  std::optional<FeatureStore> main_bn_;
  std::optional<FeatureStore> bn_;
};

std::string ScoresCsv(const std::vector<double>& scores, const std::vector<Trial>& trials) {
  std::string out = "trial_index,score,label\n";
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out += std::to_string(k + 1) + "," + Sig6(scores[k]) + "," +
           (trials[k].target ? "target" : "nontarget") + "\n";
  }
  return out;
}

struct ScoresFile {
  std::vector<double> scores;
  std::vector<Trial> trials;  // labels only
};

ScoresFile LoadScoresCsv(const fs::path& path) {
  const std::string text = ReadText(path);
  ScoresFile out;
  std::size_t line_no = 0, start = 0;
  auto fail = [&](const std::string& what) {
    Fail(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "trial_index,score,label") fail("expected header trial_index,score,label");
      continue;
    }
    const auto fields = SplitCommas(line);
    if (fields.size() != 3) fail("expected 3 comma-separated fields");
    char* tail = nullptr;
    const double score = std::strtod(fields[1].c_str(), &tail);
    if (fields[1].empty() || *tail != '\0' || !std::isfinite(score)) {
      fail("bad score '" + fields[1] + "'");
    }
    Trial t;
    if (fields[2] == "target") {
      t.target = true;
    } else if (fields[2] != "nontarget") {
      fail("label must be target or nontarget");
    }
    out.scores.push_back(score);
    out.trials.push_back(std::move(t));
  }
  return out;
}

int RunScore(const GlobalOptions& g, const ScoringOptions& so, const std::string& manifest,
             const std::string& trials_path, const std::string& out) {
  so.Check();
  const auto systems = so.Systems();
  const auto metrics = so.Metrics();
  if (systems.size() != 1 || metrics.size() != 1) {
    Fail(ErrorKind::kConfig, "score takes exactly one system and one metric");
  }
  const auto lda = so.LoadTransform();
  StoreCache stores(manifest, so);
  const FeatureStore& store = stores.For(systems[0]);
  const auto trials = LoadTrials(trials_path);
  const auto scores =
      ScoreTrials(trials, store, so.ConfigFor(systems[0], metrics[0], lda), g.workers);
  WriteText(out, ScoresCsv(scores, trials));
  spdlog::info("scored {} trials", trials.size());
  return kExitOk;
}

int RunEvalCommand(const GlobalOptions& g, const ScoringOptions& so, const std::string& scores_path,
                   const std::string& manifest, const std::string& trials_path,
                   const std::string& task, const std::string& out, const std::string& label_system,
                   const std::string& label_metric) {
  ResultTable results;
  if (!scores_path.empty()) {
    if (!manifest.empty() || !trials_path.empty()) {
      Fail(ErrorKind::kConfig, "--scores excludes --manifest and --trials");
    }
    const ScoresFile f = LoadScoresCsv(scores_path);
    results[{label_system, label_metric, task}] = EvaluateScores(f.scores, f.trials);
  } else {
    if (manifest.empty() || trials_path.empty()) {
      Fail(ErrorKind::kConfig, "eval needs --scores or both --manifest and --trials");
    }
    so.Check();
    const auto systems = so.Systems();
    const auto metrics = so.Metrics();
    const auto lda = so.LoadTransform();
    StoreCache stores(manifest, so);
    const auto trials = LoadTrials(trials_path);
    for (System s : systems) {
      for (Metric m : metrics) {
        results[{SystemName(s), MetricName(m), task}] =
            RunEval(trials, stores.For(s), so.ConfigFor(s, m, lda), g.workers);
      }
    }
  }

  if (results.size() == 1) {
    const auto& r = results.begin()->second;
    std::cout << "EER: " << FormatEerPercent(r.eer) << "\n"
              << "threshold: " << Sig6(r.threshold_at_eer) << "\n"
              << "targets: " << r.n_target << "\n"
              << "nontargets: " << r.n_nontarget << "\n";
  } else {
    std::cout << RenderResultsTable(results);
  }
  if (!out.empty()) WriteText(out, RenderResultsCsv(results));
  return kExitOk;
}

int RunAlign(const ScoringOptions& so, const std::string& manifest, const std::string& enroll,
             const std::string& test, const std::string& source_name, const std::string& prefix) {
  AffinityConfig affinity;
  affinity.source = ParseAffinitySource(source_name);
  affinity.kl_floor = so.kl_floor;
  affinity.dist_floor = so.dist_floor;
  affinity.posterior_floor = so.posterior_floor;
  affinity.Validate();
  FeatureKind kind = affinity.source == AffinitySource::kBottleneckDist ? FeatureKind::kBottleneck
                                                                        : FeatureKind::kPosterior;
  if (!so.phonetic_kind.empty()) kind = ParseFeatureKind(so.phonetic_kind);

  const Manifest m = LoadManifest(manifest, kind);
  std::vector<const UtteranceRecord*> members;
  for (const auto& id : SplitCommas(enroll)) members.push_back(&m.store.Find(id));
  const UtteranceRecord& t = m.store.Find(test);
  const AttentionMatrix alpha = BuildAttention(t, FramePool::From(members), affinity);
  ExportAlignmentHeatmap(alpha, prefix);
  std::cout << "frames: " << alpha.test_frames() << " x " << alpha.enroll_frames() << "\n"
            << "mean row entropy: " << Sig6(alpha.MeanRowEntropy()) << "\n";
  return kExitOk;
}

int RunLdaTrain(const std::string& manifest, int out_dim, const std::string& out) {
  const Manifest m = LoadManifest(manifest);
  const LabeledVectorSet data = UtteranceVectors(m.store);
  std::optional<LdaTransform> t;
  try {
    t = TrainLda(data, out_dim);
  } catch (const Error& e) {
    // An out-of-range dimension depends on the data, so it is a data error here.
    if (e.kind() == ErrorKind::kConfig) throw Error(ErrorKind::kValidation, e.what());
    throw;
  }
  SaveLda(*t, out);
  spdlog::info("wrote lda transform to {}", out);
  std::cout << "lda: " << t->out_dim() << " x " << t->in_dim() << " from " << data.vectors.rows()
            << " utterances\n";
  return kExitOk;
}

int RunSynth(const SynthConfig& cfg, const std::string& out_dir) {
  cfg.Validate();
  const SynthCorpus c = GenerateCorpus(cfg);
  WriteCorpus(c, out_dir);
  spdlog::info("wrote corpus to {}", out_dir);
  std::size_t targets = 0;
  for (const auto& t : c.trials) targets += t.target;
  const PhoneCosineSummary pc = SummarizePhoneCosines(c);
  std::cout << "task: " << TaskName(cfg.task) << "\n"
            << "utterances: " << c.posterior_store.size() << "\n"
            << "training utterances: " << c.training_store.size() << "\n"
            << "trials: " << c.trials.size() << " (" << targets << " target)\n"
            << "same-phone cosine: " << Sig6(pc.same_phone) << "\n"
            << "different-phone cosine: " << Sig6(pc.different_phone) << "\n";
  return kExitOk;
}

void SetupLogging() {
  auto logger = spdlog::stderr_color_mt("attnscore");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("ATTNSCORE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off.
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("ATTNSCORE_LOG: unknown level '{}'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

int Main(int argc, char** argv) {
  SetupLogging();
  CLI::App app{"Attention-based frame-level speaker verification scoring"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI or TOML file; flags override its values");

  GlobalOptions g;
  app.add_option("--workers", g.workers, "Worker threads for trial scoring")
      ->check(CLI::PositiveNumber);

  ScoringOptions score_opts, eval_opts, align_opts;
  std::string manifest, trials, out, scores, task = "-", enroll, test, source = "posterior-kl",
                                             prefix, out_dir;
  int out_dim = kDefaultLdaDim;

  auto* score = app.add_subcommand("score", "Score a trial list");
  score->add_option("--manifest", manifest, "Utterance manifest")->required();
  score->add_option("--trials", trials, "Trial list")->required();
  score->add_option("--out", out, "Scores CSV to write")->required();
  score_opts.Register(score, false);

  auto* eval = app.add_subcommand("eval", "Compute EER from scores or by scoring trials");
  eval->add_option("--scores", scores, "Scores CSV from 'score'");
  eval->add_option("--manifest", manifest, "Utterance manifest");
  eval->add_option("--trials", trials, "Trial list");
  eval->add_option("--task", task, "Task label for the results table")->capture_default_str();
  eval->add_option("--out", out, "Results CSV to write");
  eval_opts.Register(eval, true);

  auto* align = app.add_subcommand("align", "Export an attention heatmap");
  align->add_option("--manifest", manifest, "Utterance manifest")->required();
  align->add_option("--enroll", enroll, "Enrollment utterance ids, comma-separated")->required();
  align->add_option("--test", test, "Test utterance id")->required();
  align->add_option("--source", source, "posterior-kl, bottleneck-dist or speaker-dist")
      ->capture_default_str();
  align->add_option("--out-prefix", prefix, "Writes <prefix>.csv and <prefix>.pgm")->required();
  align->add_option("--phonetic-kind", align_opts.phonetic_kind,
                    "Kind of the manifest's phonetic column");
  align->add_option("--kl-floor", align_opts.kl_floor, "KL floor")->capture_default_str();
  align->add_option("--dist-floor", align_opts.dist_floor, "Squared-distance floor")
      ->capture_default_str();
  align->add_option("--posterior-floor", align_opts.posterior_floor, "Posterior entry floor")
      ->capture_default_str();

  auto* lda = app.add_subcommand("lda-train", "Train an LDA transform on utterance d-vectors");
  lda->add_option("--manifest", manifest, "Training manifest")->required();
  lda->add_option("--out-dim", out_dim, "Projection dimension")->capture_default_str();
  lda->add_option("--out", out, "Transform file to write")->required();

  SynthConfig sc;
  std::string task_name = TaskName(sc.task);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--out-dir", out_dir, "Output directory")->required();
  synth->add_option("--task", task_name, "TD, TP or TI")->capture_default_str();
  synth->add_option("--seed", sc.seed, "Random seed")->capture_default_str();
  synth->add_option("--n-speakers", sc.n_speakers)->capture_default_str();
  synth->add_option("--utts-per-speaker", sc.utts_per_speaker)->capture_default_str();
  synth->add_option("--enroll-utts", sc.enroll_utts)->capture_default_str();
  synth->add_option("--frames-per-utt", sc.frames_per_utt)->capture_default_str();
  synth->add_option("--n-phones", sc.n_phones)->capture_default_str();
  synth->add_option("--speaker-dim", sc.speaker_dim)->capture_default_str();
  synth->add_option("--speaker-scale", sc.speaker_scale)->capture_default_str();
  synth->add_option("--phone-scale", sc.phone_scale)->capture_default_str();
  synth->add_option("--noise-scale", sc.noise_scale)->capture_default_str();
  synth->add_option("--phone-coupling", sc.phone_coupling)->capture_default_str();
  synth->add_option("--channel-scale", sc.channel_scale)->capture_default_str();
  synth->add_option("--channel-rank", sc.channel_rank)->capture_default_str();
  synth->add_option("--posterior-sharpness", sc.posterior_sharpness)->capture_default_str();
  synth->add_option("--confusion-scale", sc.confusion_scale)->capture_default_str();
  synth->add_option("--bottleneck-dim", sc.bottleneck_dim)->capture_default_str();
  synth->add_option("--bottleneck-noise", sc.bottleneck_noise)->capture_default_str();
  synth->add_option("--tp-shift", sc.tp_shift)->capture_default_str();
  synth->add_flag("--unique-phones", sc.unique_phones, "No repeated phones within a sequence");
  synth->add_option("--n-train-speakers", sc.n_train_speakers)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*score) return RunScore(g, score_opts, manifest, trials, out);
    if (*eval) {
      // A scores file carries no system or metric unless the user names them.
      return RunEvalCommand(g, eval_opts, scores, manifest, trials, task, out,
                            eval->count("--system") ? eval_opts.system : "-",
                            eval->count("--metric") ? eval_opts.metric : "-");
    }
    if (*align) return RunAlign(align_opts, manifest, enroll, test, source, prefix);
    if (*lda) return RunLdaTrain(manifest, out_dim, out);
    if (*synth) {
      sc.task = ParseTask(task_name);
      return RunSynth(sc, out_dir);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.kind() == ErrorKind::kConfig ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace attnscore

int main(int argc, char** argv) { return attnscore::Main(argc, argv); }
