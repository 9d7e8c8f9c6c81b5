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

#include "attnscore/synth.h"

#include <cmath>
#include <cstdio>

#include "attnscore/eval.h"
#include "attnscore/rng.h"
#include "text_util.h"

namespace attnscore {

const char* TaskName(Task task) {
  switch (task) {
    case Task::kTD:
      return "TD";
    case Task::kTP:
      return "TP";
    case Task::kTI:
      return "TI";
  }
  return "?";
}

Task ParseTask(const std::string& name) {
  if (name == "TD" || name == "td") return Task::kTD;
  if (name == "TP" || name == "tp") return Task::kTP;
  if (name == "TI" || name == "ti") return Task::kTI;
  Fail(ErrorKind::kConfig, "unknown task '" + name + "' (expected TD, TP or TI)");
}

void SynthConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) Fail(ErrorKind::kConfig, "synth config: " + what);
  };
  require(n_speakers >= 2, "n_speakers must be >= 2");
  require(utts_per_speaker >= 1, "utts_per_speaker must be >= 1");
  if (task != Task::kTP) {
    require(enroll_utts >= 1 && enroll_utts < utts_per_speaker,
            "enroll_utts must be in [1, utts_per_speaker)");
  }
  require(frames_per_utt >= 1, "frames_per_utt must be >= 1");
  require(n_phones >= 2, "n_phones must be >= 2");
  require(speaker_dim >= 1, "speaker_dim must be >= 1");
  require(bottleneck_dim >= 1, "bottleneck_dim must be >= 1");
  require(channel_rank >= 1, "channel_rank must be >= 1");
  for (double s : {speaker_scale, phone_scale, noise_scale, confusion_scale, bottleneck_noise,
                   channel_scale}) {
    require(std::isfinite(s) && s >= 0.0, "scales must be finite and >= 0");
  }
  require(phone_coupling >= 0.0 && phone_coupling <= 1.0, "phone_coupling must be in [0, 1]");
  require(speaker_scale + phone_scale + noise_scale > 0.0,
          "speaker, phone and noise scales cannot all be zero");
  require(std::isfinite(posterior_sharpness) && posterior_sharpness > 0.0,
          "posterior_sharpness must be > 0");
  require(n_train_speakers == 0 || n_train_speakers >= 2, "n_train_speakers must be 0 or >= 2");
  require(tp_shift >= 0, "tp_shift must be >= 0");
  require(!unique_phones || n_phones >= frames_per_utt,
          "unique_phones needs n_phones >= frames_per_utt");
}

const FeatureStore& SynthCorpus::StoreFor(System system) const {
  return system == System::kAttBn ? bottleneck_store : posterior_store;
}

namespace {

Eigen::MatrixXd NormalMatrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.Normal();
  }
  return m;
}

std::vector<int> DrawSequence(Rng& rng, const SynthConfig& cfg) {
  std::vector<int> seq(cfg.frames_per_utt);
  if (cfg.unique_phones) {
    std::vector<int> phones(cfg.n_phones);
    for (int k = 0; k < cfg.n_phones; ++k) phones[k] = k;
    for (int t = 0; t < cfg.frames_per_utt; ++t) {
      const auto j = t + static_cast<int>(rng.Index(cfg.n_phones - t));
      std::swap(phones[t], phones[j]);
      seq[t] = phones[t];
    }
  } else {
    for (auto& p : seq) p = static_cast<int>(rng.Index(cfg.n_phones));
  }
  return seq;
}

// Offset for the training-speaker stream (golden-ratio constant).
constexpr std::uint64_t kTrainStream = 0x9E3779B97F4A7C15ull;

struct Latents {
  Eigen::MatrixXd speakers;    // n_speakers x speaker_dim
  Eigen::MatrixXd phones;      // n_phones x speaker_dim
  Eigen::MatrixXd realized;    // (n_speakers * n_phones) x speaker_dim
  Eigen::MatrixXd bottleneck;  // n_phones x bottleneck_dim
  Eigen::MatrixXd channel;     // speaker_dim x channel_rank
};

struct Rendered {
  FeatureMatrix speaker;
  FeatureMatrix posterior;
  FeatureMatrix bottleneck;
};

Rendered RenderUtterance(Rng& rng, const SynthConfig& cfg, const Latents& lat, int speaker,
                         const std::vector<int>& seq) {
  const auto frames = static_cast<Eigen::Index>(seq.size());
  const double shared_w = std::sqrt(1.0 - cfg.phone_coupling);
  const double own_w = std::sqrt(cfg.phone_coupling);
  Eigen::VectorXd session = Eigen::VectorXd::Zero(cfg.speaker_dim);
  if (cfg.channel_scale > 0.0) {
    Eigen::VectorXd h(cfg.channel_rank);
    for (auto& v : h) v = rng.Normal();
    session = cfg.channel_scale * (lat.channel * h);
  }
  FrameMatrix spk(frames, cfg.speaker_dim);
  FrameMatrix post(frames, cfg.n_phones);
  FrameMatrix bn(frames, cfg.bottleneck_dim);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const int phone = seq[t];
    for (int d = 0; d < cfg.speaker_dim; ++d) {
      spk(t, d) = cfg.speaker_scale * lat.speakers(speaker, d) +
                  cfg.phone_scale * (shared_w * lat.phones(phone, d) +
                                     own_w * lat.realized(speaker * cfg.n_phones + phone, d)) +
                  session(d) + cfg.noise_scale * rng.Normal();
    }
    Eigen::RowVectorXd logits(cfg.n_phones);
    for (int k = 0; k < cfg.n_phones; ++k) {
      logits(k) = (k == phone ? cfg.posterior_sharpness : 0.0) + cfg.confusion_scale * rng.Normal();
    }
    logits.array() -= logits.maxCoeff();
    logits = logits.array().exp();
    post.row(t) = logits / logits.sum();
    for (int d = 0; d < cfg.bottleneck_dim; ++d) {
      bn(t, d) = lat.bottleneck(phone, d) + cfg.bottleneck_noise * rng.Normal();
    }
  }
  return {FeatureMatrix(std::move(spk), FeatureKind::kSpeaker),
          FeatureMatrix(std::move(post), FeatureKind::kPosterior),
          FeatureMatrix(std::move(bn), FeatureKind::kBottleneck)};
}

std::string SpeakerId(int s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03d", s);
  return buf;
}

std::string UttId(int s, const char* tag, int u) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "spk%03d-%s%02d", s, tag, u);
  return buf;
}

void AddTrainingSpeakers(const SynthConfig& cfg, const Latents& shared, SynthCorpus& corpus) {
  Rng rng(cfg.seed + kTrainStream);
  Latents lat = shared;
  lat.speakers = NormalMatrix(rng, cfg.n_train_speakers, cfg.speaker_dim);
  lat.realized = NormalMatrix(rng, cfg.n_train_speakers * cfg.n_phones, cfg.speaker_dim);
  for (int s = 0; s < cfg.n_train_speakers; ++s) {
    char spk[32];
    std::snprintf(spk, sizeof(spk), "trn%03d", s);
    for (int u = 0; u < cfg.utts_per_speaker; ++u) {
      char utt[48];
      std::snprintf(utt, sizeof(utt), "trn%03d-utt%02d", s, u);
      const std::vector<int> seq = DrawSequence(rng, cfg);
      Rendered r = RenderUtterance(rng, cfg, lat, s, seq);
      corpus.training_store.Add({utt, spk, std::move(r.speaker), std::move(r.posterior)});
      corpus.phones[utt] = seq;
    }
  }
}

}  // namespace

SynthCorpus GenerateCorpus(const SynthConfig& cfg) {
  cfg.Validate();
  Rng rng(cfg.seed);
  Latents lat;
  lat.speakers = NormalMatrix(rng, cfg.n_speakers, cfg.speaker_dim);
  lat.phones = NormalMatrix(rng, cfg.n_phones, cfg.speaker_dim);
  lat.bottleneck = NormalMatrix(rng, cfg.n_phones, cfg.bottleneck_dim);
  lat.realized = NormalMatrix(rng, cfg.n_speakers * cfg.n_phones, cfg.speaker_dim);
  // Drawn last so channel_scale = 0 corpora match older seeds exactly.
  lat.channel = cfg.channel_scale > 0.0 ? NormalMatrix(rng, cfg.speaker_dim, cfg.channel_rank)
                                        : Eigen::MatrixXd::Zero(cfg.speaker_dim, cfg.channel_rank);

  SynthCorpus corpus;
  if (cfg.n_train_speakers > 0) AddTrainingSpeakers(cfg, lat, corpus);
  auto add = [&](const std::string& utt, int s, const std::vector<int>& seq) {
    Rendered r = RenderUtterance(rng, cfg, lat, s, seq);
    corpus.posterior_store.Add({utt, SpeakerId(s), r.speaker, r.posterior});
    corpus.bottleneck_store.Add({utt, SpeakerId(s), std::move(r.speaker), std::move(r.bottleneck)});
    corpus.phones[utt] = seq;
  };

  if (cfg.task == Task::kTP) {
    std::vector<std::vector<int>> prompts;
    for (int p = 0; p < cfg.utts_per_speaker; ++p) {
      prompts.push_back(DrawSequence(rng, cfg));
    }
    const int frames = cfg.frames_per_utt;
    for (int s = 0; s < cfg.n_speakers; ++s) {
      for (int p = 0; p < cfg.utts_per_speaker; ++p) {
        std::vector<int> shifted(frames);
        for (int t = 0; t < frames; ++t) {
          shifted[t] = prompts[p][(t + cfg.tp_shift) % frames];
        }
        add(UttId(s, "enr", p), s, prompts[p]);
        add(UttId(s, "tst", p), s, shifted);
      }
    }
    for (int p = 0; p < cfg.utts_per_speaker; ++p) {
      for (int s = 0; s < cfg.n_speakers; ++s) {
        for (int e = 0; e < cfg.n_speakers; ++e) {
          corpus.trials.push_back({{UttId(e, "enr", p)}, UttId(s, "tst", p), e == s});
        }
      }
    }
    return corpus;
  }

  const std::vector<int> shared =
      cfg.task == Task::kTD ? DrawSequence(rng, cfg) : std::vector<int>{};
  for (int s = 0; s < cfg.n_speakers; ++s) {
    for (int u = 0; u < cfg.utts_per_speaker; ++u) {
      add(UttId(s, "utt", u), s, cfg.task == Task::kTD ? shared : DrawSequence(rng, cfg));
    }
  }
  std::vector<std::vector<std::string>> pools(cfg.n_speakers);
  for (int e = 0; e < cfg.n_speakers; ++e) {
    for (int u = 0; u < cfg.enroll_utts; ++u) pools[e].push_back(UttId(e, "utt", u));
  }
  for (int s = 0; s < cfg.n_speakers; ++s) {
    for (int u = cfg.enroll_utts; u < cfg.utts_per_speaker; ++u) {
      for (int e = 0; e < cfg.n_speakers; ++e) {
        corpus.trials.push_back({pools[e], UttId(s, "utt", u), e == s});
      }
    }
  }
  return corpus;
}

void WriteCorpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "feats", ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create " + (dir / "feats").string());

  std::vector<ManifestEntry> post_entries, bn_entries;
  const auto& post = corpus.posterior_store.records();
  const auto& bn = corpus.bottleneck_store.records();
  for (std::size_t k = 0; k < post.size(); ++k) {
    const auto& rec = post[k];
    const auto spk = dir / "feats" / (rec.utt_id + ".spk.txt");
    const auto pp = dir / "feats" / (rec.utt_id + ".post.txt");
    const auto bp = dir / "feats" / (rec.utt_id + ".bn.txt");
    SaveFeatureMatrix(rec.speaker_feats, spk);
    SaveFeatureMatrix(*rec.phonetic_feats, pp);
    SaveFeatureMatrix(*bn[k].phonetic_feats, bp);
    post_entries.push_back({rec.utt_id, rec.speaker_id, spk, pp});
    bn_entries.push_back({rec.utt_id, rec.speaker_id, spk, bp});
  }
  if (corpus.training_store.size() > 0) {
    std::vector<ManifestEntry> train_entries;
    for (const auto& rec : corpus.training_store.records()) {
      const auto spk = dir / "feats" / (rec.utt_id + ".spk.txt");
      const auto pp = dir / "feats" / (rec.utt_id + ".post.txt");
      SaveFeatureMatrix(rec.speaker_feats, spk);
      SaveFeatureMatrix(*rec.phonetic_feats, pp);
      train_entries.push_back({rec.utt_id, rec.speaker_id, spk, pp});
    }
    SaveManifest(train_entries, dir / "train_manifest.tsv");
  }
  SaveManifest(post_entries, dir / "manifest.tsv");
  SaveManifest(bn_entries, dir / "manifest_bn.tsv");
  SaveTrials(corpus.trials, dir / "trials.txt");

  std::string phones;
  for (const auto& [utt, seq] : corpus.phones) {
    phones += utt + "\t";
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (t > 0) phones += ' ';
      phones += std::to_string(seq[t]);
    }
    phones += "\n";
  }
  internal::WriteFile(dir / "phones.txt", phones);
}

PhoneCosineSummary SummarizePhoneCosines(const SynthCorpus& corpus) {
  // Pairs are taken between all frames of the same speaker.
  std::map<std::string, std::vector<const UtteranceRecord*>> by_speaker;
  for (const auto& rec : corpus.posterior_store.records()) {
    by_speaker[rec.speaker_id].push_back(&rec);
  }
  double same_sum = 0.0, diff_sum = 0.0;
  double same_n = 0.0, diff_n = 0.0;
  for (const auto& [spk, recs] : by_speaker) {
    const FramePool pool = FramePool::From(recs);
    std::vector<int> phones;
    for (const auto* r : recs) {
      const auto& seq = corpus.phones.at(r->utt_id);
      phones.insert(phones.end(), seq.begin(), seq.end());
    }
    const FrameMatrix unit = NormalizeRows(pool.speaker);
    const Eigen::MatrixXd cos = unit * unit.transpose();
    for (Eigen::Index a = 0; a < cos.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < cos.cols(); ++b) {
        if (phones[a] == phones[b]) {
          same_sum += cos(a, b);
          same_n += 1.0;
        } else {
          diff_sum += cos(a, b);
          diff_n += 1.0;
        }
      }
    }
  }
  return {same_n > 0 ? same_sum / same_n : 0.0, diff_n > 0 ? diff_sum / diff_n : 0.0};
}

std::string FormatHeatmapCsv(const AttentionMatrix& alpha) {
  const auto& w = alpha.weights();
  std::string out;
  for (Eigen::Index t = 0; t < w.rows(); ++t) {
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      if (i > 0) out += ',';
      out += internal::FormatSig6(w(t, i));
    }
    out += '\n';
  }
  return out;
}

std::string FormatHeatmapPgm(const AttentionMatrix& alpha) {
  const auto& w = alpha.weights();
  std::string out = "P2\n" + std::to_string(w.cols()) + " " + std::to_string(w.rows()) + "\n255\n";
  for (Eigen::Index t = 0; t < w.rows(); ++t) {
    const double row_max = w.row(t).maxCoeff();
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      const double level = row_max > 0.0 ? 255.0 * w(t, i) / row_max : 0.0;
      if (i > 0) out += ' ';
      out += std::to_string(static_cast<int>(std::lround(level)));
    }
    out += '\n';
  }
  return out;
}

void ExportAlignmentHeatmap(const AttentionMatrix& alpha, const std::filesystem::path& prefix) {
  internal::WriteFile(prefix.string() + ".csv", FormatHeatmapCsv(alpha));
  internal::WriteFile(prefix.string() + ".pgm", FormatHeatmapPgm(alpha));
}

}  // namespace attnscore
