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

#include "attnscore/scoring.h"

namespace attnscore {

const char* SystemName(System system) {
  switch (system) {
    case System::kBaseline:
      return "baseline";
    case System::kAttSpk:
      return "att-spk";
    case System::kAttPost:
      return "att-post";
    case System::kAttBn:
      return "att-bn";
  }
  return "?";
}

System ParseSystem(const std::string& name) {
  if (name == "baseline") return System::kBaseline;
  if (name == "att-spk") return System::kAttSpk;
  if (name == "att-post") return System::kAttPost;
  if (name == "att-bn") return System::kAttBn;
  Fail(ErrorKind::kConfig, "unknown system '" + name + "'");
}

const char* MetricName(Metric metric) {
  return metric == Metric::kCosine ? "cosine" : "lda-cosine";
}

Metric ParseMetric(const std::string& name) {
  if (name == "cosine") return Metric::kCosine;
  if (name == "lda-cosine" || name == "lda") return Metric::kLdaCosine;
  Fail(ErrorKind::kConfig, "unknown metric '" + name + "'");
}

AffinitySource SourceFor(System system) {
  switch (system) {
    case System::kAttPost:
      return AffinitySource::kPosteriorKl;
    case System::kAttBn:
      return AffinitySource::kBottleneckDist;
    case System::kBaseline:
    case System::kAttSpk:
      return AffinitySource::kSpeakerDist;
  }
  return AffinitySource::kSpeakerDist;
}

FeatureKind PhoneticKindFor(System system) {
  return system == System::kAttBn ? FeatureKind::kBottleneck : FeatureKind::kPosterior;
}

ScoringConfig ScoringConfig::For(System system, Metric metric) {
  ScoringConfig cfg;
  cfg.system = system;
  cfg.metric = metric;
  cfg.affinity.source = SourceFor(system);
  return cfg;
}

void ScoringConfig::Validate() const {
  if (metric == Metric::kLdaCosine && !lda) {
    Fail(ErrorKind::kConfig, "metric lda-cosine requires an LDA transform");
  }
  if (system != System::kBaseline) {
    affinity.Validate();
    if (affinity.source != SourceFor(system)) {
      Fail(ErrorKind::kConfig, std::string("system ") + SystemName(system) + " uses affinity " +
                                   AffinitySourceName(SourceFor(system)) + ", config has " +
                                   AffinitySourceName(affinity.source));
    }
  }
}

double PairwiseMeanInnerProduct(const FrameMatrix& enroll, const FrameMatrix& test) {
  if (enroll.cols() != test.cols()) {
    Fail(ErrorKind::kDimension, "inner product: dim " + std::to_string(enroll.cols()) + " vs " +
                                    std::to_string(test.cols()));
  }
  if (enroll.rows() == 0 || test.rows() == 0) {
    Fail(ErrorKind::kValidation, "inner product: empty frame set");
  }
  return (enroll * test.transpose()).mean();
}

double PooledInnerProduct(const FrameMatrix& enroll, const FrameMatrix& test) {
  if (enroll.cols() != test.cols()) {
    Fail(ErrorKind::kDimension, "inner product: dim " + std::to_string(enroll.cols()) + " vs " +
                                    std::to_string(test.cols()));
  }
  return PoolAverage(enroll).dot(PoolAverage(test));
}

FrameMatrix NormalizeRows(const FrameMatrix& frames) {
  FrameMatrix out = frames;
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    const double n = out.row(t).norm();
    if (n == 0.0) {
      Fail(ErrorKind::kValidation, "frame " + std::to_string(t) + " has zero norm under cosine");
    }
    out.row(t) /= n;
  }
  return out;
}

double AttentionWeightedCosine(const AttentionMatrix& alpha, const FrameMatrix& test_speaker,
                               const FrameMatrix& enroll_speaker) {
  if (alpha.test_frames() != test_speaker.rows() ||
      alpha.enroll_frames() != enroll_speaker.rows()) {
    Fail(ErrorKind::kDimension, "attention matrix shape does not match frames");
  }
  if (test_speaker.cols() != enroll_speaker.cols()) {
    Fail(ErrorKind::kDimension, "speaker dims differ between test and enrollment");
  }
  const Eigen::MatrixXd cos =
      NormalizeRows(test_speaker) * NormalizeRows(enroll_speaker).transpose();
  return alpha.weights().cwiseProduct(cos).rowwise().sum().mean();
}

namespace {

FrameMatrix MaybeProject(const FrameMatrix& frames, Metric metric, const LdaTransform* lda) {
  if (metric == Metric::kCosine) return frames;
  if (lda == nullptr) {
    Fail(ErrorKind::kConfig, "metric lda-cosine requires an LDA transform");
  }
  return lda->ProjectFrames(frames);
}

// Score of `test` attending over `enroll`. Speaker-feature affinities are
// computed in the same (possibly projected) space the cosines use.
double DirectedAttentionScore(const FramePool& enroll, const FramePool& test,
                              const ScoringConfig& cfg, const FrameMatrix& enroll_speaker,
                              const FrameMatrix& test_speaker) {
  if (cfg.affinity.source == AffinitySource::kSpeakerDist) {
    const AttentionMatrix alpha =
        BuildAttention(FramePool{test_speaker, std::nullopt, std::nullopt},
                       FramePool{enroll_speaker, std::nullopt, std::nullopt}, cfg.affinity);
    return AttentionWeightedCosine(alpha, test_speaker, enroll_speaker);
  }
  const AttentionMatrix alpha = BuildAttention(test, enroll, cfg.affinity);
  return AttentionWeightedCosine(alpha, test_speaker, enroll_speaker);
}

}  // namespace

TrialScore ScoreBaseline(const FrameMatrix& enroll, const FrameMatrix& test, Metric metric,
                         const LdaTransform* lda) {
  const auto e = PoolAverage(MaybeProject(enroll, metric, lda));
  const auto t = PoolAverage(MaybeProject(test, metric, lda));
  return {Cosine(e, t), System::kBaseline, metric};
}

TrialScore ScoreAttention(const FramePool& enroll, const FramePool& test,
                          const ScoringConfig& cfg) {
  cfg.Validate();
  if (cfg.system == System::kBaseline) {
    Fail(ErrorKind::kConfig, "attention scoring needs an attention system");
  }
  const LdaTransform* lda = cfg.lda ? &*cfg.lda : nullptr;
  const FrameMatrix enroll_speaker = MaybeProject(enroll.speaker, cfg.metric, lda);
  const FrameMatrix test_speaker = MaybeProject(test.speaker, cfg.metric, lda);

  double d = DirectedAttentionScore(enroll, test, cfg, enroll_speaker, test_speaker);
  if (cfg.symmetrize) {
    const double back = DirectedAttentionScore(test, enroll, cfg, test_speaker, enroll_speaker);
    d = (d + back) / 2.0;
  }
  return {d, cfg.system, cfg.metric};
}

TrialScore ScoreTrial(const Trial& trial, const FeatureStore& store, const ScoringConfig& cfg) {
  if (trial.enroll_ids.empty()) {
    Fail(ErrorKind::kValidation, "trial has no enrollment utterances");
  }
  std::vector<const UtteranceRecord*> enroll;
  enroll.reserve(trial.enroll_ids.size());
  for (const auto& id : trial.enroll_ids) enroll.push_back(&store.Find(id));
  const UtteranceRecord& test = store.Find(trial.test_id);

  const FramePool enroll_pool = FramePool::From(enroll);
  if (cfg.system == System::kBaseline) {
    cfg.Validate();
    return ScoreBaseline(enroll_pool.speaker, test.speaker_feats.data(), cfg.metric,
                         cfg.lda ? &*cfg.lda : nullptr);
  }
  return ScoreAttention(enroll_pool, FramePool::From(test), cfg);
}

}  // namespace attnscore
