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

#include "attnscore/attention.h"

#include <cmath>

namespace attnscore {

const char* AffinitySourceName(AffinitySource source) {
  switch (source) {
    case AffinitySource::kPosteriorKl:
      return "posterior-kl";
    case AffinitySource::kBottleneckDist:
      return "bottleneck-dist";
    case AffinitySource::kSpeakerDist:
      return "speaker-dist";
  }
  return "?";
}

AffinitySource ParseAffinitySource(const std::string& name) {
  if (name == "posterior-kl") return AffinitySource::kPosteriorKl;
  if (name == "bottleneck-dist") return AffinitySource::kBottleneckDist;
  if (name == "speaker-dist") return AffinitySource::kSpeakerDist;
  Fail(ErrorKind::kConfig, "unknown affinity source '" + name + "'");
}

void AffinityConfig::Validate() const {
  if (!(kl_floor > 0) || !(dist_floor > 0) || !(posterior_floor > 0)) {
    Fail(ErrorKind::kConfig, "affinity floors must be positive");
  }
  if (!std::isfinite(kl_floor) || !std::isfinite(dist_floor) || !(posterior_floor < 1)) {
    Fail(ErrorKind::kConfig, "affinity floors out of range");
  }
}

AttentionMatrix::AttentionMatrix(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() < 1 || weights_.cols() < 1) {
    Fail(ErrorKind::kValidation, "attention matrix must be nonempty");
  }
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    Fail(ErrorKind::kValidation, "attention weights must be finite and >= 0");
  }
  for (Eigen::Index t = 0; t < weights_.rows(); ++t) {
    if (std::abs(weights_.row(t).sum() - 1.0) > 1e-9) {
      Fail(ErrorKind::kValidation, "attention row " + std::to_string(t) + " does not sum to 1");
    }
  }
}

double AttentionMatrix::MeanRowEntropy() const {
  double total = 0.0;
  for (Eigen::Index t = 0; t < weights_.rows(); ++t) {
    for (Eigen::Index i = 0; i < weights_.cols(); ++i) {
      const double w = weights_(t, i);
      if (w > 0.0) total -= w * std::log(w);
    }
  }
  return total / static_cast<double>(weights_.rows());
}

namespace {

FrameMatrix FloorRenormalizeRows(const FrameMatrix& p, double floor) {
  FrameMatrix out = p.cwiseMax(floor);
  for (Eigen::Index t = 0; t < out.rows(); ++t) out.row(t) /= out.row(t).sum();
  return out;
}

Eigen::MatrixXd NormalizeCostRows(const Eigen::MatrixXd& costs, double floor) {
  Eigen::MatrixXd w = costs.cwiseMax(floor).cwiseInverse();
  for (Eigen::Index t = 0; t < w.rows(); ++t) w.row(t) /= w.row(t).sum();
  return w;
}

}  // namespace

Eigen::MatrixXd KlCostMatrix(const FrameMatrix& p_test, const FrameMatrix& p_enroll,
                             double posterior_floor) {
  if (p_test.cols() != p_enroll.cols()) {
    Fail(ErrorKind::kDimension, "kl cost: test dim " + std::to_string(p_test.cols()) +
                                    " vs enrollment dim " + std::to_string(p_enroll.cols()));
  }
  const FrameMatrix pt = FloorRenormalizeRows(p_test, posterior_floor);
  const FrameMatrix pe = FloorRenormalizeRows(p_enroll, posterior_floor);
  // KL(p || q) = sum p log p - sum p log q
  const Eigen::VectorXd neg_entropy = (pt.array() * pt.array().log()).rowwise().sum();
  const FrameMatrix log_pe = pe.array().log();
  Eigen::MatrixXd kl = -(pt * log_pe.transpose());
  kl.colwise() += neg_entropy;
  return kl.cwiseMax(0.0);
}

Eigen::MatrixXd SquaredDistanceMatrix(const FrameMatrix& x_test, const FrameMatrix& x_enroll) {
  if (x_test.cols() != x_enroll.cols()) {
    Fail(ErrorKind::kDimension, "distance: test dim " + std::to_string(x_test.cols()) +
                                    " vs enrollment dim " + std::to_string(x_enroll.cols()));
  }
  Eigen::MatrixXd d2 = -2.0 * (x_test * x_enroll.transpose());
  d2.colwise() += x_test.rowwise().squaredNorm();
  d2.rowwise() += x_enroll.rowwise().squaredNorm().transpose();
  return d2.cwiseMax(0.0);
}

AttentionMatrix BuildAttention(const FramePool& test, const FramePool& enroll,
                               const AffinityConfig& cfg) {
  cfg.Validate();
  switch (cfg.source) {
    case AffinitySource::kSpeakerDist:
      return AttentionMatrix(
          NormalizeCostRows(SquaredDistanceMatrix(test.speaker, enroll.speaker), cfg.dist_floor));
    case AffinitySource::kBottleneckDist:
    case AffinitySource::kPosteriorKl: {
      const FeatureKind want = cfg.source == AffinitySource::kPosteriorKl
                                   ? FeatureKind::kPosterior
                                   : FeatureKind::kBottleneck;
      for (const FramePool* pool : {&test, &enroll}) {
        if (!pool->phonetic) {
          Fail(ErrorKind::kValidation, std::string(AffinitySourceName(cfg.source)) +
                                           " attention needs phonetic features on both sides");
        }
        if (pool->phonetic_kind != want) {
          Fail(ErrorKind::kValidation, std::string(AffinitySourceName(cfg.source)) +
                                           " attention needs " + FeatureKindName(want) +
                                           " features, got " +
                                           FeatureKindName(*pool->phonetic_kind));
        }
      }
      if (cfg.source == AffinitySource::kPosteriorKl) {
        return AttentionMatrix(NormalizeCostRows(
            KlCostMatrix(*test.phonetic, *enroll.phonetic, cfg.posterior_floor), cfg.kl_floor));
      }
      return AttentionMatrix(NormalizeCostRows(
          SquaredDistanceMatrix(*test.phonetic, *enroll.phonetic), cfg.dist_floor));
    }
  }
  Fail(ErrorKind::kConfig, "unhandled affinity source");
}

AttentionMatrix BuildAttention(const UtteranceRecord& test, const FramePool& enroll,
                               const AffinityConfig& cfg) {
  return BuildAttention(FramePool::From(test), enroll, cfg);
}

}  // namespace attnscore
