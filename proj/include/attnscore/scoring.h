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

#ifndef ATTNSCORE_SCORING_H_
#define ATTNSCORE_SCORING_H_

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "attnscore/attention.h"
#include "attnscore/error.h"
#include "attnscore/feature_store.h"
#include "attnscore/lda.h"

namespace attnscore {

enum class System { kBaseline, kAttSpk, kAttPost, kAttBn };
enum class Metric { kCosine, kLdaCosine };

const char* SystemName(System system);
System ParseSystem(const std::string& name);
const char* MetricName(Metric metric);
Metric ParseMetric(const std::string& name);

/// Affinity source each attention system uses.
AffinitySource SourceFor(System system);
/// Phonetic feature kind a system consumes from the manifest.
FeatureKind PhoneticKindFor(System system);

struct ScoringConfig {
  System system = System::kBaseline;
  Metric metric = Metric::kCosine;
  bool symmetrize = false;
  AffinityConfig affinity;
  std::optional<LdaTransform> lda;

  /// Config with the affinity source matching `system`.
  static ScoringConfig For(System system, Metric metric = Metric::kCosine);

  void Validate() const;
};

struct TrialScore {
  double value = 0.0;
  System system = System::kBaseline;
  Metric metric = Metric::kCosine;
};

/// Cosine bound slack allowed on returned scores.
inline constexpr double kCosineSlack = 1e-9;

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar Cosine(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    Fail(ErrorKind::kDimension,
         "cosine: length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const auto na = a.norm();
  const auto nb = b.norm();
  if (na == 0 || nb == 0) {
    Fail(ErrorKind::kValidation, "cosine: zero-norm vector");
  }
  const auto dot = a.derived().reshaped().dot(b.derived().reshaped());
  return dot / (na * nb);
}

/// Column-wise mean of the frames (the d-vector).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> PoolAverage(
    const Eigen::MatrixBase<Derived>& frames) {
  if (frames.rows() == 0) {
    Fail(ErrorKind::kValidation, "pool average: no frames");
  }
  return frames.colwise().mean();
}

/// s_u . s_u' evaluated as the mean of all pairwise frame inner products.
double PairwiseMeanInnerProduct(const FrameMatrix& enroll, const FrameMatrix& test);
/// s_u . s_u' evaluated on the pooled means.
double PooledInnerProduct(const FrameMatrix& enroll, const FrameMatrix& test);

/// Rows divided by their L2 norm; throws on a zero-norm row.
FrameMatrix NormalizeRows(const FrameMatrix& frames);

/// (1/T') sum_t sum_i alpha(t,i) cos(test_t, enroll_i).
double AttentionWeightedCosine(const AttentionMatrix& alpha, const FrameMatrix& test_speaker,
                               const FrameMatrix& enroll_speaker);

TrialScore ScoreBaseline(const FrameMatrix& enroll, const FrameMatrix& test, Metric metric,
                         const LdaTransform* lda);
TrialScore ScoreAttention(const FramePool& enroll, const FramePool& test, const ScoringConfig& cfg);

struct Trial {
  std::vector<std::string> enroll_ids;
  std::string test_id;
  bool target = false;
};

/// Resolves the trial against `store` and dispatches on cfg.system.
TrialScore ScoreTrial(const Trial& trial, const FeatureStore& store, const ScoringConfig& cfg);

}  // namespace attnscore

#endif  // ATTNSCORE_SCORING_H_
