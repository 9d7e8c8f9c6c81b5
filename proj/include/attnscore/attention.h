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

#ifndef ATTNSCORE_ATTENTION_H_
#define ATTNSCORE_ATTENTION_H_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "attnscore/error.h"
#include "attnscore/feature_store.h"

namespace attnscore {

enum class AffinitySource { kPosteriorKl, kBottleneckDist, kSpeakerDist };

const char* AffinitySourceName(AffinitySource source);
AffinitySource ParseAffinitySource(const std::string& name);

struct AffinityConfig {
  AffinitySource source = AffinitySource::kPosteriorKl;
  double kl_floor = 1e-6;
  double dist_floor = 1e-6;
  double posterior_floor = 1e-10;

  void Validate() const;
};

/// Clamps every entry of a probability vector to at least `floor` and
/// rescales it to sum to one.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> FloorRenormalize(
    const Eigen::MatrixBase<Derived>& p, typename Derived::Scalar floor) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = p.derived().reshaped().cwiseMax(floor);
  return out / out.sum();
}

/// KL(p || q) after flooring both vectors at `posterior_floor`.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar KlDivergence(const Eigen::MatrixBase<DerivedP>& p,
                                       const Eigen::MatrixBase<DerivedQ>& q,
                                       typename DerivedP::Scalar posterior_floor) {
  using Scalar = typename DerivedP::Scalar;
  if (p.size() != q.size()) {
    Fail(ErrorKind::kDimension,
         "kl divergence: length " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  }
  const auto pf = FloorRenormalize(p, posterior_floor);
  const auto qf = FloorRenormalize(q, posterior_floor);
  Scalar kl = 0;
  for (Eigen::Index k = 0; k < pf.size(); ++k) {
    kl += pf(k) * std::log(pf(k) / qf(k));
  }
  return kl;
}

/// Normalizes reciprocal affinities 1 / max(cost, floor) into a weight row.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> ReciprocalWeights(
    const Eigen::MatrixBase<Derived>& costs, typename Derived::Scalar floor) {
  Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> w =
      costs.derived().reshaped().transpose().cwiseMax(floor).cwiseInverse();
  return w / w.sum();
}

/// Weight row of one test posterior over each enrollment posterior frame:
/// entries proportional to 1 / max(KL(p_test || p_i), kl_floor).
template <typename Derived>
Eigen::RowVectorXd AttentionRowFromKl(const Eigen::MatrixBase<Derived>& p_test,
                                      const FrameMatrix& p_enroll, const AffinityConfig& cfg) {
  if (p_test.size() != p_enroll.cols()) {
    Fail(ErrorKind::kDimension, "attention row: test dim " + std::to_string(p_test.size()) +
                                    " vs enrollment dim " + std::to_string(p_enroll.cols()));
  }
  Eigen::RowVectorXd kl(p_enroll.rows());
  for (Eigen::Index i = 0; i < p_enroll.rows(); ++i) {
    kl(i) = KlDivergence(p_test, p_enroll.row(i), cfg.posterior_floor);
  }
  return ReciprocalWeights(kl, cfg.kl_floor);
}

/// Weight row proportional to 1 / max(||x_test - x_i||^2, dist_floor).
template <typename Derived>
Eigen::RowVectorXd AttentionRowFromDistance(const Eigen::MatrixBase<Derived>& x_test,
                                            const FrameMatrix& x_enroll,
                                            const AffinityConfig& cfg) {
  if (x_test.size() != x_enroll.cols()) {
    Fail(ErrorKind::kDimension, "attention row: test dim " + std::to_string(x_test.size()) +
                                    " vs enrollment dim " + std::to_string(x_enroll.cols()));
  }
  const Eigen::RowVectorXd x = x_test.derived().reshaped().transpose();
  const Eigen::RowVectorXd d2 = (x_enroll.rowwise() - x).rowwise().squaredNorm().transpose();
  return ReciprocalWeights(d2, cfg.dist_floor);
}

/// T' x T row-stochastic weights; row t is a test frame, column i an
/// enrollment frame.
class AttentionMatrix {
 public:
  explicit AttentionMatrix(Eigen::MatrixXd weights);

  Eigen::Index test_frames() const { return weights_.rows(); }
  Eigen::Index enroll_frames() const { return weights_.cols(); }
  const Eigen::MatrixXd& weights() const { return weights_; }

  /// Mean Shannon entropy (nats) of the rows; lower means more concentrated.
  double MeanRowEntropy() const;

 private:
  Eigen::MatrixXd weights_;
};

/// Matrix form of the row operations, used for whole utterances.
Eigen::MatrixXd KlCostMatrix(const FrameMatrix& p_test, const FrameMatrix& p_enroll,
                             double posterior_floor);
Eigen::MatrixXd SquaredDistanceMatrix(const FrameMatrix& x_test, const FrameMatrix& x_enroll);

AttentionMatrix BuildAttention(const FramePool& test, const FramePool& enroll,
                               const AffinityConfig& cfg);
AttentionMatrix BuildAttention(const UtteranceRecord& test, const FramePool& enroll,
                               const AffinityConfig& cfg);

}  // namespace attnscore

#endif  // ATTNSCORE_ATTENTION_H_
