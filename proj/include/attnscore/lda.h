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

#ifndef ATTNSCORE_LDA_H_
#define ATTNSCORE_LDA_H_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "attnscore/error.h"
#include "attnscore/feature_store.h"

namespace attnscore {

/// Projection size used when none is requested.
inline constexpr int kDefaultLdaDim = 150;

/// Affine map x -> basis * (x - mean), basis is K x D.
class LdaTransform {
 public:
  LdaTransform(Eigen::VectorXd mean, Eigen::MatrixXd basis);

  Eigen::Index in_dim() const { return basis_.cols(); }
  Eigen::Index out_dim() const { return basis_.rows(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& basis() const { return basis_; }

  template <typename Derived>
  Eigen::VectorXd Project(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != in_dim()) {
      Fail(ErrorKind::kDimension, "lda project: input dim " + std::to_string(x.size()) +
                                      ", transform expects " + std::to_string(in_dim()));
    }
    return basis_ * (x.derived().reshaped() - mean_);
  }

  /// Projects every row of a frame matrix.
  FrameMatrix ProjectFrames(const FrameMatrix& frames) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;
};

struct LabeledVectorSet {
  Eigen::MatrixXd vectors;  // N x D, one sample per row
  std::vector<std::string> labels;
};

/// Within-class scatter ridge, relative to trace(S_w) / D.
inline constexpr double kLdaRelativeRidge = 1e-4;

/// Fisher LDA: rows of the returned basis are the leading generalized
/// eigenvectors of (S_b, S_w + lambda I), sorted by decreasing eigenvalue and
/// signed so each row's largest-magnitude component is positive.
///
/// Requires at least two classes, two samples per class, and
/// out_dim <= min(D, C - 1).
LdaTransform TrainLda(const LabeledVectorSet& data, int out_dim);

void SaveLda(const LdaTransform& t, const std::filesystem::path& path);
LdaTransform LoadLda(const std::filesystem::path& path);

/// One pooled d-vector per utterance, labeled by speaker.
LabeledVectorSet UtteranceVectors(const FeatureStore& store);

}  // namespace attnscore

#endif  // ATTNSCORE_LDA_H_
