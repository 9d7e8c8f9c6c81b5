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

#include "attnscore/lda.h"

#include <spdlog/spdlog.h>

#include <Eigen/Eigenvalues>
#include <map>

#include "attnscore/scoring.h"
#include "text_util.h"

namespace attnscore {

namespace {
constexpr double kDegenerateScatter = 1e-12;
}  // namespace

LdaTransform::LdaTransform(Eigen::VectorXd mean, Eigen::MatrixXd basis)
    : mean_(std::move(mean)), basis_(std::move(basis)) {
  if (basis_.rows() < 1 || basis_.cols() < 1) {
    Fail(ErrorKind::kValidation, "lda basis must be at least 1x1");
  }
  if (mean_.size() != basis_.cols()) {
    Fail(ErrorKind::kDimension, "lda mean has dim " + std::to_string(mean_.size()) +
                                    ", basis expects " + std::to_string(basis_.cols()));
  }
  if (!mean_.allFinite() || !basis_.allFinite()) {
    Fail(ErrorKind::kValidation, "lda transform has non-finite entries");
  }
}

FrameMatrix LdaTransform::ProjectFrames(const FrameMatrix& frames) const {
  if (frames.cols() != in_dim()) {
    Fail(ErrorKind::kDimension, "lda project: frame dim " + std::to_string(frames.cols()) +
                                    ", transform expects " + std::to_string(in_dim()));
  }
  FrameMatrix centered = frames.rowwise() - mean_.transpose();
  return centered * basis_.transpose();
}

LdaTransform TrainLda(const LabeledVectorSet& data, int out_dim) {
  const Eigen::Index n = data.vectors.rows();
  const Eigen::Index dim = data.vectors.cols();
  if (static_cast<std::size_t>(n) != data.labels.size()) {
    Fail(ErrorKind::kDimension, "lda: vector and label counts differ");
  }
  if (n == 0 || dim == 0) Fail(ErrorKind::kValidation, "lda: no training data");

  std::map<std::string, std::vector<Eigen::Index>> classes;
  for (Eigen::Index r = 0; r < n; ++r) classes[data.labels[r]].push_back(r);
  const auto n_classes = static_cast<Eigen::Index>(classes.size());
  if (n_classes < 2) {
    Fail(ErrorKind::kValidation, "lda: need at least 2 classes, got " + std::to_string(n_classes));
  }
  for (const auto& [label, rows] : classes) {
    if (rows.size() < 2) {
      Fail(ErrorKind::kValidation, "lda: class '" + label + "' has a single sample");
    }
  }
  const Eigen::Index max_dim = std::min(dim, n_classes - 1);
  if (out_dim < 1 || out_dim > max_dim) {
    Fail(ErrorKind::kConfig, "lda: out_dim " + std::to_string(out_dim) +
                                 " must be in [1, min(D, C-1)] = [1, " + std::to_string(max_dim) +
                                 "] (D=" + std::to_string(dim) +
                                 ", C=" + std::to_string(n_classes) + ")");
  }
  if (n <= dim) {
    spdlog::warn(
        "lda: {} samples for {} dimensions; within-class scatter "
        "relies on regularization",
        n, dim);
  }

  if ((data.vectors.rowwise() - data.vectors.row(0)).cwiseAbs().maxCoeff() == 0.0) {
    Fail(ErrorKind::kValidation, "lda: all training vectors are identical");
  }

  const Eigen::VectorXd mean = data.vectors.colwise().mean().transpose();
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [label, rows] : classes) {
    Eigen::MatrixXd members(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      members.row(static_cast<Eigen::Index>(k)) = data.vectors.row(rows[k]);
    }
    const Eigen::RowVectorXd class_mean = members.colwise().mean();
    const Eigen::MatrixXd centered = members.rowwise() - class_mean;
    within.noalias() += centered.transpose() * centered;
    const Eigen::VectorXd offset = class_mean.transpose() - mean;
    between.noalias() += static_cast<double>(rows.size()) * offset * offset.transpose();
  }
  within /= static_cast<double>(n);
  between /= static_cast<double>(n);

  // Within-class scatter at rounding-noise level counts as zero and falls
  // back to a ridge sized from S_b.
  const double scale =
      within.trace() > kDegenerateScatter * between.trace() ? within.trace() : between.trace();
  const double ridge = kLdaRelativeRidge * scale / static_cast<double>(dim);
  within.diagonal().array() += ridge;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      between, within, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    Fail(ErrorKind::kValidation, "lda: generalized eigensolver failed");
  }

  // Eigenvalues come back ascending.
  Eigen::MatrixXd basis(out_dim, dim);
  for (int k = 0; k < out_dim; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(dim - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.row(k) = v.transpose();
  }
  return LdaTransform(mean, basis);
}

void SaveLda(const LdaTransform& t, const std::filesystem::path& path) {
  std::string out = std::to_string(t.out_dim()) + " " + std::to_string(t.in_dim()) + "\n";
  auto append_row = [&out](const auto& row) {
    for (Eigen::Index d = 0; d < row.size(); ++d) {
      if (d > 0) out += ' ';
      out += internal::FormatRoundTrip(row(d));
    }
    out += '\n';
  };
  append_row(t.mean());
  for (Eigen::Index k = 0; k < t.out_dim(); ++k) append_row(t.basis().row(k));
  internal::WriteFile(path, out);
}

LdaTransform LoadLda(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::string text = internal::ReadFile(path);
  auto lines = internal::SplitLines(text);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) internal::ParseFail(source, 1, "missing header");

  const auto header = internal::SplitFields(lines[0]);
  long k = 0, d = 0;
  if (header.size() != 2 || !internal::ParseNumber(header[0], k) ||
      !internal::ParseNumber(header[1], d) || k < 1 || d < 1) {
    internal::ParseFail(source, 1, "header must be '<K> <D>'");
  }
  if (static_cast<long>(lines.size()) != k + 2) {
    internal::ParseFail(
        source, 1,
        "expected " + std::to_string(k + 2) + " lines, found " + std::to_string(lines.size()));
  }
  auto parse_row = [&](std::size_t line_no) {
    const auto fields = internal::SplitFields(lines[line_no]);
    if (static_cast<long>(fields.size()) != d) {
      internal::ParseFail(source, line_no + 1, "expected " + std::to_string(d) + " values");
    }
    Eigen::VectorXd row(d);
    for (long j = 0; j < d; ++j) {
      if (!internal::ParseNumber(fields[j], row(j))) {
        internal::ParseFail(source, line_no + 1, "bad number '" + std::string(fields[j]) + "'");
      }
    }
    return row;
  };
  Eigen::VectorXd mean = parse_row(1);
  Eigen::MatrixXd basis(k, d);
  for (long r = 0; r < k; ++r) basis.row(r) = parse_row(r + 2).transpose();
  return LdaTransform(std::move(mean), std::move(basis));
}

LabeledVectorSet UtteranceVectors(const FeatureStore& store) {
  LabeledVectorSet set;
  if (store.size() == 0) return set;
  const Eigen::Index dim = store.records().front().speaker_feats.cols();
  set.vectors.resize(static_cast<Eigen::Index>(store.size()), dim);
  Eigen::Index r = 0;
  for (const auto& rec : store.records()) {
    if (rec.speaker_feats.cols() != dim) {
      Fail(ErrorKind::kDimension, rec.utt_id + ": speaker dim differs");
    }
    set.vectors.row(r++) = PoolAverage(rec.speaker_feats.data());
    set.labels.push_back(rec.speaker_id);
  }
  return set;
}

}  // namespace attnscore
