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

#ifndef ATTNSCORE_FEATURE_STORE_H_
#define ATTNSCORE_FEATURE_STORE_H_

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace attnscore {

/// Frames are stored one per row.
template <typename Scalar>
using FrameMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FrameMatrix = FrameMatrixT<double>;

enum class FeatureKind { kSpeaker, kPosterior, kBottleneck };

const char* FeatureKindName(FeatureKind kind);
FeatureKind ParseFeatureKind(const std::string& name);

/// Posterior rows within this distance of 1 are renormalized on load.
inline constexpr double kPosteriorSumTolerance = 1e-4;

/// Validated, immutable T x D frame matrix.
///
/// Every entry is finite and T, D >= 1. Posterior matrices additionally have
/// nonnegative entries and rows that sum to one; rows off by less than
/// kPosteriorSumTolerance are rescaled on construction, anything further off
/// is rejected.
class FeatureMatrix {
 public:
  FeatureMatrix(FrameMatrix data, FeatureKind kind);

  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }
  FeatureKind kind() const { return kind_; }
  const FrameMatrix& data() const { return data_; }
  auto row(Eigen::Index t) const { return data_.row(t); }

 private:
  FrameMatrix data_;
  FeatureKind kind_;
};

FeatureMatrix LoadFeatureMatrix(const std::filesystem::path& path, FeatureKind kind);
/// Parses the text matrix format from an in-memory buffer. `source` only
/// labels error messages.
FeatureMatrix ParseFeatureMatrix(const std::string& text, FeatureKind kind,
                                 const std::string& source = "<memory>");
/// Writes shortest round-trip decimal representations, so a reload is exact.
void SaveFeatureMatrix(const FeatureMatrix& m, const std::filesystem::path& path);
void SaveFeatureMatrix(const FrameMatrix& m, const std::filesystem::path& path);
std::string FormatFeatureMatrix(const FrameMatrix& m);

struct UtteranceRecord {
  std::string utt_id;
  std::string speaker_id;
  FeatureMatrix speaker_feats;
  std::optional<FeatureMatrix> phonetic_feats;

  /// Checks frame synchrony and rejects zero-norm speaker frames.
  void Validate() const;
};

struct ManifestEntry {
  std::string utt_id;
  std::string speaker_id;
  std::filesystem::path speaker_path;
  std::optional<std::filesystem::path> phonetic_path;
};

/// Id-indexed collection of utterance records.
class FeatureStore {
 public:
  void Add(UtteranceRecord record);
  const UtteranceRecord& Find(const std::string& utt_id) const;
  bool Contains(const std::string& utt_id) const;
  std::size_t size() const { return records_.size(); }
  const std::vector<UtteranceRecord>& records() const { return records_; }

 private:
  std::vector<UtteranceRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  FeatureStore store;
};

/// Parses manifest lines only; relative paths are resolved against
/// `base_dir`.
std::vector<ManifestEntry> ParseManifestEntries(const std::string& text,
                                                const std::filesystem::path& base_dir,
                                                const std::string& source = "<memory>");

/// Loads a manifest and every matrix it references. Phonetic matrices are
/// validated as `phonetic_kind`.
Manifest LoadManifest(const std::filesystem::path& path,
                      FeatureKind phonetic_kind = FeatureKind::kPosterior);

/// Writes entries with paths relative to the manifest's directory when
/// possible.
void SaveManifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Row-concatenated frames of several utterances, the unit attention and
/// pooling operate on.
struct FramePool {
  FrameMatrix speaker;
  std::optional<FrameMatrix> phonetic;
  std::optional<FeatureKind> phonetic_kind;

  Eigen::Index frames() const { return speaker.rows(); }

  static FramePool From(std::span<const UtteranceRecord* const> records);
  static FramePool From(const UtteranceRecord& record);
};

}  // namespace attnscore

#endif  // ATTNSCORE_FEATURE_STORE_H_
