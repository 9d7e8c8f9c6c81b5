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

#include "attnscore/feature_store.h"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "attnscore/error.h"
#include "text_util.h"

namespace attnscore {

const char* FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kSpeaker:
      return "speaker";
    case FeatureKind::kPosterior:
      return "posterior";
    case FeatureKind::kBottleneck:
      return "bottleneck";
  }
  return "?";
}

FeatureKind ParseFeatureKind(const std::string& name) {
  if (name == "speaker") return FeatureKind::kSpeaker;
  if (name == "posterior") return FeatureKind::kPosterior;
  if (name == "bottleneck") return FeatureKind::kBottleneck;
  Fail(ErrorKind::kConfig, "unknown feature kind '" + name + "'");
}

FeatureMatrix::FeatureMatrix(FrameMatrix data, FeatureKind kind)
    : data_(std::move(data)), kind_(kind) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    Fail(ErrorKind::kValidation, "feature matrix must be at least 1x1, got " +
                                     std::to_string(data_.rows()) + "x" +
                                     std::to_string(data_.cols()));
  }
  if (!data_.allFinite()) {
    Fail(ErrorKind::kValidation, "feature matrix has non-finite entries");
  }
  if (kind_ != FeatureKind::kPosterior) return;
  for (Eigen::Index t = 0; t < data_.rows(); ++t) {
    if ((data_.row(t).array() < 0.0).any()) {
      Fail(ErrorKind::kValidation, "posterior row " + std::to_string(t) + " has a negative entry");
    }
    const double sum = data_.row(t).sum();
    if (std::abs(sum - 1.0) > kPosteriorSumTolerance) {
      std::ostringstream msg;
      msg << "posterior row " << t << " sums to " << sum;
      Fail(ErrorKind::kValidation, msg.str());
    }
    data_.row(t) /= sum;
  }
}

using internal::ParseFail;
using internal::ParseNumber;
using internal::ReadFile;
using internal::SplitFields;
using internal::SplitLines;
using internal::WriteFile;

FeatureMatrix ParseFeatureMatrix(const std::string& text, FeatureKind kind,
                                 const std::string& source) {
  auto lines = SplitLines(text);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) ParseFail(source, 1, "missing header");

  const auto header = SplitFields(lines[0]);
  long rows = 0, cols = 0;
  if (header.size() != 2 || !ParseNumber(header[0], rows) || !ParseNumber(header[1], cols)) {
    ParseFail(source, 1, "header must be '<T> <D>'");
  }
  if (rows < 1 || cols < 1) ParseFail(source, 1, "T and D must be >= 1");
  if (static_cast<long>(lines.size()) - 1 != rows) {
    ParseFail(source, 1,
              "header declares " + std::to_string(rows) + " rows, found " +
                  std::to_string(lines.size() - 1));
  }

  FrameMatrix data(rows, cols);
  for (long t = 0; t < rows; ++t) {
    const auto fields = SplitFields(lines[t + 1]);
    if (static_cast<long>(fields.size()) != cols) {
      ParseFail(
          source, t + 2,
          "expected " + std::to_string(cols) + " values, found " + std::to_string(fields.size()));
    }
    for (long d = 0; d < cols; ++d) {
      double v = 0.0;
      if (!ParseNumber(fields[d], v)) {
        ParseFail(source, t + 2, "bad number '" + std::string(fields[d]) + "'");
      }
      data(t, d) = v;
    }
  }
  try {
    return FeatureMatrix(std::move(data), kind);
  } catch (const Error& e) {
    throw Error(e.kind(), source + ": " + e.what());
  }
}

FeatureMatrix LoadFeatureMatrix(const std::filesystem::path& path, FeatureKind kind) {
  return ParseFeatureMatrix(ReadFile(path), kind, path.string());
}

std::string FormatFeatureMatrix(const FrameMatrix& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    for (Eigen::Index d = 0; d < m.cols(); ++d) {
      if (d > 0) out += ' ';
      out += internal::FormatRoundTrip(m(t, d));
    }
    out += '\n';
  }
  return out;
}

void SaveFeatureMatrix(const FrameMatrix& m, const std::filesystem::path& path) {
  WriteFile(path, FormatFeatureMatrix(m));
}

void SaveFeatureMatrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  SaveFeatureMatrix(m.data(), path);
}

void UtteranceRecord::Validate() const {
  if (speaker_feats.kind() != FeatureKind::kSpeaker) {
    Fail(ErrorKind::kValidation,
         utt_id + ": speaker features have kind " + FeatureKindName(speaker_feats.kind()));
  }
  if (phonetic_feats) {
    if (phonetic_feats->kind() == FeatureKind::kSpeaker) {
      Fail(ErrorKind::kValidation, utt_id + ": phonetic features must be posterior or bottleneck");
    }
    if (phonetic_feats->rows() != speaker_feats.rows()) {
      Fail(ErrorKind::kValidation,
           utt_id + ": speaker features have " + std::to_string(speaker_feats.rows()) +
               " frames but phonetic features have " + std::to_string(phonetic_feats->rows()));
    }
  }
  const Eigen::VectorXd norms = speaker_feats.data().rowwise().norm();
  for (Eigen::Index t = 0; t < norms.size(); ++t) {
    if (norms(t) == 0.0) {
      Fail(ErrorKind::kValidation,
           utt_id + ": speaker frame " + std::to_string(t) + " has zero norm");
    }
  }
}

void FeatureStore::Add(UtteranceRecord record) {
  record.Validate();
  if (index_.contains(record.utt_id)) {
    Fail(ErrorKind::kValidation, "duplicate utt_id '" + record.utt_id + "'");
  }
  index_.emplace(record.utt_id, records_.size());
  records_.push_back(std::move(record));
}

const UtteranceRecord& FeatureStore::Find(const std::string& utt_id) const {
  auto it = index_.find(utt_id);
  if (it == index_.end()) {
    Fail(ErrorKind::kResolution, "unknown utt_id '" + utt_id + "'");
  }
  return records_[it->second];
}

bool FeatureStore::Contains(const std::string& utt_id) const { return index_.contains(utt_id); }

std::vector<ManifestEntry> ParseManifestEntries(const std::string& text,
                                                const std::filesystem::path& base_dir,
                                                const std::string& source) {
  auto lines = SplitLines(text);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  auto resolve = [&](std::string_view p) {
    std::filesystem::path path{std::string(p)};
    return path.is_absolute() ? path : base_dir / path;
  };

  std::vector<ManifestEntry> entries;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    auto fields = internal::SplitOn(lines[n], '\t');
    if (fields.size() == 4 && fields[3].empty()) fields.pop_back();
    if (fields.size() < 3 || fields.size() > 4) {
      ParseFail(source, n + 1, "expected 3 or 4 tab-separated fields");
    }
    for (const auto& f : fields) {
      if (f.empty()) ParseFail(source, n + 1, "empty field");
    }
    ManifestEntry entry;
    entry.utt_id = std::string(fields[0]);
    entry.speaker_id = std::string(fields[1]);
    entry.speaker_path = resolve(fields[2]);
    if (fields.size() == 4) entry.phonetic_path = resolve(fields[3]);
    if (!seen.emplace(entry.utt_id, n).second) {
      Fail(ErrorKind::kValidation,
           source + ":" + std::to_string(n + 1) + ": duplicate utt_id '" + entry.utt_id + "'");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

Manifest LoadManifest(const std::filesystem::path& path, FeatureKind phonetic_kind) {
  if (phonetic_kind == FeatureKind::kSpeaker) {
    Fail(ErrorKind::kConfig, "phonetic kind must be posterior or bottleneck");
  }
  Manifest manifest;
  manifest.entries = ParseManifestEntries(ReadFile(path), path.parent_path(), path.string());
  for (const auto& e : manifest.entries) {
    UtteranceRecord record{e.utt_id, e.speaker_id,
                           LoadFeatureMatrix(e.speaker_path, FeatureKind::kSpeaker), std::nullopt};
    if (e.phonetic_path) {
      record.phonetic_feats = LoadFeatureMatrix(*e.phonetic_path, phonetic_kind);
    }
    manifest.store.Add(std::move(record));
  }
  spdlog::debug("loaded {} utterances from {}", manifest.store.size(), path.string());
  return manifest;
}

void SaveManifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    if (base.empty() || p.is_relative()) return p.generic_string();
    return p.lexically_relative(base).generic_string();
  };
  std::string out;
  for (const auto& e : entries) {
    out += e.utt_id + "\t" + e.speaker_id + "\t" + rel(e.speaker_path);
    if (e.phonetic_path) out += "\t" + rel(*e.phonetic_path);
    out += "\n";
  }
  WriteFile(path, out);
}

FramePool FramePool::From(std::span<const UtteranceRecord* const> records) {
  if (records.empty()) {
    Fail(ErrorKind::kValidation, "frame pool needs at least one utterance");
  }
  Eigen::Index frames = 0;
  const Eigen::Index dim = records.front()->speaker_feats.cols();
  bool all_phonetic = true;
  for (const auto* r : records) {
    if (r->speaker_feats.cols() != dim) {
      Fail(ErrorKind::kDimension, r->utt_id + ": speaker dim " +
                                      std::to_string(r->speaker_feats.cols()) +
                                      " differs from pool dim " + std::to_string(dim));
    }
    frames += r->speaker_feats.rows();
    all_phonetic = all_phonetic && r->phonetic_feats.has_value();
  }

  FramePool pool;
  pool.speaker.resize(frames, dim);
  Eigen::Index at = 0;
  for (const auto* r : records) {
    pool.speaker.middleRows(at, r->speaker_feats.rows()) = r->speaker_feats.data();
    at += r->speaker_feats.rows();
  }
  if (!all_phonetic) return pool;

  const auto& first = *records.front()->phonetic_feats;
  pool.phonetic_kind = first.kind();
  pool.phonetic.emplace(frames, first.cols());
  at = 0;
  for (const auto* r : records) {
    const auto& p = *r->phonetic_feats;
    if (p.kind() != first.kind() || p.cols() != first.cols()) {
      Fail(ErrorKind::kDimension, r->utt_id + ": phonetic features inconsistent with the pool");
    }
    pool.phonetic->middleRows(at, p.rows()) = p.data();
    at += p.rows();
  }
  return pool;
}

FramePool FramePool::From(const UtteranceRecord& record) {
  const UtteranceRecord* ptr = &record;
  return From(std::span<const UtteranceRecord* const>(&ptr, 1));
}

}  // namespace attnscore
