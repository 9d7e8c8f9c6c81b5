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

#ifndef ATTNSCORE_EVAL_H_
#define ATTNSCORE_EVAL_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "attnscore/feature_store.h"
#include "attnscore/scoring.h"

namespace attnscore {

std::vector<Trial> ParseTrials(const std::string& text, const std::string& source = "<memory>");
std::vector<Trial> LoadTrials(const std::filesystem::path& path);
void SaveTrials(const std::vector<Trial>& trials, const std::filesystem::path& path);

struct DetPoint {
  double threshold;  // scores >= threshold are accepted
  double far;
  double frr;
};

struct EvalResult {
  double eer = 0.0;
  double threshold_at_eer = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  /// One point below every score, one at each distinct-score midpoint and
  /// one above every score, in increasing threshold order.
  std::vector<DetPoint> det_points;
};

/// EER from a threshold sweep over distinct-score midpoints, linearly
/// interpolated between the two points where FAR - FRR changes sign.
EvalResult ComputeEer(std::span<const double> target_scores,
                      std::span<const double> nontarget_scores);

/// Scores every trial (split across `workers` threads) in trial order.
std::vector<double> ScoreTrials(const std::vector<Trial>& trials, const FeatureStore& store,
                                const ScoringConfig& cfg, int workers = 1);

EvalResult EvaluateScores(std::span<const double> scores, const std::vector<Trial>& trials);

EvalResult RunEval(const std::vector<Trial>& trials, const FeatureStore& store,
                   const ScoringConfig& cfg, int workers = 1);

struct ResultKey {
  std::string system;
  std::string metric;
  std::string task;

  auto operator<=>(const ResultKey&) const = default;
};

using ResultTable = std::map<ResultKey, EvalResult>;

/// "3.71"-style percent with two decimals.
std::string FormatEerPercent(double eer);

/// Rows are system x metric, columns are tasks; missing cells print "-".
/// Row and column order follow first appearance among the keys, with
/// systems and metrics in their canonical order when recognized.
std::string RenderResultsTable(const ResultTable& results);

/// CSV with columns system,metric,task,eer,n_target,n_nontarget.
std::string RenderResultsCsv(const ResultTable& results);

}  // namespace attnscore

#endif  // ATTNSCORE_EVAL_H_
