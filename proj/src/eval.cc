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

#include "attnscore/eval.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include "text_util.h"

namespace attnscore {

using internal::ParseFail;

std::vector<Trial> ParseTrials(const std::string& text, const std::string& source) {
  auto lines = internal::SplitLines(text);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::vector<Trial> trials;
  trials.reserve(lines.size());
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto fields = internal::SplitOn(lines[n], '\t');
    if (fields.size() != 3) {
      ParseFail(source, n + 1, "expected 3 tab-separated fields");
    }
    Trial trial;
    for (auto id : internal::SplitOn(fields[0], ',')) {
      if (id.empty()) ParseFail(source, n + 1, "empty enrollment id");
      trial.enroll_ids.emplace_back(id);
    }
    if (fields[1].empty()) ParseFail(source, n + 1, "empty test id");
    trial.test_id = std::string(fields[1]);
    if (fields[2] == "target") {
      trial.target = true;
    } else if (fields[2] == "nontarget") {
      trial.target = false;
    } else {
      ParseFail(source, n + 1,
                "label must be 'target' or 'nontarget', got '" + std::string(fields[2]) + "'");
    }
    if (std::find(trial.enroll_ids.begin(), trial.enroll_ids.end(), trial.test_id) !=
        trial.enroll_ids.end()) {
      Fail(ErrorKind::kValidation, source + ":" + std::to_string(n + 1) + ": test id '" +
                                       trial.test_id + "' is also an enrollment id");
    }
    trials.push_back(std::move(trial));
  }
  return trials;
}

std::vector<Trial> LoadTrials(const std::filesystem::path& path) {
  return ParseTrials(internal::ReadFile(path), path.string());
}

void SaveTrials(const std::vector<Trial>& trials, const std::filesystem::path& path) {
  std::string out;
  for (const auto& t : trials) {
    for (std::size_t k = 0; k < t.enroll_ids.size(); ++k) {
      if (k > 0) out += ',';
      out += t.enroll_ids[k];
    }
    out += "\t" + t.test_id + (t.target ? "\ttarget\n" : "\tnontarget\n");
  }
  internal::WriteFile(path, out);
}

EvalResult ComputeEer(std::span<const double> target_scores,
                      std::span<const double> nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty()) {
    Fail(ErrorKind::kValidation, "eer needs both target and nontarget scores (got " +
                                     std::to_string(target_scores.size()) + " and " +
                                     std::to_string(nontarget_scores.size()) + ")");
  }
  std::vector<double> tgt(target_scores.begin(), target_scores.end());
  std::vector<double> non(nontarget_scores.begin(), nontarget_scores.end());
  for (const auto* set : {&tgt, &non}) {
    for (double s : *set) {
      if (!std::isfinite(s)) Fail(ErrorKind::kValidation, "non-finite score");
    }
  }
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());

  std::vector<double> distinct;
  distinct.reserve(tgt.size() + non.size());
  std::merge(tgt.begin(), tgt.end(), non.begin(), non.end(), std::back_inserter(distinct));
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const double nt = static_cast<double>(tgt.size());
  const double nn = static_cast<double>(non.size());
  EvalResult result;
  result.n_target = tgt.size();
  result.n_nontarget = non.size();
  result.det_points.reserve(distinct.size() + 1);

  // Point j rejects the j smallest distinct values and accepts the rest.
  std::size_t tgt_rejected = 0, non_rejected = 0;
  for (std::size_t j = 0; j <= distinct.size(); ++j) {
    if (j > 0) {
      const double v = distinct[j - 1];
      while (tgt_rejected < tgt.size() && tgt[tgt_rejected] <= v) ++tgt_rejected;
      while (non_rejected < non.size() && non[non_rejected] <= v) ++non_rejected;
    }
    double threshold;
    if (j == 0) {
      threshold = distinct.front() - 1.0;
    } else if (j == distinct.size()) {
      threshold = distinct.back() + 1.0;
    } else {
      threshold = distinct[j - 1] + (distinct[j] - distinct[j - 1]) / 2.0;
    }
    result.det_points.push_back({threshold, static_cast<double>(non.size() - non_rejected) / nn,
                                 static_cast<double>(tgt_rejected) / nt});
  }

  const auto& pts = result.det_points;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double diff = pts[k].far - pts[k].frr;
    if (diff > 0.0) continue;
    if (diff == 0.0) {
      result.eer = pts[k].far;
      result.threshold_at_eer = pts[k].threshold;
    } else {
      const double prev = pts[k - 1].far - pts[k - 1].frr;
      const double lambda = prev / (prev - diff);
      result.eer = pts[k - 1].far + lambda * (pts[k].far - pts[k - 1].far);
      result.threshold_at_eer =
          pts[k - 1].threshold + lambda * (pts[k].threshold - pts[k - 1].threshold);
    }
    break;
  }
  return result;
}

std::vector<double> ScoreTrials(const std::vector<Trial>& trials, const FeatureStore& store,
                                const ScoringConfig& cfg, int workers) {
  cfg.Validate();
  std::vector<double> scores(trials.size(), 0.0);
  std::vector<std::exception_ptr> errors(trials.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t k = next++; k < trials.size(); k = next++) {
      try {
        scores[k] = ScoreTrial(trials[k], store, cfg).value;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };

  const int n_threads =
      std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(trials.size(), 1)));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(work);
  }

  for (std::size_t k = 0; k < trials.size(); ++k) {
    if (!errors[k]) continue;
    const std::string where =
        "trial " + std::to_string(k + 1) + " (test '" + trials[k].test_id + "')";
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kValidation, where + ": " + e.what());
    }
  }
  return scores;
}

EvalResult EvaluateScores(std::span<const double> scores, const std::vector<Trial>& trials) {
  if (scores.size() != trials.size()) {
    Fail(ErrorKind::kDimension, "score and trial counts differ");
  }
  std::vector<double> tgt, non;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    (trials[k].target ? tgt : non).push_back(scores[k]);
  }
  return ComputeEer(tgt, non);
}

EvalResult RunEval(const std::vector<Trial>& trials, const FeatureStore& store,
                   const ScoringConfig& cfg, int workers) {
  const auto scores = ScoreTrials(trials, store, cfg, workers);
  return EvaluateScores(scores, trials);
}

std::string FormatEerPercent(double eer) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", eer * 100.0);
  return buf;
}

namespace {

// Canonical names first, anything else afterwards in sorted order.
std::vector<std::string> OrderedNames(std::vector<std::string> names,
                                      const std::vector<std::string>& canon) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
    auto rank = [&](const std::string& s) {
      auto it = std::find(canon.begin(), canon.end(), s);
      return static_cast<std::size_t>(it - canon.begin());
    };
    return rank(a) < rank(b);
  });
  return names;
}

std::string Pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string RenderResultsTable(const ResultTable& results) {
  std::vector<std::string> systems, metrics, tasks;
  for (const auto& [key, value] : results) {
    systems.push_back(key.system);
    metrics.push_back(key.metric);
    tasks.push_back(key.task);
  }
  systems = OrderedNames(systems, {"baseline", "att-spk", "att-post", "att-bn"});
  metrics = OrderedNames(metrics, {"cosine", "lda-cosine"});
  tasks = OrderedNames(tasks, {"TD", "TP", "TI"});

  std::size_t sys_w = std::string("System").size();
  for (const auto& s : systems) sys_w = std::max(sys_w, s.size());
  std::size_t met_w = std::string("Metric").size();
  for (const auto& m : metrics) met_w = std::max(met_w, m.size());
  std::size_t cell_w = 7;
  for (const auto& t : tasks) cell_w = std::max(cell_w, t.size() + 1);
  sys_w += 2;
  met_w += 2;

  std::string out = Pad("System", sys_w) + Pad("Metric", met_w) + "EER(%)\n";
  out += std::string(sys_w + met_w, ' ');
  for (const auto& t : tasks) out += Pad(t, cell_w);
  while (out.back() == ' ') out.pop_back();
  out += "\n";
  for (const auto& s : systems) {
    bool first = true;
    for (const auto& m : metrics) {
      out += Pad(first ? s : "", sys_w) + Pad(m, met_w);
      first = false;
      for (const auto& t : tasks) {
        auto it = results.find({s, m, t});
        out += Pad(it == results.end() ? "-" : FormatEerPercent(it->second.eer), cell_w);
      }
      while (!out.empty() && out.back() == ' ') out.pop_back();
      out += "\n";
    }
  }
  return out;
}

std::string RenderResultsCsv(const ResultTable& results) {
  std::string out = "system,metric,task,eer,n_target,n_nontarget\n";
  for (const auto& [key, r] : results) {
    out += key.system + "," + key.metric + "," + key.task + "," + FormatEerPercent(r.eer) + "," +
           std::to_string(r.n_target) + "," + std::to_string(r.n_nontarget) + "\n";
  }
  return out;
}

}  // namespace attnscore
