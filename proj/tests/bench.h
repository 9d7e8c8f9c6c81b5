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

#ifndef ATTNSCORE_TESTS_BENCH_H_
#define ATTNSCORE_TESTS_BENCH_H_

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "attnscore/eval.h"
#include "attnscore/lda.h"
#include "attnscore/scoring.h"
#include "attnscore/synth.h"

namespace bench {

// D minus the channel rank of the default synthetic model.
inline constexpr int kSynthLdaDim = 6;

/// Every system under both metrics on one generated corpus.
inline attnscore::ResultTable RunSynthBenchmark(const attnscore::SynthConfig& cfg,
                                                std::string label = "", int workers = 1) {
  using namespace attnscore;
  const SynthCorpus corpus = GenerateCorpus(cfg);
  const LdaTransform lda = TrainLda(UtteranceVectors(corpus.training_store), kSynthLdaDim);
  if (label.empty()) label = TaskName(cfg.task);
  ResultTable table;
  for (System s : {System::kBaseline, System::kAttSpk, System::kAttPost, System::kAttBn}) {
    for (Metric m : {Metric::kCosine, Metric::kLdaCosine}) {
      ScoringConfig sc = ScoringConfig::For(s, m);
      if (m == Metric::kLdaCosine) sc.lda = lda;
      table[{SystemName(s), MetricName(m), label}] =
          RunEval(corpus.trials, corpus.StoreFor(s), sc, workers);
    }
  }
  return table;
}

inline std::string FormatFixture(const attnscore::ResultTable& table) {
  std::string out;
  char buf[64];
  for (const auto& [key, r] : table) {
    std::snprintf(buf, sizeof(buf), "%.10f", r.eer * 100.0);
    out += key.task + "\t" + key.system + "\t" + key.metric + "\t" + buf + "\n";
  }
  return out;
}

/// task, system, metric -> EER in percent.
inline std::map<attnscore::ResultKey, double> LoadFixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture " + path);
  std::map<attnscore::ResultKey, double> out;
  std::string task, system, metric;
  double eer;
  while (in >> task >> system >> metric >> eer) out[{system, metric, task}] = eer;
  return out;
}

}  // namespace bench

#endif  // ATTNSCORE_TESTS_BENCH_H_
