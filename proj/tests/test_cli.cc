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

// End-to-end checks of the attnscore executable.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "attnscore/feature_store.h"
#include "doctest.h"
#include "test_util.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string output;  // stdout and stderr
};

RunResult Run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" ATTNSCORE_CLI_PATH "\" " + args + " 2>&1";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), pipe)) > 0;) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string Q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t CountLines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Small generated corpus shared by the command tests.
class Corpus {
 public:
  Corpus() : dir_("cli") {
    const auto r =
        Run("synth --task TI --n-speakers 6 --utts-per-speaker 4 --enroll-utts 2 "
            "--n-train-speakers 10 --out-dir " +
            Q(root()));
    REQUIRE(r.code == 0);
  }
  fs::path root() const { return dir_.path() / "corpus"; }
  fs::path tmp() const { return dir_.path(); }
  std::string manifest() const { return Q(root() / "manifest.tsv"); }
  std::string trials() const { return Q(root() / "trials.txt"); }

 private:
  testutil::TempDir dir_;
};

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(Run("").code == 2);
  CHECK(Run("frobnicate").code == 2);
  CHECK(Run("score --manifest m.tsv").code == 2);
  CHECK(Run("--workers 0 synth --out-dir x").code == 2);
  CHECK(Run("synth --out-dir x --n-speakers many").code == 2);
  CHECK(Run("--help").code == 0);
}

TEST_CASE("score command") {
  Corpus c;
  const fs::path out = c.tmp() / "scores.csv";
  auto r = Run("score --manifest " + c.manifest() + " --trials " + c.trials() +
               " --system att-post --out " + Q(out));
  REQUIRE(r.code == 0);
  const std::string csv = testutil::ReadText(out);
  CHECK(csv.rfind("trial_index,score,label\n1,", 0) == 0);
  CHECK(CountLines(csv) == 1 + CountLines(testutil::ReadText(c.root() / "trials.txt")));

  r = Run("score --manifest " + c.manifest() + " --trials " + c.trials() +
          " --system baseline --metric lda-cosine --out " + Q(out));
  CHECK(r.code == 2);
  CHECK(r.output.find("--lda") != std::string::npos);

  r = Run("score --manifest " + Q(c.tmp() / "absent.tsv") + " --trials " + c.trials() +
          " --system baseline --out " + Q(out));
  CHECK(r.code == 1);
  CHECK(r.output.find("absent.tsv") != std::string::npos);

  CHECK(Run("score --manifest " + c.manifest() + " --trials " + c.trials() +
            " --system att-magic --out " + Q(out))
            .code == 2);
  CHECK(Run("score --manifest " + c.manifest() + " --trials " + c.trials() +
            " --system att-post --kl-floor 0 --out " + Q(out))
            .code == 2);

  // A trial naming an unknown utterance is a data error that names the trial.
  testutil::WriteText(c.tmp() / "bad_trials.txt", "spk000-utt00\tnobody\ttarget\n");
  r = Run("score --manifest " + c.manifest() + " --trials " + Q(c.tmp() / "bad_trials.txt") +
          " --system baseline --out " + Q(out));
  CHECK(r.code == 1);
  CHECK(r.output.find("trial 1") != std::string::npos);
  CHECK(r.output.find("nobody") != std::string::npos);
}

TEST_CASE("eval command") {
  testutil::TempDir dir("cli_eval");
  const fs::path perfect = dir.path() / "perfect.csv";
  testutil::WriteText(perfect,
                      "trial_index,score,label\n1,0.9,target\n2,0.8,target\n"
                      "3,0.1,nontarget\n4,0.2,nontarget\n");
  auto r = Run("eval --scores " + Q(perfect));
  CHECK(r.code == 0);
  CHECK(r.output.find("EER: 0.00") != std::string::npos);

  const fs::path third = dir.path() / "third.csv";
  testutil::WriteText(third,
                      "trial_index,score,label\n1,0.8,target\n2,0.6,target\n"
                      "3,0.4,target\n4,0.7,nontarget\n5,0.5,nontarget\n6,0.3,nontarget\n");
  const fs::path results = dir.path() / "results.csv";
  r = Run("eval --scores " + Q(third) + " --system att-post --metric cosine --task TI --out " +
          Q(results));
  CHECK(r.code == 0);
  CHECK(r.output.find("EER: 33.33") != std::string::npos);
  CHECK(testutil::ReadText(results) ==
        "system,metric,task,eer,n_target,n_nontarget\natt-post,cosine,TI,33.33,3,3\n");

  const fs::path targets = dir.path() / "targets.csv";
  testutil::WriteText(targets, "trial_index,score,label\n1,0.9,target\n2,0.8,target\n");
  CHECK(Run("eval --scores " + Q(targets)).code == 1);

  const fs::path broken = dir.path() / "broken.csv";
  testutil::WriteText(broken, "trial_index,score,label\n1,zero,target\n");
  r = Run("eval --scores " + Q(broken));
  CHECK(r.code == 1);
  CHECK(r.output.find("broken.csv:2") != std::string::npos);

  CHECK(Run("eval").code == 2);
}

TEST_CASE("eval scores a manifest directly") {
  Corpus c;
  const fs::path scores = c.tmp() / "s.csv";
  REQUIRE(Run("score --manifest " + c.manifest() + " --trials " + c.trials() +
              " --system att-spk --out " + Q(scores))
              .code == 0);
  const auto from_csv = Run("eval --scores " + Q(scores));
  const auto direct =
      Run("eval --manifest " + c.manifest() + " --trials " + c.trials() + " --system att-spk");
  CHECK(direct.code == 0);
  // Both paths print the same EER line.
  CHECK(from_csv.output.substr(0, from_csv.output.find('\n')) ==
        direct.output.substr(0, direct.output.find('\n')));

  const auto table =
      Run("eval --manifest " + c.manifest() + " --bn-manifest " + Q(c.root() / "manifest_bn.tsv") +
          " --trials " + c.trials() + " --system all --task TI");
  CHECK(table.code == 0);
  CHECK(table.output.find("EER(%)") != std::string::npos);
  for (const char* sys : {"baseline", "att-spk", "att-post", "att-bn"}) {
    CHECK(table.output.find(sys) != std::string::npos);
  }
}

TEST_CASE("align command") {
  Corpus c;
  const fs::path prefix = c.tmp() / "self";
  auto r = Run("align --manifest " + c.manifest() +
               " --enroll spk001-utt00 --test spk001-utt00 --out-prefix " + Q(prefix));
  REQUIRE(r.code == 0);
  std::istringstream pgm(testutil::ReadText(prefix.string() + ".pgm"));
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  pgm >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == h);
  for (int t = 0; t < h; ++t) {
    for (int i = 0; i < w; ++i) {
      int level = 0;
      pgm >> level;
      if (i == t) CHECK(level == 255);
    }
  }
  CHECK(fs::exists(prefix.string() + ".csv"));

  // Uniform posteriors on both sides give a uniform heatmap.
  testutil::TempDir dir("cli_align");
  attnscore::FrameMatrix spk(3, 2), post = attnscore::FrameMatrix::Constant(3, 4, 0.25);
  spk << 1, 0, 0, 1, 1, 1;
  attnscore::SaveFeatureMatrix(spk, dir.path() / "a.spk");
  attnscore::SaveFeatureMatrix(post, dir.path() / "a.post");
  testutil::WriteText(dir.path() / "m.tsv", "a\ts\ta.spk\ta.post\nb\ts\ta.spk\ta.post\n");
  REQUIRE(Run("align --manifest " + Q(dir.path() / "m.tsv") +
              " --enroll a --test b "
              "--out-prefix " +
              Q(dir.path() / "u"))
              .code == 0);
  CHECK(testutil::ReadText(dir.path() / "u.pgm") ==
        "P2\n3 3\n255\n255 255 255\n255 255 255\n255 255 255\n");

  testutil::WriteText(dir.path() / "bare.tsv", "a\ts\ta.spk\nb\ts\ta.spk\n");
  r = Run("align --manifest " + Q(dir.path() / "bare.tsv") +
          " --enroll a --test b --source bottleneck-dist --out-prefix " + Q(dir.path() / "x"));
  CHECK(r.code == 1);
  CHECK(Run("align --manifest " + Q(dir.path() / "bare.tsv") +
            " --enroll a --test b --source speaker-dist --out-prefix " + Q(dir.path() / "x"))
            .code == 0);
  CHECK(Run("align --manifest " + Q(dir.path() / "m.tsv") +
            " --enroll a --test b --source cosine --out-prefix " + Q(dir.path() / "x"))
            .code == 2);
}

TEST_CASE("lda-train command") {
  testutil::TempDir dir("cli_lda");
  const fs::path corpus = dir.path() / "c";
  REQUIRE(Run("synth --task TI --n-speakers 10 --utts-per-speaker 3 --enroll-utts 1 "
              "--n-train-speakers 0 --out-dir " +
              Q(corpus))
              .code == 0);
  const fs::path out = dir.path() / "lda.txt";
  REQUIRE(Run("lda-train --manifest " + Q(corpus / "manifest.tsv") + " --out-dim 4 --out " + Q(out))
              .code == 0);
  CHECK(testutil::ReadText(out).rfind("4 8\n", 0) == 0);

  const auto r =
      Run("lda-train --manifest " + Q(corpus / "manifest.tsv") + " --out-dim 9 --out " + Q(out));
  CHECK(r.code == 1);
  CHECK(r.output.find("[1, 8]") != std::string::npos);

  const fs::path big = dir.path() / "big";
  REQUIRE(Run("synth --task TI --n-speakers 200 --utts-per-speaker 2 --enroll-utts 1 "
              "--frames-per-utt 4 --speaker-dim 400 --n-train-speakers 0 --out-dir " +
              Q(big))
              .code == 0);
  REQUIRE(Run("lda-train --manifest " + Q(big / "manifest.tsv") + " --out " + Q(out)).code == 0);
  CHECK(testutil::ReadText(out).rfind("150 400\n", 0) == 0);

  testutil::WriteText(dir.path() / "one.tsv",
                      "x\ts\t" + (corpus / "feats" / "spk000-utt00.spk.txt").string() + "\n");
  CHECK(Run("lda-train --manifest " + Q(dir.path() / "one.tsv") + " --out " + Q(out)).code == 1);
}

TEST_CASE("synth command") {
  testutil::TempDir dir("cli_synth");
  CHECK(Run("synth --n-phones 1 --out-dir " + Q(dir.path() / "x")).code == 2);
  CHECK(Run("synth --task XX --out-dir " + Q(dir.path() / "x")).code == 2);

  const auto r =
      Run("synth --task TD --n-speakers 4 --utts-per-speaker 3 --enroll-utts 1 "
          "--n-train-speakers 0 --out-dir " +
          Q(dir.path() / "td"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("trials:") != std::string::npos);
  std::istringstream phones(testutil::ReadText(dir.path() / "td" / "phones.txt"));
  std::set<std::string> sequences;
  std::size_t n = 0;
  for (std::string line; std::getline(phones, line); ++n) {
    sequences.insert(line.substr(line.find('\t') + 1));
  }
  CHECK(n == 12);
  CHECK(sequences.size() == 1);
}

TEST_CASE("config file values are overridden by flags") {
  testutil::TempDir dir("cli_config");
  testutil::WriteText(dir.path() / "run.ini",
                      "[synth]\nn-speakers=3\nutts-per-speaker=2\nenroll-utts=1\n"
                      "n-train-speakers=0\ntask=TD\n");
  auto r = Run("--config " + Q(dir.path() / "run.ini") + " synth --out-dir " + Q(dir.path() / "a"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("utterances: 6") != std::string::npos);
  r = Run("--config " + Q(dir.path() / "run.ini") + " synth --n-speakers 5 --out-dir " +
          Q(dir.path() / "b"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("utterances: 10") != std::string::npos);
  CHECK(Run("--config " + Q(dir.path() / "none.ini") + " synth --out-dir x").code == 2);
}

TEST_CASE("log level comes from the environment") {
  testutil::TempDir dir("cli_log");
  const std::string args =
      "synth --n-speakers 2 --utts-per-speaker 2 --enroll-utts 1 "
      "--n-train-speakers 0 --out-dir " +
      Q(dir.path() / "a");
  const auto quiet = Run(args);
  const auto chatty = Run(args, "ATTNSCORE_LOG=debug");
  CHECK(quiet.code == 0);
  CHECK(chatty.code == 0);
  CHECK(chatty.output.size() > quiet.output.size());
}

TEST_CASE("documented defaults file matches the built-in defaults") {
  testutil::TempDir dir("cli_defaults");
  REQUIRE(Run("--config \"" ATTNSCORE_SOURCE_DIR "/configs/synth_defaults.ini\" synth --out-dir " +
              Q(dir.path() / "a"))
              .code == 0);
  REQUIRE(Run("synth --out-dir " + Q(dir.path() / "b")).code == 0);
  for (const char* f : {"manifest.tsv", "trials.txt", "phones.txt", "feats/spk007-utt03.spk.txt",
                        "feats/trn042-utt05.post.txt"}) {
    CHECK(testutil::ReadText(dir.path() / "a" / f) == testutil::ReadText(dir.path() / "b" / f));
  }
}
