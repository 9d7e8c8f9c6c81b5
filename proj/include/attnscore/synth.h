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

#ifndef ATTNSCORE_SYNTH_H_
#define ATTNSCORE_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "attnscore/attention.h"
#include "attnscore/feature_store.h"
#include "attnscore/scoring.h"

namespace attnscore {

enum class Task {
  kTD,  // every utterance reads the same phone sequence
  kTP,  // enrollment and test of a trial read the same prompt
  kTI,  // independent random sequences
};

const char* TaskName(Task task);
Task ParseTask(const std::string& name);

/// Linear-Gaussian corpus model. Each frame's speaker feature is
///   speaker_scale * z_spk + phone_scale * m_phone + noise_scale * n
/// with z_spk, m_phone drawn once per corpus and n drawn per frame, all unit
/// variance per dimension. The phone offset mixes a phone-only part with a
/// speaker-specific realization of that phone:
///   m_phone = sqrt(1 - phone_coupling) * c_phone
///             + sqrt(phone_coupling) * u_{spk,phone}.
/// When channel_scale > 0 every utterance also gets a session offset
/// channel_scale * A h, with A a fixed speaker_dim x channel_rank loading
/// matrix and h ~ N(0, I) drawn per utterance; this is the nuisance an LDA
/// backend can learn to suppress. The posterior row is
///   softmax(posterior_sharpness * onehot(phone) + confusion_scale * e)
/// and the bottleneck feature is b_phone + bottleneck_noise * e'.
///
/// Trial protocol:
///  - TD / TI: the first `enroll_utts` utterances of each speaker form its
///    enrollment pool; every remaining utterance is tested against every
///    speaker's pool.
///  - TP: `utts_per_speaker` prompts are shared by all speakers. Each speaker
///    records every prompt twice, once for enrollment and once for test; the
///    test reading is the prompt circularly shifted left by `tp_shift` frames,
///    so test frame t aligns with enrollment frame (t + tp_shift) mod T.
///    Test readings are scored against every speaker's reading of the same
///    prompt.
///
/// `n_train_speakers` extra speakers (sharing the phone latents, drawn from a
/// separate random stream so they never perturb the evaluation data) read
/// independent random sequences; they feed LDA training and appear in no
/// trial.
struct SynthConfig {
  int n_speakers = 30;
  int utts_per_speaker = 8;
  int enroll_utts = 3;
  int frames_per_utt = 20;
  int n_phones = 20;
  int speaker_dim = 8;
  double speaker_scale = 0.5;
  double phone_scale = 2.0;
  double noise_scale = 1.0;
  double phone_coupling = 0.5;
  double channel_scale = 0.5;
  int channel_rank = 2;
  Task task = Task::kTI;
  double posterior_sharpness = 6.0;
  double confusion_scale = 1.0;
  int bottleneck_dim = 16;
  double bottleneck_noise = 0.3;
  int tp_shift = 0;
  /// Draw each sequence without repeated phones (needs
  /// n_phones >= frames_per_utt).
  bool unique_phones = false;
  int n_train_speakers = 100;
  std::uint64_t seed = 42;

  void Validate() const;
};

struct SynthCorpus {
  FeatureStore posterior_store;   // phonetic features are posteriors
  FeatureStore bottleneck_store;  // same speaker features, bottleneck phonetics
  FeatureStore training_store;    // held-out speakers, posterior phonetics
  std::vector<Trial> trials;
  std::map<std::string, std::vector<int>> phones;  // ground-truth phone ids

  const FeatureStore& StoreFor(System system) const;
};

SynthCorpus GenerateCorpus(const SynthConfig& cfg);

/// Writes feats/, manifest.tsv (posteriors), manifest_bn.tsv (bottleneck),
/// trials.txt and phones.txt under `dir`, plus train_manifest.tsv when the
/// corpus has training speakers.
void WriteCorpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

/// Mean cosine of same-phone and different-phone frame pairs across the
/// corpus' speaker features.
struct PhoneCosineSummary {
  double same_phone = 0.0;
  double different_phone = 0.0;
};
PhoneCosineSummary SummarizePhoneCosines(const SynthCorpus& corpus);

std::string FormatHeatmapCsv(const AttentionMatrix& alpha);
/// ASCII graymap, row t = test frame, column i = enrollment frame, each row
/// scaled so its maximum is white (255).
std::string FormatHeatmapPgm(const AttentionMatrix& alpha);
/// Writes `<prefix>.csv` and `<prefix>.pgm`.
void ExportAlignmentHeatmap(const AttentionMatrix& alpha, const std::filesystem::path& prefix);

}  // namespace attnscore

#endif  // ATTNSCORE_SYNTH_H_
