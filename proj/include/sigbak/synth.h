// include/sigbak/synth.h

// Copyright 2025  The sigbak authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SIGBAK_SYNTH_H_
#define SIGBAK_SYNTH_H_

#include <optional>
#include <string>
#include <vector>

#include "sigbak/audio.h"
#include "sigbak/degrade.h"
#include "sigbak/manifest.h"
#include "sigbak/rng.h"

namespace sigbak {

struct SegmentResult {
  AudioClip clip;
  Provenance provenance = Provenance::clean;  // clean or spoofed_clean
};

// Concatenates randomly chosen clips from the pool until the target
// duration is reached, then truncates to it. All entries must share one
// kind, and spoofed entries one spoofing-system id. Sources are
// resampled to the canonical rate on read.
SegmentResult build_clean_segment(const std::vector<SourceEntry>& pool,
                                  double target_seconds, Rng& rng);

struct CorpusConfig {
  double total_hours = 0.0;  // accumulated clean-segment duration
  std::vector<double> snr_levels_db = default_snr_levels();
  double min_segment_seconds = 3.0;
  double max_segment_seconds = 19.0;
  std::string file_prefix = "seg";
  // Also write the clean/noise components and a components.jsonl sidecar
  // recording per-mixture gains, so stored SNRs can be re-verified.
  bool keep_components = true;
  int jobs = 1;
};

// MS-SNSD-style recipe: per clean segment, the clean file (bak = 5)
// plus one mixture per SNR level (bak = snr_to_bak_label). Each output
// uses noise from exactly one category. Entry count is
// segments x (1 + levels).
Manifest generate_bak_corpus(const std::vector<SourceEntry>& clean_pool,
                             const std::vector<SourceEntry>& noise_pool,
                             const CorpusConfig& cfg, Rng& rng,
                             const std::string& out_dir);

// SIG corpus: the BAK recipe run over a clean pool that may include
// spoofed speech, labeled by sig_label (natural 5, spoofed 1), merged
// with the degraded manifest's entries relabeled the same way. Codec
// entries never appear in the output. `degraded_cap`, when set, keeps a
// seeded random subset of the degraded entries.
Manifest generate_sig_corpus(const std::vector<SourceEntry>& clean_pool,
                             const std::vector<SourceEntry>& noise_pool,
                             const Manifest& degraded, const CorpusConfig& cfg,
                             std::optional<size_t> degraded_cap, Rng& rng,
                             const std::string& out_dir);

struct DegradedCorpusConfig {
  double total_hours = 0.0;
  double min_segment_seconds = 3.0;
  double max_segment_seconds = 19.0;
  // Tags drawn uniformly per output file.
  std::vector<DegradationTag> tags = {
      DegradationTag::none,           DegradationTag::additive_noise,
      DegradationTag::reverb,         DegradationTag::enhancement_artifact,
      DegradationTag::dereverb_artifact, DegradationTag::codec,
  };
  double min_snr_db = -20.0, max_snr_db = 50.0;  // uniform in dB
  double min_rt60 = 0.2, max_rt60 = 1.2;
  std::string file_prefix = "dgrd";
  std::string external_codec_cmd;  // replaces the built-in codecs if set
  int jobs = 1;
};

// Unlabeled degraded corpus covering the degradation taxonomy; feeds the
// SIG recipe (and any external pretraining pipeline) with provenance-
// tagged material.
Manifest generate_degraded_corpus(const std::vector<SourceEntry>& clean_pool,
                                  const std::vector<SourceEntry>& noise_pool,
                                  const DegradedCorpusConfig& cfg, Rng& rng,
                                  const std::string& out_dir);

}  // namespace sigbak

#endif  // SIGBAK_SYNTH_H_
