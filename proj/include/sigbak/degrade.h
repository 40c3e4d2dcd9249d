// include/sigbak/degrade.h

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

#ifndef SIGBAK_DEGRADE_H_
#define SIGBAK_DEGRADE_H_

#include <string>
#include <vector>

#include "sigbak/audio.h"
#include "sigbak/rng.h"

namespace sigbak {

enum class DegradationTag {
  none,
  additive_noise,
  reverb,
  enhancement_artifact,
  dereverb_artifact,
  codec,
};

enum class CodecVariant { mulaw8, bandlimit3k4, bitcrush6 };
enum class ArtifactVariant { spectral_subtract, oversmooth, clip_distort };

struct DegradationKind {
  DegradationTag tag = DegradationTag::none;
  double snr_db = 0.0;                // additive_noise
  double rt60_seconds = 0.0;          // reverb / dereverb_artifact
  ArtifactVariant artifact_variant = ArtifactVariant::spectral_subtract;
  CodecVariant codec_variant = CodecVariant::mulaw8;
};

const char* to_string(DegradationTag tag);
const char* to_string(CodecVariant v);
const char* to_string(ArtifactVariant v);
CodecVariant codec_variant_from_string(const std::string& s);
ArtifactVariant artifact_variant_from_string(const std::string& s);

struct MixResult {
  AudioClip mixture;        // speech + gain * noise, rescaled if it peaked
  AudioClip noise_segment;  // the unit-gain tiled/cropped noise actually used
  double noise_gain = 0.0;  // g applied to noise_segment
  double peak_rescale = 1.0;  // common factor applied to the whole mixture
};

// Mixes noise into speech at the requested SNR. Speech level is the
// active speech level, noise level plain RMS. Noise shorter than the
// speech is tiled; a longer one is read from noise_offset (the caller's
// draw), wrapping as needed. If the sum peaks above 1 the whole mixture
// is rescaled to peak 0.99, which leaves the speech:noise ratio intact.
// Throws InvalidArgError on silent speech or silent noise.
MixResult mix_at_snr(const AudioClip& speech, const AudioClip& noise,
                     double snr_db, int64_t noise_offset = 0);

struct LadderRung {
  double snr_db = 0.0;
  MixResult mix;
};

// One mixture per level, each with an independent noise-offset draw.
std::vector<LadderRung> snr_ladder(const AudioClip& speech,
                                   const AudioClip& noise,
                                   const std::vector<double>& levels, Rng& rng);

// The mixing levels used throughout: {-20, -10, 0, 10, 20, 30, 40, 50} dB.
const std::vector<double>& default_snr_levels();

// Synthetic room impulse response: exponentially decaying white noise
// with a unit direct-path sample, length 1.5 * rt60, energy-normalized.
// rt60 must lie in [0.1, 1.5] seconds.
AudioClip synth_rir(double rt60_seconds, Rng& rng,
                    int sample_rate = kCanonicalRate);

// Full convolution truncated to the input length; peak-normalized to
// 0.99 when the result would exceed it.
AudioClip reverberate(const AudioClip& clip, const AudioClip& rir);

// Telephone-grade stand-ins for lossy codec round trips:
//   mulaw8      u-law companding to 8 bits and back
//   bandlimit3k4  low-pass at 3.4 kHz plus an 8 kHz round trip
//   bitcrush6   uniform 6-bit quantization
AudioClip codec_degrade(const AudioClip& clip, CodecVariant variant);

// Classic artifacts of enhancement systems:
//   spectral_subtract  oversubtraction with half-wave rectification
//                      (musical noise)
//   oversmooth         heavily smoothed per-band Wiener gains (muffling)
//   clip_distort       hard clip at 0.5, then restore the original peak
AudioClip enhance_artifact(const AudioClip& clip, ArtifactVariant variant);

// External codec hook: runs a command template in which "{in}" and
// "{out}" are replaced by temporary wav paths, re-reads the output,
// resamples it to the input rate and matches the input length.
AudioClip codec_degrade_external(const AudioClip& clip,
                                 const std::string& command_template,
                                 const std::string& work_dir);

}  // namespace sigbak

#endif  // SIGBAK_DEGRADE_H_
