// include/sigbak/audio.h

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

#ifndef SIGBAK_AUDIO_H_
#define SIGBAK_AUDIO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sigbak/error.h"
#include "sigbak/rng.h"

namespace sigbak {

// Every corpus file is resampled to this rate on ingest; all emitted
// audio is written at it.
constexpr int kCanonicalRate = 16000;

// Mono PCM samples in [-1, 1]. The universal signal carrier.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kCanonicalRate;

  int64_t num_samples() const { return static_cast<int64_t>(samples.size()); }
  double duration_seconds() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// T x F feature matrix, row-major.
struct FrameMatrix {
  std::vector<float> data;
  int num_frames = 0;
  int num_bins = 0;
  double frame_hop_seconds = 0.0;

  float at(int t, int f) const { return data[static_cast<size_t>(t) * num_bins + f]; }
  float& at(int t, int f) { return data[static_cast<size_t>(t) * num_bins + f]; }
};

// Reads a RIFF WAV file. PCM 16-bit and IEEE float32 are accepted, mono
// or multichannel; multichannel input is downmixed by channel averaging
// and integer samples are scaled by 1/32768.
// Throws FileError (missing file), FormatError (malformed RIFF),
// UnsupportedError (any other encoding).
AudioClip read_wav(const std::string& path);

// Writes 16-bit PCM mono. Round trip through read_wav reproduces each
// sample within 1/32768. Throws FileError on an unwritable path.
void write_wav(const AudioClip& clip, const std::string& path);

// Windowed-sinc resampler (Kaiser beta 8, 32 zero crossings per side).
// Output length = round(n * target / source); same-rate input is
// returned unchanged.
AudioClip resample(const AudioClip& clip, int target_rate);

// sqrt(mean(x^2)). Throws InvalidArgError on an empty clip.
double rms(const AudioClip& clip);

// Speech level over active frames only: 25 ms frames whose energy is
// within 40 dB of the loudest frame. Falls back to plain RMS when no
// frame qualifies (all-zero input).
double active_speech_level(const AudioClip& clip);

struct LogMelConfig {
  int n_mels = 64;
  double win_seconds = 0.025;
  double hop_seconds = 0.010;
  double floor = 1e-6;

  bool operator==(const LogMelConfig&) const = default;
};

// Hann-windowed magnitude spectrogram -> triangular mel filterbank
// (HTK-style spacing) -> log(x + floor). Deterministic. The clip must be
// at the canonical rate and at least one window long.
FrameMatrix log_mel(const AudioClip& clip, const LogMelConfig& cfg = {});

// Center frequency (Hz) of mel band `band` for the given config; the
// peak of its triangular weight. Exposed for filterbank tests.
double mel_band_center_hz(const LogMelConfig& cfg, int sample_rate, int band);

// Contiguous segment of exactly `length_seconds`, start offset uniform
// over the valid range. Clips shorter than the requested length are
// zero-padded at the end.
AudioClip random_crop(const AudioClip& clip, double length_seconds, Rng& rng);

// Deterministic variant used for validation: crop centered in the clip.
AudioClip center_crop(const AudioClip& clip, double length_seconds);

// Header-only duration probe; cheaper than read_wav for pool scans.
double probe_wav_duration(const std::string& path);

}  // namespace sigbak

#endif  // SIGBAK_AUDIO_H_
