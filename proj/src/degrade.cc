// src/degrade.cc

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

#include "sigbak/degrade.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>

#include "sigbak/error.h"
#include "sigbak/fft.h"

namespace sigbak {

namespace {

constexpr double kPi = 3.14159265358979323846;

float peak_abs(const std::vector<float>& v) {
  float peak = 0.0f;
  for (float s : v) peak = std::max(peak, std::abs(s));
  return peak;
}

// STFT helper shared by the artifact simulators: periodic Hann analysis
// window at half-window hop (shifted windows sum to one, so plain
// overlap-add reconstructs the input when magnitudes are untouched).
struct Stft {
  size_t nfft = 512;
  size_t hop = 256;
  size_t num_frames = 0;
  size_t padded_len = 0;
  std::vector<std::vector<std::complex<double>>> frames;

  explicit Stft(const AudioClip& clip) {
    const size_t n = clip.samples.size();
    num_frames = n == 0 ? 0 : (n + hop - 1) / hop;
    padded_len = num_frames * hop + (nfft - hop);
    std::vector<double> window(nfft);
    for (size_t i = 0; i < nfft; ++i)
      window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / nfft));
    frames.resize(num_frames);
    for (size_t t = 0; t < num_frames; ++t) {
      auto& f = frames[t];
      f.assign(nfft, {0.0, 0.0});
      const size_t s = t * hop;
      for (size_t i = 0; i < nfft; ++i) {
        const size_t idx = s + i;
        const double x = idx < n ? clip.samples[idx] : 0.0;
        f[i] = x * window[i];
      }
      fft_inplace(f, false);
    }
  }

  AudioClip overlap_add(size_t out_len, int sample_rate) const {
    std::vector<double> acc(padded_len, 0.0);
    for (size_t t = 0; t < num_frames; ++t) {
      auto f = frames[t];
      fft_inplace(f, true);
      const size_t s = t * hop;
      for (size_t i = 0; i < nfft; ++i) acc[s + i] += f[i].real();
    }
    AudioClip out;
    out.sample_rate = sample_rate;
    out.samples.resize(out_len);
    for (size_t i = 0; i < out_len; ++i)
      out.samples[i] = static_cast<float>(i < acc.size() ? acc[i] : 0.0);
    return out;
  }
};

// Zero-phase low-pass FIR (Kaiser-windowed sinc), preserving length.
std::vector<float> lowpass(const std::vector<float>& x, double cutoff_hz,
                           int sample_rate) {
  const int half = 64;
  const double fc = cutoff_hz / (sample_rate / 2.0);  // fraction of Nyquist
  const double beta = 8.0;
  auto i0 = [](double v) {
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
      term *= (v / 2.0 / k) * (v / 2.0 / k);
      sum += term;
      if (term < 1e-12 * sum) break;
    }
    return sum;
  };
  const double i0_beta = i0(beta);
  std::vector<float> h(2 * half + 1);
  for (int i = -half; i <= half; ++i) {
    const double u = static_cast<double>(i);
    const double s =
        std::abs(u) < 1e-12 ? fc : std::sin(kPi * fc * u) / (kPi * u);
    const double r = u / half;
    const double w = i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[i + half] = static_cast<float>(s * w);
  }
  std::vector<float> full = fft_convolve(x, h);
  // Compensate the filter delay so the output stays aligned.
  std::vector<float> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = full[i + half];
  return out;
}

}  // namespace

const char* to_string(DegradationTag tag) {
  switch (tag) {
    case DegradationTag::none: return "none";
    case DegradationTag::additive_noise: return "additive_noise";
    case DegradationTag::reverb: return "reverb";
    case DegradationTag::enhancement_artifact: return "enhancement_artifact";
    case DegradationTag::dereverb_artifact: return "dereverb_artifact";
    case DegradationTag::codec: return "codec";
  }
  return "none";
}

const char* to_string(CodecVariant v) {
  switch (v) {
    case CodecVariant::mulaw8: return "mulaw8";
    case CodecVariant::bandlimit3k4: return "bandlimit3k4";
    case CodecVariant::bitcrush6: return "bitcrush6";
  }
  return "mulaw8";
}

const char* to_string(ArtifactVariant v) {
  switch (v) {
    case ArtifactVariant::spectral_subtract: return "spectral_subtract";
    case ArtifactVariant::oversmooth: return "oversmooth";
    case ArtifactVariant::clip_distort: return "clip_distort";
  }
  return "spectral_subtract";
}

CodecVariant codec_variant_from_string(const std::string& s) {
  if (s == "mulaw8") return CodecVariant::mulaw8;
  if (s == "bandlimit3k4") return CodecVariant::bandlimit3k4;
  if (s == "bitcrush6") return CodecVariant::bitcrush6;
  throw InvalidArgError("unknown codec variant: " + s);
}

ArtifactVariant artifact_variant_from_string(const std::string& s) {
  if (s == "spectral_subtract") return ArtifactVariant::spectral_subtract;
  if (s == "oversmooth") return ArtifactVariant::oversmooth;
  if (s == "clip_distort") return ArtifactVariant::clip_distort;
  throw InvalidArgError("unknown artifact variant: " + s);
}

const std::vector<double>& default_snr_levels() {
  static const std::vector<double> kLevels = {-20, -10, 0, 10, 20, 30, 40, 50};
  return kLevels;
}

MixResult mix_at_snr(const AudioClip& speech, const AudioClip& noise,
                     double snr_db, int64_t noise_offset) {
  if (speech.sample_rate != noise.sample_rate)
    throw InvalidArgError("mix_at_snr: sample rates differ");
  if (speech.samples.empty() || noise.samples.empty())
    throw InvalidArgError("mix_at_snr: empty input");

  const int64_t n = speech.num_samples();
  const int64_t m = noise.num_samples();

  MixResult result;
  result.noise_segment.sample_rate = noise.sample_rate;
  result.noise_segment.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const int64_t j = (noise_offset + i) % m;
    result.noise_segment.samples[i] = noise.samples[static_cast<size_t>(j)];
  }

  const double speech_level = active_speech_level(speech);
  const double noise_level = rms(result.noise_segment);
  if (speech_level <= 0.0) throw InvalidArgError("mix_at_snr: silent speech");
  if (noise_level <= 0.0) throw InvalidArgError("mix_at_snr: silent noise");

  const double g = speech_level / noise_level * std::pow(10.0, -snr_db / 20.0);
  result.noise_gain = g;

  result.mixture.sample_rate = speech.sample_rate;
  result.mixture.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    result.mixture.samples[i] = static_cast<float>(
        static_cast<double>(speech.samples[i]) +
        g * result.noise_segment.samples[i]);
  }

  const float peak = peak_abs(result.mixture.samples);
  if (peak > 1.0f) {
    const double r = 0.99 / peak;
    result.peak_rescale = r;
    for (auto& s : result.mixture.samples)
      s = static_cast<float>(static_cast<double>(s) * r);
  }
  return result;
}

std::vector<LadderRung> snr_ladder(const AudioClip& speech,
                                   const AudioClip& noise,
                                   const std::vector<double>& levels,
                                   Rng& rng) {
  if (levels.empty()) throw InvalidArgError("snr_ladder: no levels");
  std::vector<LadderRung> rungs;
  rungs.reserve(levels.size());
  for (double level : levels) {
    const int64_t offset = static_cast<int64_t>(
        rng.uniform_int(static_cast<uint64_t>(noise.num_samples())));
    rungs.push_back({level, mix_at_snr(speech, noise, level, offset)});
  }
  return rungs;
}

AudioClip synth_rir(double rt60_seconds, Rng& rng, int sample_rate) {
  if (rt60_seconds < 0.1 || rt60_seconds > 1.5)
    throw InvalidArgError("synth_rir: rt60 must lie in [0.1, 1.5] s");

  const int64_t len = static_cast<int64_t>(
      std::llround(1.5 * rt60_seconds * sample_rate));
  // Amplitude envelope reaching -60 dB at rt60: exp(-ln(1000) t / rt60).
  const double decay = 6.9077552789821368 / (rt60_seconds * sample_rate);

  AudioClip rir;
  rir.sample_rate = sample_rate;
  rir.samples.resize(static_cast<size_t>(len));
  rir.samples[0] = 1.0f;  // unit direct path
  for (int64_t i = 1; i < len; ++i) {
    rir.samples[i] = static_cast<float>(
        rng.gauss() * std::exp(-decay * static_cast<double>(i)));
  }

  double energy = 0.0;
  for (float s : rir.samples) energy += static_cast<double>(s) * s;
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& s : rir.samples)
    s = static_cast<float>(static_cast<double>(s) * scale);
  return rir;
}

AudioClip reverberate(const AudioClip& clip, const AudioClip& rir) {
  if (clip.sample_rate != rir.sample_rate)
    throw InvalidArgError("reverberate: sample rates differ");
  if (clip.samples.empty() || rir.samples.empty()) return clip;

  std::vector<float> full = fft_convolve(clip.samples, rir.samples);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(full.begin(), full.begin() + clip.num_samples());

  const float peak = peak_abs(out.samples);
  if (peak > 0.99f) {
    const double r = 0.99 / peak;
    for (auto& s : out.samples)
      s = static_cast<float>(static_cast<double>(s) * r);
  }
  return out;
}

namespace {

AudioClip codec_mulaw8(const AudioClip& clip) {
  const double mu = 255.0;
  const double log1p_mu = std::log1p(mu);
  AudioClip out = clip;
  for (auto& s : out.samples) {
    const double x = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const double y = std::copysign(std::log1p(mu * std::abs(x)) / log1p_mu, x);
    const double q = std::clamp(std::round(y * 128.0), -128.0, 127.0) / 128.0;
    const double back =
        std::copysign((std::pow(1.0 + mu, std::abs(q)) - 1.0) / mu, q);
    s = static_cast<float>(back);
  }
  return out;
}

AudioClip codec_bandlimit3k4(const AudioClip& clip) {
  AudioClip filtered = clip;
  filtered.samples = lowpass(clip.samples, 3400.0, clip.sample_rate);
  AudioClip narrow = resample(filtered, 8000);
  AudioClip back = resample(narrow, clip.sample_rate);
  back.samples.resize(clip.samples.size(), 0.0f);  // length-match
  return back;
}

AudioClip codec_bitcrush6(const AudioClip& clip) {
  AudioClip out = clip;
  for (auto& s : out.samples) {
    const double x = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const double q = std::clamp(std::round(x * 32.0), -32.0, 31.0) / 32.0;
    s = static_cast<float>(q);
  }
  return out;
}

}  // namespace

AudioClip codec_degrade(const AudioClip& clip, CodecVariant variant) {
  if (clip.sample_rate != kCanonicalRate)
    throw InvalidArgError("codec_degrade: clip must be at the canonical rate");
  switch (variant) {
    case CodecVariant::mulaw8: return codec_mulaw8(clip);
    case CodecVariant::bandlimit3k4: return codec_bandlimit3k4(clip);
    case CodecVariant::bitcrush6: return codec_bitcrush6(clip);
  }
  throw InvalidArgError("codec_degrade: unknown variant");
}

namespace {

AudioClip artifact_spectral_subtract(const AudioClip& clip) {
  Stft stft(clip);
  const size_t num_bins = stft.nfft / 2 + 1;

  // Noise floor: per-bin mean magnitude over all frames. Oversubtracting
  // 1.5x of it and rectifying is the textbook musical-noise generator.
  std::vector<double> floor_mag(num_bins, 0.0);
  for (const auto& f : stft.frames)
    for (size_t k = 0; k < num_bins; ++k) floor_mag[k] += std::abs(f[k]);
  for (auto& v : floor_mag)
    v /= std::max<size_t>(1, stft.num_frames);

  for (auto& f : stft.frames) {
    for (size_t k = 0; k < num_bins; ++k) {
      const double mag = std::abs(f[k]);
      const double sub = std::max(0.0, mag - 1.5 * floor_mag[k]);
      const double scale = mag > 0.0 ? sub / mag : 0.0;
      f[k] *= scale;
      if (k > 0 && k < stft.nfft - k) f[stft.nfft - k] *= scale;
    }
  }
  return stft.overlap_add(clip.samples.size(), clip.sample_rate);
}

AudioClip artifact_oversmooth(const AudioClip& clip) {
  Stft stft(clip);
  const size_t num_bins = stft.nfft / 2 + 1;

  std::vector<double> floor_pow(num_bins, 0.0);
  for (const auto& f : stft.frames)
    for (size_t k = 0; k < num_bins; ++k) floor_pow[k] += std::norm(f[k]);
  for (auto& v : floor_pow)
    v /= std::max<size_t>(1, stft.num_frames);

  // Wiener-style gains, smoothed hard across time and frequency.
  std::vector<double> gain(num_bins, 0.3);
  for (auto& f : stft.frames) {
    std::vector<double> raw(num_bins);
    for (size_t k = 0; k < num_bins; ++k) {
      const double p = std::norm(f[k]);
      raw[k] = p / (p + 2.0 * floor_pow[k] + 1e-12);
    }
    std::vector<double> freq_smoothed(num_bins);
    for (size_t k = 0; k < num_bins; ++k) {
      double acc = 0.0;
      int cnt = 0;
      for (int d = -4; d <= 4; ++d) {
        const int64_t j = static_cast<int64_t>(k) + d;
        if (j >= 0 && j < static_cast<int64_t>(num_bins)) {
          acc += raw[static_cast<size_t>(j)];
          ++cnt;
        }
      }
      freq_smoothed[k] = acc / cnt;
    }
    for (size_t k = 0; k < num_bins; ++k) {
      gain[k] = 0.9 * gain[k] + 0.1 * freq_smoothed[k];
      const double g = std::max(0.05, gain[k]);
      f[k] *= g;
      if (k > 0 && k < stft.nfft - k) f[stft.nfft - k] *= g;
    }
  }
  return stft.overlap_add(clip.samples.size(), clip.sample_rate);
}

AudioClip artifact_clip_distort(const AudioClip& clip) {
  const float orig_peak = peak_abs(clip.samples);
  AudioClip out = clip;
  for (auto& s : out.samples) s = std::clamp(s, -0.5f, 0.5f);
  const float new_peak = peak_abs(out.samples);
  if (new_peak > 0.0f && orig_peak > new_peak) {
    const double r = static_cast<double>(orig_peak) / new_peak;
    for (auto& s : out.samples)
      s = static_cast<float>(static_cast<double>(s) * r);
  }
  return out;
}

}  // namespace

AudioClip enhance_artifact(const AudioClip& clip, ArtifactVariant variant) {
  if (clip.sample_rate != kCanonicalRate)
    throw InvalidArgError("enhance_artifact: clip must be at the canonical rate");
  switch (variant) {
    case ArtifactVariant::spectral_subtract: return artifact_spectral_subtract(clip);
    case ArtifactVariant::oversmooth: return artifact_oversmooth(clip);
    case ArtifactVariant::clip_distort: return artifact_clip_distort(clip);
  }
  throw InvalidArgError("enhance_artifact: unknown variant");
}

AudioClip codec_degrade_external(const AudioClip& clip,
                                 const std::string& command_template,
                                 const std::string& work_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(work_dir);
  const std::string in_path = (fs::path(work_dir) / "codec_in.wav").string();
  const std::string out_path = (fs::path(work_dir) / "codec_out.wav").string();
  write_wav(clip, in_path);

  std::string cmd = command_template;
  auto replace_all = [&cmd](const std::string& key, const std::string& value) {
    size_t pos = 0;
    while ((pos = cmd.find(key, pos)) != std::string::npos) {
      cmd.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  replace_all("{in}", in_path);
  replace_all("{out}", out_path);

  const int rc = std::system(cmd.c_str());
  if (rc != 0)
    throw Error("external codec command failed (exit " + std::to_string(rc) +
                "): " + cmd);

  AudioClip out = read_wav(out_path);
  if (out.sample_rate != clip.sample_rate) out = resample(out, clip.sample_rate);
  out.samples.resize(clip.samples.size(), 0.0f);
  return out;
}

}  // namespace sigbak
