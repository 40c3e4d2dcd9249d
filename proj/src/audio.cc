// src/audio.cc

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

#include "sigbak/audio.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <limits>

#include "sigbak/fft.h"

namespace sigbak {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------
// RIFF plumbing
// ---------------------------------------------------------------------

struct WavFormat {
  uint16_t audio_format = 0;  // 1 = PCM, 3 = IEEE float
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
  uint16_t block_align = 0;
};

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
}

struct WavChunks {
  WavFormat fmt;
  std::vector<uint8_t> data;
};

// Walks the chunk list and returns the fmt description plus raw data
// bytes. Throws on structural problems; encoding checks happen later.
WavChunks parse_wav(const std::string& path, bool data_needed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open wav file: " + path);

  uint8_t riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12))
    throw FormatError("malformed RIFF header (file too short): " + path);
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
    throw FormatError("malformed RIFF header: " + path);

  WavChunks result;
  bool have_fmt = false, have_data = false;
  while (true) {
    uint8_t head[8];
    if (!in.read(reinterpret_cast<char*>(head), 8)) break;
    const uint32_t size = read_u32(head + 4);
    if (std::memcmp(head, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("malformed fmt chunk: " + path);
      std::vector<uint8_t> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size))
        throw FormatError("truncated fmt chunk: " + path);
      result.fmt.audio_format = read_u16(fmt.data());
      result.fmt.channels = read_u16(fmt.data() + 2);
      result.fmt.sample_rate = read_u32(fmt.data() + 4);
      result.fmt.block_align = read_u16(fmt.data() + 12);
      result.fmt.bits_per_sample = read_u16(fmt.data() + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the GUID.
      if (result.fmt.audio_format == 0xFFFE && size >= 26) {
        result.fmt.audio_format = read_u16(fmt.data() + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(head, "data", 4) == 0) {
      if (data_needed) {
        result.data.resize(size);
        if (!in.read(reinterpret_cast<char*>(result.data.data()), size))
          throw FormatError("truncated data chunk: " + path);
      } else {
        result.data.resize(size);  // size only; skip the payload
        in.seekg(size + (size & 1), std::ios::cur);
      }
      have_data = true;
      if (have_fmt) break;
      continue;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
      continue;
    }
    if (have_fmt && have_data) break;
  }
  if (!have_fmt || !have_data)
    throw FormatError("missing fmt or data chunk: " + path);
  if (result.fmt.channels == 0 || result.fmt.sample_rate == 0)
    throw FormatError("invalid fmt fields: " + path);
  return result;
}

// ---------------------------------------------------------------------
// Kaiser window helpers for the resampler
// ---------------------------------------------------------------------

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-12 * sum) break;
  }
  return sum;
}

double sinc(double u) {
  if (std::abs(u) < 1e-12) return 1.0;
  return std::sin(kPi * u) / (kPi * u);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  WavChunks wav = parse_wav(path, /*data_needed=*/true);
  const WavFormat& fmt = wav.fmt;

  const bool pcm16 = fmt.audio_format == 1 && fmt.bits_per_sample == 16;
  const bool float32 = fmt.audio_format == 3 && fmt.bits_per_sample == 32;
  if (!pcm16 && !float32)
    throw UnsupportedError("unsupported wav encoding (format " +
                           std::to_string(fmt.audio_format) + ", " +
                           std::to_string(fmt.bits_per_sample) + " bit): " + path);

  const size_t bytes_per_sample = fmt.bits_per_sample / 8;
  const size_t frame_bytes = bytes_per_sample * fmt.channels;
  const size_t num_frames = wav.data.size() / frame_bytes;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.samples.resize(num_frames);
  const uint8_t* p = wav.data.data();
  const double inv_channels = 1.0 / fmt.channels;
  for (size_t i = 0; i < num_frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < fmt.channels; ++c) {
      const uint8_t* s = p + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        const int16_t v = static_cast<int16_t>(read_u16(s));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += v;
      }
    }
    clip.samples[i] = static_cast<float>(acc * inv_channels);
  }
  return clip;
}

void write_wav(const AudioClip& clip, const std::string& path) {
  const uint32_t n = static_cast<uint32_t>(clip.samples.size());
  const uint32_t data_bytes = n * 2;

  std::vector<uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (uint32_t i = 0; i < n; ++i) {
    const double x = std::clamp(static_cast<double>(clip.samples[i]), -1.0, 1.0);
    long v = std::lround(x * 32768.0);
    v = std::clamp(v, -32768l, 32767l);
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FileError("cannot write wav file: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw FileError("write failed: " + path);
}

double probe_wav_duration(const std::string& path) {
  WavChunks wav = parse_wav(path, /*data_needed=*/false);
  const size_t frame_bytes =
      static_cast<size_t>(wav.fmt.bits_per_sample / 8) * wav.fmt.channels;
  if (frame_bytes == 0) throw FormatError("invalid fmt fields: " + path);
  const size_t num_frames = wav.data.size() / frame_bytes;
  return static_cast<double>(num_frames) / wav.fmt.sample_rate;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw InvalidArgError("resample: target rate must be > 0");
  if (target_rate == clip.sample_rate || clip.samples.empty()) {
    AudioClip out = clip;
    out.sample_rate = target_rate;
    if (clip.samples.empty()) return out;
    return clip;
  }

  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const int64_t out_len = static_cast<int64_t>(
      std::llround(static_cast<double>(clip.samples.size()) * ratio));
  const double cutoff = std::min(1.0, ratio);  // fraction of source Nyquist
  const int kTapsPerSide = 32;
  const double half_width = kTapsPerSide / cutoff;
  const double beta = 8.0;
  const double i0_beta = bessel_i0(beta);
  const int64_t n = static_cast<int64_t>(clip.samples.size());

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<size_t>(out_len));
  for (int64_t i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) / ratio;
    const int64_t j0 = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(t - half_width)));
    const int64_t j1 = std::min<int64_t>(n - 1, static_cast<int64_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (int64_t j = j0; j <= j1; ++j) {
      const double u = t - static_cast<double>(j);
      const double r = u / half_width;
      const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
      acc += static_cast<double>(clip.samples[static_cast<size_t>(j)]) *
             cutoff * sinc(cutoff * u) * win;
    }
    out.samples[static_cast<size_t>(i)] = static_cast<float>(acc);
  }
  return out;
}

double rms(const AudioClip& clip) {
  if (clip.samples.empty()) throw InvalidArgError("rms: empty clip");
  double acc = 0.0;
  for (float s : clip.samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(clip.samples.size()));
}

double active_speech_level(const AudioClip& clip) {
  if (clip.samples.empty())
    throw InvalidArgError("active_speech_level: empty clip");

  const int64_t frame = std::max<int64_t>(
      1, static_cast<int64_t>(std::llround(0.025 * clip.sample_rate)));
  const int64_t n = clip.num_samples();

  // Per-frame mean-square energies; the trailing partial frame counts.
  std::vector<double> energy;
  std::vector<int64_t> start, len;
  for (int64_t s = 0; s < n; s += frame) {
    const int64_t l = std::min(frame, n - s);
    double acc = 0.0;
    for (int64_t i = s; i < s + l; ++i)
      acc += static_cast<double>(clip.samples[i]) * clip.samples[i];
    energy.push_back(acc / static_cast<double>(l));
    start.push_back(s);
    len.push_back(l);
  }
  const double max_energy = *std::max_element(energy.begin(), energy.end());
  const double threshold = max_energy * 1e-4;  // 40 dB below the peak frame

  double acc = 0.0;
  int64_t count = 0;
  for (size_t f = 0; f < energy.size(); ++f) {
    if (max_energy > 0.0 && energy[f] >= threshold) {
      for (int64_t i = start[f]; i < start[f] + len[f]; ++i)
        acc += static_cast<double>(clip.samples[i]) * clip.samples[i];
      count += len[f];
    }
  }
  if (count == 0) return rms(clip);
  return std::sqrt(acc / static_cast<double>(count));
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

double mel_band_center_hz(const LogMelConfig& cfg, int sample_rate, int band) {
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  const double step = mel_max / (cfg.n_mels + 1);
  return mel_to_hz(step * (band + 1));
}

FrameMatrix log_mel(const AudioClip& clip, const LogMelConfig& cfg) {
  if (clip.sample_rate != kCanonicalRate)
    throw InvalidArgError("log_mel: clip must be at the canonical rate");
  const int win = static_cast<int>(std::llround(cfg.win_seconds * clip.sample_rate));
  const int hop = static_cast<int>(std::llround(cfg.hop_seconds * clip.sample_rate));
  const int64_t n = clip.num_samples();
  if (n < win) throw InvalidArgError("log_mel: clip shorter than one window");

  const int num_frames = static_cast<int>((n - win) / hop) + 1;
  const size_t nfft = next_pow2(static_cast<size_t>(win));
  const int num_bins = static_cast<int>(nfft / 2) + 1;

  // Hann window (periodic form).
  std::vector<double> window(static_cast<size_t>(win));
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / win));

  // Triangular filterbank, HTK mel spacing over [0, Nyquist].
  const double mel_max = hz_to_mel(clip.sample_rate / 2.0);
  std::vector<double> mel_points(static_cast<size_t>(cfg.n_mels) + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    mel_points[m] = mel_to_hz(mel_max * m / (cfg.n_mels + 1));
  const double bin_hz = static_cast<double>(clip.sample_rate) / static_cast<double>(nfft);
  std::vector<std::vector<std::pair<int, double>>> bank(static_cast<size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = mel_points[m], mid = mel_points[m + 1], hi = mel_points[m + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f < mid) w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) w = (hi - f) / (hi - mid);
      if (w > 0.0) bank[m].emplace_back(k, w);
    }
  }

  FrameMatrix out;
  out.num_frames = num_frames;
  out.num_bins = cfg.n_mels;
  out.frame_hop_seconds = cfg.hop_seconds;
  out.data.resize(static_cast<size_t>(num_frames) * cfg.n_mels);

  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> mag(static_cast<size_t>(num_bins));
  for (int t = 0; t < num_frames; ++t) {
    const int64_t s = static_cast<int64_t>(t) * hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < win; ++i)
      buf[i] = static_cast<double>(clip.samples[s + i]) * window[i];
    fft_inplace(buf, false);
    for (int k = 0; k < num_bins; ++k) mag[k] = std::abs(buf[k]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (const auto& [k, w] : bank[m]) e += w * mag[k];
      out.at(t, m) = static_cast<float>(std::log(e + cfg.floor));
    }
  }
  return out;
}

AudioClip random_crop(const AudioClip& clip, double length_seconds, Rng& rng) {
  if (length_seconds <= 0.0)
    throw InvalidArgError("random_crop: length must be > 0");
  const int64_t want = static_cast<int64_t>(std::llround(length_seconds * clip.sample_rate));
  const int64_t n = clip.num_samples();

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(static_cast<size_t>(want), 0.0f);
  if (n >= want) {
    const int64_t start =
        static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n - want + 1)));
    std::copy(clip.samples.begin() + start, clip.samples.begin() + start + want,
              out.samples.begin());
  } else {
    std::copy(clip.samples.begin(), clip.samples.end(), out.samples.begin());
  }
  return out;
}

AudioClip center_crop(const AudioClip& clip, double length_seconds) {
  if (length_seconds <= 0.0)
    throw InvalidArgError("center_crop: length must be > 0");
  const int64_t want = static_cast<int64_t>(std::llround(length_seconds * clip.sample_rate));
  const int64_t n = clip.num_samples();

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(static_cast<size_t>(want), 0.0f);
  if (n >= want) {
    const int64_t start = (n - want) / 2;
    std::copy(clip.samples.begin() + start, clip.samples.begin() + start + want,
              out.samples.begin());
  } else {
    std::copy(clip.samples.begin(), clip.samples.end(), out.samples.begin());
  }
  return out;
}

}  // namespace sigbak
