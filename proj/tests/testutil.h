// tests/testutil.h

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

#ifndef SIGBAK_TESTS_TESTUTIL_H_
#define SIGBAK_TESTS_TESTUTIL_H_

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "sigbak/audio.h"
#include "sigbak/manifest.h"
#include "sigbak/rng.h"

namespace sigbak::test {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const int id = counter.fetch_add(1);
    path_ = (std::filesystem::temp_directory_path() /
             ("sigbak_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(id)))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }

 private:
  std::string path_;
};

inline AudioClip make_sine(double freq_hz, double seconds, double amp,
                           int rate = kCanonicalRate) {
  AudioClip clip;
  clip.sample_rate = rate;
  const int64_t n = static_cast<int64_t>(std::llround(seconds * rate));
  clip.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    clip.samples[i] = static_cast<float>(
        amp * std::sin(2.0 * 3.14159265358979323846 * freq_hz * i / rate));
  return clip;
}

inline AudioClip make_white_noise(double seconds, double amp, Rng& rng,
                                  int rate = kCanonicalRate) {
  AudioClip clip;
  clip.sample_rate = rate;
  const int64_t n = static_cast<int64_t>(std::llround(seconds * rate));
  clip.samples.resize(static_cast<size_t>(n));
  for (auto& s : clip.samples)
    s = static_cast<float>(amp * (2.0 * rng.uniform() - 1.0));
  return clip;
}

// Speech-like test signal: modulated tone bursts separated by silences,
// so the active level genuinely differs from the plain RMS.
inline AudioClip make_speechlike(double seconds, Rng& rng,
                                 int rate = kCanonicalRate) {
  AudioClip clip;
  clip.sample_rate = rate;
  const int64_t n = static_cast<int64_t>(std::llround(seconds * rate));
  clip.samples.assign(static_cast<size_t>(n), 0.0f);
  int64_t pos = 0;
  while (pos < n) {
    const int64_t burst = static_cast<int64_t>(rng.uniform(0.08, 0.25) * rate);
    const int64_t pause = static_cast<int64_t>(rng.uniform(0.04, 0.15) * rate);
    const double f0 = rng.uniform(120.0, 400.0);
    const double amp = rng.uniform(0.2, 0.5);
    for (int64_t i = 0; i < burst && pos + i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      const double env = std::sin(3.14159265358979323846 * i / burst);
      clip.samples[pos + i] = static_cast<float>(
          amp * env *
          (std::sin(2 * 3.14159265358979323846 * f0 * t) +
           0.5 * std::sin(2 * 3.14159265358979323846 * 2.3 * f0 * t)));
    }
    pos += burst + pause;
  }
  return clip;
}

// Writes a pool of synthetic speech and noise wavs plus pool manifests;
// the workhorse behind corpus and CLI tests.
struct SynthPools {
  std::vector<SourceEntry> clean;
  std::vector<SourceEntry> noise;
};

inline SynthPools make_pools(const std::string& dir, int n_clean, int n_noise,
                             uint64_t seed, double clip_seconds = 2.0,
                             bool with_spoofed = false) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  SynthPools pools;
  Rng rng(seed);
  for (int i = 0; i < n_clean; ++i) {
    Rng clip_rng(rng.fork(static_cast<uint64_t>(i)).uniform_int(UINT64_MAX - 1));
    AudioClip clip = make_speechlike(clip_seconds, clip_rng);
    const std::string path =
        (fs::path(dir) / ("clean" + std::to_string(i) + ".wav")).string();
    write_wav(clip, path);
    SourceEntry e;
    e.path = path;
    e.kind = SourceKind::clean_natural;
    e.duration_seconds = clip.duration_seconds();
    if (with_spoofed && i % 2 == 1) {
      e.kind = SourceKind::clean_spoofed;
      e.category = "sysA";
    }
    pools.clean.push_back(e);
  }
  for (int i = 0; i < n_noise; ++i) {
    Rng clip_rng(rng.fork(1000 + static_cast<uint64_t>(i)).uniform_int(UINT64_MAX - 1));
    AudioClip clip = make_white_noise(clip_seconds, 0.3, clip_rng);
    const std::string path =
        (fs::path(dir) / ("noise" + std::to_string(i) + ".wav")).string();
    write_wav(clip, path);
    SourceEntry e;
    e.path = path;
    e.kind = SourceKind::noise;
    e.category = i % 2 == 0 ? "rain" : "traffic";
    e.duration_seconds = clip.duration_seconds();
    pools.noise.push_back(e);
  }
  return pools;
}

}  // namespace sigbak::test

#endif  // SIGBAK_TESTS_TESTUTIL_H_
