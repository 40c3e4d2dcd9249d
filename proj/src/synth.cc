// src/synth.cc

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

#include "sigbak/synth.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "sigbak/error.h"

namespace sigbak {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

AudioClip load_canonical(const std::string& path) {
  AudioClip clip = read_wav(path);
  if (clip.sample_rate != kCanonicalRate) clip = resample(clip, kCanonicalRate);
  return clip;
}

// Concatenates the given files (already chosen) and truncates to
// target_samples; pass 0 to keep everything.
AudioClip concat_files(const std::vector<std::string>& paths,
                       int64_t target_samples) {
  AudioClip out;
  out.sample_rate = kCanonicalRate;
  for (const auto& p : paths) {
    AudioClip c = load_canonical(p);
    out.samples.insert(out.samples.end(), c.samples.begin(), c.samples.end());
    if (target_samples > 0 &&
        out.num_samples() >= target_samples)
      break;
  }
  if (target_samples > 0 && out.num_samples() > target_samples)
    out.samples.resize(static_cast<size_t>(target_samples));
  return out;
}

// Chooses entries (with replacement) until their nominal durations cover
// target_seconds.
std::vector<std::string> choose_files(const std::vector<const SourceEntry*>& pool,
                                      double target_seconds, Rng& rng) {
  std::vector<std::string> chosen;
  double acc = 0.0;
  while (acc < target_seconds) {
    const SourceEntry* e = pool[rng.uniform_int(pool.size())];
    chosen.push_back(e->path);
    acc += std::max(e->duration_seconds, 1e-3);
  }
  return chosen;
}

std::string format_level(double level) {
  const long rounded = std::lround(level);
  if (std::abs(level - static_cast<double>(rounded)) < 1e-9)
    return std::to_string(rounded);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", level);
  std::string s(buf);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

std::string segment_id(const std::string& prefix, size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix.c_str(), index);
  return buf;
}

void run_parallel(size_t count, int jobs, const std::function<void(size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;
  const int n_workers = std::min<int>(jobs, static_cast<int>(count));
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) first_error = e.what();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failed.load()) throw Error(first_error);
}

// ---------------------------------------------------------------------
// Clean + SNR-ladder recipe shared by the BAK and SIG corpora
// ---------------------------------------------------------------------

struct SegmentPlan {
  size_t index = 0;
  uint64_t seed = 0;
  double target_seconds = 0.0;
  std::vector<std::string> clean_files;
  Provenance clean_provenance = Provenance::clean;
  std::string noise_category;
  std::vector<std::string> noise_files;
};

struct ComponentRecord {
  std::string id;
  std::string clean_path;
  std::string noise_path;
  double noise_gain = 0.0;
  double peak_rescale = 1.0;
};

struct RealizedSegment {
  std::vector<LabeledUtterance> entries;
  std::vector<ComponentRecord> components;
};

void validate_pools(const std::vector<SourceEntry>& clean_pool,
                    const std::vector<SourceEntry>& noise_pool) {
  if (clean_pool.empty() || noise_pool.empty())
    throw InvalidArgError("insufficient pool duration: empty pool");
  double clean_dur = 0.0, noise_dur = 0.0;
  for (const auto& e : clean_pool) {
    if (e.kind == SourceKind::noise)
      throw InvalidArgError("clean pool contains a noise entry: " + e.path);
    clean_dur += e.duration_seconds;
  }
  for (const auto& e : noise_pool) {
    if (e.kind != SourceKind::noise)
      throw InvalidArgError("noise pool contains a non-noise entry: " + e.path);
    noise_dur += e.duration_seconds;
  }
  if (clean_dur <= 0.0 || noise_dur <= 0.0)
    throw InvalidArgError("insufficient pool duration: zero-length pool");
}

// Sub-pools a clean segment may draw from: all natural entries together,
// spoofed entries split per spoofing system.
struct CleanGroups {
  std::vector<const SourceEntry*> natural;
  std::map<std::string, std::vector<const SourceEntry*>> spoofed;
  size_t natural_count = 0, spoofed_count = 0;
};

CleanGroups group_clean_pool(const std::vector<SourceEntry>& pool) {
  CleanGroups g;
  for (const auto& e : pool) {
    if (e.kind == SourceKind::clean_natural) {
      g.natural.push_back(&e);
      ++g.natural_count;
    } else if (e.kind == SourceKind::clean_spoofed) {
      g.spoofed[e.category].push_back(&e);
      ++g.spoofed_count;
    }
  }
  return g;
}

std::vector<SegmentPlan> plan_segments(const std::vector<SourceEntry>& clean_pool,
                                       const std::vector<SourceEntry>& noise_pool,
                                       double total_hours, double min_seconds,
                                       double max_seconds, Rng& rng) {
  CleanGroups groups = group_clean_pool(clean_pool);

  std::map<std::string, std::vector<const SourceEntry*>> noise_by_category;
  for (const auto& e : noise_pool) noise_by_category[e.category].push_back(&e);
  std::vector<std::string> categories;
  for (const auto& [cat, _] : noise_by_category) categories.push_back(cat);

  std::vector<std::string> systems;
  for (const auto& [sys, _] : groups.spoofed) systems.push_back(sys);

  const double want_seconds = total_hours * 3600.0;
  std::vector<SegmentPlan> plans;
  double acc = 0.0;
  do {
    SegmentPlan plan;
    plan.index = plans.size();
    plan.seed = rng.fork(plan.index).uniform_int(UINT64_MAX - 1);
    plan.target_seconds = rng.uniform(min_seconds, max_seconds);

    // Natural vs spoofed in proportion to pool membership.
    const bool pick_spoofed =
        groups.spoofed_count > 0 &&
        (groups.natural_count == 0 ||
         rng.uniform() * (groups.natural_count + groups.spoofed_count) >=
             static_cast<double>(groups.natural_count));
    if (pick_spoofed) {
      const std::string& sys = systems[rng.uniform_int(systems.size())];
      plan.clean_files = choose_files(groups.spoofed.at(sys),
                                      plan.target_seconds, rng);
      plan.clean_provenance = Provenance::spoofed_clean;
    } else {
      plan.clean_files = choose_files(groups.natural, plan.target_seconds, rng);
      plan.clean_provenance = Provenance::clean;
    }

    plan.noise_category = categories[rng.uniform_int(categories.size())];
    plan.noise_files = choose_files(noise_by_category.at(plan.noise_category),
                                    plan.target_seconds, rng);

    acc += plan.target_seconds;
    plans.push_back(std::move(plan));
  } while (acc < want_seconds);
  return plans;
}

RealizedSegment realize_segment(const SegmentPlan& plan,
                                const CorpusConfig& cfg,
                                const std::string& out_dir) {
  const std::string id = segment_id(cfg.file_prefix, plan.index);

  const int64_t target_samples = static_cast<int64_t>(
      std::llround(plan.target_seconds * kCanonicalRate));
  AudioClip speech = concat_files(plan.clean_files, target_samples);
  AudioClip noise = concat_files(plan.noise_files, 0);

  RealizedSegment out;

  const std::string clean_rel = "audio/" + id + "_clean.wav";
  write_wav(speech, (fs::path(out_dir) / clean_rel).string());
  LabeledUtterance clean_entry;
  clean_entry.id = id + "_clean";
  clean_entry.path = clean_rel;
  clean_entry.provenance = plan.clean_provenance;
  out.entries.push_back(clean_entry);

  Rng mix_rng(plan.seed);
  const auto rungs = snr_ladder(speech, noise, cfg.snr_levels_db, mix_rng);
  for (const auto& rung : rungs) {
    const std::string name = id + "_snr" + format_level(rung.snr_db);
    const std::string rel = "audio/" + name + ".wav";
    write_wav(rung.mix.mixture, (fs::path(out_dir) / rel).string());

    LabeledUtterance e;
    e.id = name;
    e.path = rel;
    e.provenance = plan.clean_provenance == Provenance::spoofed_clean
                       ? Provenance::spoofed_noisy
                       : Provenance::noisy;
    e.snr_db = rung.snr_db;
    out.entries.push_back(e);

    if (cfg.keep_components) {
      const std::string noise_rel = "audio/" + name + "_noise.wav";
      write_wav(rung.mix.noise_segment,
                (fs::path(out_dir) / noise_rel).string());
      out.components.push_back({e.id, clean_rel, noise_rel,
                                rung.mix.noise_gain, rung.mix.peak_rescale});
    }
  }
  return out;
}

Manifest run_recipe(const std::vector<SourceEntry>& clean_pool,
                    const std::vector<SourceEntry>& noise_pool,
                    const CorpusConfig& cfg, Rng& rng,
                    const std::string& out_dir) {
  validate_pools(clean_pool, noise_pool);
  fs::create_directories(fs::path(out_dir) / "audio");

  const std::vector<SegmentPlan> plans =
      plan_segments(clean_pool, noise_pool, cfg.total_hours,
                    cfg.min_segment_seconds, cfg.max_segment_seconds, rng);

  std::vector<RealizedSegment> realized(plans.size());
  run_parallel(plans.size(), cfg.jobs, [&](size_t i) {
    realized[i] = realize_segment(plans[i], cfg, out_dir);
  });

  Manifest manifest;
  manifest.base_dir = out_dir;
  std::vector<ComponentRecord> components;
  for (const auto& r : realized) {
    manifest.entries.insert(manifest.entries.end(), r.entries.begin(),
                            r.entries.end());
    components.insert(components.end(), r.components.begin(),
                      r.components.end());
  }

  std::unordered_set<std::string> ids;
  for (const auto& e : manifest.entries)
    if (!ids.insert(e.id).second)
      throw InvalidArgError("duplicate output id (duplicate SNR level?): " +
                            e.id);

  if (cfg.keep_components) {
    std::ofstream comp(fs::path(out_dir) /
                       (cfg.file_prefix + "_components.jsonl"));
    for (const auto& c : components) {
      json j;
      j["id"] = c.id;
      j["clean_path"] = c.clean_path;
      j["noise_path"] = c.noise_path;
      j["noise_gain"] = c.noise_gain;
      j["peak_rescale"] = c.peak_rescale;
      comp << j.dump() << "\n";
    }
  }
  return manifest;
}

}  // namespace

SegmentResult build_clean_segment(const std::vector<SourceEntry>& pool,
                                  double target_seconds, Rng& rng) {
  if (pool.empty()) throw InvalidArgError("build_clean_segment: empty pool");
  const SourceKind kind = pool.front().kind;
  if (kind == SourceKind::noise)
    throw InvalidArgError("build_clean_segment: noise entries in clean pool");
  for (const auto& e : pool) {
    if (e.kind != kind)
      throw InvalidArgError("build_clean_segment: mixed entry kinds");
    if (kind == SourceKind::clean_spoofed &&
        e.category != pool.front().category)
      throw InvalidArgError(
          "build_clean_segment: spoofed pool mixes spoofing systems");
  }

  std::vector<const SourceEntry*> ptrs;
  for (const auto& e : pool) ptrs.push_back(&e);
  const std::vector<std::string> chosen =
      choose_files(ptrs, target_seconds, rng);
  const int64_t target_samples =
      static_cast<int64_t>(std::llround(target_seconds * kCanonicalRate));

  SegmentResult result;
  result.clip = concat_files(chosen, target_samples);
  result.provenance = kind == SourceKind::clean_spoofed
                          ? Provenance::spoofed_clean
                          : Provenance::clean;
  return result;
}

Manifest generate_bak_corpus(const std::vector<SourceEntry>& clean_pool,
                             const std::vector<SourceEntry>& noise_pool,
                             const CorpusConfig& cfg, Rng& rng,
                             const std::string& out_dir) {
  Manifest m = run_recipe(clean_pool, noise_pool, cfg, rng, out_dir);
  for (auto& e : m.entries)
    e.bak = e.snr_db ? snr_to_bak_label(*e.snr_db) : clean_bak_label();
  return m;
}

Manifest generate_sig_corpus(const std::vector<SourceEntry>& clean_pool,
                             const std::vector<SourceEntry>& noise_pool,
                             const Manifest& degraded, const CorpusConfig& cfg,
                             std::optional<size_t> degraded_cap, Rng& rng,
                             const std::string& out_dir) {
  Manifest m = run_recipe(clean_pool, noise_pool, cfg, rng, out_dir);
  for (auto& e : m.entries) e.sig = sig_label(e.provenance);

  // Degraded entries join with sig_label applied; codec files carry no
  // label and are dropped.
  std::vector<size_t> picked(degraded.entries.size());
  for (size_t i = 0; i < picked.size(); ++i) picked[i] = i;
  if (degraded_cap && *degraded_cap < picked.size()) {
    rng.shuffle(picked);
    picked.resize(*degraded_cap);
    std::sort(picked.begin(), picked.end());
  }
  for (size_t i : picked) {
    const LabeledUtterance& src = degraded.entries[i];
    const std::optional<double> label = sig_label(src.provenance);
    if (!label) continue;
    LabeledUtterance e = src;
    e.path = resolve_audio_path(degraded, src);
    e.sig = label;
    e.bak.reset();
    e.ovrl.reset();
    m.entries.push_back(std::move(e));
  }

  std::unordered_set<std::string> ids;
  for (const auto& e : m.entries)
    if (!ids.insert(e.id).second)
      throw InvalidArgError("duplicate id after degraded merge: " + e.id);
  return m;
}

Manifest generate_degraded_corpus(const std::vector<SourceEntry>& clean_pool,
                                  const std::vector<SourceEntry>& noise_pool,
                                  const DegradedCorpusConfig& cfg, Rng& rng,
                                  const std::string& out_dir) {
  validate_pools(clean_pool, noise_pool);
  if (cfg.tags.empty())
    throw InvalidArgError("generate_degraded_corpus: no degradation tags");
  fs::create_directories(fs::path(out_dir) / "audio");

  CorpusConfig base;
  base.min_segment_seconds = cfg.min_segment_seconds;
  base.max_segment_seconds = cfg.max_segment_seconds;
  std::vector<SegmentPlan> plans =
      plan_segments(clean_pool, noise_pool, cfg.total_hours,
                    cfg.min_segment_seconds, cfg.max_segment_seconds, rng);

  // Per-plan degradation choices, drawn up front so realization order
  // cannot matter.
  struct Choice {
    DegradationKind kind;
  };
  std::vector<Choice> choices(plans.size());
  for (size_t i = 0; i < plans.size(); ++i) {
    Rng pick(Rng::mix(plans[i].seed, 0x5EEDu));
    DegradationKind k;
    k.tag = cfg.tags[pick.uniform_int(cfg.tags.size())];
    k.snr_db = pick.uniform(cfg.min_snr_db, cfg.max_snr_db);
    k.rt60_seconds = pick.uniform(cfg.min_rt60, cfg.max_rt60);
    k.artifact_variant = static_cast<ArtifactVariant>(pick.uniform_int(3));
    k.codec_variant = static_cast<CodecVariant>(pick.uniform_int(3));
    choices[i].kind = k;
  }

  std::vector<std::vector<LabeledUtterance>> realized(plans.size());
  run_parallel(plans.size(), cfg.jobs, [&](size_t i) {
    const SegmentPlan& plan = plans[i];
    const DegradationKind& kind = choices[i].kind;
    Rng work(plan.seed);

    const int64_t target_samples = static_cast<int64_t>(
        std::llround(plan.target_seconds * kCanonicalRate));
    AudioClip speech = concat_files(plan.clean_files, target_samples);

    AudioClip processed;
    LabeledUtterance e;
    e.id = segment_id(cfg.file_prefix, plan.index);
    const bool spoofed = plan.clean_provenance == Provenance::spoofed_clean;

    switch (kind.tag) {
      case DegradationTag::none: {
        processed = speech;
        e.provenance = spoofed ? Provenance::spoofed_clean : Provenance::clean;
        break;
      }
      case DegradationTag::additive_noise: {
        AudioClip noise = concat_files(plan.noise_files, 0);
        const int64_t offset = static_cast<int64_t>(
            work.uniform_int(static_cast<uint64_t>(noise.num_samples())));
        MixResult mix = mix_at_snr(speech, noise, kind.snr_db, offset);
        processed = std::move(mix.mixture);
        e.provenance = spoofed ? Provenance::spoofed_noisy : Provenance::noisy;
        e.snr_db = kind.snr_db;
        break;
      }
      case DegradationTag::reverb: {
        AudioClip rir = synth_rir(kind.rt60_seconds, work);
        processed = reverberate(speech, rir);
        e.provenance = Provenance::reverbed;
        break;
      }
      case DegradationTag::enhancement_artifact: {
        AudioClip noise = concat_files(plan.noise_files, 0);
        const int64_t offset = static_cast<int64_t>(
            work.uniform_int(static_cast<uint64_t>(noise.num_samples())));
        MixResult mix = mix_at_snr(speech, noise, work.uniform(0.0, 20.0), offset);
        processed = enhance_artifact(mix.mixture, kind.artifact_variant);
        e.provenance = Provenance::enhanced;
        break;
      }
      case DegradationTag::dereverb_artifact: {
        AudioClip rir = synth_rir(kind.rt60_seconds, work);
        AudioClip reverbed = reverberate(speech, rir);
        const ArtifactVariant v = work.uniform() < 0.5
                                      ? ArtifactVariant::spectral_subtract
                                      : ArtifactVariant::oversmooth;
        processed = enhance_artifact(reverbed, v);
        e.provenance = Provenance::dereverbed;
        break;
      }
      case DegradationTag::codec: {
        processed = cfg.external_codec_cmd.empty()
                        ? codec_degrade(speech, kind.codec_variant)
                        : codec_degrade_external(
                              speech, cfg.external_codec_cmd,
                              (fs::path(out_dir) / "tmp" / e.id).string());
        e.provenance = Provenance::codec;
        break;
      }
    }

    const std::string rel = "audio/" + e.id + ".wav";
    write_wav(processed, (fs::path(out_dir) / rel).string());
    e.path = rel;
    realized[i].push_back(std::move(e));
  });

  Manifest manifest;
  manifest.base_dir = out_dir;
  for (const auto& r : realized)
    manifest.entries.insert(manifest.entries.end(), r.begin(), r.end());
  return manifest;
}

}  // namespace sigbak
