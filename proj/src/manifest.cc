// src/manifest.cc

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

#include "sigbak/manifest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "sigbak/audio.h"
#include "sigbak/error.h"

namespace sigbak {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char* to_string(SourceKind k) {
  switch (k) {
    case SourceKind::clean_natural: return "clean_natural";
    case SourceKind::clean_spoofed: return "clean_spoofed";
    case SourceKind::noise: return "noise";
  }
  return "clean_natural";
}

SourceKind source_kind_from_string(const std::string& s) {
  if (s == "clean_natural") return SourceKind::clean_natural;
  if (s == "clean_spoofed") return SourceKind::clean_spoofed;
  if (s == "noise") return SourceKind::noise;
  throw InvalidArgError("unknown source kind: " + s);
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::clean: return "clean";
    case Provenance::noisy: return "noisy";
    case Provenance::reverbed: return "reverbed";
    case Provenance::enhanced: return "enhanced";
    case Provenance::dereverbed: return "dereverbed";
    case Provenance::codec: return "codec";
    case Provenance::spoofed_clean: return "spoofed_clean";
    case Provenance::spoofed_noisy: return "spoofed_noisy";
  }
  return "clean";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "clean") return Provenance::clean;
  if (s == "noisy") return Provenance::noisy;
  if (s == "reverbed") return Provenance::reverbed;
  if (s == "enhanced") return Provenance::enhanced;
  if (s == "dereverbed") return Provenance::dereverbed;
  if (s == "codec") return Provenance::codec;
  if (s == "spoofed_clean") return Provenance::spoofed_clean;
  if (s == "spoofed_noisy") return Provenance::spoofed_noisy;
  throw InvalidArgError("unknown provenance: " + s);
}

std::string resolve_audio_path(const Manifest& m, const LabeledUtterance& e) {
  fs::path p(e.path);
  if (p.is_absolute() || m.base_dir.empty()) return e.path;
  return (fs::path(m.base_dir) / p).string();
}

double snr_to_bak_label(double snr_db) {
  return std::clamp(2.0 + 0.05 * snr_db, 1.0, 5.0);
}

double clean_bak_label() { return 5.0; }

std::optional<double> sig_label(Provenance p) {
  switch (p) {
    case Provenance::clean:
    case Provenance::noisy:
    case Provenance::reverbed:
      return 5.0;
    case Provenance::spoofed_clean:
    case Provenance::spoofed_noisy:
    case Provenance::enhanced:
    case Provenance::dereverbed:
      return 1.0;
    case Provenance::codec:
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

void check_score(const std::optional<double>& v, const char* field,
                 size_t line_no) {
  if (v && (*v < 1.0 || *v > 5.0))
    throw FormatError("manifest line " + std::to_string(line_no) + ": " +
                      field + " outside [1, 5]");
}

LabeledUtterance entry_from_json(const json& j, size_t line_no) {
  LabeledUtterance e;
  if (!j.contains("id") || !j["id"].is_string())
    throw FormatError("manifest line " + std::to_string(line_no) +
                      ": missing required field 'id'");
  if (!j.contains("path") || !j["path"].is_string())
    throw FormatError("manifest line " + std::to_string(line_no) +
                      ": missing required field 'path'");
  e.id = j["id"].get<std::string>();
  e.path = j["path"].get<std::string>();
  if (j.contains("provenance")) {
    try {
      e.provenance = provenance_from_string(j["provenance"].get<std::string>());
    } catch (const Error& err) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": " +
                        err.what());
    }
  }
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  e.snr_db = opt("snr_db");
  e.sig = opt("sig");
  e.bak = opt("bak");
  e.ovrl = opt("ovrl");

  check_score(e.sig, "sig", line_no);
  check_score(e.bak, "bak", line_no);
  check_score(e.ovrl, "ovrl", line_no);
  const bool snr_provenance = e.provenance == Provenance::noisy ||
                              e.provenance == Provenance::spoofed_noisy;
  if (e.snr_db.has_value() != snr_provenance)
    throw FormatError("manifest line " + std::to_string(line_no) +
                      ": snr_db must be present exactly for noisy or "
                      "spoofed_noisy provenance");
  return e;
}

json entry_to_json(const LabeledUtterance& e) {
  json j;
  j["id"] = e.id;
  j["path"] = e.path;
  j["provenance"] = to_string(e.provenance);
  if (e.snr_db) j["snr_db"] = *e.snr_db;
  if (e.sig) j["sig"] = *e.sig;
  if (e.bak) j["bak"] = *e.bak;
  if (e.ovrl) j["ovrl"] = *e.ovrl;
  return j;
}

}  // namespace

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open manifest: " + path);

  Manifest m;
  m.base_dir = fs::path(path).parent_path().string();
  std::unordered_set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": invalid JSON: " + path);
    }
    LabeledUtterance e = entry_from_json(j, line_no);
    if (!seen.insert(e.id).second)
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": duplicate id '" + e.id + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileError("cannot write manifest: " + path);
  for (const auto& e : m.entries) out << entry_to_json(e).dump() << "\n";
  if (!out) throw FileError("manifest write failed: " + path);
}

std::string segment_group(const std::string& id) {
  // Generated ids look like "<stem>_clean" or "<stem>_snr<level>"; both
  // map to <stem>. Anything else is its own group.
  const size_t pos = id.rfind('_');
  if (pos == std::string::npos) return id;
  const std::string suffix = id.substr(pos + 1);
  if (suffix == "clean" || suffix.rfind("snr", 0) == 0)
    return id.substr(0, pos);
  return id;
}

std::pair<Manifest, Manifest> split_train_val(const Manifest& m, double ratio,
                                              Rng& rng) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw InvalidArgError("split_train_val: ratio must lie in (0, 1)");

  std::vector<std::string> groups;
  std::set<std::string> seen;
  for (const auto& e : m.entries) {
    const std::string g = segment_group(e.id);
    if (seen.insert(g).second) groups.push_back(g);
  }
  rng.shuffle(groups);

  const size_t n_train = static_cast<size_t>(std::llround(
      ratio * static_cast<double>(groups.size())));
  std::unordered_set<std::string> train_groups(
      groups.begin(), groups.begin() + std::min(n_train, groups.size()));

  Manifest train, valid;
  train.split = Split::train;
  valid.split = Split::valid;
  train.base_dir = m.base_dir;
  valid.base_dir = m.base_dir;
  for (const auto& e : m.entries) {
    if (train_groups.count(segment_group(e.id)))
      train.entries.push_back(e);
    else
      valid.entries.push_back(e);
  }
  return {std::move(train), std::move(valid)};
}

namespace {

std::string strip_wav(const std::string& s) {
  if (s.size() > 4 && s.compare(s.size() - 4, 4, ".wav") == 0)
    return s.substr(0, s.size() - 4);
  return s;
}

}  // namespace

ExclusionResult apply_exclusion_list(const Manifest& m,
                                     const std::vector<std::string>& ids) {
  std::unordered_set<std::string> excluded;
  for (const auto& id : ids) excluded.insert(strip_wav(id));

  ExclusionResult result;
  result.kept.split = m.split;
  result.kept.base_dir = m.base_dir;
  for (const auto& e : m.entries) {
    if (excluded.count(strip_wav(e.id)))
      ++result.removed;
    else
      result.kept.entries.push_back(e);
  }
  return result;
}

std::vector<std::string> read_id_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open id list: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::vector<SourceEntry> read_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open pool file: " + path);

  const std::string base = fs::path(path).parent_path().string();
  std::vector<SourceEntry> pool;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw FormatError("pool line " + std::to_string(line_no) +
                        ": invalid JSON: " + path);
    }
    SourceEntry e;
    if (!j.contains("path") || !j["path"].is_string())
      throw FormatError("pool line " + std::to_string(line_no) +
                        ": missing required field 'path'");
    e.path = j["path"].get<std::string>();
    if (!fs::path(e.path).is_absolute() && !base.empty())
      e.path = (fs::path(base) / e.path).string();
    if (j.contains("kind"))
      e.kind = source_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("category")) e.category = j["category"].get<std::string>();
    if (j.contains("duration") && !j["duration"].is_null())
      e.duration_seconds = j["duration"].get<double>();
    else
      e.duration_seconds = probe_wav_duration(e.path);

    if (e.kind == SourceKind::noise && e.category.empty())
      throw FormatError("pool line " + std::to_string(line_no) +
                        ": noise entries must carry a category");
    if (e.kind == SourceKind::clean_spoofed && e.category.empty())
      throw FormatError("pool line " + std::to_string(line_no) +
                        ": spoofed entries must carry a spoofing-system id");
    pool.push_back(std::move(e));
  }
  return pool;
}

void write_pool(const std::vector<SourceEntry>& pool, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileError("cannot write pool file: " + path);
  for (const auto& e : pool) {
    json j;
    j["path"] = e.path;
    j["kind"] = to_string(e.kind);
    if (!e.category.empty()) j["category"] = e.category;
    j["duration"] = e.duration_seconds;
    out << j.dump() << "\n";
  }
}

}  // namespace sigbak
