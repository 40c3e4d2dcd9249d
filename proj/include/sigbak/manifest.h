// include/sigbak/manifest.h

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

#ifndef SIGBAK_MANIFEST_H_
#define SIGBAK_MANIFEST_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sigbak/rng.h"

namespace sigbak {

enum class SourceKind { clean_natural, clean_spoofed, noise };

const char* to_string(SourceKind k);
SourceKind source_kind_from_string(const std::string& s);

// One file in a source pool. `category` is the noise category for noise
// entries ("rain", ...) and the spoofing-system id for spoofed entries.
struct SourceEntry {
  std::string path;
  SourceKind kind = SourceKind::clean_natural;
  std::string category;
  double duration_seconds = 0.0;
};

enum class Provenance {
  clean,
  noisy,
  reverbed,
  enhanced,
  dereverbed,
  codec,
  spoofed_clean,
  spoofed_noisy,
};

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct LabeledUtterance {
  std::string id;
  std::string path;
  Provenance provenance = Provenance::clean;
  std::optional<double> snr_db;  // present iff noisy / spoofed_noisy
  std::optional<double> sig;     // each score in [1, 5]
  std::optional<double> bak;
  std::optional<double> ovrl;

  bool operator==(const LabeledUtterance&) const = default;
};

enum class Split { train, valid, eval, unsplit };

struct Manifest {
  std::vector<LabeledUtterance> entries;
  Split split = Split::unsplit;
  // Directory relative entry paths resolve against; set by read_manifest,
  // not serialized.
  std::string base_dir;

  bool operator==(const Manifest& other) const {
    return entries == other.entries && split == other.split;
  }
};

// Resolves an entry's audio path against the manifest location.
std::string resolve_audio_path(const Manifest& m, const LabeledUtterance& e);

// SNR -> background label: 2 + 0.05 * snr, clamped to [1, 5].
double snr_to_bak_label(double snr_db);

// Background label of unmixed clean speech: exactly 5.
double clean_bak_label();

// Signal label by provenance: natural-sounding provenances map to 5,
// processed ones to 1, codec round trips to no label at all (such
// utterances are excluded from SIG corpora).
std::optional<double> sig_label(Provenance p);

// JSON-lines manifest I/O. One utterance per line with fields
// id, path, provenance, snr_db?, sig?, bak?, ovrl?; optional fields are
// omitted when absent. Errors report the offending line number.
Manifest read_manifest(const std::string& path);
void write_manifest(const Manifest& m, const std::string& path);

// The clean-segment group an id belongs to: all SNR variants of one
// generated segment share a group so splits cannot leak a segment across
// sides. Foreign ids form singleton groups.
std::string segment_group(const std::string& id);

// Disjoint split by segment group; the train side receives
// round(ratio * #groups) groups.
std::pair<Manifest, Manifest> split_train_val(const Manifest& m, double ratio,
                                              Rng& rng);

struct ExclusionResult {
  Manifest kept;
  size_t removed = 0;
};

// Removes entries whose id matches the list; a trailing ".wav" on either
// side is ignored when matching.
ExclusionResult apply_exclusion_list(const Manifest& m,
                                     const std::vector<std::string>& ids);

// Plain-text id list, one per line; blank lines skipped.
std::vector<std::string> read_id_list(const std::string& path);

// Pool files are JSON lines with fields path, kind, category?, duration?.
// Durations absent from the file are probed from the wav headers.
std::vector<SourceEntry> read_pool(const std::string& path);
void write_pool(const std::vector<SourceEntry>& pool, const std::string& path);

}  // namespace sigbak

#endif  // SIGBAK_MANIFEST_H_
