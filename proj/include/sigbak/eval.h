// include/sigbak/eval.h

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

#ifndef SIGBAK_EVAL_H_
#define SIGBAK_EVAL_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigbak/manifest.h"
#include "sigbak/model.h"

namespace sigbak {

// Pearson correlation. Inputs must have equal length >= 2 and neither
// may be constant (undefined correlation is an error, never a silent
// zero or NaN).
double pearson_lcc(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation: Pearson over average ranks, ties averaged.
double spearman_srcc(std::span<const double> x, std::span<const double> y);

// Average ranks (1-based) with ties averaged; exposed for rank oracles.
std::vector<double> average_ranks(std::span<const double> x);

struct MetricRow {
  double lcc = 0.0;
  double srcc = 0.0;
  double mse = 0.0;
  size_t n = 0;
};

struct EvalReport {
  std::optional<MetricRow> bak, sig, ovrl_a, ovrl_p;
  std::map<std::string, std::string> omitted;  // metric -> reason
  size_t skipped_unreadable = 0;
  // Correlation between ground-truth OVRL and the mean of ground-truth
  // SIG and BAK; a label-only sanity analysis.
  std::optional<double> ovrl_vs_sigbak_mean_lcc;
  std::string manifest_path;
  std::string sig_ckpt_hash, bak_ckpt_hash, ovrl_head_hash;
};

// Per-metric prediction/ground-truth vectors; the reduction core of
// evaluate, exposed so metric assembly is testable with injected values.
struct MetricVectors {
  std::vector<double> preds, truths;
};
EvalReport evaluate_vectors(const std::map<std::string, MetricVectors>& per_metric);

// Runs whole-clip inference over every manifest entry and reports
// LCC/SRCC/MSE per metric against the entries' labels. Unreadable audio
// skips the entry (counted); metrics with fewer than two labels or a
// constant vector are omitted with a reason. OVRL-by-averaging is always
// derived from the two predictions; OVRL-by-prediction only when a head
// is supplied. Entries are processed in id order, so row order in the
// manifest cannot change the report.
EvalReport evaluate(const Checkpoint& ckpt_sig, const Checkpoint& ckpt_bak,
                    const OvrlHead* ovrl_head, const Manifest& manifest,
                    int jobs = 1);

// Text table in the BAK / SIG / OVRL_A / OVRL_P layout, three decimals,
// "--" for missing metrics.
std::string report_to_text(const EvalReport& report);

// Versioned JSON with stable field order; round-trips through
// report_from_json.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace sigbak

#endif  // SIGBAK_EVAL_H_
