// src/eval.cc

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

#include "sigbak/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sigbak/error.h"

namespace sigbak {

namespace {

using json = nlohmann::ordered_json;

void check_corr_input(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidArgError("correlation: length mismatch");
  if (x.size() < 2)
    throw InvalidArgError("correlation: need at least 2 points");
  auto constant = [](std::span<const double> v) {
    for (size_t i = 1; i < v.size(); ++i)
      if (v[i] != v[0]) return false;
    return true;
  };
  if (constant(x) || constant(y))
    throw InvalidArgError("correlation: constant input is undefined");
}

}  // namespace

double pearson_lcc(std::span<const double> x, std::span<const double> y) {
  check_corr_input(x, y);
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&x](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_srcc(std::span<const double> x, std::span<const double> y) {
  check_corr_input(x, y);
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson_lcc(rx, ry);
}

EvalReport evaluate_vectors(
    const std::map<std::string, MetricVectors>& per_metric) {
  EvalReport report;
  for (const auto& [name, vecs] : per_metric) {
    if (vecs.truths.size() < 2) {
      report.omitted[name] = "fewer than 2 labeled entries";
      continue;
    }
    MetricRow row;
    row.n = vecs.truths.size();
    row.mse = mse_loss(vecs.preds, vecs.truths);
    try {
      row.lcc = pearson_lcc(vecs.preds, vecs.truths);
      row.srcc = spearman_srcc(vecs.preds, vecs.truths);
    } catch (const InvalidArgError& e) {
      report.omitted[name] = e.what();
      continue;
    }
    if (name == "bak") report.bak = row;
    else if (name == "sig") report.sig = row;
    else if (name == "ovrl_a") report.ovrl_a = row;
    else if (name == "ovrl_p") report.ovrl_p = row;
  }
  return report;
}

EvalReport evaluate(const Checkpoint& ckpt_sig, const Checkpoint& ckpt_bak,
                    const OvrlHead* ovrl_head, const Manifest& manifest,
                    int jobs) {
  // Canonical processing order: by id. A permuted manifest then yields
  // an identical report, float summation order included.
  std::vector<const LabeledUtterance*> entries;
  for (const auto& e : manifest.entries) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(),
            [](const LabeledUtterance* a, const LabeledUtterance* b) {
              return a->id < b->id;
            });

  struct Row {
    bool ok = false;
    double sig = 0.0, bak = 0.0, ovrl_p = 0.0;
  };
  std::vector<Row> rows(entries.size());

  auto run_one = [&](size_t i) {
    try {
      AudioClip clip = read_wav(resolve_audio_path(manifest, *entries[i]));
      if (clip.sample_rate != kCanonicalRate)
        clip = resample(clip, kCanonicalRate);
      rows[i].sig = predict(ckpt_sig, clip);
      rows[i].bak = predict(ckpt_bak, clip);
      if (ovrl_head)
        rows[i].ovrl_p = predict_ovrl_p(ckpt_sig, ckpt_bak, *ovrl_head, clip);
      rows[i].ok = true;
    } catch (const Error&) {
      rows[i].ok = false;
    }
  };
  if (jobs <= 1 || entries.size() <= 1) {
    for (size_t i = 0; i < entries.size(); ++i) run_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    const int n_workers =
        std::min<int>(jobs, static_cast<int>(entries.size()));
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < entries.size();
             i = next.fetch_add(1))
          run_one(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  std::map<std::string, MetricVectors> per_metric;
  per_metric["bak"];
  per_metric["sig"];
  per_metric["ovrl_a"];
  if (ovrl_head) per_metric["ovrl_p"];

  std::vector<double> gt_sig, gt_bak, gt_ovrl;  // for the label analysis
  size_t skipped = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    const LabeledUtterance& e = *entries[i];
    if (!rows[i].ok) {
      ++skipped;
      continue;
    }
    if (e.bak) {
      per_metric["bak"].preds.push_back(rows[i].bak);
      per_metric["bak"].truths.push_back(*e.bak);
    }
    if (e.sig) {
      per_metric["sig"].preds.push_back(rows[i].sig);
      per_metric["sig"].truths.push_back(*e.sig);
    }
    if (e.ovrl) {
      per_metric["ovrl_a"].preds.push_back(
          predict_ovrl_a(rows[i].sig, rows[i].bak));
      per_metric["ovrl_a"].truths.push_back(*e.ovrl);
      if (ovrl_head) {
        per_metric["ovrl_p"].preds.push_back(rows[i].ovrl_p);
        per_metric["ovrl_p"].truths.push_back(*e.ovrl);
      }
    }
    if (e.sig && e.bak && e.ovrl) {
      gt_sig.push_back(*e.sig);
      gt_bak.push_back(*e.bak);
      gt_ovrl.push_back(*e.ovrl);
    }
  }

  EvalReport report = evaluate_vectors(per_metric);
  report.skipped_unreadable = skipped;
  if (gt_ovrl.size() >= 2) {
    std::vector<double> mean_sb(gt_ovrl.size());
    for (size_t i = 0; i < gt_ovrl.size(); ++i)
      mean_sb[i] = predict_ovrl_a(gt_sig[i], gt_bak[i]);
    try {
      report.ovrl_vs_sigbak_mean_lcc = pearson_lcc(gt_ovrl, mean_sb);
    } catch (const InvalidArgError&) {
      // Constant labels; the analysis stays absent.
    }
  }
  return report;
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string cell(const std::optional<MetricRow>& row, int field) {
  if (!row) return "--";
  switch (field) {
    case 0: return fmt3(row->lcc);
    case 1: return fmt3(row->srcc);
    case 2: return fmt3(row->mse);
    default: return std::to_string(row->n);
  }
}

json row_to_json(const std::optional<MetricRow>& row) {
  if (!row) return nullptr;
  json j;
  j["lcc"] = row->lcc;
  j["srcc"] = row->srcc;
  j["mse"] = row->mse;
  j["n"] = row->n;
  return j;
}

std::optional<MetricRow> row_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  MetricRow row;
  row.lcc = j.at("lcc").get<double>();
  row.srcc = j.at("srcc").get<double>();
  row.mse = j.at("mse").get<double>();
  row.n = j.at("n").get<size_t>();
  return row;
}

}  // namespace

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out << "metric      BAK       SIG       OVRL_A    OVRL_P\n";
  const char* names[4] = {"LCC", "SRCC", "MSE", "n"};
  for (int f = 0; f < 4; ++f) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %-9s %-9s %-9s %-9s\n", names[f],
                  cell(report.bak, f).c_str(), cell(report.sig, f).c_str(),
                  cell(report.ovrl_a, f).c_str(), cell(report.ovrl_p, f).c_str());
    out << line;
  }
  for (const auto& [metric, reason] : report.omitted)
    out << "omitted " << metric << ": " << reason << "\n";
  if (report.skipped_unreadable > 0)
    out << "skipped unreadable entries: " << report.skipped_unreadable << "\n";
  if (report.ovrl_vs_sigbak_mean_lcc)
    out << "LCC(ovrl labels, mean of sig/bak labels): "
        << fmt3(*report.ovrl_vs_sigbak_mean_lcc) << "\n";
  if (!report.manifest_path.empty())
    out << "manifest: " << report.manifest_path << "\n";
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["report_version"] = 1;
  j["manifest"] = report.manifest_path;
  j["checkpoints"] = {{"sig", report.sig_ckpt_hash},
                      {"bak", report.bak_ckpt_hash},
                      {"ovrl_head", report.ovrl_head_hash}};
  j["metrics"] = {{"bak", row_to_json(report.bak)},
                  {"sig", row_to_json(report.sig)},
                  {"ovrl_a", row_to_json(report.ovrl_a)},
                  {"ovrl_p", row_to_json(report.ovrl_p)}};
  j["omitted"] = report.omitted;
  j["skipped_unreadable"] = report.skipped_unreadable;
  j["ovrl_vs_sigbak_mean_lcc"] = report.ovrl_vs_sigbak_mean_lcc
                                     ? json(*report.ovrl_vs_sigbak_mean_lcc)
                                     : json(nullptr);
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw FormatError("invalid report JSON");
  }
  if (!j.contains("report_version") || j["report_version"].get<int>() != 1)
    throw FormatError("unknown report version");
  EvalReport report;
  report.manifest_path = j.at("manifest").get<std::string>();
  report.sig_ckpt_hash = j.at("checkpoints").at("sig").get<std::string>();
  report.bak_ckpt_hash = j.at("checkpoints").at("bak").get<std::string>();
  report.ovrl_head_hash = j.at("checkpoints").at("ovrl_head").get<std::string>();
  const json& metrics = j.at("metrics");
  report.bak = row_from_json(metrics.at("bak"));
  report.sig = row_from_json(metrics.at("sig"));
  report.ovrl_a = row_from_json(metrics.at("ovrl_a"));
  report.ovrl_p = row_from_json(metrics.at("ovrl_p"));
  report.omitted = j.at("omitted").get<std::map<std::string, std::string>>();
  report.skipped_unreadable = j.at("skipped_unreadable").get<size_t>();
  if (!j.at("ovrl_vs_sigbak_mean_lcc").is_null())
    report.ovrl_vs_sigbak_mean_lcc =
        j.at("ovrl_vs_sigbak_mean_lcc").get<double>();
  return report;
}

}  // namespace sigbak
