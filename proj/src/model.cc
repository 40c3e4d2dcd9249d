// src/model.cc

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

#include "sigbak/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "sigbak/error.h"

namespace sigbak {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {

using json = nlohmann::ordered_json;

std::string layer_name(size_t layer, const char* part) {
  return "trunk." + std::to_string(layer) + "." + part;
}

// ---------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------

// Per-frame activations of one clip, kept for the backward pass.
struct ForwardState {
  size_t num_frames = 0;
  std::vector<double> input;               // T x F, normalized features
  std::vector<std::vector<double>> pre;    // per layer: T x width
  std::vector<double> embedding;           // mean-pooled trunk output
  double pred = 0.0;                       // unclamped head output
};

void normalized_features(const EncoderModel& model, const FrameMatrix& fm,
                         std::vector<double>& out) {
  const double offset = model.frontend.normalize_offset;
  const double scale = model.frontend.normalize_scale;
  out.resize(fm.data.size());
  for (size_t i = 0; i < fm.data.size(); ++i)
    out[i] = (static_cast<double>(fm.data[i]) + offset) / scale;
}

ForwardState forward(const Checkpoint& ckpt, const FrameMatrix& fm) {
  const EncoderModel& model = ckpt.encoder;
  const size_t num_layers = model.trunk_widths.size();
  const size_t T = static_cast<size_t>(fm.num_frames);

  ForwardState st;
  st.num_frames = T;
  normalized_features(model, fm, st.input);

  st.pre.resize(num_layers);
  const double* act = st.input.data();
  size_t act_dim = static_cast<size_t>(fm.num_bins);
  std::vector<std::vector<double>> post(num_layers);
  for (size_t l = 0; l < num_layers; ++l) {
    const Tensor& w = model.tensors[2 * l];
    const Tensor& b = model.tensors[2 * l + 1];
    const size_t out_dim = static_cast<size_t>(model.trunk_widths[l]);
    st.pre[l].resize(T * out_dim);
    post[l].resize(T * out_dim);
    for (size_t t = 0; t < T; ++t) {
      const double* x = act + t * act_dim;
      for (size_t o = 0; o < out_dim; ++o) {
        const float* wrow = w.data.data() + o * act_dim;
        double acc = b.data[o];
        for (size_t i = 0; i < act_dim; ++i)
          acc += static_cast<double>(wrow[i]) * x[i];
        st.pre[l][t * out_dim + o] = acc;
        post[l][t * out_dim + o] = acc > 0.0 ? acc : 0.0;
      }
    }
    act = post[l].data();
    act_dim = out_dim;
  }

  st.embedding.assign(act_dim, 0.0);
  for (size_t t = 0; t < T; ++t)
    for (size_t i = 0; i < act_dim; ++i)
      st.embedding[i] += act[t * act_dim + i];
  const double inv_t = 1.0 / static_cast<double>(T);
  for (auto& v : st.embedding) v *= inv_t;

  double pred = ckpt.head.bias.data[0];
  for (size_t i = 0; i < act_dim; ++i)
    pred += static_cast<double>(ckpt.head.weight.data[i]) * st.embedding[i];
  st.pred = pred;

  // The backward pass re-derives post-activations from pre, so only keep
  // what it needs; `post` dies here.
  return st;
}

// Gradient buffers aligned with encoder tensors followed by the head.
struct GradBuffers {
  std::vector<std::string> names;
  std::vector<std::vector<double>> grads;

  explicit GradBuffers(const Checkpoint& ckpt) {
    for (const auto& t : ckpt.encoder.tensors) {
      names.push_back(t.name);
      grads.emplace_back(static_cast<size_t>(t.size()), 0.0);
    }
    names.push_back("head.weight");
    grads.emplace_back(ckpt.head.weight.data.size(), 0.0);
    names.push_back("head.bias");
    grads.emplace_back(1, 0.0);
  }
};

// Accumulates d(loss)/d(params) for one clip given dL/dpred.
void backward(const Checkpoint& ckpt, const ForwardState& st, double g_pred,
              GradBuffers& out) {
  const EncoderModel& model = ckpt.encoder;
  const size_t num_layers = model.trunk_widths.size();
  const size_t T = st.num_frames;
  const size_t D = st.embedding.size();

  std::vector<double>& g_wh = out.grads[out.grads.size() - 2];
  std::vector<double>& g_bh = out.grads[out.grads.size() - 1];
  for (size_t i = 0; i < D; ++i) g_wh[i] += g_pred * st.embedding[i];
  g_bh[0] += g_pred;

  std::vector<double> g_emb(D);
  for (size_t i = 0; i < D; ++i)
    g_emb[i] = g_pred * static_cast<double>(ckpt.head.weight.data[i]) /
               static_cast<double>(T);

  std::vector<double> g_cur, g_prev;
  for (size_t t = 0; t < T; ++t) {
    g_cur = g_emb;
    for (size_t l = num_layers; l-- > 0;) {
      const Tensor& w = model.tensors[2 * l];
      const size_t out_dim = static_cast<size_t>(model.trunk_widths[l]);
      const size_t in_dim = static_cast<size_t>(w.shape[1]);
      const double* pre = st.pre[l].data() + t * out_dim;

      // dL/dpre through the rectifier.
      for (size_t o = 0; o < out_dim; ++o)
        if (pre[o] <= 0.0) g_cur[o] = 0.0;

      // Input to this layer at frame t.
      const double* x;
      std::vector<double> relu_in;
      if (l == 0) {
        x = st.input.data() + t * in_dim;
      } else {
        const double* prev_pre = st.pre[l - 1].data() + t * in_dim;
        relu_in.resize(in_dim);
        for (size_t i = 0; i < in_dim; ++i)
          relu_in[i] = prev_pre[i] > 0.0 ? prev_pre[i] : 0.0;
        x = relu_in.data();
      }

      std::vector<double>& g_w = out.grads[2 * l];
      std::vector<double>& g_b = out.grads[2 * l + 1];
      for (size_t o = 0; o < out_dim; ++o) {
        const double g = g_cur[o];
        if (g == 0.0) continue;
        double* grow = g_w.data() + o * in_dim;
        for (size_t i = 0; i < in_dim; ++i) grow[i] += g * x[i];
        g_b[o] += g;
      }

      if (l > 0) {
        g_prev.assign(in_dim, 0.0);
        for (size_t o = 0; o < out_dim; ++o) {
          const double g = g_cur[o];
          if (g == 0.0) continue;
          const float* wrow = w.data.data() + o * in_dim;
          for (size_t i = 0; i < in_dim; ++i)
            g_prev[i] += g * static_cast<double>(wrow[i]);
        }
        g_cur.swap(g_prev);
      }
    }
  }
}

FrameMatrix frontend_frames(const EncoderModel& model, const AudioClip& clip) {
  AudioClip canonical =
      clip.sample_rate == kCanonicalRate ? clip : resample(clip, kCanonicalRate);
  return log_mel(canonical, model.frontend.mel);
}

Tensor make_tensor(const std::string& name, std::vector<int64_t> shape) {
  Tensor t;
  t.name = name;
  t.shape = std::move(shape);
  t.data.assign(static_cast<size_t>(t.size()), 0.0f);
  return t;
}

void xavier_fill(Tensor& t, size_t fan_in, size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data)
    v = static_cast<float>(rng.uniform(-limit, limit));
}

}  // namespace

const char* to_string(Target t) { return t == Target::sig ? "sig" : "bak"; }

EncoderModel make_encoder(const FrontendConfig& frontend,
                          const std::vector<int>& trunk_widths, Rng& rng) {
  if (trunk_widths.empty())
    throw InvalidArgError("make_encoder: trunk must have at least one layer");
  EncoderModel model;
  model.frontend = frontend;
  model.trunk_widths = trunk_widths;
  int in_dim = frontend.mel.n_mels;
  for (size_t l = 0; l < trunk_widths.size(); ++l) {
    const int out_dim = trunk_widths[l];
    Tensor w = make_tensor(layer_name(l, "weight"), {out_dim, in_dim});
    xavier_fill(w, static_cast<size_t>(in_dim), static_cast<size_t>(out_dim), rng);
    Tensor b = make_tensor(layer_name(l, "bias"), {out_dim});
    model.tensors.push_back(std::move(w));
    model.tensors.push_back(std::move(b));
    in_dim = out_dim;
  }
  return model;
}

std::vector<double> encode_frames(const EncoderModel& model,
                                  const FrameMatrix& features) {
  if (features.num_frames < 1)
    throw InvalidArgError("encode: no frames");
  Checkpoint shell;
  shell.encoder = model;
  shell.head.weight = make_tensor("head.weight", {model.embedding_dim()});
  shell.head.bias = make_tensor("head.bias", {1});
  return forward(shell, features).embedding;
}

std::vector<double> encode(const EncoderModel& model, const AudioClip& clip) {
  return encode_frames(model, frontend_frames(model, clip));
}

double predict_unclamped(const Checkpoint& ckpt, const AudioClip& clip) {
  return forward(ckpt, frontend_frames(ckpt.encoder, clip)).pred;
}

double predict(const Checkpoint& ckpt, const AudioClip& clip) {
  return std::clamp(predict_unclamped(ckpt, clip), 1.0, 5.0);
}

double mse_loss(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size())
    throw InvalidArgError("mse_loss: length mismatch");
  if (preds.empty()) throw InvalidArgError("mse_loss: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(preds.size());
}

double lr_at(int64_t step, int64_t total_steps, const TrainConfig& cfg) {
  if (step < 0 || step > total_steps)
    throw InvalidArgError("lr_at: step outside [0, total_steps]");
  if (total_steps <= 0) return 0.0;
  const double total = static_cast<double>(total_steps);
  const double warmup_end = cfg.warmup_ratio * total;
  const double s = static_cast<double>(step);
  if (s < warmup_end) return cfg.learning_rate * s / warmup_end;
  if (warmup_end >= total)
    return step >= total_steps ? 0.0 : cfg.learning_rate;
  return cfg.learning_rate * (total - s) / (total - warmup_end);
}

BatchGradients compute_batch_gradients(const Checkpoint& ckpt,
                                       const std::vector<AudioClip>& clips,
                                       const std::vector<double>& targets) {
  if (clips.size() != targets.size() || clips.empty())
    throw InvalidArgError("compute_batch_gradients: bad batch");
  GradBuffers bufs(ckpt);
  const double inv_b = 1.0 / static_cast<double>(clips.size());
  double loss = 0.0;
  for (size_t i = 0; i < clips.size(); ++i) {
    ForwardState st = forward(ckpt, frontend_frames(ckpt.encoder, clips[i]));
    const double err = st.pred - targets[i];
    loss += err * err * inv_b;
    backward(ckpt, st, 2.0 * err * inv_b, bufs);
  }
  BatchGradients out;
  out.loss = loss;
  out.names = std::move(bufs.names);
  out.grads = std::move(bufs.grads);
  return out;
}

namespace {

// ---------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------

struct LoadedSet {
  std::vector<AudioClip> clips;
  std::vector<double> labels;
};

LoadedSet load_labeled(const Manifest& m, Target target, const char* which) {
  if (m.entries.empty())
    throw InvalidArgError(std::string("train_stage: empty ") + which +
                          " manifest");
  LoadedSet set;
  set.clips.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    const std::optional<double>& label = target == Target::sig ? e.sig : e.bak;
    if (!label)
      throw InvalidArgError(std::string("train_stage: entry '") + e.id +
                            "' lacks a " + to_string(target) + " label");
    AudioClip clip = read_wav(resolve_audio_path(m, e));
    if (clip.sample_rate != kCanonicalRate)
      clip = resample(clip, kCanonicalRate);
    set.clips.push_back(std::move(clip));
    set.labels.push_back(*label);
  }
  return set;
}

bool tensor_frozen(const Checkpoint& ckpt, const TrainConfig& cfg,
                   const std::string& name) {
  auto it = ckpt.freeze.find(name);
  if (it != ckpt.freeze.end() && it->second) return true;
  if (cfg.freeze == FreezeMode::all_encoder && name.rfind("trunk.", 0) == 0)
    return true;
  return false;
}

void apply_update(Checkpoint& ckpt, const TrainConfig& cfg,
                  const BatchGradients& grads, double lr) {
  size_t gi = 0;
  for (auto& t : ckpt.encoder.tensors) {
    if (!tensor_frozen(ckpt, cfg, t.name)) {
      const auto& g = grads.grads[gi];
      for (size_t i = 0; i < t.data.size(); ++i)
        t.data[i] = static_cast<float>(static_cast<double>(t.data[i]) -
                                       lr * g[i]);
    }
    ++gi;
  }
  if (!tensor_frozen(ckpt, cfg, "head.weight")) {
    const auto& g = grads.grads[gi];
    for (size_t i = 0; i < ckpt.head.weight.data.size(); ++i)
      ckpt.head.weight.data[i] = static_cast<float>(
          static_cast<double>(ckpt.head.weight.data[i]) - lr * g[i]);
  }
  ++gi;
  if (!tensor_frozen(ckpt, cfg, "head.bias")) {
    ckpt.head.bias.data[0] = static_cast<float>(
        static_cast<double>(ckpt.head.bias.data[0]) - lr * grads.grads[gi][0]);
  }
}

double validation_loss(const Checkpoint& ckpt, const LoadedSet& valid,
                       double crop_seconds) {
  std::vector<double> preds, targets;
  preds.reserve(valid.clips.size());
  for (size_t i = 0; i < valid.clips.size(); ++i) {
    const AudioClip crop = center_crop(valid.clips[i], crop_seconds);
    preds.push_back(forward(ckpt, frontend_frames(ckpt.encoder, crop)).pred);
    targets.push_back(valid.labels[i]);
  }
  return mse_loss(preds, targets);
}

}  // namespace

Checkpoint train_stage(const Checkpoint& init, const Manifest& train,
                       const Manifest& valid, Target target,
                       const TrainConfig& cfg) {
  if (cfg.epochs <= 0) return init;
  if (cfg.batch_size <= 0)
    throw InvalidArgError("train_stage: batch_size must be > 0");

  const LoadedSet train_set = load_labeled(train, target, "train");
  const LoadedSet valid_set = load_labeled(valid, target, "valid");

  std::ofstream log;
  if (!cfg.epoch_log_path.empty()) {
    log.open(cfg.epoch_log_path, std::ios::trunc);
    if (!log) throw FileError("cannot write epoch log: " + cfg.epoch_log_path);
  }

  Checkpoint current = init;
  Rng order_rng(Rng::mix(cfg.seed, 0xA11CEull));
  Rng crop_rng(Rng::mix(cfg.seed, 0xC404ull));

  const size_t n = train_set.clips.size();
  const size_t batch = static_cast<size_t>(cfg.batch_size);
  const int64_t steps_per_epoch = static_cast<int64_t>((n + batch - 1) / batch);
  const int64_t total_steps = steps_per_epoch * cfg.epochs;

  Checkpoint best;
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  int64_t global_step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    int64_t epoch_batches = 0;
    for (size_t start = 0; start < n; start += batch) {
      const size_t end = std::min(n, start + batch);
      std::vector<AudioClip> crops;
      std::vector<double> targets;
      crops.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        crops.push_back(
            random_crop(train_set.clips[order[i]], cfg.crop_seconds, crop_rng));
        targets.push_back(train_set.labels[order[i]]);
      }
      const double lr = lr_at(global_step, total_steps, cfg);
      ++global_step;
      const BatchGradients grads =
          compute_batch_gradients(current, crops, targets);
      apply_update(current, cfg, grads, lr);
      epoch_loss += grads.loss;
      ++epoch_batches;
    }
    const double train_loss = epoch_loss / static_cast<double>(epoch_batches);
    const double valid_loss =
        validation_loss(current, valid_set, cfg.crop_seconds);
    if (log.is_open()) {
      json j;
      j["epoch"] = epoch;
      j["train_loss"] = train_loss;
      j["valid_loss"] = valid_loss;
      log << j.dump() << "\n";
    }
    if (valid_loss < best_loss) {
      best_loss = valid_loss;
      best_epoch = epoch;
      best = current;
    }
  }

  best.meta.history.push_back({cfg.stage_tag, best_epoch, best_loss});
  best.meta.seed = cfg.seed;
  return best;
}

Checkpoint two_stage(const TwoStageData& data, Target target,
                     const TwoStageConfig& cfg) {
  Rng init_rng(cfg.init_seed);
  Checkpoint fresh;
  fresh.encoder = make_encoder(cfg.frontend, cfg.trunk_widths, init_rng);
  fresh.head.weight = make_tensor("head.weight", {fresh.encoder.embedding_dim()});
  xavier_fill(fresh.head.weight,
              static_cast<size_t>(fresh.encoder.embedding_dim()), 1, init_rng);
  fresh.head.bias = make_tensor("head.bias", {1});
  for (const auto& t : fresh.encoder.tensors) fresh.freeze[t.name] = false;
  fresh.freeze["head.weight"] = false;
  fresh.freeze["head.bias"] = false;
  fresh.meta.seed = cfg.init_seed;
  fresh.meta.config_hash = config_hash(cfg.frontend, cfg.trunk_widths);

  TrainConfig c1 = cfg.stage1;
  c1.stage_tag = "stage1";
  TrainConfig c2 = cfg.stage2;
  c2.stage_tag = "stage2";

  const Checkpoint after_stage1 =
      train_stage(fresh, data.stage1_train, data.stage1_valid, target, c1);
  return train_stage(after_stage1, data.stage2_train, data.stage2_valid,
                     target, c2);
}

OvrlHead make_ovrl_head(int input_dim, Rng& rng) {
  OvrlHead head;
  head.weight = make_tensor("weight", {input_dim});
  xavier_fill(head.weight, static_cast<size_t>(input_dim), 1, rng);
  head.bias = make_tensor("bias", {1});
  return head;
}

OvrlHead train_ovrl_head(const Checkpoint& ckpt_sig,
                         const Checkpoint& ckpt_bak, const Manifest& train,
                         const TrainConfig& cfg) {
  const int input_dim =
      ckpt_sig.encoder.embedding_dim() + ckpt_bak.encoder.embedding_dim();
  Rng init_rng(Rng::mix(cfg.seed, 0x08EADull));
  OvrlHead head = make_ovrl_head(input_dim, init_rng);
  if (cfg.epochs <= 0) return head;
  if (train.entries.empty())
    throw InvalidArgError("train_ovrl_head: empty train manifest");

  std::vector<AudioClip> clips;
  std::vector<double> labels;
  for (const auto& e : train.entries) {
    if (!e.ovrl)
      throw InvalidArgError("train_ovrl_head: entry '" + e.id +
                            "' lacks an ovrl label");
    AudioClip clip = read_wav(resolve_audio_path(train, e));
    if (clip.sample_rate != kCanonicalRate)
      clip = resample(clip, kCanonicalRate);
    clips.push_back(std::move(clip));
    labels.push_back(*e.ovrl);
  }

  Rng order_rng(Rng::mix(cfg.seed, 0xA11CEull));
  Rng crop_rng(Rng::mix(cfg.seed, 0xC404ull));
  const size_t n = clips.size();
  const size_t batch = static_cast<size_t>(std::max(1, cfg.batch_size));
  const int64_t steps_per_epoch = static_cast<int64_t>((n + batch - 1) / batch);
  const int64_t total_steps = steps_per_epoch * cfg.epochs;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  const size_t dim = static_cast<size_t>(input_dim);
  int64_t global_step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (size_t start = 0; start < n; start += batch) {
      const size_t end = std::min(n, start + batch);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::vector<double> g_w(dim, 0.0);
      double g_b = 0.0;
      for (size_t i = start; i < end; ++i) {
        const AudioClip crop =
            random_crop(clips[order[i]], cfg.crop_seconds, crop_rng);
        std::vector<double> emb = encode(ckpt_sig.encoder, crop);
        const std::vector<double> emb_bak = encode(ckpt_bak.encoder, crop);
        emb.insert(emb.end(), emb_bak.begin(), emb_bak.end());

        double pred = head.bias.data[0];
        for (size_t k = 0; k < dim; ++k)
          pred += static_cast<double>(head.weight.data[k]) * emb[k];
        const double g_pred = 2.0 * (pred - labels[order[i]]) * inv_b;
        for (size_t k = 0; k < dim; ++k) g_w[k] += g_pred * emb[k];
        g_b += g_pred;
      }
      const double lr = lr_at(global_step, total_steps, cfg);
      ++global_step;
      for (size_t k = 0; k < dim; ++k)
        head.weight.data[k] = static_cast<float>(
            static_cast<double>(head.weight.data[k]) - lr * g_w[k]);
      head.bias.data[0] = static_cast<float>(
          static_cast<double>(head.bias.data[0]) - lr * g_b);
    }
  }
  return head;
}

double predict_ovrl_a(double sig, double bak) { return (sig + bak) / 2.0; }

double predict_ovrl_p(const Checkpoint& ckpt_sig, const Checkpoint& ckpt_bak,
                      const OvrlHead& head, const AudioClip& clip) {
  std::vector<double> emb = encode(ckpt_sig.encoder, clip);
  const std::vector<double> emb_bak = encode(ckpt_bak.encoder, clip);
  emb.insert(emb.end(), emb_bak.begin(), emb_bak.end());
  if (emb.size() != head.weight.data.size())
    throw InvalidArgError("predict_ovrl_p: embedding dim mismatch");
  double pred = head.bias.data[0];
  for (size_t k = 0; k < emb.size(); ++k)
    pred += static_cast<double>(head.weight.data[k]) * emb[k];
  return std::clamp(pred, 1.0, 5.0);
}

// ---------------------------------------------------------------------
// Checkpoint container
// ---------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'B', 'C', 'K', 'P', 'T', '0', '1'};

json frontend_to_json(const FrontendConfig& f) {
  json j;
  j["n_mels"] = f.mel.n_mels;
  j["win_seconds"] = f.mel.win_seconds;
  j["hop_seconds"] = f.mel.hop_seconds;
  j["floor"] = f.mel.floor;
  j["normalize_offset"] = f.normalize_offset;
  j["normalize_scale"] = f.normalize_scale;
  return j;
}

FrontendConfig frontend_from_json(const json& j) {
  FrontendConfig f;
  f.mel.n_mels = j.at("n_mels").get<int>();
  f.mel.win_seconds = j.at("win_seconds").get<double>();
  f.mel.hop_seconds = j.at("hop_seconds").get<double>();
  f.mel.floor = j.at("floor").get<double>();
  f.normalize_offset = j.at("normalize_offset").get<float>();
  f.normalize_scale = j.at("normalize_scale").get<float>();
  return f;
}

void write_container(const std::string& path, const json& header,
                     const std::vector<const Tensor*>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write checkpoint: " + path);
  const std::string h = header.dump();
  out.write(kMagic, 8);
  const uint64_t len = h.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const Tensor* t : tensors)
    out.write(reinterpret_cast<const char*>(t->data.data()),
              static_cast<std::streamsize>(t->data.size() * sizeof(float)));
  if (!out) throw FileError("checkpoint write failed: " + path);
}

struct Container {
  json header;
  std::vector<Tensor> tensors;
};

Container read_container(const std::string& path, const char* expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open checkpoint: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("corrupt header (bad magic): " + path);
  uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), 8))
    throw FormatError("corrupt header (missing length): " + path);
  std::string h(len, '\0');
  if (!in.read(h.data(), static_cast<std::streamsize>(len)))
    throw FormatError("corrupt header (truncated): " + path);

  Container c;
  try {
    c.header = json::parse(h);
  } catch (const json::parse_error&) {
    throw FormatError("corrupt header (invalid JSON): " + path);
  }
  if (!c.header.contains("container") ||
      c.header["container"].get<std::string>() != expected_kind)
    throw FormatError(std::string("container is not a ") + expected_kind +
                      ": " + path);

  for (const auto& tj : c.header.at("tensors")) {
    Tensor t;
    t.name = tj.at("name").get<std::string>();
    t.shape = tj.at("shape").get<std::vector<int64_t>>();
    const int64_t n = t.size();
    if (n < 0) throw FormatError("invalid tensor shape: " + path);
    t.data.resize(static_cast<size_t>(n));
    if (!in.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(float))))
      throw FormatError("truncated tensor data for '" + t.name + "': " + path);
    c.tensors.push_back(std::move(t));
  }
  return c;
}

}  // namespace

std::string config_hash(const FrontendConfig& frontend,
                        const std::vector<int>& trunk_widths) {
  json j;
  j["frontend"] = frontend_to_json(frontend);
  j["trunk_widths"] = trunk_widths;
  const std::string s = j.dump();
  uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

uint64_t tensor_digest(const Checkpoint& ckpt) {
  uint64_t h = 14695981039346656037ull;
  auto mix_tensor = [&h](const Tensor& t) {
    for (float v : t.data) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      for (int b = 0; b < 4; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 1099511628211ull;
      }
    }
  };
  for (const auto& t : ckpt.encoder.tensors) mix_tensor(t);
  mix_tensor(ckpt.head.weight);
  mix_tensor(ckpt.head.bias);
  return h;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json header;
  header["container"] = "checkpoint";
  header["format_version"] = 1;
  header["frontend"] = frontend_to_json(ckpt.encoder.frontend);
  header["trunk_widths"] = ckpt.encoder.trunk_widths;
  json tensors = json::array();
  std::vector<const Tensor*> blobs;
  for (const auto& t : ckpt.encoder.tensors) {
    tensors.push_back({{"name", t.name}, {"shape", t.shape}});
    blobs.push_back(&t);
  }
  tensors.push_back({{"name", "head.weight"}, {"shape", ckpt.head.weight.shape}});
  blobs.push_back(&ckpt.head.weight);
  tensors.push_back({{"name", "head.bias"}, {"shape", ckpt.head.bias.shape}});
  blobs.push_back(&ckpt.head.bias);
  header["tensors"] = tensors;
  header["freeze"] = ckpt.freeze;
  json history = json::array();
  for (const auto& r : ckpt.meta.history)
    history.push_back({{"stage", r.stage},
                       {"best_epoch", r.best_epoch},
                       {"valid_loss", r.valid_loss}});
  header["meta"] = {{"history", history},
                    {"seed", ckpt.meta.seed},
                    {"config_hash", ckpt.meta.config_hash}};
  write_container(path, header, blobs);
}

Checkpoint load_checkpoint(const std::string& path) {
  Container c = read_container(path, "checkpoint");
  Checkpoint ckpt;
  ckpt.encoder.frontend = frontend_from_json(c.header.at("frontend"));
  ckpt.encoder.trunk_widths =
      c.header.at("trunk_widths").get<std::vector<int>>();

  if (c.tensors.size() != ckpt.encoder.trunk_widths.size() * 2 + 2)
    throw FormatError("tensor count does not match trunk widths: " + path);
  for (size_t i = 0; i + 2 < c.tensors.size(); ++i)
    ckpt.encoder.tensors.push_back(std::move(c.tensors[i]));
  ckpt.head.weight = std::move(c.tensors[c.tensors.size() - 2]);
  ckpt.head.bias = std::move(c.tensors[c.tensors.size() - 1]);

  if (c.header.contains("freeze"))
    ckpt.freeze = c.header["freeze"].get<std::map<std::string, bool>>();
  const json& meta = c.header.at("meta");
  for (const auto& r : meta.at("history"))
    ckpt.meta.history.push_back({r.at("stage").get<std::string>(),
                                 r.at("best_epoch").get<int>(),
                                 r.at("valid_loss").get<double>()});
  ckpt.meta.seed = meta.at("seed").get<uint64_t>();
  ckpt.meta.config_hash = meta.at("config_hash").get<std::string>();

  // Sanity: blob shapes must match the declared architecture.
  int in_dim = ckpt.encoder.frontend.mel.n_mels;
  for (size_t l = 0; l < ckpt.encoder.trunk_widths.size(); ++l) {
    const Tensor& w = ckpt.encoder.tensors[2 * l];
    if (w.shape != std::vector<int64_t>{ckpt.encoder.trunk_widths[l], in_dim})
      throw FormatError("tensor shape mismatch for " + w.name + ": " + path);
    in_dim = ckpt.encoder.trunk_widths[l];
  }
  return ckpt;
}

void save_ovrl_head(const OvrlHead& head, const std::string& path) {
  json header;
  header["container"] = "ovrl_head";
  header["format_version"] = 1;
  header["input_dim"] = static_cast<int64_t>(head.weight.data.size());
  header["tensors"] = json::array(
      {{{"name", "weight"}, {"shape", head.weight.shape}},
       {{"name", "bias"}, {"shape", head.bias.shape}}});
  write_container(path, header, {&head.weight, &head.bias});
}

OvrlHead load_ovrl_head(const std::string& path) {
  Container c = read_container(path, "ovrl_head");
  if (c.tensors.size() != 2)
    throw FormatError("ovrl head must hold exactly two tensors: " + path);
  OvrlHead head;
  head.weight = std::move(c.tensors[0]);
  head.bias = std::move(c.tensors[1]);
  if (head.bias.data.size() != 1)
    throw FormatError("ovrl head bias must be a single neuron: " + path);
  return head;
}

}  // namespace sigbak
