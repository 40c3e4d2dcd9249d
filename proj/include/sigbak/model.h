// include/sigbak/model.h

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

#ifndef SIGBAK_MODEL_H_
#define SIGBAK_MODEL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigbak/audio.h"
#include "sigbak/manifest.h"
#include "sigbak/rng.h"

namespace sigbak {

// The frozen front-end: log-mel features plus a fixed affine input
// normalization. It has no trainable parameters; it plays the role the
// feature extractor plays in a self-supervised backbone.
struct FrontendConfig {
  LogMelConfig mel;
  // Features enter the trunk as (log_mel + offset) / scale.
  float normalize_offset = 7.0f;
  float normalize_scale = 7.0f;

  bool operator==(const FrontendConfig&) const = default;
};

// Named parameter block; checkpoints serialize these in order.
struct Tensor {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<float> data;

  int64_t size() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }
};

// Per-frame fully-connected trunk with rectifier activations, applied to
// each front-end frame and mean-pooled over time.
struct EncoderModel {
  FrontendConfig frontend;
  std::vector<int> trunk_widths;  // layer output widths, e.g. {128, 128}
  std::vector<Tensor> tensors;    // trunk.<i>.weight [out,in], trunk.<i>.bias

  int input_dim() const { return frontend.mel.n_mels; }
  int embedding_dim() const {
    return trunk_widths.empty() ? input_dim() : trunk_widths.back();
  }
};

// Xavier-uniform initialized encoder.
EncoderModel make_encoder(const FrontendConfig& frontend,
                          const std::vector<int>& trunk_widths, Rng& rng);

struct RegressionHead {
  Tensor weight;  // [embedding_dim]
  Tensor bias;    // [1]
};

// Single neuron over the concatenated pooled embeddings of the SIG and
// BAK backbones.
struct OvrlHead {
  Tensor weight;  // [dim_sig + dim_bak]
  Tensor bias;    // [1]
};

struct StageRecord {
  std::string stage;
  int best_epoch = 0;
  double valid_loss = 0.0;

  bool operator==(const StageRecord&) const = default;
};

struct CheckpointMeta {
  std::vector<StageRecord> history;
  uint64_t seed = 0;
  std::string config_hash;
};

struct Checkpoint {
  EncoderModel encoder;
  RegressionHead head;
  std::map<std::string, bool> freeze;  // tensor name -> frozen
  CheckpointMeta meta;
};

enum class FreezeMode { frontend_only, all_encoder };
enum class Target { sig, bak };

const char* to_string(Target t);

struct TrainConfig {
  double learning_rate = 3e-5;
  double warmup_ratio = 0.1;
  int epochs = 20;          // stage defaults: 20 / 500 / 200
  int batch_size = 16;
  double crop_seconds = 1.0;
  uint64_t seed = 0;
  FreezeMode freeze = FreezeMode::frontend_only;
  std::string stage_tag = "stage1";
  std::string epoch_log_path;  // JSONL per-epoch metrics when non-empty
};

// Mean-pooled trunk embedding of a whole clip.
std::vector<double> encode(const EncoderModel& model, const AudioClip& clip);

// Same, over precomputed front-end frames (before normalization).
std::vector<double> encode_frames(const EncoderModel& model,
                                  const FrameMatrix& features);

// head(encode(clip)) clamped to [1, 5]. Training uses the unclamped
// output; the clamp applies at inference only.
double predict(const Checkpoint& ckpt, const AudioClip& clip);
double predict_unclamped(const Checkpoint& ckpt, const AudioClip& clip);

double mse_loss(std::span<const double> preds, std::span<const double> targets);

// Linear warm-up over the first warmup_ratio * total_steps steps, then
// linear decay to zero at total_steps.
double lr_at(int64_t step, int64_t total_steps, const TrainConfig& cfg);

// Batch MSE loss and its gradients with respect to every trainable
// tensor (encoder tensors plus head.weight / head.bias). This is the
// training path itself, exposed so finite-difference checks exercise
// exactly what training runs.
struct BatchGradients {
  double loss = 0.0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> grads;
};
BatchGradients compute_batch_gradients(const Checkpoint& ckpt,
                                       const std::vector<AudioClip>& clips,
                                       const std::vector<double>& targets);

// Mini-batch SGD on MSE over random 1-second crops, with per-epoch
// validation on center crops; returns the epoch checkpoint with the
// minimum validation loss. Tensors marked frozen (by the checkpoint's
// freeze mask or the config's freeze mode) receive no updates.
// With 0 epochs the initial checkpoint is returned unchanged.
Checkpoint train_stage(const Checkpoint& init, const Manifest& train,
                       const Manifest& valid, Target target,
                       const TrainConfig& cfg);

struct TwoStageData {
  Manifest stage1_train, stage1_valid;  // automatic labels
  Manifest stage2_train, stage2_valid;  // subjective labels
};

struct TwoStageConfig {
  FrontendConfig frontend;
  std::vector<int> trunk_widths = {128, 128};
  uint64_t init_seed = 0;
  TrainConfig stage1;  // epochs default 20
  TrainConfig stage2;  // epochs default 500
};

// Fresh encoder -> stage 1 on automatic labels -> stage 2 on subjective
// labels, front-end frozen throughout. Metadata records both stages.
Checkpoint two_stage(const TwoStageData& data, Target target,
                     const TwoStageConfig& cfg);

// Trains the single OVRL neuron on the concatenation of both backbones'
// pooled embeddings. The backbones are read-only here: fully frozen,
// prediction heads ignored. Runs for exactly cfg.epochs (default 200,
// no checkpoint selection).
OvrlHead train_ovrl_head(const Checkpoint& ckpt_sig, const Checkpoint& ckpt_bak,
                         const Manifest& train, const TrainConfig& cfg);

// Fresh OVRL head as train_ovrl_head would initialize it.
OvrlHead make_ovrl_head(int input_dim, Rng& rng);

// (sig + bak) / 2, exactly.
double predict_ovrl_a(double sig, double bak);

// OVRL head over concatenated embeddings, clamped to [1, 5].
double predict_ovrl_p(const Checkpoint& ckpt_sig, const Checkpoint& ckpt_bak,
                      const OvrlHead& head, const AudioClip& clip);

// Checkpoint container: magic, 8-byte little-endian header length, JSON
// header (shapes, config, freeze mask, metadata), then float32 blobs in
// header order. Round trips are bitwise lossless.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
void save_ovrl_head(const OvrlHead& head, const std::string& path);
OvrlHead load_ovrl_head(const std::string& path);

// Hash of the architecture (front-end config + trunk widths); stored in
// checkpoint metadata so a mismatch with the requested config can be
// surfaced as a warning.
std::string config_hash(const FrontendConfig& frontend,
                        const std::vector<int>& trunk_widths);

// Byte digest of all tensors; used by freeze-invariant checks.
uint64_t tensor_digest(const Checkpoint& ckpt);

}  // namespace sigbak

#endif  // SIGBAK_MODEL_H_
