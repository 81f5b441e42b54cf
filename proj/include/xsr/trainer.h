//
// Copyright 2026 The XSR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef XSR_TRAINER_H_
#define XSR_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "xsr/codeswitch.h"
#include "xsr/encoder.h"
#include "xsr/objectives.h"
#include "xsr/text.h"

namespace xsr {

enum class TrainMode { kPretrain, kFinetune };

struct TrainConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t steps = 2000;
  double lambda = 0.2;
  double mask_prob = 0.15;
  double cmd_rate = 0.10;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kPretrain;
  SimLossOptions sim;
  // Similarity on separate unmasked forwards instead of the masked ones.
  bool sim_on_clean = false;
  // Fine-tune with the joint loss (masking on) instead of similarity only.
  bool finetune_joint = false;
  // Off for the MLM-only ablation: total = lambda * xmlm.
  bool use_sim_loss = true;

  void validate() const;
  friend bool operator==(const TrainConfig& a, const TrainConfig& b);
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const EncoderParams& params);
};

// One bias-corrected Adam update. `grads[i]` matches `params.tensor(i)`.
void adam_step(EncoderParams& params, const std::vector<Tensor>& grads,
               AdamState& state, const TrainConfig& config);

// Each non-special position is selected with probability `p`; selected
// positions become [MASK] 80%, a random regular token 10%, unchanged 10%.
std::vector<MaskedView> mask_batch(const std::vector<std::vector<TokenId>>& batch,
                                   double p, std::size_t vocab_size,
                                   std::mt19937_64& rng);

// Encoded query and label of one training example.
struct TrainPair {
  std::vector<TokenId> query;
  std::vector<TokenId> label;
};

// encode() with the body truncated so the result fits in `max_len`.
std::vector<TokenId> encode_fitted(const TokenSeq& seq, const Vocabulary& vocab,
                                   std::size_t max_len);

// The pretraining objective on one batch of masked views: xmlm is the batch
// mean of query plus label MLM, total = lambda * xmlm + sim. `sim` is unset
// when config.use_sim_loss is off.
struct JointLoss {
  ad::Var xmlm;
  std::optional<ad::Var> sim;
  ad::Var total;
};
JointLoss joint_loss(EncoderGraph& graph, const std::vector<MaskedView>& queries,
                     const std::vector<MaskedView>& labels, double lambda,
                     const TrainConfig& config, std::mt19937_64* rng);

struct LossRecord {
  std::size_t step = 0;
  LossBreakdown loss;
};

// Line-delimited JSON: {"step":..,"xmlm":..,"sim":..,"total":..,"lambda":..}
std::string to_json_line(const LossRecord& record);
void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  Vocabulary vocab;
  EncoderParams params;
  std::optional<AdamState> adam;
  TrainConfig train;
  ScriptMode script = ScriptMode::kWhitespace;
  std::string rng_state;

  const EncoderConfig& encoder_config() const { return params.config(); }
};

// Header line, JSON header, then little-endian float32 tensors.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also rejects checkpoints whose encoder shape differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const EncoderConfig& expected);

// Hex digest of the parameters at stored precision.
std::string fingerprint(const EncoderParams& params);

// Mutable training state for one stage.
class Trainer {
 public:
  Trainer(EncoderParams params, Vocabulary vocab, TrainConfig config,
          ScriptMode script = ScriptMode::kWhitespace);

  // Pretrain-mode step on code-switched pairs.
  LossBreakdown train_step(const std::vector<CsPair>& batch);
  // Step on already encoded pairs, honouring config().mode.
  LossBreakdown step(const std::vector<TrainPair>& batch);

  // Runs config().steps steps over seed-shuffled batches of `corpus`.
  void run(const std::vector<TrainPair>& corpus,
           const std::function<void(const LossRecord&)>& on_step = {});

  std::vector<TrainPair> prepare(const std::vector<CsPair>& corpus) const;
  std::vector<TrainPair> prepare(const std::vector<QueryLabelPair>& corpus) const;

  // Batches of indices for the next epoch, in the order they will be used.
  std::vector<std::vector<std::size_t>> epoch_batches(std::size_t corpus_size);

  // Parameters rounded to stored precision, with optimizer state.
  Checkpoint snapshot() const;

  const SiameseEncoder& encoder() const { return encoder_; }
  const EncoderParams& params() const { return encoder_.params(); }
  const AdamState& adam() const { return adam_; }
  const TrainConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::size_t steps_done() const { return steps_done_; }
  const std::vector<LossRecord>& log() const { return log_; }

 private:
  SiameseEncoder encoder_;
  Vocabulary vocab_;
  TrainConfig config_;
  ScriptMode script_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::size_t steps_done_ = 0;
  std::vector<LossRecord> log_;
};

struct TrainRun {
  Checkpoint checkpoint;
  std::vector<LossRecord> log;
};

// Joint-loss continual pre-training on a code-switched corpus.
TrainRun continual_pretrain(const std::vector<CsPair>& corpus, const Vocabulary& vocab,
                            EncoderParams init, TrainConfig config,
                            ScriptMode script = ScriptMode::kWhitespace,
                            const std::function<void(const LossRecord&)>& on_step = {});

// Fine-tuning on original pairs, starting from `start` with a fresh optimizer.
TrainRun finetune(const std::vector<QueryLabelPair>& corpus, const Checkpoint& start,
                  TrainConfig config,
                  const std::function<void(const LossRecord&)>& on_step = {});

}  // namespace xsr

#endif  // XSR_TRAINER_H_
