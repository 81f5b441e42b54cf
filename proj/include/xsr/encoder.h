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
#ifndef XSR_ENCODER_H_
#define XSR_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xsr/autodiff.h"
#include "xsr/tensor.h"
#include "xsr/text.h"

namespace xsr {

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_len = 64;
  std::size_t vocab_size = 4096;
  double dropout = 0.1;

  // Throws ConfigError naming the offending field.
  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Named parameter tensors in a fixed order determined by the config.
class EncoderParams {
 public:
  EncoderParams() = default;
  // Zero-filled tensors with the layout for `config`.
  explicit EncoderParams(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }
  std::size_t count() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const Tensor& tensor(std::size_t i) const { return tensors_[i]; }
  Tensor& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor& get(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  std::size_t parameter_count() const;

  // Rounds every entry to the nearest 32-bit float.
  void round_to_float();

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;

 private:
  EncoderConfig config_;
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// Truncated normal (cut at two standard deviations, rescaled so the draws
// have std 0.02) for weights and embeddings, zeros for biases, unit gamma for
// layer norms.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

enum class Mode { kTrain, kEval };

struct SentenceVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::span<const double> span() const { return values; }
  friend bool operator==(const SentenceVector&, const SentenceVector&) = default;
};

// Pre-norm transformer recorded on a tape. Every parameter becomes one
// borrowed leaf, so repeated forwards (both towers) share the same leaves.
class EncoderGraph {
 public:
  EncoderGraph(ad::Tape& tape, const EncoderParams& params);

  struct Output {
    ad::Var hidden;  // L x d_model after the final layer norm
    ad::Var cls;     // row 0 of hidden
  };

  // `attention_mask[i]` is 1 for real tokens and 0 for padding; empty means
  // all real. `rng` is required in train mode when dropout > 0.
  Output forward(std::span<const TokenId> ids,
                 std::span<const std::uint8_t> attention_mask, Mode mode,
                 std::mt19937_64* rng = nullptr);

  // Tied output projection for the listed positions: rows x vocab_size.
  ad::Var mlm_logits(ad::Var hidden, const std::vector<std::size_t>& positions);

  ad::Var leaf(std::size_t i) const { return leaves_[i]; }
  const std::vector<ad::Var>& leaves() const { return leaves_; }
  const EncoderParams& params() const { return params_; }
  ad::Tape& tape() { return tape_; }

 private:
  ad::Tape& tape_;
  const EncoderParams& params_;
  std::vector<ad::Var> leaves_;
};

struct ForwardResult {
  Tensor hidden;
  SentenceVector cls;
};

ForwardResult forward(const EncoderParams& params, std::span<const TokenId> ids,
                      std::span<const std::uint8_t> attention_mask = {},
                      Mode mode = Mode::kEval, std::mt19937_64* rng = nullptr);

// tokenize -> encode -> eval-mode forward -> [CLS].
SentenceVector encode_sentence(std::string_view text, const Vocabulary& vocab,
                               const EncoderParams& params,
                               ScriptMode script = ScriptMode::kWhitespace);

// Eval-mode encoding of many sentences, spread over OpenMP threads.
std::vector<SentenceVector> encode_batch(const std::vector<std::string>& texts,
                                         const Vocabulary& vocab,
                                         const EncoderParams& params,
                                         ScriptMode script = ScriptMode::kWhitespace);

// One parameter set serving both the query and the label tower.
class SiameseEncoder {
 public:
  explicit SiameseEncoder(EncoderParams params) : params_(std::move(params)) {}

  const EncoderParams& query_tower() const { return params_; }
  const EncoderParams& label_tower() const { return params_; }
  EncoderParams& params() { return params_; }
  const EncoderParams& params() const { return params_; }

 private:
  EncoderParams params_;
};

}  // namespace xsr

#endif  // XSR_ENCODER_H_
