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
#include "xsr/encoder.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>

#include "xsr/errors.h"

namespace xsr {
namespace {

constexpr double kInitStd = 0.02;
// Std of a unit normal truncated at +-2. Dividing by it keeps the std of the
// truncated draws at kInitStd.
constexpr double kTruncatedStd = 0.87962566103423978;

struct Slot {
  std::string name;
  Shape shape;
  enum Kind { kWeight, kZero, kOne } kind;
};

std::vector<Slot> layout(const EncoderConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<Slot> s;
  s.push_back({"tok_emb", {c.vocab_size, d}, Slot::kWeight});
  s.push_back({"pos_emb", {c.max_len, d}, Slot::kWeight});
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    s.push_back({p + "ln1.gamma", {d}, Slot::kOne});
    s.push_back({p + "ln1.beta", {d}, Slot::kZero});
    for (const char* w : {"q", "k", "v", "o"}) {
      s.push_back({p + "attn.w" + w, {d, d}, Slot::kWeight});
      s.push_back({p + "attn.b" + w, {d}, Slot::kZero});
    }
    s.push_back({p + "ln2.gamma", {d}, Slot::kOne});
    s.push_back({p + "ln2.beta", {d}, Slot::kZero});
    s.push_back({p + "ffn.w1", {d, c.d_ff}, Slot::kWeight});
    s.push_back({p + "ffn.b1", {c.d_ff}, Slot::kZero});
    s.push_back({p + "ffn.w2", {c.d_ff, d}, Slot::kWeight});
    s.push_back({p + "ffn.b2", {d}, Slot::kZero});
  }
  s.push_back({"ln_f.gamma", {d}, Slot::kOne});
  s.push_back({"ln_f.beta", {d}, Slot::kZero});
  s.push_back({"mlm.bias", {c.vocab_size}, Slot::kZero});
  return s;
}

// Number of tensors before the first layer, and per layer.
constexpr std::size_t kHeadSlots = 2;
constexpr std::size_t kLayerSlots = 16;

}  // namespace

void EncoderConfig::validate() const {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(key, "must be positive");
  };
  positive(d_model, "d_model");
  positive(n_layers, "n_layers");
  positive(n_heads, "n_heads");
  positive(d_ff, "d_ff");
  if (d_model % n_heads != 0)
    throw ConfigError("n_heads", "d_model " + std::to_string(d_model) +
                                     " is not divisible by " + std::to_string(n_heads));
  if (max_len < 2) throw ConfigError("max_len", "must be at least 2");
  if (vocab_size < special::kCount + 1)
    throw ConfigError("vocab_size", "must be at least 6");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ConfigError("dropout", "must be in [0, 1)");
}

EncoderParams::EncoderParams(const EncoderConfig& config) : config_(config) {
  config.validate();
  for (auto& slot : layout(config)) {
    names_.push_back(slot.name);
    tensors_.emplace_back(slot.shape, slot.kind == Slot::kOne ? 1.0 : 0.0);
  }
}

const Tensor& EncoderParams::get(std::string_view name) const {
  return tensors_[index_of(name)];
}

std::size_t EncoderParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void EncoderParams::round_to_float() {
  for (auto& t : tensors_)
    for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams params(config);
  std::mt19937_64 rng(seed);
  const double sigma = kInitStd / kTruncatedStd;
  std::normal_distribution<double> normal(0.0, sigma);
  const auto slots = layout(config);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].kind != Slot::kWeight) continue;
    for (double& v : params.tensor(i).data()) {
      do {
        v = normal(rng);
      } while (std::abs(v) > 2.0 * sigma);
    }
  }
  return params;
}

EncoderGraph::EncoderGraph(ad::Tape& tape, const EncoderParams& params)
    : tape_(tape), params_(params) {
  leaves_.reserve(params.count());
  for (std::size_t i = 0; i < params.count(); ++i)
    leaves_.push_back(tape.borrow(params.tensor(i)));
}

EncoderGraph::Output EncoderGraph::forward(std::span<const TokenId> ids,
                                           std::span<const std::uint8_t> attention_mask,
                                           Mode mode, std::mt19937_64* rng) {
  const EncoderConfig& c = params_.config();
  const std::size_t len = ids.size();
  if (len == 0) throw ContractError("forward on an empty sequence");
  if (len > c.max_len)
    throw ContractError("sequence length " + std::to_string(len) +
                        " exceeds max_len " + std::to_string(c.max_len));
  if (!attention_mask.empty() && attention_mask.size() != len)
    throw ContractError("attention mask length does not match ids");
  const bool train = mode == Mode::kTrain && c.dropout > 0.0;
  if (train && !rng) throw ContractError("train-mode forward needs a generator");

  auto drop = [&](ad::Var v) { return train ? ad::dropout(v, c.dropout, *rng) : v; };

  std::vector<std::size_t> token_rows(ids.begin(), ids.end());
  std::vector<std::size_t> positions(len);
  for (std::size_t i = 0; i < len; ++i) positions[i] = i;

  ad::Var x = ad::add(ad::gather_rows(leaves_[0], token_rows),
                      ad::gather_rows(leaves_[1], positions));
  x = drop(x);

  // Key-side padding bias, shared by every head.
  bool has_padding = false;
  Tensor key_bias({len, len});
  for (std::size_t k = 0; k < attention_mask.size(); ++k) {
    if (attention_mask[k]) continue;
    has_padding = true;
    for (std::size_t q = 0; q < len; ++q) key_bias.at(q, k) = kMaskedLogit;
  }

  const std::size_t head_dim = c.d_model / c.n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::size_t base = kHeadSlots + l * kLayerSlots;
    auto p = [&](std::size_t off) { return leaves_[base + off]; };
    // Slot order matches layout(): ln1 (0,1), q (2,3), k (4,5), v (6,7),
    // o (8,9), ln2 (10,11), w1 (12,13), w2 (14,15).
    ad::Var h = ad::layer_norm(x, p(0), p(1));
    ad::Var q = ad::add_row(ad::matmul(h, p(2)), p(3));
    ad::Var k = ad::add_row(ad::matmul(h, p(4)), p(5));
    ad::Var v = ad::add_row(ad::matmul(h, p(6)), p(7));
    std::vector<ad::Var> heads;
    heads.reserve(c.n_heads);
    for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
      const std::size_t b = hd * head_dim, e = b + head_dim;
      ad::Var scores = ad::scale(
          ad::matmul_bt(ad::slice_cols(q, b, e), ad::slice_cols(k, b, e)), inv_sqrt);
      if (has_padding) scores = ad::add_const(scores, key_bias);
      heads.push_back(ad::matmul(ad::softmax_rows(scores), ad::slice_cols(v, b, e)));
    }
    ad::Var ctx = c.n_heads == 1 ? heads.front() : ad::concat_cols(heads);
    ad::Var attn = ad::add_row(ad::matmul(ctx, p(8)), p(9));
    x = ad::add(x, drop(attn));

    ad::Var h2 = ad::layer_norm(x, p(10), p(11));
    ad::Var ff = ad::gelu(ad::add_row(ad::matmul(h2, p(12)), p(13)));
    ff = ad::add_row(ad::matmul(ff, p(14)), p(15));
    x = ad::add(x, drop(ff));
  }
  const std::size_t tail = kHeadSlots + c.n_layers * kLayerSlots;
  ad::Var hidden = ad::layer_norm(x, leaves_[tail], leaves_[tail + 1]);
  ad::Var cls = ad::select_rows(hidden, {0});
  return {hidden, cls};
}

ad::Var EncoderGraph::mlm_logits(ad::Var hidden, const std::vector<std::size_t>& positions) {
  const std::size_t tail = kHeadSlots + params_.config().n_layers * kLayerSlots;
  ad::Var rows = ad::select_rows(hidden, positions);
  return ad::add_row(ad::matmul_bt(rows, leaves_[0]), leaves_[tail + 2]);
}

ForwardResult forward(const EncoderParams& params, std::span<const TokenId> ids,
                      std::span<const std::uint8_t> attention_mask, Mode mode,
                      std::mt19937_64* rng) {
  ad::Tape tape;
  EncoderGraph graph(tape, params);
  auto out = graph.forward(ids, attention_mask, mode, rng);
  const Tensor& cls = out.cls.value();
  return {out.hidden.value(), SentenceVector{cls.values()}};
}

SentenceVector encode_sentence(std::string_view text, const Vocabulary& vocab,
                               const EncoderParams& params, ScriptMode script) {
  const auto ids = encode(tokenize(text, script), vocab);
  return forward(params, ids).cls;
}

std::vector<SentenceVector> encode_batch(const std::vector<std::string>& texts,
                                         const Vocabulary& vocab,
                                         const EncoderParams& params,
                                         ScriptMode script) {
  std::vector<SentenceVector> out(texts.size());
  const long n = static_cast<long>(texts.size());
  std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          encode_sentence(texts[static_cast<std::size_t>(i)], vocab, params, script);
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace xsr
