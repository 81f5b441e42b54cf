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
#ifndef XSR_OBJECTIVES_H_
#define XSR_OBJECTIVES_H_

#include <cstddef>
#include <random>
#include <vector>

#include "xsr/autodiff.h"
#include "xsr/encoder.h"
#include "xsr/tensor.h"
#include "xsr/text.h"

namespace xsr {

// An encoded sequence after masking. `positions` are ascending indices into
// `input`; `targets[i]` is the original id at `positions[i]`.
struct MaskedView {
  std::vector<TokenId> input;
  std::vector<std::size_t> positions;
  std::vector<TokenId> targets;

  // The unmasked sequence itself.
  static MaskedView unmasked(std::vector<TokenId> ids);
  friend bool operator==(const MaskedView&, const MaskedView&) = default;
};

struct LossBreakdown {
  double xmlm = 0.0;
  double sim = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

// Summed negative log-likelihood of `targets`, one logit row per target.
double mlm_loss(const Tensor& logits, const std::vector<TokenId>& targets);
ad::Var mlm_loss(ad::Var logits, const std::vector<TokenId>& targets);

// Forward one tower over a masked view. `mlm` is a scalar node; a constant
// zero when nothing is masked.
struct TowerPass {
  ad::Var hidden;
  ad::Var cls;
  ad::Var mlm;
};
TowerPass run_tower(EncoderGraph& graph, const MaskedView& view, Mode mode,
                    std::mt19937_64* rng = nullptr);

// MLM over the query plus MLM over the label; each side sees only itself.
ad::Var xmlm_loss(EncoderGraph& graph, const MaskedView& query,
                  const MaskedView& label, Mode mode, std::mt19937_64* rng = nullptr);
double xmlm_loss(const MaskedView& query, const MaskedView& label,
                 const EncoderParams& params);

// [CLS] x [SEP] y [SEP] from two encoded sequences (each framed by encode()).
std::vector<TokenId> concat_pair(const std::vector<TokenId>& x,
                                 const std::vector<TokenId>& y);
// MLM over every masked position of a concatenated pair. Throws
// ContractError when the pair exceeds max_len.
double tlm_loss(const MaskedView& pair, const EncoderParams& params);

// Throws DomainError if either vector has zero norm.
double cosine_sim(const SentenceVector& a, const SentenceVector& b);

struct SimLossOptions {
  // Subtract `margin` from each positive cosine inside the softmax.
  bool use_margin = false;
  double margin = 0.1;
};

// Mean over pairs of -log(exp s(q_i,l_i) / sum_j exp s(q_i,l_j)), where the
// negatives are the other labels of the batch. Cosine logits, no temperature.
ad::Var sim_loss(const std::vector<ad::Var>& queries, const std::vector<ad::Var>& labels,
                 const SimLossOptions& options = {});
double sim_loss(const std::vector<SentenceVector>& queries,
                const std::vector<SentenceVector>& labels,
                const SimLossOptions& options = {});
// One pair's term given its positive similarity and its negatives.
double sim_loss_term(double positive, const std::vector<double>& negatives);

// total = lambda * xmlm + sim. Throws ConfigError for negative lambda.
LossBreakdown total_loss(double xmlm, double sim, double lambda);

}  // namespace xsr

#endif  // XSR_OBJECTIVES_H_
