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
#include "xsr/objectives.h"

#include <algorithm>
#include <cmath>

#include "xsr/errors.h"

namespace xsr {
namespace {

std::vector<std::size_t> as_rows(const std::vector<TokenId>& ids) {
  return {ids.begin(), ids.end()};
}

ad::Var zero_scalar(ad::Tape& tape) { return tape.leaf(Tensor::scalar(0.0)); }

}  // namespace

MaskedView MaskedView::unmasked(std::vector<TokenId> ids) {
  return MaskedView{std::move(ids), {}, {}};
}

double mlm_loss(const Tensor& logits, const std::vector<TokenId>& targets) {
  if (targets.empty()) {
    if (!logits.empty())
      throw ContractError("mlm_loss: logits given for zero targets");
    return 0.0;
  }
  ad::Tape tape;
  return mlm_loss(tape.leaf(logits), targets).value().item();
}

ad::Var mlm_loss(ad::Var logits, const std::vector<TokenId>& targets) {
  return ad::cross_entropy_sum(logits, as_rows(targets));
}

TowerPass run_tower(EncoderGraph& graph, const MaskedView& view, Mode mode,
                    std::mt19937_64* rng) {
  if (view.positions.size() != view.targets.size())
    throw ContractError("masked view has mismatched positions and targets");
  auto out = graph.forward(view.input, {}, mode, rng);
  ad::Var mlm = view.positions.empty()
                    ? zero_scalar(graph.tape())
                    : mlm_loss(graph.mlm_logits(out.hidden, view.positions), view.targets);
  return {out.hidden, out.cls, mlm};
}

ad::Var xmlm_loss(EncoderGraph& graph, const MaskedView& query,
                  const MaskedView& label, Mode mode, std::mt19937_64* rng) {
  TowerPass q = run_tower(graph, query, mode, rng);
  TowerPass l = run_tower(graph, label, mode, rng);
  return ad::add(q.mlm, l.mlm);
}

double xmlm_loss(const MaskedView& query, const MaskedView& label,
                 const EncoderParams& params) {
  ad::Tape tape;
  EncoderGraph graph(tape, params);
  return xmlm_loss(graph, query, label, Mode::kEval).value().item();
}

std::vector<TokenId> concat_pair(const std::vector<TokenId>& x,
                                 const std::vector<TokenId>& y) {
  if (x.empty() || x.front() != special::kCls || y.empty() || y.front() != special::kCls)
    throw ContractError("concat_pair expects encoded sequences");
  std::vector<TokenId> out(x);
  out.insert(out.end(), y.begin() + 1, y.end());
  return out;
}

double tlm_loss(const MaskedView& pair, const EncoderParams& params) {
  if (pair.input.size() > params.config().max_len)
    throw ContractError("concatenated pair of length " +
                        std::to_string(pair.input.size()) + " exceeds max_len " +
                        std::to_string(params.config().max_len));
  ad::Tape tape;
  EncoderGraph graph(tape, params);
  return run_tower(graph, pair, Mode::kEval).mlm.value().item();
}

double cosine_sim(const SentenceVector& a, const SentenceVector& b) {
  if (a.size() != b.size()) throw ShapeError("cosine of vectors of different length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

ad::Var sim_loss(const std::vector<ad::Var>& queries, const std::vector<ad::Var>& labels,
                 const SimLossOptions& options) {
  if (queries.empty()) throw ContractError("sim_loss needs at least one pair");
  if (queries.size() != labels.size())
    throw ContractError("sim_loss needs as many labels as queries");
  const std::size_t n = queries.size();
  ad::Var q = ad::l2_normalize_rows(ad::stack_rows(queries));
  ad::Var l = ad::l2_normalize_rows(ad::stack_rows(labels));
  ad::Var scores = ad::matmul_bt(q, l);
  if (options.use_margin) {
    Tensor shift({n, n});
    for (std::size_t i = 0; i < n; ++i) shift.at(i, i) = -options.margin;
    scores = ad::add_const(scores, shift);
  }
  std::vector<std::size_t> diagonal(n);
  for (std::size_t i = 0; i < n; ++i) diagonal[i] = i;
  return ad::scale(ad::cross_entropy_sum(scores, std::move(diagonal)),
                   1.0 / static_cast<double>(n));
}

double sim_loss(const std::vector<SentenceVector>& queries,
                const std::vector<SentenceVector>& labels, const SimLossOptions& options) {
  ad::Tape tape;
  std::vector<ad::Var> q, l;
  for (const auto& v : queries) q.push_back(tape.leaf(Tensor::vector(v.values)));
  for (const auto& v : labels) l.push_back(tape.leaf(Tensor::vector(v.values)));
  try {
    return sim_loss(q, l, options).value().item();
  } catch (const DomainError&) {
    throw DomainError("sim_loss: zero-norm sentence vector");
  }
}

double sim_loss_term(double positive, const std::vector<double>& negatives) {
  double mx = positive;
  for (double s : negatives) mx = std::max(mx, s);
  double denom = std::exp(positive - mx);
  for (double s : negatives) denom += std::exp(s - mx);
  return -(positive - mx - std::log(denom));
}

LossBreakdown total_loss(double xmlm, double sim, double lambda) {
  if (!(lambda >= 0.0))
    throw ConfigError("lambda", "must be non-negative, got " + std::to_string(lambda));
  return {xmlm, sim, lambda * xmlm + sim, lambda};
}

}  // namespace xsr
