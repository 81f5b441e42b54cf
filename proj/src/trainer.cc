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
#include "xsr/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "xsr/errors.h"

namespace xsr {
namespace {

bool same_sim(const SimLossOptions& a, const SimLossOptions& b) {
  return a.use_margin == b.use_margin && a.margin == b.margin;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// The sequence before masking.
std::vector<TokenId> restore(const MaskedView& view) {
  std::vector<TokenId> ids = view.input;
  for (std::size_t i = 0; i < view.positions.size(); ++i) ids[view.positions[i]] = view.targets[i];
  return ids;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("lr", "must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", "must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps", "must be positive");
  if (batch_size == 0) throw ConfigError("batch_size", "must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda", "must be non-negative");
  if (!(mask_prob >= 0.0 && mask_prob < 1.0))
    throw ConfigError("mask_prob", "must be in [0, 1)");
  if (!(cmd_rate >= 0.0 && cmd_rate <= 1.0))
    throw ConfigError("cmd_rate", "must be in [0, 1]");
  if (sim.use_margin && !(sim.margin >= 0.0))
    throw ConfigError("margin", "must be non-negative");
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return a.learning_rate == b.learning_rate && a.beta1 == b.beta1 &&
         a.beta2 == b.beta2 && a.adam_eps == b.adam_eps &&
         a.batch_size == b.batch_size && a.steps == b.steps && a.lambda == b.lambda &&
         a.mask_prob == b.mask_prob && a.cmd_rate == b.cmd_rate && a.seed == b.seed &&
         a.mode == b.mode && same_sim(a.sim, b.sim) && a.sim_on_clean == b.sim_on_clean &&
         a.finetune_joint == b.finetune_joint && a.use_sim_loss == b.use_sim_loss;
}

AdamState AdamState::zeros_like(const EncoderParams& params) {
  AdamState s;
  for (std::size_t i = 0; i < params.count(); ++i) {
    s.m.emplace_back(params.tensor(i).shape());
    s.v.emplace_back(params.tensor(i).shape());
  }
  return s;
}

void adam_step(EncoderParams& params, const std::vector<Tensor>& grads,
               AdamState& state, const TrainConfig& config) {
  if (grads.size() != params.count() || state.m.size() != params.count())
    throw ContractError("adam_step: gradient or moment count mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto p = params.tensor(i).data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    if (g.size() != p.size()) throw ShapeError("adam_step: gradient shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
  }
}

std::vector<MaskedView> mask_batch(const std::vector<std::vector<TokenId>>& batch,
                                   double p, std::size_t vocab_size,
                                   std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ContractError("mask probability must be in [0, 1)");
  if (vocab_size <= special::kCount)
    throw ContractError("mask_batch needs at least one regular token");
  std::bernoulli_distribution select(p);
  std::uniform_real_distribution<double> split(0.0, 1.0);
  std::uniform_int_distribution<TokenId> random_token(
      static_cast<TokenId>(special::kCount), static_cast<TokenId>(vocab_size - 1));
  std::vector<MaskedView> views;
  views.reserve(batch.size());
  for (const auto& ids : batch) {
    MaskedView view = MaskedView::unmasked(ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const TokenId id = ids[i];
      if (id == special::kCls || id == special::kSep || id == special::kPad) continue;
      if (!select(rng)) continue;
      view.positions.push_back(i);
      view.targets.push_back(id);
      const double u = split(rng);
      if (u < 0.8) {
        view.input[i] = special::kMask;
      } else if (u < 0.9) {
        view.input[i] = random_token(rng);
      }
    }
    views.push_back(std::move(view));
  }
  return views;
}

std::vector<TokenId> encode_fitted(const TokenSeq& seq, const Vocabulary& vocab,
                                   std::size_t max_len) {
  if (max_len < 2) throw ContractError("max_len must be at least 2");
  if (seq.size() + 2 <= max_len) return encode(seq, vocab);
  TokenSeq cut = seq;
  cut.tokens.resize(max_len - 2);
  return encode(cut, vocab);
}

std::string to_json_line(const LossRecord& r) {
  return "{\"step\":" + std::to_string(r.step) + ",\"xmlm\":" + format_double(r.loss.xmlm) +
         ",\"sim\":" + format_double(r.loss.sim) + ",\"total\":" +
         format_double(r.loss.total) + ",\"lambda\":" + format_double(r.loss.lambda) + "}";
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : log) out << to_json_line(r) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Trainer::Trainer(EncoderParams params, Vocabulary vocab, TrainConfig config,
                 ScriptMode script)
    : encoder_(std::move(params)),
      vocab_(std::move(vocab)),
      config_(config),
      script_(script),
      adam_(AdamState::zeros_like(encoder_.params())),
      rng_(config.seed) {
  config_.validate();
  if (vocab_.size() > encoder_.params().config().vocab_size)
    throw ConfigError("vocab_size", "vocabulary has " + std::to_string(vocab_.size()) +
                                        " tokens but the encoder only " +
                                        std::to_string(encoder_.params().config().vocab_size));
}

std::vector<TrainPair> Trainer::prepare(const std::vector<CsPair>& corpus) const {
  const std::size_t max_len = params().config().max_len;
  std::vector<TrainPair> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus)
    out.push_back({encode_fitted(p.query, vocab_, max_len),
                   encode_fitted(p.label, vocab_, max_len)});
  return out;
}

std::vector<TrainPair> Trainer::prepare(const std::vector<QueryLabelPair>& corpus) const {
  const std::size_t max_len = params().config().max_len;
  std::vector<TrainPair> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus)
    out.push_back({encode_fitted(tokenize(p.query, script_), vocab_, max_len),
                   encode_fitted(tokenize(p.label, script_), vocab_, max_len)});
  return out;
}

LossBreakdown Trainer::train_step(const std::vector<CsPair>& batch) {
  if (config_.mode != TrainMode::kPretrain)
    throw ContractError("train_step requires pretrain mode");
  return step(prepare(batch));
}

JointLoss joint_loss(EncoderGraph& graph, const std::vector<MaskedView>& queries,
                     const std::vector<MaskedView>& labels, double lambda,
                     const TrainConfig& config, std::mt19937_64* rng) {
  if (queries.size() != labels.size() || queries.empty())
    throw ContractError("joint_loss: need matching non-empty query and label views");
  const std::size_t n = queries.size();
  ad::Tape& tape = graph.tape();
  std::vector<ad::Var> q_cls, l_cls;
  ad::Var mlm_sum = tape.leaf(Tensor::scalar(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    TowerPass q = run_tower(graph, queries[i], Mode::kTrain, rng);
    TowerPass l = run_tower(graph, labels[i], Mode::kTrain, rng);
    mlm_sum = ad::add(mlm_sum, ad::add(q.mlm, l.mlm));
    if (config.use_sim_loss && config.sim_on_clean) {
      q_cls.push_back(graph.forward(restore(queries[i]), {}, Mode::kTrain, rng).cls);
      l_cls.push_back(graph.forward(restore(labels[i]), {}, Mode::kTrain, rng).cls);
    } else {
      q_cls.push_back(q.cls);
      l_cls.push_back(l.cls);
    }
  }
  JointLoss out{ad::scale(mlm_sum, 1.0 / static_cast<double>(n)), std::nullopt, {}};
  out.total = ad::scale(out.xmlm, lambda);
  if (config.use_sim_loss) {
    out.sim = sim_loss(q_cls, l_cls, config.sim);
    out.total = ad::add(out.total, *out.sim);
  }
  return out;
}

LossBreakdown Trainer::step(const std::vector<TrainPair>& batch) {
  if (batch.empty()) throw ContractError("empty training batch");
  const bool finetune = config_.mode == TrainMode::kFinetune;
  const bool masked = !finetune || config_.finetune_joint;
  const double lambda = masked ? config_.lambda : 0.0;

  std::vector<std::vector<TokenId>> queries, labels;
  for (const auto& p : batch) {
    queries.push_back(p.query);
    labels.push_back(p.label);
  }
  std::vector<MaskedView> qv, lv;
  if (masked) {
    qv = mask_batch(queries, config_.mask_prob, vocab_.size(), rng_);
    lv = mask_batch(labels, config_.mask_prob, vocab_.size(), rng_);
  } else {
    for (auto& q : queries) qv.push_back(MaskedView::unmasked(q));
    for (auto& l : labels) lv.push_back(MaskedView::unmasked(l));
  }

  ad::Tape tape;
  // One graph: both towers read the same parameter leaves.
  EncoderGraph graph(tape, encoder_.params());
  TrainConfig loss_config = config_;
  loss_config.sim_on_clean = config_.sim_on_clean && masked;
  const JointLoss joint = joint_loss(graph, qv, lv, lambda, loss_config, &rng_);
  const ad::Var total = joint.total;
  const ad::Var xmlm = joint.xmlm;
  const double sim_value = joint.sim ? joint.sim->value().item() : 0.0;
  const LossBreakdown loss = total_loss(xmlm.value().item(), sim_value, lambda);
  if (!std::isfinite(loss.total) || !std::isfinite(loss.xmlm) || !std::isfinite(loss.sim))
    throw TrainingError("non-finite loss at step " + std::to_string(steps_done_ + 1) +
                        ": xmlm=" + format_double(loss.xmlm) +
                        " sim=" + format_double(loss.sim));
  if (std::abs(total.value().item() - loss.total) > 1e-12)
    throw ContractError("loss breakdown does not add up");

  const ad::Gradients grads = tape.backward(total);
  std::vector<Tensor> param_grads;
  param_grads.reserve(graph.leaves().size());
  for (ad::Var leaf : graph.leaves()) param_grads.push_back(grads[leaf]);
  adam_step(encoder_.params(), param_grads, adam_, config_);

  ++steps_done_;
  log_.push_back({steps_done_, loss});
  return loss;
}

std::vector<std::vector<std::size_t>> Trainer::epoch_batches(std::size_t corpus_size) {
  std::vector<std::size_t> order(corpus_size);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < corpus_size; i += config_.batch_size) {
    const std::size_t end = std::min(corpus_size, i + config_.batch_size);
    batches.emplace_back(order.begin() + static_cast<long>(i),
                         order.begin() + static_cast<long>(end));
  }
  return batches;
}

void Trainer::run(const std::vector<TrainPair>& corpus,
                  const std::function<void(const LossRecord&)>& on_step) {
  if (corpus.empty()) throw ConfigError("corpus", "training corpus is empty");
  while (steps_done_ < config_.steps) {
    for (const auto& indices : epoch_batches(corpus.size())) {
      if (steps_done_ >= config_.steps) break;
      std::vector<TrainPair> batch;
      batch.reserve(indices.size());
      for (std::size_t i : indices) batch.push_back(corpus[i]);
      step(batch);
      if (on_step) on_step(log_.back());
    }
  }
}

Checkpoint Trainer::snapshot() const {
  Checkpoint c;
  c.vocab = vocab_;
  c.params = encoder_.params();
  c.params.round_to_float();
  AdamState adam = adam_;
  for (auto* group : {&adam.m, &adam.v})
    for (auto& t : *group)
      for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  c.adam = std::move(adam);
  c.train = config_;
  c.script = script_;
  std::ostringstream state;
  state << rng_;
  c.rng_state = state.str();
  return c;
}

TrainRun continual_pretrain(const std::vector<CsPair>& corpus, const Vocabulary& vocab,
                            EncoderParams init, TrainConfig config, ScriptMode script,
                            const std::function<void(const LossRecord&)>& on_step) {
  if (corpus.empty()) throw ConfigError("corpus", "pre-training corpus is empty");
  config.mode = TrainMode::kPretrain;
  Trainer trainer(std::move(init), vocab, config, script);
  trainer.run(trainer.prepare(corpus), on_step);
  return {trainer.snapshot(), trainer.log()};
}

TrainRun finetune(const std::vector<QueryLabelPair>& corpus, const Checkpoint& start,
                  TrainConfig config,
                  const std::function<void(const LossRecord&)>& on_step) {
  if (corpus.empty()) throw ConfigError("corpus", "fine-tuning corpus is empty");
  config.mode = TrainMode::kFinetune;
  Trainer trainer(start.params, start.vocab, config, start.script);
  trainer.run(trainer.prepare(corpus), on_step);
  return {trainer.snapshot(), trainer.log()};
}

}  // namespace xsr
