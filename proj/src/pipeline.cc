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
#include <cstdint>

#include "xsr/errors.h"
#include "xsr/retrieval.h"

namespace xsr {
namespace {

// Stream ids for derive_seed.
enum SeedStream : std::uint64_t { kSwitch = 1, kInit, kPretrain, kFinetune };

}  // namespace

PipelineConfig with_seed(PipelineConfig config, std::uint64_t seed) {
  config.seed = seed;
  config.policy.seed = derive_seed(seed, kSwitch);
  config.init_seed = derive_seed(seed, kInit);
  config.pretrain.seed = derive_seed(seed, kPretrain);
  config.finetune.seed = derive_seed(seed, kFinetune);
  return config;
}

Vocabulary corpus_vocabulary(const std::vector<CsPair>& corpus, ScriptMode script,
                             std::size_t max_size) {
  std::vector<TokenSeq> text;
  text.reserve(4 * corpus.size());
  for (const auto& p : corpus) {
    text.push_back(tokenize(p.original.query, script));
    text.push_back(tokenize(p.original.label, script));
    text.push_back(p.query);
    text.push_back(p.label);
  }
  return build_vocab(text, max_size);
}

TrainRun pretrain_stage(const std::vector<CsPair>& corpus, const PipelineConfig& config) {
  if (corpus.empty()) throw ConfigError("cs_corpus", "code-switched corpus is empty");
  Vocabulary vocab = corpus_vocabulary(corpus, config.script, config.encoder.vocab_size);
  EncoderConfig encoder = config.encoder;
  encoder.vocab_size = vocab.size();
  EncoderParams init = init_params(encoder, config.init_seed);
  return continual_pretrain(corpus, vocab, std::move(init), config.pretrain, config.script);
}

PipelineOutput run_pipeline(const std::vector<std::string>& user_queries,
                            const KnowledgeBase& kb,
                            const std::vector<BilingualDictionary>& dicts,
                            const PipelineConfig& config) {
  if (kb.empty()) throw ConfigError("kb", "knowledge base is empty");
  PipelineOutput out;

  SwitchPolicy policy = config.policy;
  policy.rate = config.pretrain.cmd_rate;
  const auto pairs = kb.pairs();
  out.cs_corpus = build_cs_knowledge(pairs, dicts, policy, config.script);

  TrainRun pre = pretrain_stage(out.cs_corpus, config);
  out.pretrain_log = std::move(pre.log);
  out.pretrained = pre.checkpoint;
  if (config.run_finetune && config.finetune.steps > 0) {
    TrainRun fine = finetune(pairs, pre.checkpoint, config.finetune);
    out.finetune_log = std::move(fine.log);
    out.checkpoint = std::move(fine.checkpoint);
  } else {
    out.checkpoint = std::move(pre.checkpoint);
  }

  out.index = build_index(kb, out.checkpoint, config.index_field);
  out.results.reserve(user_queries.size());
  const auto vectors =
      encode_batch(user_queries, out.checkpoint.vocab, out.checkpoint.params, config.script);
  for (const auto& v : vectors) out.results.push_back(rank(out.index, v, config.k));
  return out;
}

}  // namespace xsr
