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
#ifndef XSR_RETRIEVAL_H_
#define XSR_RETRIEVAL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "xsr/codeswitch.h"
#include "xsr/encoder.h"
#include "xsr/kernels.h"
#include "xsr/trainer.h"

namespace xsr {

struct KbEntry {
  std::size_t id = 0;
  std::string query;
  std::string label;
  std::string language;
};

// Entries with dense ids 0..n-1 in insertion order.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(const std::vector<QueryLabelPair>& pairs);
  static KnowledgeBase load(const std::filesystem::path& path);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const KbEntry& operator[](std::size_t id) const { return entries_.at(id); }
  const std::vector<KbEntry>& entries() const { return entries_; }
  std::vector<QueryLabelPair> pairs() const;

 private:
  std::vector<KbEntry> entries_;
};

enum class IndexField { kQuery, kLabel };
IndexField parse_index_field(std::string_view name);

// Unit-normalised entry vectors, one row per KB entry.
struct Index {
  Tensor rows;
  std::string fingerprint;
  IndexField field = IndexField::kQuery;

  std::size_t size() const { return rows.rows(); }
  std::size_t dim() const { return rows.cols(); }
};

// Normalises each vector; DomainError names the first zero-norm entry.
Index build_index(const std::vector<SentenceVector>& vectors, std::string fingerprint = {});
// Encodes every entry's query (or label) in eval mode.
Index build_index(const KnowledgeBase& kb, const Checkpoint& checkpoint,
                  IndexField field = IndexField::kQuery);

// "XSRINDEX 1", a JSON header line, then little-endian float64 rows.
void save_index(const Index& index, const std::filesystem::path& path);
Index load_index(const std::filesystem::path& path);

struct Hit {
  std::size_t id = 0;
  double score = 0.0;
  friend bool operator==(const Hit&, const Hit&) = default;
};

// Best first; equal scores by ascending id.
struct RetrievalResult {
  std::vector<Hit> hits;
};

// Exact cosine ranking of a query vector against the index.
RetrievalResult rank(const Index& index, const SentenceVector& query, std::size_t k);
// Same ranking through the serial reference kernels.
RetrievalResult rank_serial(const Index& index, const SentenceVector& query, std::size_t k);

RetrievalResult retrieve_top_k(std::string_view query, const Index& index,
                               const Checkpoint& checkpoint, std::size_t k);

// One JSON object per (query, rank): query_id, query, rank, id, score.
void write_results(const std::filesystem::path& path,
                   const std::vector<std::string>& queries,
                   const std::vector<RetrievalResult>& results);

struct PipelineConfig {
  EncoderConfig encoder;
  TrainConfig pretrain;
  TrainConfig finetune;
  SwitchPolicy policy;
  ScriptMode script = ScriptMode::kWhitespace;
  IndexField index_field = IndexField::kQuery;
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;
  bool run_finetune = true;
};

// Per-stage seeds derived from one master seed.
PipelineConfig with_seed(PipelineConfig config, std::uint64_t seed);

// Vocabulary over the original and the code-switched text of a corpus.
Vocabulary corpus_vocabulary(const std::vector<CsPair>& corpus, ScriptMode script,
                             std::size_t max_size);

// Vocabulary, initialisation and continual pre-training, seeded from `config`.
TrainRun pretrain_stage(const std::vector<CsPair>& corpus, const PipelineConfig& config);

struct PipelineOutput {
  std::vector<CsPair> cs_corpus;
  std::vector<LossRecord> pretrain_log;
  std::vector<LossRecord> finetune_log;
  Checkpoint pretrained;
  Checkpoint checkpoint;
  Index index;
  std::vector<RetrievalResult> results;
};

// Code-switch the KB, build the vocabulary, continually pre-train, fine-tune,
// index the KB and answer every user query.
PipelineOutput run_pipeline(const std::vector<std::string>& user_queries,
                            const KnowledgeBase& kb,
                            const std::vector<BilingualDictionary>& dicts,
                            const PipelineConfig& config);

}  // namespace xsr

#endif  // XSR_RETRIEVAL_H_
