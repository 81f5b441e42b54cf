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
#ifndef XSR_EVALKIT_H_
#define XSR_EVALKIT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xsr/retrieval.h"

namespace xsr {

struct EvalRecord {
  std::string query_id;
  std::vector<std::size_t> ranked;  // duplicate-free, best first
  std::set<std::size_t> gold;       // non-empty
};

// Fraction of records with a gold id among the first k retrieved.
double accuracy_at_k(const std::vector<EvalRecord>& records, std::size_t k);
// Mean of |gold ∩ top-k| / k.
double precision_at_k(const std::vector<EvalRecord>& records, std::size_t k);
// Mean reciprocal rank of the first gold id within the top n; 0 if absent.
double mrr_at_n(const std::vector<EvalRecord>& records, std::size_t n = 10);
// Pearson correlation of average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

EvalRecord make_record(std::string query_id, const RetrievalResult& result,
                       std::set<std::size_t> gold);

// Gold file TSV: query id<TAB>comma-separated gold entry ids.
std::map<std::string, std::set<std::size_t>> load_gold(const std::filesystem::path& path);
// Results written by write_results(), grouped by query_id in rank order.
std::map<std::string, std::vector<std::size_t>> load_ranked(const std::filesystem::path& path);
// Joins gold and ranked lists on query id; queries without results rank nothing.
std::vector<EvalRecord> join_records(const std::map<std::string, std::set<std::size_t>>& gold,
                                     const std::map<std::string, std::vector<std::size_t>>& ranked);

// A user query with its relevant KB entries.
struct TestQuery {
  std::string text;
  std::set<std::size_t> gold;
  std::string language;
};

// Test set TSV: query<TAB>comma-separated gold ids<TAB>language.
std::vector<TestQuery> load_test_queries(const std::filesystem::path& path);
void save_test_queries(const std::filesystem::path& path, const std::vector<TestQuery>& queries);

enum class SweepParameter { kLambda, kCmdRate };
SweepParameter parse_sweep_parameter(std::string_view name);
std::string_view sweep_parameter_name(SweepParameter p);

struct SweepRow {
  double value = 0.0;
  double mean_accuracy = 0.0;                  // over seeds
  std::vector<double> per_seed;
  std::map<std::string, double> per_language;  // seed-averaged
};

struct SweepReport {
  std::string parameter;
  std::size_t k = 1;
  std::vector<std::uint64_t> seeds;
  double lambda = 0.2;          // lambda used by rows that do not sweep it
  double default_value = 0.0;   // the parameter's default, marked in reports
  std::vector<SweepRow> rows;   // strictly increasing values
};

inline constexpr double kDefaultLambda = 0.2;
inline constexpr double kDefaultCmdRate = 0.10;

// Re-runs the whole pipeline for each value and seed; reports accuracy@k.
SweepReport sweep(SweepParameter parameter, std::vector<double> values,
                  const PipelineConfig& base, const KnowledgeBase& kb,
                  const std::vector<BilingualDictionary>& dicts,
                  const std::vector<TestQuery>& tests, std::size_t k,
                  const std::vector<std::uint64_t>& seeds);

std::string sweep_csv(const SweepReport& report);
std::string sweep_text(const SweepReport& report);

// Accuracy@k of pipeline output against a test set, overall and per language.
struct Accuracy {
  double overall = 0.0;
  std::map<std::string, double> per_language;
};
Accuracy evaluate_accuracy(const std::vector<RetrievalResult>& results,
                           const std::vector<TestQuery>& tests, std::size_t k);

// Cosine matrix (rows: queries, columns: labels) as CSV with text headers.
std::vector<std::vector<double>> similarity_matrix(const std::vector<std::string>& queries,
                                                   const std::vector<std::string>& labels,
                                                   const Checkpoint& checkpoint);
void export_sim_matrix(const std::vector<std::string>& queries,
                       const std::vector<std::string>& labels, const Checkpoint& checkpoint,
                       const std::filesystem::path& path);

std::string csv_escape(std::string_view field);

}  // namespace xsr

#endif  // XSR_EVALKIT_H_
