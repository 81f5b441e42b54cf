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
#ifndef XSR_CODESWITCH_H_
#define XSR_CODESWITCH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "xsr/text.h"

namespace xsr {

// Lowercase source token -> candidate target tokens, in file order.
class BilingualDictionary {
 public:
  BilingualDictionary() = default;
  // `tag` is "src-tgt" (e.g. "id-en"); an empty source language matches
  // pairs of any language.
  explicit BilingualDictionary(std::string tag);

  void add(const std::string& source, const std::string& target);

  const std::vector<std::string>* lookup(const std::string& token) const;
  bool contains(const std::string& token) const { return lookup(token) != nullptr; }
  std::size_t size() const { return entries_.size(); }

  const std::string& tag() const { return tag_; }
  const std::string& source_language() const { return source_language_; }
  const std::string& target_language() const { return target_language_; }
  const std::map<std::string, std::vector<std::string>>& entries() const {
    return entries_;
  }
  // Targets that had several words and were cut to their first one.
  std::size_t collapsed_targets() const { return collapsed_; }

 private:
  std::string tag_, source_language_, target_language_;
  std::map<std::string, std::vector<std::string>> entries_;
  std::size_t collapsed_ = 0;
};

// One "source<TAB>target" per line. The tag defaults to the file stem.
BilingualDictionary load_dictionary(const std::filesystem::path& path,
                                    std::string tag = {});

enum class TargetChoice { kFirst, kUniform };
enum class LanguageMode {
  kPerPair,   // one dictionary per query-label pair
  kPerToken,  // each replaced token picks among dictionaries that know it
};

struct SwitchPolicy {
  double rate = 0.10;
  std::uint64_t seed = 0;
  TargetChoice target_choice = TargetChoice::kFirst;
  std::set<std::string> skip_languages = {"en"};
  LanguageMode language_mode = LanguageMode::kPerPair;
  // Draw the dictionary for the label separately from the query.
  bool independent_sides = false;

  void validate() const;
};

struct SwitchResult {
  TokenSeq tokens;
  std::vector<std::size_t> replaced;  // ascending positions
};

// Each in-dictionary token is replaced independently with probability
// `policy.rate`; other tokens are never touched.
SwitchResult code_switch(const TokenSeq& seq, const BilingualDictionary& dict,
                         const SwitchPolicy& policy, std::mt19937_64& rng);
SwitchResult code_switch(const TokenSeq& seq,
                         const std::vector<const BilingualDictionary*>& dicts,
                         const SwitchPolicy& policy, std::mt19937_64& rng);

struct QueryLabelPair {
  std::string query;
  std::string label;
  std::string language;
  friend bool operator==(const QueryLabelPair&, const QueryLabelPair&) = default;
};

struct CsPair {
  QueryLabelPair original;
  TokenSeq query;  // q'
  TokenSeq label;  // l'
  std::vector<std::size_t> query_replaced;
  std::vector<std::size_t> label_replaced;
};

// Randomness for pair i comes from (policy.seed, i) alone, so the output does
// not depend on scheduling.
std::vector<CsPair> build_cs_knowledge(const std::vector<QueryLabelPair>& pairs,
                                       const std::vector<BilingualDictionary>& dicts,
                                       const SwitchPolicy& policy,
                                       ScriptMode mode = ScriptMode::kWhitespace);

// Pair corpus TSV: query<TAB>label<TAB>language.
std::vector<QueryLabelPair> load_pairs(const std::filesystem::path& path);
void save_pairs(const std::filesystem::path& path,
                const std::vector<QueryLabelPair>& pairs);
// Output corpus TSV: the pair columns plus comma-separated replaced indices
// for query and label. A side with nothing replaced keeps its original text.
void save_cs_corpus(const std::filesystem::path& path, const std::vector<CsPair>& pairs);
std::vector<CsPair> load_cs_corpus(const std::filesystem::path& path,
                                   ScriptMode mode = ScriptMode::kWhitespace);

struct CorpusStats {
  std::size_t mixed = 0, english = 0, native = 0;
  double mixed_fraction() const;
  double english_fraction() const;
  double native_fraction() const;
  std::size_t total() const { return mixed + english + native; }
};

using Lexicons = std::map<std::string, std::set<std::string>>;

// Source and target sides of each dictionary, keyed by language tag.
Lexicons lexicons_from(const std::vector<BilingualDictionary>& dicts);

// Classifies each sentence as mixed (tokens from two or more lexicons),
// english (only `english_tag` tokens) or native. Tokens found in several
// lexicons follow the sentence's majority language; unknown tokens are
// ignored. Throws ContractError on an empty corpus.
CorpusStats corpus_stats(const std::vector<TokenSeq>& sentences,
                         const Lexicons& lexicons,
                         const std::string& english_tag = "en");

// splitmix64 of (seed, index): independent per-item generator seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

std::string format_indices(const std::vector<std::size_t>& indices);
std::vector<std::size_t> parse_indices(const std::string& text);

}  // namespace xsr

#endif  // XSR_CODESWITCH_H_
