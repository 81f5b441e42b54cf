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
#include "xsr/codeswitch.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "xsr/errors.h"

namespace xsr {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

std::string lowercase_ascii(std::string s) {
  for (char& c : s)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(c));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(line, lineno);
  }
}

const std::string& pick_target(const std::vector<std::string>& targets,
                               TargetChoice choice, std::mt19937_64& rng) {
  if (choice == TargetChoice::kFirst || targets.size() == 1) return targets.front();
  std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
  return targets[pick(rng)];
}

std::string side_text(const std::string& original, const TokenSeq& switched,
                      const std::vector<std::size_t>& replaced) {
  return replaced.empty() ? original : join_tokens(switched);
}

}  // namespace

BilingualDictionary::BilingualDictionary(std::string tag) : tag_(std::move(tag)) {
  const auto dash = tag_.find('-');
  if (dash != std::string::npos) {
    source_language_ = tag_.substr(0, dash);
    target_language_ = tag_.substr(dash + 1);
  } else {
    target_language_ = tag_;
  }
}

void BilingualDictionary::add(const std::string& source, const std::string& target) {
  const std::string key = lowercase_ascii(trim(source));
  std::string value = trim(target);
  if (key.empty() || value.empty())
    throw ContractError("dictionary entries need a source and a target");
  const auto space = value.find_first_of(" \t");
  if (space != std::string::npos) {
    value = value.substr(0, space);
    ++collapsed_;
  }
  auto& targets = entries_[key];
  if (std::find(targets.begin(), targets.end(), value) == targets.end())
    targets.push_back(std::move(value));
}

const std::vector<std::string>* BilingualDictionary::lookup(const std::string& token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

BilingualDictionary load_dictionary(const std::filesystem::path& path, std::string tag) {
  if (tag.empty()) tag = path.stem().string();
  BilingualDictionary dict(std::move(tag));
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    if (line.empty()) return;
    const auto cols = split_tabs(line);
    if (cols.size() != 2)
      throw ParseError(path.string(), lineno, "expected exactly one tab");
    try {
      dict.add(cols[0], cols[1]);
    } catch (const ContractError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  });
  return dict;
}

void SwitchPolicy::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0))
    throw ConfigError("cmd_rate", "must be in [0, 1], got " + std::to_string(rate));
}

SwitchResult code_switch(const TokenSeq& seq, const BilingualDictionary& dict,
                         const SwitchPolicy& policy, std::mt19937_64& rng) {
  return code_switch(seq, std::vector<const BilingualDictionary*>{&dict}, policy, rng);
}

SwitchResult code_switch(const TokenSeq& seq,
                         const std::vector<const BilingualDictionary*>& dicts,
                         const SwitchPolicy& policy, std::mt19937_64& rng) {
  policy.validate();
  SwitchResult result{seq, {}};
  std::bernoulli_distribution replace(policy.rate);
  std::vector<const std::vector<std::string>*> candidates;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    candidates.clear();
    for (const auto* d : dicts)
      if (const auto* targets = d->lookup(seq.tokens[i])) candidates.push_back(targets);
    if (candidates.empty()) continue;
    if (!replace(rng)) continue;
    const std::vector<std::string>* targets = candidates.front();
    if (candidates.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      targets = candidates[pick(rng)];
    }
    result.tokens.tokens[i] = pick_target(*targets, policy.target_choice, rng);
    result.replaced.push_back(i);
  }
  return result;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<CsPair> build_cs_knowledge(const std::vector<QueryLabelPair>& pairs,
                                       const std::vector<BilingualDictionary>& dicts,
                                       const SwitchPolicy& policy, ScriptMode mode) {
  policy.validate();
  std::vector<CsPair> out(pairs.size());
  const long n = static_cast<long>(pairs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long idx = 0; idx < n; ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    const QueryLabelPair& pair = pairs[i];
    CsPair& cs = out[i];
    cs.original = pair;
    cs.query = tokenize(pair.query, mode);
    cs.label = tokenize(pair.label, mode);
    cs.query.language = cs.label.language = pair.language;
    if (policy.skip_languages.count(pair.language)) continue;

    std::vector<const BilingualDictionary*> eligible;
    for (const auto& d : dicts)
      if (d.source_language().empty() || d.source_language() == pair.language)
        eligible.push_back(&d);
    if (eligible.empty()) continue;

    std::mt19937_64 rng(derive_seed(policy.seed, i));
    auto choose = [&]() -> std::vector<const BilingualDictionary*> {
      if (policy.language_mode == LanguageMode::kPerToken || eligible.size() == 1)
        return eligible;
      std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
      return {eligible[pick(rng)]};
    };
    const auto query_dicts = choose();
    const auto label_dicts = policy.independent_sides ? choose() : query_dicts;
    SwitchResult q = code_switch(cs.query, query_dicts, policy, rng);
    SwitchResult l = code_switch(cs.label, label_dicts, policy, rng);
    cs.query = std::move(q.tokens);
    cs.query_replaced = std::move(q.replaced);
    cs.label = std::move(l.tokens);
    cs.label_replaced = std::move(l.replaced);
  }
  return out;
}

std::vector<QueryLabelPair> load_pairs(const std::filesystem::path& path) {
  std::vector<QueryLabelPair> pairs;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    if (line.empty()) return;
    auto cols = split_tabs(line);
    if (cols.size() < 2 || cols.size() > 3)
      throw ParseError(path.string(), lineno,
                       "expected query<TAB>label<TAB>language");
    pairs.push_back({std::move(cols[0]), std::move(cols[1]),
                     cols.size() == 3 ? std::move(cols[2]) : std::string{}});
  });
  return pairs;
}

void save_pairs(const std::filesystem::path& path,
                const std::vector<QueryLabelPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) out << p.query << '\t' << p.label << '\t' << p.language << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_indices(const std::vector<std::size_t>& indices) {
  std::string s;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(indices[i]);
  }
  return s;
}

std::vector<std::size_t> parse_indices(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw ContractError("bad index list '" + text + "'");
    out.push_back(std::stoull(item));
  }
  return out;
}

void save_cs_corpus(const std::filesystem::path& path, const std::vector<CsPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) {
    out << side_text(p.original.query, p.query, p.query_replaced) << '\t'
        << side_text(p.original.label, p.label, p.label_replaced) << '\t'
        << p.original.language << '\t' << format_indices(p.query_replaced) << '\t'
        << format_indices(p.label_replaced) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<CsPair> load_cs_corpus(const std::filesystem::path& path, ScriptMode mode) {
  std::vector<CsPair> pairs;
  for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    if (line.empty()) return;
    auto cols = split_tabs(line);
    if (cols.size() != 5)
      throw ParseError(path.string(), lineno, "expected 5 tab-separated columns");
    CsPair p;
    p.original = {cols[0], cols[1], cols[2]};
    p.query = tokenize(cols[0], mode);
    p.label = tokenize(cols[1], mode);
    p.query.language = p.label.language = cols[2];
    try {
      p.query_replaced = parse_indices(cols[3]);
      p.label_replaced = parse_indices(cols[4]);
    } catch (const ContractError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    pairs.push_back(std::move(p));
  });
  return pairs;
}

double CorpusStats::mixed_fraction() const {
  return total() ? static_cast<double>(mixed) / static_cast<double>(total()) : 0.0;
}
double CorpusStats::english_fraction() const {
  return total() ? static_cast<double>(english) / static_cast<double>(total()) : 0.0;
}
double CorpusStats::native_fraction() const {
  return total() ? static_cast<double>(native) / static_cast<double>(total()) : 0.0;
}

Lexicons lexicons_from(const std::vector<BilingualDictionary>& dicts) {
  Lexicons lex;
  for (const auto& d : dicts) {
    for (const auto& [source, targets] : d.entries()) {
      if (!d.source_language().empty()) lex[d.source_language()].insert(source);
      if (!d.target_language().empty())
        lex[d.target_language()].insert(targets.begin(), targets.end());
    }
  }
  return lex;
}

CorpusStats corpus_stats(const std::vector<TokenSeq>& sentences,
                         const Lexicons& lexicons, const std::string& english_tag) {
  if (sentences.empty()) throw ContractError("empty corpus");
  CorpusStats stats;
  for (const auto& s : sentences) {
    std::map<std::string, std::size_t> votes;
    bool ambiguous_only_english = true;
    bool saw_ambiguous = false;
    for (const auto& tok : s.tokens) {
      std::vector<const std::string*> langs;
      for (const auto& [lang, words] : lexicons)
        if (words.count(tok)) langs.push_back(&lang);
      if (langs.size() == 1) {
        ++votes[*langs.front()];
      } else if (langs.size() > 1) {
        saw_ambiguous = true;
        const bool has_en = std::any_of(langs.begin(), langs.end(),
                                         [&](const auto* l) { return *l == english_tag; });
        ambiguous_only_english = ambiguous_only_english && has_en;
      }
    }
    if (votes.size() >= 2) {
      ++stats.mixed;
    } else if (votes.size() == 1) {
      // Ambiguous tokens follow the single majority language.
      (votes.begin()->first == english_tag ? stats.english : stats.native)++;
    } else if (saw_ambiguous && ambiguous_only_english) {
      ++stats.english;
    } else {
      ++stats.native;
    }
  }
  return stats;
}

}  // namespace xsr
