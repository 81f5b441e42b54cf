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
#include "xsr/text.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "xsr/errors.h"

namespace xsr {
namespace {

constexpr const char* kSpecialNames[special::kCount] = {"[PAD]", "[UNK]", "[CLS]",
                                                        "[SEP]", "[MASK]"};

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

// Byte length of the UTF-8 sequence starting with `lead`. Invalid lead bytes
// are treated as single bytes.
std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

void push_word(std::string_view word, std::vector<std::string>& out) {
  std::size_t b = 0, e = word.size();
  while (b < e && is_punct(static_cast<unsigned char>(word[b]))) ++b;
  while (e > b && is_punct(static_cast<unsigned char>(word[e - 1]))) --e;
  for (std::size_t i = 0; i < b; ++i) out.emplace_back(1, word[i]);
  if (b < e) {
    std::string core(word.substr(b, e - b));
    for (char& c : core)
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(c));
    out.push_back(std::move(core));
  }
  for (std::size_t i = e; i < word.size(); ++i) out.emplace_back(1, word[i]);
}

}  // namespace

ScriptMode parse_script_mode(std::string_view name) {
  if (name == "whitespace") return ScriptMode::kWhitespace;
  if (name == "char") return ScriptMode::kChar;
  throw ConfigError("script_mode", "expected whitespace or char, got '" +
                                       std::string(name) + "'");
}

std::string_view script_mode_name(ScriptMode mode) {
  return mode == ScriptMode::kChar ? "char" : "whitespace";
}

TokenSeq tokenize(std::string_view text, ScriptMode mode) {
  TokenSeq seq;
  std::size_t i = 0;
  if (mode == ScriptMode::kChar) {
    while (i < text.size()) {
      const auto c = static_cast<unsigned char>(text[i]);
      const std::size_t len = std::min(utf8_length(c), text.size() - i);
      if (!is_space(c)) seq.tokens.emplace_back(text.substr(i, len));
      i += len;
    }
    return seq;
  }
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) push_word(text.substr(start, i - start), seq.tokens);
  }
  return seq;
}

std::string join_tokens(const TokenSeq& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i) out += ' ';
    out += seq.tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  id_to_token_.reserve(tokens.size() + special::kCount);
  for (const char* name : kSpecialNames) {
    token_to_id_.emplace(name, static_cast<TokenId>(id_to_token_.size()));
    id_to_token_.emplace_back(name);
  }
  for (const auto& t : tokens) {
    if (t.empty()) throw ContractError("vocabulary tokens must be non-empty");
    const auto id = static_cast<TokenId>(id_to_token_.size());
    if (!token_to_id_.emplace(t, id).second)
      throw ContractError("duplicate vocabulary token '" + t + "'");
    id_to_token_.push_back(t);
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? special::kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= id_to_token_.size())
    throw ContractError("token id " + std::to_string(id) + " out of range " +
                        std::to_string(id_to_token_.size()));
  return id_to_token_[id];
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return {id_to_token_.begin() + special::kCount, id_to_token_.end()};
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (std::size_t i = special::kCount; i < id_to_token_.size(); ++i)
    out << id_to_token_[i] << '\n';
  if (!out) throw IoError("failed writing vocabulary " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(path.string(), lineno, "empty token");
    tokens.push_back(line);
  }
  try {
    return Vocabulary(tokens);
  } catch (const ContractError& e) {
    throw ParseError(path.string(), lineno, e.what());
  }
}

Vocabulary build_vocab(const std::vector<TokenSeq>& corpus, std::size_t max_size) {
  if (max_size < special::kCount + 1)
    throw ConfigError("vocab_size", "must be at least 6, got " +
                                        std::to_string(max_size));
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus)
    for (const auto& t : seq.tokens) ++counts[t];
  for (const char* name : kSpecialNames) counts.erase(name);

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is lexicographic, so a stable sort on count keeps ties
  // in lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - special::kCount);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary(tokens);
}

std::vector<TokenId> encode(const TokenSeq& seq, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(seq.size() + 2);
  ids.push_back(special::kCls);
  for (const auto& t : seq.tokens) ids.push_back(vocab.id(t));
  ids.push_back(special::kSep);
  return ids;
}

TokenSeq decode(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
  TokenSeq seq;
  seq.tokens.reserve(ids.size());
  for (TokenId id : ids) seq.tokens.push_back(vocab.token(id));
  return seq;
}

}  // namespace xsr
