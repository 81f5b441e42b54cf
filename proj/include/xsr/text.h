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
#ifndef XSR_TEXT_H_
#define XSR_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xsr {

using TokenId = std::uint32_t;

enum class ScriptMode { kWhitespace, kChar };

ScriptMode parse_script_mode(std::string_view name);
std::string_view script_mode_name(ScriptMode mode);

struct TokenSeq {
  std::vector<std::string> tokens;
  std::string language;  // may be empty

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

// Whitespace mode lowercases ASCII, splits on whitespace and peels leading and
// trailing punctuation off as separate tokens. Char mode emits one token per
// non-space UTF-8 code point.
TokenSeq tokenize(std::string_view text, ScriptMode mode = ScriptMode::kWhitespace);

std::string join_tokens(const TokenSeq& seq);

namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kCls = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kMask = 4;
inline constexpr std::size_t kCount = 5;
}  // namespace special

// Token <-> id bijection. Ids 0..4 are always [PAD] [UNK] [CLS] [SEP] [MASK].
class Vocabulary {
 public:
  // Only the five special tokens.
  Vocabulary();
  // `tokens` excludes specials; token i gets id i + 5.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  std::size_t size() const { return id_to_token_.size(); }
  TokenId id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;  // ContractError out of range
  static bool is_special(TokenId id) { return id < special::kCount; }

  // Non-special tokens in id order.
  std::vector<std::string> regular_tokens() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// Keeps the most frequent corpus tokens, ties broken lexicographically, so
// that the vocabulary (specials included) has at most `max_size` entries.
Vocabulary build_vocab(const std::vector<TokenSeq>& corpus, std::size_t max_size);

// [CLS] tokens... [SEP]
std::vector<TokenId> encode(const TokenSeq& seq, const Vocabulary& vocab);
// Inverse of encode for known ids; specials render as "[CLS]" etc.
TokenSeq decode(const std::vector<TokenId>& ids, const Vocabulary& vocab);

}  // namespace xsr

#endif  // XSR_TEXT_H_
