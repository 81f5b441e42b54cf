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
#include "xsr/synth.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <utility>

#include "xsr/errors.h"

namespace xsr {
namespace {

// Pronounceable nonce words; `used` keeps them unique across the benchmark.
std::string nonce_word(std::mt19937_64& rng, std::set<std::string>& used) {
  static const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                  "s", "t", "v", "z", "sh", "ch", "tr", "kl"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::uniform_int_distribution<int> onset(0, std::size(kOnsets) - 1);
  std::uniform_int_distribution<int> vowel(0, std::size(kVowels) - 1);
  std::uniform_int_distribution<int> syllables(2, 3);
  for (;;) {
    std::string w;
    for (int s = syllables(rng); s > 0; --s) w += std::string(kOnsets[onset(rng)]) + kVowels[vowel(rng)];
    if (used.insert(w).second) return w;
  }
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

SynthBenchmark make_synth_benchmark(const SynthConfig& c) {
  if (c.languages.empty()) throw ConfigError("languages", "need at least one language");
  if (c.concepts < 3) throw ConfigError("concepts", "need at least three concepts");
  if (c.fillers_per_sentence > 0 && c.fillers == 0)
    throw ConfigError("fillers", "sentences need fillers but none exist");
  const std::size_t distinct_pairs = c.concepts * (c.concepts - 1) / 2;
  if (c.pairs_per_language * c.languages.size() > distinct_pairs)
    throw ConfigError("pairs_per_language", "more entries than distinct concept pairs");
  if (c.tests_per_language > c.pairs_per_language)
    throw ConfigError("tests_per_language", "more tests than entries");
  if (c.test_english_words < 1 || c.test_english_words > 2)
    throw ConfigError("test_english_words", "must be 1 or 2");

  std::mt19937_64 rng(c.seed);
  std::set<std::string> used;
  std::vector<std::string> english(c.concepts);
  for (auto& w : english) w = nonce_word(rng, used);
  std::vector<std::vector<std::string>> native(c.languages.size(),
                                               std::vector<std::string>(c.concepts));
  std::vector<std::vector<std::string>> fillers(c.languages.size(),
                                                std::vector<std::string>(c.fillers));
  SynthBenchmark b;
  for (std::size_t li = 0; li < c.languages.size(); ++li) {
    BilingualDictionary dict(c.languages[li] + "-en");
    for (std::size_t k = 0; k < c.concepts; ++k) {
      native[li][k] = nonce_word(rng, used);
      dict.add(native[li][k], english[k]);
    }
    for (auto& w : fillers[li]) w = nonce_word(rng, used);
    b.dictionaries.push_back(std::move(dict));
  }

  // Every entry gets its own unordered concept pair, unique across languages.
  std::vector<std::pair<std::size_t, std::size_t>> all_pairs;
  for (std::size_t a = 0; a < c.concepts; ++a)
    for (std::size_t z = a + 1; z < c.concepts; ++z) all_pairs.emplace_back(a, z);
  std::shuffle(all_pairs.begin(), all_pairs.end(), rng);

  std::uniform_int_distribution<std::size_t> filler_pick(0, c.fillers == 0 ? 0 : c.fillers - 1);
  std::bernoulli_distribution coin(0.5);
  // Fillers and the two concept words in random order.
  auto sentence = [&](std::size_t li, const std::string& a, const std::string& z) {
    std::vector<std::string> words{a, z};
    for (std::size_t f = 0; f < c.fillers_per_sentence; ++f)
      words.push_back(fillers[li][filler_pick(rng)]);
    std::shuffle(words.begin(), words.end(), rng);
    return join(words);
  };

  std::size_t next_pair = 0;
  std::vector<std::vector<std::size_t>> entries_by_language(c.languages.size());
  std::vector<std::pair<std::size_t, std::size_t>> entry_concepts;
  for (std::size_t li = 0; li < c.languages.size(); ++li) {
    for (std::size_t i = 0; i < c.pairs_per_language; ++i) {
      const auto [a, z] = all_pairs[next_pair++];
      entries_by_language[li].push_back(b.kb.size());
      entry_concepts.emplace_back(a, z);
      b.kb.push_back({sentence(li, native[li][a], native[li][z]),
                      sentence(li, native[li][a], native[li][z]), c.languages[li]});
    }
  }

  for (std::size_t li = 0; li < c.languages.size(); ++li) {
    std::vector<std::size_t> ids = entries_by_language[li];
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(c.tests_per_language);
    std::sort(ids.begin(), ids.end());
    for (std::size_t id : ids) {
      const auto [a, z] = entry_concepts[id];
      b.mono_tests.push_back({sentence(li, native[li][a], native[li][z]), {id}, c.languages[li]});
      bool ea = true, ez = true;
      if (c.test_english_words == 1) (coin(rng) ? ea : ez) = false;
      b.mixed_tests.push_back({sentence(li, ea ? english[a] : native[li][a],
                                        ez ? english[z] : native[li][z]),
                               {id},
                               c.languages[li]});
    }
  }
  return b;
}

void write_synth_benchmark(const SynthBenchmark& bench, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_pairs(dir / "kb.tsv", bench.kb);
  for (const auto& d : bench.dictionaries) {
    const auto path = dir / (d.tag() + ".tsv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [source, targets] : d.entries())
      for (const auto& t : targets) out << source << '\t' << t << '\n';
    if (!out) throw IoError("failed writing " + path.string());
  }
  save_test_queries(dir / "tests_mono.tsv", bench.mono_tests);
  save_test_queries(dir / "tests_mixed.tsv", bench.mixed_tests);
}

}  // namespace xsr
