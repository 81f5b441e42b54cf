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
#ifndef XSR_SYNTH_H_
#define XSR_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xsr/codeswitch.h"
#include "xsr/evalkit.h"

namespace xsr {

// A small bilingual retrieval task. Two native languages share one pool of
// concepts, each with a native surface word per language and an English word.
// Every KB entry is identified by a pair of concepts; fillers carry no
// information. Test queries paraphrase an entry with fresh fillers and word
// order, either monolingually or with some concept words in English.
struct SynthConfig {
  std::vector<std::string> languages = {"sa", "sb"};
  std::size_t concepts = 40;
  std::size_t fillers = 24;           // per language
  std::size_t pairs_per_language = 100;
  std::size_t fillers_per_sentence = 3;
  std::size_t tests_per_language = 60;
  std::size_t test_english_words = 1;  // concept words switched in mixed tests (1 or 2)
  std::uint64_t seed = 1;
};

struct SynthBenchmark {
  std::vector<QueryLabelPair> kb;
  std::vector<BilingualDictionary> dictionaries;  // "<lang>-en"
  std::vector<TestQuery> mono_tests;
  std::vector<TestQuery> mixed_tests;             // test_english_words English words each
};

SynthBenchmark make_synth_benchmark(const SynthConfig& config = {});

// kb.tsv, <lang>-en.tsv, tests_mono.tsv, tests_mixed.tsv under `dir`.
void write_synth_benchmark(const SynthBenchmark& bench, const std::filesystem::path& dir);

}  // namespace xsr

#endif  // XSR_SYNTH_H_
