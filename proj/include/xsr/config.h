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
#ifndef XSR_CONFIG_H_
#define XSR_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xsr/codeswitch.h"
#include "xsr/encoder.h"
#include "xsr/retrieval.h"
#include "xsr/text.h"
#include "xsr/trainer.h"

namespace xsr {

struct PathConfig {
  std::string pairs;                      // query-label TSV (also the KB)
  std::vector<std::string> dictionaries;  // source<TAB>target TSVs
  std::string cs_corpus;                  // code-switched corpus TSV
  std::string checkpoint;
  std::string index;
  std::string queries;                    // one user query per line
  std::string labels;                     // one candidate label per line
  std::string tests;                      // query<TAB>gold ids<TAB>language
  std::string gold;                       // query id<TAB>gold ids
  std::string results;                    // retrieval JSONL
  std::string log;                        // training loss log
  std::string out;

  friend bool operator==(const PathConfig&, const PathConfig&) = default;
};

// Flat key-value configuration; see config_keys() for the schema.
struct AppConfig {
  std::uint64_t seed = 0;
  ScriptMode script = ScriptMode::kWhitespace;
  EncoderConfig encoder;
  TrainConfig train;                 // steps = pretrain steps
  std::size_t finetune_steps = 500;
  SwitchPolicy policy;
  std::size_t k = 10;
  IndexField index_field = IndexField::kQuery;
  PathConfig paths;

  // Component invariants; ConfigError names the key.
  void validate() const;
  PipelineConfig pipeline() const;
  TrainConfig pretrain_config() const;
  TrainConfig finetune_config() const;
};

bool operator==(const AppConfig& a, const AppConfig& b);

const std::vector<std::string>& config_keys();

// Unknown keys, type errors and invariant violations raise ConfigError
// naming the key. Missing keys keep their defaults.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(std::string_view yaml);
// Every key, in config_keys() order, readable by parse_config().
std::string dump(const AppConfig& config);

// Sets one key from its text form, as a command-line override would.
void set_config_value(AppConfig& config, const std::string& key, const std::string& value);

// XSR_SEED, when set, replaces config.seed. Throws ConfigError if malformed.
void apply_env_overrides(AppConfig& config);

}  // namespace xsr

#endif  // XSR_CONFIG_H_
