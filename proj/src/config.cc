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
#include "xsr/config.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "xsr/errors.h"

namespace xsr {
namespace {

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(key, "expected a scalar value");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(key, "cannot read '" + node.Scalar() + "'");
  }
}

std::size_t count_as(const YAML::Node& node, const std::string& key) {
  const auto v = scalar_as<long long>(node, key);
  if (v < 0) throw ConfigError(key, "must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t seed_as(const YAML::Node& node, const std::string& key) {
  const std::string text = scalar_as<std::string>(node, key);
  try {
    std::size_t used = 0;
    if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
    const auto v = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(key, "expected an unsigned integer, got '" + text + "'");
  }
}

std::vector<std::string> list_as(const YAML::Node& node, const std::string& key) {
  std::vector<std::string> out;
  if (node.IsNull()) return out;
  if (node.IsScalar()) {
    // Command-line form: comma-separated.
    std::stringstream ss(node.Scalar());
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  }
  if (!node.IsSequence()) throw ConfigError(key, "expected a list");
  for (const auto& item : node) out.push_back(scalar_as<std::string>(item, key));
  return out;
}

struct Key {
  std::string name;
  std::function<void(AppConfig&, const YAML::Node&)> set;
  std::function<void(const AppConfig&, YAML::Emitter&)> emit;
};

template <typename Get>
Key number_key(std::string name, Get get) {
  return {name,
          [name, get](AppConfig& c, const YAML::Node& n) {
            get(c) = scalar_as<double>(n, name);
          },
          [get](const AppConfig& c, YAML::Emitter& e) {
            e << get(const_cast<AppConfig&>(c));
          }};
}

template <typename Get>
Key count_key(std::string name, Get get) {
  return {name,
          [name, get](AppConfig& c, const YAML::Node& n) { get(c) = count_as(n, name); },
          [get](const AppConfig& c, YAML::Emitter& e) {
            e << static_cast<unsigned long long>(get(const_cast<AppConfig&>(c)));
          }};
}

template <typename Get>
Key bool_key(std::string name, Get get) {
  return {name,
          [name, get](AppConfig& c, const YAML::Node& n) { get(c) = scalar_as<bool>(n, name); },
          [get](const AppConfig& c, YAML::Emitter& e) {
            e << get(const_cast<AppConfig&>(c));
          }};
}

template <typename Get>
Key path_key(std::string name, Get get) {
  return {name,
          [name, get](AppConfig& c, const YAML::Node& n) {
            get(c) = n.IsNull() ? std::string() : scalar_as<std::string>(n, name);
          },
          [get](const AppConfig& c, YAML::Emitter& e) {
            e << YAML::DoubleQuoted << get(const_cast<AppConfig&>(c));
          }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"seed",
                 [](AppConfig& c, const YAML::Node& n) { c.seed = seed_as(n, "seed"); },
                 [](const AppConfig& c, YAML::Emitter& e) {
                   e << static_cast<unsigned long long>(c.seed);
                 }});
    k.push_back({"script",
                 [](AppConfig& c, const YAML::Node& n) {
                   try {
                     c.script = parse_script_mode(scalar_as<std::string>(n, "script"));
                   } catch (const ConfigError&) {
                     throw ConfigError("script", "expected whitespace or char");
                   }
                 },
                 [](const AppConfig& c, YAML::Emitter& e) {
                   e << std::string(script_mode_name(c.script));
                 }});
    k.push_back(count_key("d_model", [](AppConfig& c) -> auto& { return c.encoder.d_model; }));
    k.push_back(count_key("n_layers", [](AppConfig& c) -> auto& { return c.encoder.n_layers; }));
    k.push_back(count_key("n_heads", [](AppConfig& c) -> auto& { return c.encoder.n_heads; }));
    k.push_back(count_key("d_ff", [](AppConfig& c) -> auto& { return c.encoder.d_ff; }));
    k.push_back(count_key("max_len", [](AppConfig& c) -> auto& { return c.encoder.max_len; }));
    k.push_back(
        count_key("vocab_size", [](AppConfig& c) -> auto& { return c.encoder.vocab_size; }));
    k.push_back(number_key("dropout", [](AppConfig& c) -> auto& { return c.encoder.dropout; }));
    k.push_back(number_key("lr", [](AppConfig& c) -> auto& { return c.train.learning_rate; }));
    k.push_back(number_key("beta1", [](AppConfig& c) -> auto& { return c.train.beta1; }));
    k.push_back(number_key("beta2", [](AppConfig& c) -> auto& { return c.train.beta2; }));
    k.push_back(number_key("adam_eps", [](AppConfig& c) -> auto& { return c.train.adam_eps; }));
    k.push_back(
        count_key("batch_size", [](AppConfig& c) -> auto& { return c.train.batch_size; }));
    k.push_back(
        count_key("pretrain_steps", [](AppConfig& c) -> auto& { return c.train.steps; }));
    k.push_back(
        count_key("finetune_steps", [](AppConfig& c) -> auto& { return c.finetune_steps; }));
    k.push_back(number_key("lambda", [](AppConfig& c) -> auto& { return c.train.lambda; }));
    k.push_back(number_key("mask_prob", [](AppConfig& c) -> auto& { return c.train.mask_prob; }));
    k.push_back(number_key("cmd_rate", [](AppConfig& c) -> auto& { return c.train.cmd_rate; }));
    k.push_back(
        bool_key("use_margin", [](AppConfig& c) -> auto& { return c.train.sim.use_margin; }));
    k.push_back(number_key("margin", [](AppConfig& c) -> auto& { return c.train.sim.margin; }));
    k.push_back(
        bool_key("sim_on_clean", [](AppConfig& c) -> auto& { return c.train.sim_on_clean; }));
    k.push_back(
        bool_key("finetune_joint", [](AppConfig& c) -> auto& { return c.train.finetune_joint; }));
    k.push_back(
        bool_key("use_sim_loss", [](AppConfig& c) -> auto& { return c.train.use_sim_loss; }));
    k.push_back({"target_choice",
                 [](AppConfig& c, const YAML::Node& n) {
                   const auto v = scalar_as<std::string>(n, "target_choice");
                   if (v == "first") {
                     c.policy.target_choice = TargetChoice::kFirst;
                   } else if (v == "uniform") {
                     c.policy.target_choice = TargetChoice::kUniform;
                   } else {
                     throw ConfigError("target_choice", "expected first or uniform");
                   }
                 },
                 [](const AppConfig& c, YAML::Emitter& e) {
                   e << (c.policy.target_choice == TargetChoice::kFirst ? "first" : "uniform");
                 }});
    k.push_back({"skip_languages",
                 [](AppConfig& c, const YAML::Node& n) {
                   const auto v = list_as(n, "skip_languages");
                   c.policy.skip_languages = {v.begin(), v.end()};
                 },
                 [](const AppConfig& c, YAML::Emitter& e) {
                   e << YAML::Flow << YAML::BeginSeq;
                   for (const auto& l : c.policy.skip_languages) e << l;
                   e << YAML::EndSeq;
                 }});
    k.push_back({"language_mode",
                 [](AppConfig& c, const YAML::Node& n) {
                   const auto v = scalar_as<std::string>(n, "language_mode");
                   if (v == "per_pair") {
                     c.policy.language_mode = LanguageMode::kPerPair;
                   } else if (v == "per_token") {
                     c.policy.language_mode = LanguageMode::kPerToken;
                   } else {
                     throw ConfigError("language_mode", "expected per_pair or per_token");
                   }
                 },
                 [](const AppConfig& c, YAML::Emitter& e) {
                   e << (c.policy.language_mode == LanguageMode::kPerPair ? "per_pair"
                                                                          : "per_token");
                 }});
    k.push_back(bool_key("independent_sides",
                         [](AppConfig& c) -> auto& { return c.policy.independent_sides; }));
    k.push_back(count_key("k", [](AppConfig& c) -> auto& { return c.k; }));
    k.push_back({"index_field",
                 [](AppConfig& c, const YAML::Node& n) {
                   c.index_field = parse_index_field(scalar_as<std::string>(n, "index_field"));
                 },
                 [](const AppConfig& c, YAML::Emitter& e) {
                   e << (c.index_field == IndexField::kQuery ? "query" : "label");
                 }});
    k.push_back(path_key("pairs", [](AppConfig& c) -> auto& { return c.paths.pairs; }));
    k.push_back({"dictionaries",
                 [](AppConfig& c, const YAML::Node& n) {
                   c.paths.dictionaries = list_as(n, "dictionaries");
                 },
                 [](const AppConfig& c, YAML::Emitter& e) {
                   e << YAML::Flow << YAML::BeginSeq;
                   for (const auto& d : c.paths.dictionaries) e << YAML::DoubleQuoted << d;
                   e << YAML::EndSeq;
                 }});
    k.push_back(path_key("cs_corpus", [](AppConfig& c) -> auto& { return c.paths.cs_corpus; }));
    k.push_back(path_key("checkpoint", [](AppConfig& c) -> auto& { return c.paths.checkpoint; }));
    k.push_back(path_key("index", [](AppConfig& c) -> auto& { return c.paths.index; }));
    k.push_back(path_key("queries", [](AppConfig& c) -> auto& { return c.paths.queries; }));
    k.push_back(path_key("labels", [](AppConfig& c) -> auto& { return c.paths.labels; }));
    k.push_back(path_key("tests", [](AppConfig& c) -> auto& { return c.paths.tests; }));
    k.push_back(path_key("gold", [](AppConfig& c) -> auto& { return c.paths.gold; }));
    k.push_back(path_key("results", [](AppConfig& c) -> auto& { return c.paths.results; }));
    k.push_back(path_key("log", [](AppConfig& c) -> auto& { return c.paths.log; }));
    k.push_back(path_key("out", [](AppConfig& c) -> auto& { return c.paths.out; }));
    return k;
  }();
  return table;
}

const Key& find_key(const std::string& name) {
  for (const auto& k : keys())
    if (k.name == name) return k;
  throw ConfigError(name, "unknown configuration key");
}

}  // namespace

void AppConfig::validate() const {
  encoder.validate();
  train.validate();
  policy.validate();
  if (k < 1) throw ConfigError("k", "must be at least 1");
}

TrainConfig AppConfig::pretrain_config() const { return pipeline().pretrain; }

TrainConfig AppConfig::finetune_config() const { return pipeline().finetune; }

PipelineConfig AppConfig::pipeline() const {
  PipelineConfig p;
  p.encoder = encoder;
  p.pretrain = train;
  p.pretrain.mode = TrainMode::kPretrain;
  p.finetune = train;
  p.finetune.mode = TrainMode::kFinetune;
  p.finetune.steps = finetune_steps;
  p.policy = policy;
  p.script = script;
  p.index_field = index_field;
  p.k = k;
  p.run_finetune = finetune_steps > 0;
  return with_seed(p, seed);
}

bool operator==(const AppConfig& a, const AppConfig& b) {
  return a.seed == b.seed && a.script == b.script && a.encoder == b.encoder &&
         a.train == b.train && a.finetune_steps == b.finetune_steps &&
         a.policy.rate == b.policy.rate && a.policy.seed == b.policy.seed &&
         a.policy.target_choice == b.policy.target_choice &&
         a.policy.skip_languages == b.policy.skip_languages &&
         a.policy.language_mode == b.policy.language_mode &&
         a.policy.independent_sides == b.policy.independent_sides && a.k == b.k &&
         a.index_field == b.index_field && a.paths == b.paths;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : keys()) n.push_back(k.name);
    return n;
  }();
  return names;
}

AppConfig parse_config(std::string_view yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  AppConfig config;
  if (root.IsNull()) {
    config.validate();
    return config;
  }
  if (!root.IsMap()) throw ConfigError("", "config must be a mapping of keys to values");
  for (const auto& item : root) {
    const auto name = item.first.as<std::string>();
    find_key(name).set(config, item.second);
  }
  config.validate();
  return config;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string dump(const AppConfig& config) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  for (const auto& k : keys()) {
    e << YAML::Key << k.name << YAML::Value;
    k.emit(config, e);
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void set_config_value(AppConfig& config, const std::string& key, const std::string& value) {
  const Key& k = find_key(key);
  YAML::Node node;
  try {
    node = YAML::Load(value);
  } catch (const YAML::Exception&) {
    node = YAML::Node(value);
  }
  // Keep plain text for paths and names even when YAML would read it otherwise.
  if (!node.IsScalar() && !node.IsSequence()) node = YAML::Node(value);
  k.set(config, node);
}

void apply_env_overrides(AppConfig& config) {
  const char* seed = std::getenv("XSR_SEED");
  if (seed == nullptr || *seed == '\0') return;
  config.seed = seed_as(YAML::Node(std::string(seed)), "XSR_SEED");
}

}  // namespace xsr
