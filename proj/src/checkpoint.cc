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
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include "xsr/errors.h"
#include "xsr/trainer.h"

namespace xsr {
namespace {

using nlohmann::json;

constexpr const char* kMagic = "XSRCKPT";

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

void append_f32(std::string& out, const Tensor& t) {
  for (double v : t.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

void read_f32(const std::string& blob, std::size_t offset, Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[offset + 4 * i + b]))
              << (8 * b);
    t[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
}

json encoder_json(const EncoderConfig& c) {
  return {{"d_model", c.d_model}, {"n_layers", c.n_layers}, {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},       {"max_len", c.max_len},   {"vocab_size", c.vocab_size},
          {"dropout", c.dropout}};
}

EncoderConfig encoder_from(const json& j) {
  EncoderConfig c;
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

json train_json(const TrainConfig& c) {
  return {{"lr", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"batch_size", c.batch_size},
          {"steps", c.steps},
          {"lambda", c.lambda},
          {"mask_prob", c.mask_prob},
          {"cmd_rate", c.cmd_rate},
          {"seed", c.seed},
          {"mode", c.mode == TrainMode::kPretrain ? "pretrain" : "finetune"},
          {"use_margin", c.sim.use_margin},
          {"margin", c.sim.margin},
          {"sim_on_clean", c.sim_on_clean},
          {"finetune_joint", c.finetune_joint},
          {"use_sim_loss", c.use_sim_loss}};
}

TrainConfig train_from(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.mask_prob = j.at("mask_prob").get<double>();
  c.cmd_rate = j.at("cmd_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mode = j.at("mode").get<std::string>() == "finetune" ? TrainMode::kFinetune
                                                         : TrainMode::kPretrain;
  c.sim.use_margin = j.at("use_margin").get<bool>();
  c.sim.margin = j.at("margin").get<double>();
  c.sim_on_clean = j.at("sim_on_clean").get<bool>();
  c.finetune_joint = j.at("finetune_joint").get<bool>();
  c.use_sim_loss = j.at("use_sim_loss").get<bool>();
  return c;
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& why) {
  throw CheckpointError(CheckpointError::Kind::kCorrupt,
                        "corrupt checkpoint " + path.string() + ": " + why);
}

}  // namespace

std::string fingerprint(const EncoderParams& params) {
  std::string blob;
  for (std::size_t i = 0; i < params.count(); ++i) append_f32(blob, params.tensor(i));
  return hex(fnv1a(blob));
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::string blob;
  json tensors = json::array();
  auto add = [&](const std::string& group, const std::string& name, const Tensor& t) {
    tensors.push_back({{"group", group},
                       {"name", name},
                       {"shape", t.shape()},
                       {"offset", blob.size()}});
    append_f32(blob, t);
  };
  for (std::size_t i = 0; i < c.params.count(); ++i)
    add("param", c.params.name(i), c.params.tensor(i));
  if (c.adam) {
    for (std::size_t i = 0; i < c.adam->m.size(); ++i)
      add("adam_m", c.params.name(i), c.adam->m[i]);
    for (std::size_t i = 0; i < c.adam->v.size(); ++i)
      add("adam_v", c.params.name(i), c.adam->v[i]);
  }
  json header = {{"version", c.version},
                 {"encoder", encoder_json(c.encoder_config())},
                 {"train", train_json(c.train)},
                 {"script", std::string(script_mode_name(c.script))},
                 {"rng_state", c.rng_state},
                 {"vocab", c.vocab.regular_tokens()},
                 {"adam_step", c.adam ? json(c.adam->step) : json(nullptr)},
                 {"tensors", tensors},
                 {"blob_bytes", blob.size()},
                 {"checksum", hex(fnv1a(blob))}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << kMagic << '\n' << text.size() << '\n' << text << '\n';
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::string magic, length_line;
  if (!std::getline(in, magic) || magic != kMagic) corrupt(path, "bad magic");
  if (!std::getline(in, length_line)) corrupt(path, "missing header length");
  std::size_t header_len = 0;
  try {
    header_len = std::stoull(length_line);
  } catch (const std::exception&) {
    corrupt(path, "bad header length");
  }
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len)))
    corrupt(path, "truncated header");
  if (in.get() != '\n') corrupt(path, "unterminated header");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(path, std::string("header is not valid JSON: ") + e.what());
  }
  Checkpoint c;
  try {
    c.version = header.at("version").get<int>();
    if (c.version != kCheckpointVersion)
      throw CheckpointError(CheckpointError::Kind::kVersionMismatch,
                            "checkpoint " + path.string() + " has format version " +
                                std::to_string(c.version) + ", expected " +
                                std::to_string(kCheckpointVersion));
    if (header.at("blob_bytes").get<std::size_t>() != blob.size())
      corrupt(path, "tensor data is " + std::to_string(blob.size()) + " bytes, expected " +
                        header.at("blob_bytes").dump());
    if (header.at("checksum").get<std::string>() != hex(fnv1a(blob)))
      corrupt(path, "checksum mismatch");

    c.params = EncoderParams(encoder_from(header.at("encoder")));
    c.train = train_from(header.at("train"));
    c.script = parse_script_mode(header.at("script").get<std::string>());
    c.rng_state = header.at("rng_state").get<std::string>();
    c.vocab = Vocabulary(header.at("vocab").get<std::vector<std::string>>());
    if (!header.at("adam_step").is_null()) {
      c.adam = AdamState::zeros_like(c.params);
      c.adam->step = header.at("adam_step").get<std::uint64_t>();
    }
    std::size_t seen_params = 0;
    for (const auto& entry : header.at("tensors")) {
      const auto group = entry.at("group").get<std::string>();
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const std::size_t index = c.params.index_of(name);
      Tensor* target = nullptr;
      if (group == "param") {
        target = &c.params.tensor(index);
        ++seen_params;
      } else if (group == "adam_m" && c.adam) {
        target = &c.adam->m[index];
      } else if (group == "adam_v" && c.adam) {
        target = &c.adam->v[index];
      } else {
        corrupt(path, "unknown tensor group '" + group + "'");
      }
      if (target->shape() != shape)
        throw CheckpointError(CheckpointError::Kind::kShapeMismatch,
                              "tensor " + name + " is stored with a shape that does "
                              "not match its encoder config");
      if (offset + 4 * target->size() > blob.size()) corrupt(path, "tensor out of bounds");
      read_f32(blob, offset, *target);
    }
    if (seen_params != c.params.count()) corrupt(path, "missing parameter tensors");
  } catch (const json::exception& e) {
    corrupt(path, std::string("bad header field: ") + e.what());
  } catch (const ConfigError& e) {
    corrupt(path, e.what());
  } catch (const ContractError& e) {
    corrupt(path, e.what());
  }
  return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const EncoderConfig& expected) {
  Checkpoint c = load_checkpoint(path);
  const EncoderConfig& got = c.encoder_config();
  // Dropout does not affect tensor shapes.
  EncoderConfig a = got, b = expected;
  a.dropout = b.dropout = 0.0;
  if (a != b)
    throw CheckpointError(CheckpointError::Kind::kShapeMismatch,
                          "checkpoint " + path.string() +
                              " was written for a different encoder shape");
  return c;
}

}  // namespace xsr
