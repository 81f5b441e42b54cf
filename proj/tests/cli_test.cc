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
#include "xsr/cli.h"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "test_util.h"
#include "xsr/config.h"
#include "xsr/errors.h"

namespace xsr {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "xsr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Restores XSR_SEED on scope exit.
class SeedEnv {
 public:
  explicit SeedEnv(const char* value) {
    if (const char* old = std::getenv("XSR_SEED")) old_ = old, had_ = true;
    if (value)
      ::setenv("XSR_SEED", value, 1);
    else
      ::unsetenv("XSR_SEED");
  }
  ~SeedEnv() {
    if (had_)
      ::setenv("XSR_SEED", old_.c_str(), 1);
    else
      ::unsetenv("XSR_SEED");
  }

 private:
  std::string old_;
  bool had_ = false;
};

TEST(Config, EmptyDocumentKeepsDefaults) {
  const AppConfig c = parse_config("");
  EXPECT_DOUBLE_EQ(c.train.lambda, 0.2);
  EXPECT_DOUBLE_EQ(c.train.cmd_rate, 0.1);
  EXPECT_EQ(c.k, 10u);
  EXPECT_TRUE(c == AppConfig{});
}

TEST(Config, DumpParsesBackToEqualConfig) {
  AppConfig c;
  c.seed = 42;
  c.train.lambda = 0.35;
  c.train.cmd_rate = 0.05;
  c.encoder.d_model = 16;
  c.k = 3;
  c.policy.skip_languages = {"sa"};
  c.paths.dictionaries = {"a b.tsv", "c.tsv"};
  c.paths.out = "some dir/out.bin";
  const AppConfig back = parse_config(dump(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(dump(back), dump(c));
}

TEST(Config, DumpListsEveryKey) {
  const std::string text = dump(AppConfig{});
  for (const auto& key : config_keys())
    EXPECT_NE(text.find(key + ":"), std::string::npos) << key;
}

TEST(Config, ErrorsNameTheKey) {
  auto key_of = [](const std::string& yaml) {
    try {
      parse_config(yaml);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("lambda: -1\n"), "lambda");
  EXPECT_EQ(key_of("cmd_rate: 1.5\n"), "cmd_rate");
  EXPECT_EQ(key_of("k: 0\n"), "k");
  EXPECT_EQ(key_of("d_model: 10\nn_heads: 4\n"), "n_heads");
  EXPECT_EQ(key_of("lr: fast\n"), "lr");
  EXPECT_EQ(key_of("no_such_key: 1\n"), "no_such_key");
  EXPECT_EQ(key_of("script: klingon\n"), "script");
}

TEST(Config, SetValueOverrides) {
  AppConfig c;
  set_config_value(c, "lambda", "0.5");
  set_config_value(c, "k", "7");
  set_config_value(c, "use_margin", "true");
  EXPECT_DOUBLE_EQ(c.train.lambda, 0.5);
  EXPECT_EQ(c.k, 7u);
  EXPECT_TRUE(c.train.sim.use_margin);
  EXPECT_THROW(set_config_value(c, "bogus", "1"), ConfigError);
}

TEST(Config, EnvSeed) {
  {
    SeedEnv env("1234");
    AppConfig c;
    apply_env_overrides(c);
    EXPECT_EQ(c.seed, 1234u);
  }
  {
    SeedEnv env("abc");
    AppConfig c;
    EXPECT_THROW(apply_env_overrides(c), ConfigError);
  }
  {
    SeedEnv env(nullptr);
    AppConfig c;
    c.seed = 9;
    apply_env_overrides(c);
    EXPECT_EQ(c.seed, 9u);
  }
}

TEST(Cli, ShowConfigLayersFileEnvAndFlags) {
  TempDir dir("cli_layers");
  write_file(dir / "c.yaml", "seed: 5\nlambda: 0.3\nk: 4\n");
  SeedEnv env("11");
  const auto r = run({"show-config", "--config", (dir / "c.yaml").string(), "--k", "6",
                      "--set", "lambda=0.4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const AppConfig c = parse_config(r.out);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_DOUBLE_EQ(c.train.lambda, 0.4);
  EXPECT_EQ(c.k, 6u);
}

TEST(Cli, ConfigErrorExitCode) {
  TempDir dir("cli_bad");
  write_file(dir / "c.yaml", "lambda: -1\n");
  const auto r = run({"show-config", "--config", (dir / "c.yaml").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("config error (lambda)"), std::string::npos) << r.err;

  const auto unknown = run({"show-config", "--set", "nope=1"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("(nope)"), std::string::npos);

  const auto missing = run({"index"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("config error (checkpoint)"), std::string::npos) << missing.err;
}

TEST(Cli, UnknownCommand) {
  const auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, 64);
}

TEST(Cli, SweepNeedsValues) {
  const auto r = run({"sweep"});
  EXPECT_EQ(r.code, 64);
}

TEST(Cli, BuildCsRateZeroIsByteIdentical) {
  TempDir dir("cli_cs");
  const std::string pairs = "I like music\tmusic I like\tsa\nbig  red car\tthe car\tsa\n";
  write_file(dir / "pairs.tsv", pairs);
  write_file(dir / "sa-en.tsv", "music\t音乐\ni\t我\ncar\t车\n");
  const auto r = run({"build-cs", "--pairs", (dir / "pairs.tsv").string(), "--dict",
                      (dir / "sa-en.tsv").string(), "--rate", "0", "--out",
                      (dir / "cs.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote 2 pairs to"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("(0 tokens replaced"), std::string::npos) << r.out;
  EXPECT_EQ(read_file(dir / "cs.tsv"),
            "I like music\tmusic I like\tsa\t\t\nbig  red car\tthe car\tsa\t\t\n");
  const auto cs = load_cs_corpus(dir / "cs.tsv");
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[1].original.query, "big  red car");
}

TEST(Cli, Gradcheck) {
  const auto r = run({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("checked "), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);

  const auto strict = run({"gradcheck", "--tol", "0"});
  EXPECT_EQ(strict.code, 1);
  EXPECT_NE(strict.out.find("FAIL"), std::string::npos);
}

// synth -> build-cs -> pretrain -> finetune -> index -> retrieve -> eval, all
// through the installed binary.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli_pipeline");
    const char* bin = std::getenv("XSR_CLI");
    ASSERT_NE(bin, nullptr) << "XSR_CLI not set";
    bin_ = bin;
    const std::string d = dir_->path().string();
    const std::string model = " --set d_model=16 --set n_heads=2 --set d_ff=32 --set n_layers=1"
                              " --set max_len=16 --set dropout=0 --batch-size 8";
    sh(bin_ + " synth --seed 3 --out " + d + "/data");
    sh(bin_ + " build-cs --seed 3 --pairs " + d + "/data/kb.tsv --dict " + d +
       "/data/sa-en.tsv --dict " + d + "/data/sb-en.tsv --out " + d + "/cs.tsv");
    sh(bin_ + " pretrain --seed 3 --pretrain-steps 20 --pairs " + d + "/data/kb.tsv --cs-corpus " +
       d + "/cs.tsv --log " + d + "/pre.jsonl --out " + d + "/pre.ckpt" + model);
    sh(bin_ + " finetune --seed 3 --finetune-steps 10 --pairs " + d + "/data/kb.tsv --checkpoint " +
       d + "/pre.ckpt --out " + d + "/ft.ckpt" + model);
    sh(bin_ + " index --pairs " + d + "/data/kb.tsv --checkpoint " + d + "/ft.ckpt --out " + d +
       "/kb.index");
  }
  static void TearDownTestSuite() { delete dir_; }

  static void sh(const std::string& cmd) {
    const std::string full = cmd + " > /dev/null 2>&1";
    ASSERT_EQ(std::system(full.c_str()), 0) << cmd;
  }
  static std::string capture(const std::string& cmd) {
    std::string text;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return text;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) text.append(buf, n);
    ::pclose(p);
    return text;
  }
  static std::string path(const std::string& name) { return (*dir_ / name).string(); }

  static TempDir* dir_;
  static std::string bin_;
};

TempDir* CliPipeline::dir_ = nullptr;
std::string CliPipeline::bin_;

TEST_F(CliPipeline, LossLogHasOneRecordPerStep) {
  const std::string log = read_file(path("pre.jsonl"));
  std::istringstream in(log);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("step").get<std::size_t>(), n + 1);
    ++n;
  }
  EXPECT_EQ(n, 20u);
}

TEST_F(CliPipeline, RetrieveSelfMatch) {
  const auto kb = load_pairs(path("data/kb.tsv"));
  ASSERT_FALSE(kb.empty());
  const std::string out = capture(bin_ + " retrieve --k 1 --checkpoint " + path("ft.ckpt") +
                                  " --index " + path("kb.index") + " --query '" + kb[5].query +
                                  "'");
  std::istringstream in(out);
  std::string q, rank, id, score;
  ASSERT_TRUE(std::getline(in, q, '\t'));
  std::getline(in, rank, '\t');
  std::getline(in, id, '\t');
  std::getline(in, score);
  EXPECT_EQ(q, "0");
  EXPECT_EQ(rank, "1");
  EXPECT_NEAR(std::stod(score), 1.0, 1e-9);
  EXPECT_EQ(kb[std::stoul(id)].query, kb[5].query);
}

TEST_F(CliPipeline, RetrieveAndEvalFiles) {
  sh(bin_ + " retrieve --k 30 --checkpoint " + path("ft.ckpt") + " --index " +
     path("kb.index") + " --tests " + path("data/tests_mono.tsv") + " --out " +
     path("results.jsonl"));
  const std::string results = read_file(path("results.jsonl"));
  const auto first = nlohmann::json::parse(results.substr(0, results.find('\n')));
  EXPECT_EQ(first.at("query_id").get<int>(), 0);
  EXPECT_EQ(first.at("rank").get<int>(), 1);

  const std::string report = capture(bin_ + " eval --k 10 --results " + path("results.jsonl") +
                                     " --tests " + path("data/tests_mono.tsv") + " --out " +
                                     path("metrics.csv"));
  EXPECT_NE(report.find("accuracy@1"), std::string::npos);
  EXPECT_NE(report.find("mrr@10"), std::string::npos);
  EXPECT_NE(report.find("accuracy@1[sa]"), std::string::npos);
  const std::string csv = read_file(path("metrics.csv"));
  EXPECT_EQ(csv.rfind("metric,value\n", 0), 0u);
}

TEST_F(CliPipeline, RerunIsByteIdentical) {
  const std::string d = dir_->path().string();
  const std::string model = " --set d_model=16 --set n_heads=2 --set d_ff=32 --set n_layers=1"
                            " --set max_len=16 --set dropout=0 --batch-size 8";
  sh(bin_ + " pretrain --seed 3 --pretrain-steps 20 --pairs " + d + "/data/kb.tsv --cs-corpus " +
     d + "/cs.tsv --log " + d + "/pre2.jsonl --out " + d + "/pre2.ckpt" + model);
  EXPECT_EQ(read_file(path("pre.jsonl")), read_file(path("pre2.jsonl")));
  EXPECT_EQ(read_file(path("pre.ckpt")), read_file(path("pre2.ckpt")));
}

}  // namespace
}  // namespace xsr
