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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "xsr/errors.h"
#include "xsr/evalkit.h"
#include "xsr/gradcheck.h"
#include "xsr/synth.h"

namespace xsr {
namespace {

const std::string& need(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError(key, "required by this command");
  return value;
}

const std::string& need_file(const std::string& value, const char* key) {
  need(value, key);
  if (!std::filesystem::is_regular_file(value))
    throw ConfigError(key, "no such file: " + value);
  return value;
}

std::vector<BilingualDictionary> load_dictionaries(const AppConfig& c) {
  if (c.paths.dictionaries.empty()) throw ConfigError("dictionaries", "required by this command");
  std::vector<BilingualDictionary> dicts;
  for (const auto& path : c.paths.dictionaries) {
    need_file(path, "dictionaries");
    dicts.push_back(load_dictionary(path));
  }
  return dicts;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// Query texts from --queries (one per line) or the first column of --tests.
std::vector<std::string> user_queries(const AppConfig& c) {
  if (!c.paths.queries.empty()) return read_lines(need_file(c.paths.queries, "queries"));
  if (!c.paths.tests.empty()) {
    std::vector<std::string> out;
    for (const auto& t : load_test_queries(need_file(c.paths.tests, "tests"))) out.push_back(t.text);
    return out;
  }
  throw ConfigError("queries", "give queries or tests");
}

void print_log_tail(const std::vector<LossRecord>& log, std::ostream& out) {
  if (log.empty()) {
    out << "no training steps\n";
    return;
  }
  out << "steps " << log.size() << ", first " << to_json_line(log.front()) << "\n"
      << "last " << to_json_line(log.back()) << "\n";
}

int cmd_build_cs(const AppConfig& c, std::ostream& out) {
  const auto pairs = load_pairs(need_file(c.paths.pairs, "pairs"));
  const auto dicts = load_dictionaries(c);
  need(c.paths.out, "out");
  SwitchPolicy policy = c.pipeline().policy;
  policy.rate = c.train.cmd_rate;
  const auto cs = build_cs_knowledge(pairs, dicts, policy, c.script);
  save_cs_corpus(c.paths.out, cs);

  std::size_t eligible_sides = 0, replaced = 0;
  std::vector<TokenSeq> sentences;
  for (const auto& p : cs) {
    replaced += p.query_replaced.size() + p.label_replaced.size();
    eligible_sides += 2;
    sentences.push_back(p.query);
    sentences.push_back(p.label);
  }
  out << "wrote " << cs.size() << " pairs to " << c.paths.out << " (" << replaced
      << " tokens replaced over " << eligible_sides << " sentences)\n";
  for (const auto& d : dicts)
    if (d.collapsed_targets() > 0)
      out << "warning: " << d.tag() << ": " << d.collapsed_targets()
          << " multi-word targets cut to their first word\n";
  if (!sentences.empty()) {
    const auto stats = corpus_stats(sentences, lexicons_from(dicts));
    out << std::fixed << std::setprecision(4) << "mixed " << stats.mixed_fraction()
        << " english " << stats.english_fraction() << " native " << stats.native_fraction()
        << "\n";
  }
  return 0;
}

int cmd_pretrain(const AppConfig& c, std::ostream& out) {
  const auto pairs = load_pairs(need_file(c.paths.pairs, "pairs"));
  auto cs = load_cs_corpus(need_file(c.paths.cs_corpus, "cs_corpus"), c.script);
  need(c.paths.out, "out");
  if (cs.size() != pairs.size())
    throw ConfigError("cs_corpus", "has " + std::to_string(cs.size()) + " pairs but pairs has " +
                                       std::to_string(pairs.size()));
  for (std::size_t i = 0; i < cs.size(); ++i) cs[i].original = pairs[i];
  const TrainRun run = pretrain_stage(cs, c.pipeline());
  save_checkpoint(run.checkpoint, c.paths.out);
  if (!c.paths.log.empty()) write_loss_log(c.paths.log, run.log);
  print_log_tail(run.log, out);
  out << "checkpoint " << c.paths.out << " fingerprint " << fingerprint(run.checkpoint.params)
      << "\n";
  return 0;
}

int cmd_finetune(const AppConfig& c, std::ostream& out) {
  const Checkpoint start = load_checkpoint(need_file(c.paths.checkpoint, "checkpoint"));
  const auto pairs = load_pairs(need_file(c.paths.pairs, "pairs"));
  need(c.paths.out, "out");
  const TrainRun run = finetune(pairs, start, c.finetune_config());
  save_checkpoint(run.checkpoint, c.paths.out);
  if (!c.paths.log.empty()) write_loss_log(c.paths.log, run.log);
  print_log_tail(run.log, out);
  out << "checkpoint " << c.paths.out << " fingerprint " << fingerprint(run.checkpoint.params)
      << "\n";
  return 0;
}

int cmd_index(const AppConfig& c, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(need_file(c.paths.checkpoint, "checkpoint"));
  const KnowledgeBase kb = KnowledgeBase::load(need_file(c.paths.pairs, "pairs"));
  need(c.paths.out, "out");
  const Index index = build_index(kb, ckpt, c.index_field);
  save_index(index, c.paths.out);
  out << "indexed " << index.size() << " entries (" << index.dim() << " dims) to "
      << c.paths.out << "\n";
  return 0;
}

int cmd_retrieve(const CommandArgs& a, const AppConfig& c, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(need_file(c.paths.checkpoint, "checkpoint"));
  const Index index = load_index(need_file(c.paths.index, "index"));
  const std::vector<std::string> queries =
      a.query.empty() ? user_queries(c) : std::vector<std::string>{a.query};
  std::vector<RetrievalResult> results;
  results.reserve(queries.size());
  for (const auto& q : queries) results.push_back(retrieve_top_k(q, index, ckpt, c.k));
  if (!c.paths.out.empty()) {
    write_results(c.paths.out, queries, results);
    out << "wrote " << queries.size() << " result lists to " << c.paths.out << "\n";
  } else {
    for (std::size_t q = 0; q < results.size(); ++q)
      for (std::size_t r = 0; r < results[q].hits.size(); ++r)
        out << q << '\t' << r + 1 << '\t' << results[q].hits[r].id << '\t'
            << std::setprecision(9) << results[q].hits[r].score << '\n';
  }
  return 0;
}

int cmd_eval(const AppConfig& c, std::ostream& out) {
  const auto ranked = load_ranked(need_file(c.paths.results, "results"));
  std::map<std::string, std::set<std::size_t>> gold;
  std::map<std::string, std::string> language;
  if (!c.paths.gold.empty()) {
    gold = load_gold(need_file(c.paths.gold, "gold"));
  } else {
    const auto tests = load_test_queries(need_file(c.paths.tests, "tests"));
    for (std::size_t i = 0; i < tests.size(); ++i) {
      gold[std::to_string(i)] = tests[i].gold;
      language[std::to_string(i)] = tests[i].language;
    }
  }
  if (gold.empty()) throw ConfigError("gold", "no gold records");
  const auto records = join_records(gold, ranked);

  std::vector<std::pair<std::string, double>> rows = {
      {"accuracy@1", accuracy_at_k(records, 1)},
      {"accuracy@" + std::to_string(c.k), accuracy_at_k(records, c.k)},
      {"accuracy@30", accuracy_at_k(records, 30)},
      {"p@1", precision_at_k(records, 1)},
      {"p@5", precision_at_k(records, 5)},
      {"mrr@10", mrr_at_n(records, 10)}};
  std::map<std::string, std::vector<EvalRecord>> by_language;
  for (const auto& r : records)
    if (auto it = language.find(r.query_id); it != language.end() && !it->second.empty())
      by_language[it->second].push_back(r);
  for (const auto& [lang, recs] : by_language)
    rows.push_back({"accuracy@1[" + lang + "]", accuracy_at_k(recs, 1)});

  std::ostringstream report;
  report << "metric,value\n";
  for (const auto& [name, value] : rows) {
    out << std::left << std::setw(18) << name << std::fixed << std::setprecision(6) << value
        << "\n";
    report << name << ',' << std::setprecision(9) << value << '\n';
  }
  out << "records " << records.size() << "\n";
  if (!c.paths.out.empty()) {
    std::ofstream f(c.paths.out, std::ios::binary);
    if (!(f << report.str())) throw IoError("cannot write " + c.paths.out);
  }
  return 0;
}

int cmd_sweep(const CommandArgs& a, const AppConfig& c, std::ostream& out) {
  const KnowledgeBase kb = KnowledgeBase::load(need_file(c.paths.pairs, "pairs"));
  const auto dicts = load_dictionaries(c);
  const auto tests = load_test_queries(need_file(c.paths.tests, "tests"));
  const auto seeds = a.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : a.seeds;
  const SweepReport report = sweep(parse_sweep_parameter(a.param), a.values, c.pipeline(), kb,
                                   dicts, tests, c.k, seeds);
  out << sweep_text(report);
  if (!c.paths.out.empty()) {
    std::ofstream f(c.paths.out, std::ios::binary);
    if (!(f << sweep_csv(report))) throw IoError("cannot write " + c.paths.out);
  }
  return 0;
}

int cmd_gradcheck(const CommandArgs& a, const AppConfig& c, std::ostream& out) {
  GradcheckOptions o;
  o.lambda = c.train.lambda;
  o.seed = c.seed;
  const GradcheckReport r = gradcheck(o);
  for (const auto& p : r.params)
    out << std::left << std::setw(20) << p.name << std::right << std::setw(6) << p.size
        << "  max rel err " << std::scientific << std::setprecision(3) << p.max_rel_error
        << "\n";
  out << "checked " << r.checked << " entries; max relative error " << std::scientific
      << std::setprecision(3) << r.max_rel_error << " (" << r.worst_param << "), tolerance "
      << a.tolerance << "\n";
  if (!(r.max_rel_error <= a.tolerance)) {
    out << "FAIL\n";
    return 1;
  }
  out << "PASS\n";
  return 0;
}

int cmd_export_sim(const AppConfig& c, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(need_file(c.paths.checkpoint, "checkpoint"));
  const auto queries = user_queries(c);
  std::vector<std::string> labels;
  if (!c.paths.labels.empty()) {
    labels = read_lines(need_file(c.paths.labels, "labels"));
  } else {
    for (const auto& p : load_pairs(need_file(c.paths.pairs, "pairs"))) labels.push_back(p.label);
  }
  need(c.paths.out, "out");
  export_sim_matrix(queries, labels, ckpt, c.paths.out);
  out << "wrote " << queries.size() << "x" << labels.size() << " similarity matrix to "
      << c.paths.out << "\n";
  return 0;
}

int cmd_synth(const AppConfig& c, std::ostream& out) {
  need(c.paths.out, "out");
  SynthConfig sc;
  sc.seed = c.seed;
  const SynthBenchmark b = make_synth_benchmark(sc);
  write_synth_benchmark(b, c.paths.out);
  out << "wrote " << b.kb.size() << " KB pairs, " << b.dictionaries.size() << " dictionaries, "
      << b.mono_tests.size() << "+" << b.mixed_tests.size() << " tests to " << c.paths.out
      << "\n";
  return 0;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "build-cs", "pretrain", "finetune", "index", "retrieve", "eval",
      "sweep", "gradcheck", "export-sim", "synth", "show-config"};
  return names;
}

int dispatch(const std::string& command, const CommandArgs& args, const AppConfig& config,
             std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    if (command == "build-cs") return cmd_build_cs(config, out);
    if (command == "pretrain") return cmd_pretrain(config, out);
    if (command == "finetune") return cmd_finetune(config, out);
    if (command == "index") return cmd_index(config, out);
    if (command == "retrieve") return cmd_retrieve(args, config, out);
    if (command == "eval") return cmd_eval(config, out);
    if (command == "sweep") return cmd_sweep(args, config, out);
    if (command == "gradcheck") return cmd_gradcheck(args, config, out);
    if (command == "export-sim") return cmd_export_sim(config, out);
    if (command == "synth") return cmd_synth(config, out);
    if (command == "show-config") {
      out << dump(config);
      return 0;
    }
    err << "usage error: unknown command '" << command << "'\n";
    return 64;
  } catch (const ConfigError& e) {
    err << "config error (" << e.key() << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-lingual semantic retrieval with code-switched pre-training", "xsr"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::vector<std::string> dict_flags;
  CommandArgs args;
  std::string values_text, seeds_text;

  // Flag name -> config key.
  const std::vector<std::pair<std::string, std::string>> mapped = {
      {"--seed", "seed"},         {"--script", "script"},
      {"--pairs", "pairs"},       {"--kb", "pairs"},
      {"--cs-corpus", "cs_corpus"}, {"--checkpoint", "checkpoint"},
      {"--index", "index"},       {"--queries", "queries"},
      {"--labels", "labels"},     {"--tests", "tests"},
      {"--gold", "gold"},         {"--results", "results"},
      {"--log", "log"},           {"--out", "out"},
      {"--k", "k"},               {"--rate", "cmd_rate"},
      {"--lambda", "lambda"},     {"--lr", "lr"},
      {"--field", "index_field"}, {"--pretrain-steps", "pretrain_steps"},
      {"--finetune-steps", "finetune_steps"}, {"--batch-size", "batch_size"}};

  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "YAML config file");
    sub->add_option("--set", sets, "Override any config key: key=value");
    for (const auto& [flag, key] : mapped) sub->add_option(flag, flags[flag], key);
    sub->add_option("--dict", dict_flags, "Dictionary TSV (repeatable)");
    if (name == "retrieve") sub->add_option("--query", args.query, "Single query text");
    if (name == "sweep") {
      sub->add_option("--param", args.param, "lambda or cmd_rate");
      sub->add_option("--values", values_text, "Comma-separated values")->required();
      sub->add_option("--seeds", seeds_text, "Comma-separated seeds");
    }
    if (name == "gradcheck") sub->add_option("--tol", args.tolerance, "Max relative error");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 64;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  AppConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    apply_env_overrides(config);
    for (const auto& [flag, key] : mapped)
      if (!flags[flag].empty()) set_config_value(config, key, flags[flag]);
    if (!dict_flags.empty()) config.paths.dictionaries = dict_flags;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
      set_config_value(config, s.substr(0, eq), s.substr(eq + 1));
    }
    auto split = [](const std::string& text) {
      std::vector<std::string> parts;
      std::stringstream ss(text);
      std::string p;
      while (std::getline(ss, p, ','))
        if (!p.empty()) parts.push_back(p);
      return parts;
    };
    for (const auto& v : split(values_text)) {
      std::size_t used = 0;
      args.values.push_back(std::stod(v, &used));
      if (used != v.size()) throw ConfigError("values", "bad number '" + v + "'");
    }
    for (const auto& s : split(seeds_text)) {
      AppConfig tmp;
      set_config_value(tmp, "seed", s);
      args.seeds.push_back(tmp.seed);
    }
  } catch (const ConfigError& e) {
    err << "config error (" << e.key() << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return dispatch(command, args, config, out, err);
}

}  // namespace xsr
