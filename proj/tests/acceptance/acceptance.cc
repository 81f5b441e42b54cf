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
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xsr/codeswitch.h"
#include "xsr/encoder.h"
#include "xsr/errors.h"
#include "xsr/evalkit.h"
#include "xsr/gradcheck.h"
#include "xsr/objectives.h"
#include "xsr/retrieval.h"
#include "xsr/synth.h"
#include "xsr/trainer.h"

namespace xsr {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("xsr_acceptance_" + std::to_string(Clock::now().time_since_epoch().count()));
  std::filesystem::create_directories(dir);
  return dir;
}

// Benchmark model and schedule shared by the direction-of-effect checks.
PipelineConfig benchmark_config() {
  PipelineConfig c;
  c.encoder = {.d_model = 32, .n_layers = 2, .n_heads = 4, .d_ff = 64, .max_len = 16,
               .vocab_size = 4096, .dropout = 0.0};
  c.pretrain.learning_rate = 1e-3;
  c.pretrain.batch_size = 16;
  c.pretrain.steps = 400;
  c.pretrain.lambda = 0.2;
  c.pretrain.cmd_rate = 0.1;
  c.finetune = c.pretrain;
  c.finetune.mode = TrainMode::kFinetune;
  c.finetune.steps = 100;
  c.run_finetune = true;
  c.k = 10;
  return c;
}

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

struct BenchScores {
  double mono = 0.0, mixed = 0.0, all = 0.0;
};

// Mean accuracy@1 over kSeeds.
BenchScores run_benchmark(const PipelineConfig& base, const SynthBenchmark& bench) {
  const KnowledgeBase kb(bench.kb);
  std::vector<std::string> queries;
  std::vector<TestQuery> all_tests;
  for (const auto& t : bench.mixed_tests) queries.push_back(t.text), all_tests.push_back(t);
  for (const auto& t : bench.mono_tests) queries.push_back(t.text), all_tests.push_back(t);
  const std::size_t n_mixed = bench.mixed_tests.size();

  BenchScores mean;
  for (std::uint64_t seed : kSeeds) {
    const auto out = run_pipeline(queries, kb, bench.dictionaries, with_seed(base, seed));
    const std::vector<RetrievalResult> mixed(out.results.begin(), out.results.begin() + n_mixed);
    const std::vector<RetrievalResult> mono(out.results.begin() + n_mixed, out.results.end());
    const double s_mixed = evaluate_accuracy(mixed, bench.mixed_tests, 1).overall;
    const double s_mono = evaluate_accuracy(mono, bench.mono_tests, 1).overall;
    const double s_all = evaluate_accuracy(out.results, all_tests, 1).overall;
    std::printf("  seed %llu: acc@1 mixed %.4f mono %.4f all %.4f\n",
                static_cast<unsigned long long>(seed), s_mixed, s_mono, s_all);
    mean.mixed += s_mixed / kSeeds.size();
    mean.mono += s_mono / kSeeds.size();
    mean.all += s_all / kSeeds.size();
  }
  return mean;
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  GradcheckOptions o;
  o.config = {.d_model = 8, .n_layers = 2, .n_heads = 2, .d_ff = 16, .max_len = 12,
              .vocab_size = 16, .dropout = 0.1};
  o.lambda = 0.2;
  o.h = 1e-5;
  const GradcheckReport r = gradcheck(o);
  const double secs = seconds_since(t0);
  std::size_t expected = 0;
  for (const auto& p : r.params) expected += p.size;
  const bool ok = r.max_rel_error <= 1e-4 && secs < 60.0 && r.checked == expected &&
                  !r.params.empty();
  return {ok, fmt("%zu entries over %zu tensors, max rel err %.3e (%s), %.1fs", r.checked,
                  r.params.size(), r.max_rel_error, r.worst_param.c_str(), secs)};
}

// Positionwise masked-LM loss computed from the encoder's hidden states and the
// tied output embedding, independent of the library loss code.
double reference_mlm(const EncoderParams& p, const MaskedView& v) {
  const Tensor hidden = forward(p, v.input).hidden;
  const Tensor& emb = p.get("tok_emb");
  const Tensor& bias = p.get("mlm.bias");
  double total = 0.0;
  for (std::size_t i = 0; i < v.positions.size(); ++i) {
    std::vector<double> row(emb.rows());
    for (std::size_t t = 0; t < emb.rows(); ++t) {
      double s = bias[t];
      for (std::size_t j = 0; j < emb.cols(); ++j) s += hidden.at(v.positions[i], j) * emb.at(t, j);
      row[t] = s;
    }
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double x : row) z += std::exp(x - mx);
    total += std::log(z) + mx - row[v.targets[i]];
  }
  return total;
}

Outcome loss_identities() {
  std::vector<std::string> notes;
  bool ok = true;

  // Batch of one: the only candidate is the positive.
  const SentenceVector a{{0.3, -1.0, 2.0}}, b{{1.0, 0.5, -0.2}};
  const double single = sim_loss({a}, {b});
  ok &= single == 0.0;

  // Two pairs, all four cosines equal (every vector identical).
  const double two = sim_loss({a, a}, {a, a});
  ok &= std::abs(two - std::log(2.0)) <= 1e-9;
  notes.push_back(fmt("sim(1)=%g sim(2,equal)-ln2=%.1e", single, two - std::log(2.0)));

  // total = lambda*xmlm + sim on every logged step of a short joint run.
  SynthConfig sc;
  sc.pairs_per_language = 20;
  sc.tests_per_language = 4;
  const SynthBenchmark bench = make_synth_benchmark(sc);
  PipelineConfig pc = benchmark_config();
  pc.encoder.d_model = 16;
  pc.encoder.d_ff = 32;
  pc.encoder.n_heads = 2;
  pc.pretrain.steps = 30;
  pc.finetune = pc.pretrain;
  pc.finetune.mode = TrainMode::kFinetune;
  pc.finetune.steps = 10;
  pc.finetune.finetune_joint = true;
  const auto out = run_pipeline({}, KnowledgeBase(bench.kb), bench.dictionaries, with_seed(pc, 4));
  double worst = 0.0;
  std::size_t steps = 0;
  for (const auto* log : {&out.pretrain_log, &out.finetune_log})
    for (const auto& r : *log) {
      worst = std::max(worst, std::abs(r.loss.total - (r.loss.lambda * r.loss.xmlm + r.loss.sim)));
      ++steps;
    }
  ok &= worst <= 1e-12 && steps == 40;
  notes.push_back(fmt("total identity over %zu steps max dev %.1e", steps, worst));

  // Unmasked label side contributes nothing.
  const EncoderParams params = init_params(
      {.d_model = 8, .n_layers = 2, .n_heads = 2, .d_ff = 16, .max_len = 12, .vocab_size = 20},
      11);
  MaskedView q = MaskedView::unmasked({2, 7, 8, 9, 10, 3});
  for (std::size_t pos : {1u, 4u}) {
    q.positions.push_back(pos);
    q.targets.push_back(q.input[pos]);
    q.input[pos] = special::kMask;
  }
  const MaskedView l = MaskedView::unmasked({2, 12, 13, 3});
  const double dev = std::abs(xmlm_loss(q, l, params) - reference_mlm(params, q));
  ok &= dev <= 1e-12;
  notes.push_back(fmt("xmlm vs query-only %.1e", dev));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

Outcome mlm_sanity() {
  bool ok = true;
  double worst = 0.0;
  for (std::size_t v : {2u, 7u, 100u, 4096u})
    for (std::size_t m : {1u, 3u, 17u}) {
      const Tensor logits(Shape{m, v}, 0.37);
      std::vector<TokenId> targets(m);
      for (std::size_t i = 0; i < m; ++i) targets[i] = static_cast<TokenId>((i * 5) % v);
      const double dev = std::abs(mlm_loss(logits, targets) - m * std::log(double(v)));
      worst = std::max(worst, dev);
      ok &= dev <= 1e-9;
    }
  return {ok, fmt("max |loss - m ln V| %.1e over 12 (m, V) cases", worst)};
}

Outcome codeswitch_statistics() {
  bool ok = true;
  std::vector<std::string> notes;

  // Replacement rate over a large corpus where every token is in the dictionary.
  BilingualDictionary dict("xx-en");
  for (int w = 0; w < 50; ++w) dict.add("w" + std::to_string(w), "e" + std::to_string(w));
  std::vector<QueryLabelPair> pairs;
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> word(0, 49), pad(0, 3);
  std::size_t eligible = 0;
  for (int i = 0; i < 1200; ++i) {
    std::string q, l;
    for (int t = 0; t < 6; ++t) q += (t ? " w" : "w") + std::to_string(word(gen));
    for (int t = 0; t < 4; ++t) l += (t ? " w" : "w") + std::to_string(word(gen));
    for (int t = pad(gen); t > 0; --t) q += " plain";
    pairs.push_back({q, l, "xx"});
    eligible += 10;
  }
  SwitchPolicy policy;
  policy.rate = 0.10;
  policy.seed = 5;
  const auto cs = build_cs_knowledge(pairs, {dict}, policy);
  std::size_t replaced = 0;
  for (const auto& p : cs) replaced += p.query_replaced.size() + p.label_replaced.size();
  const double rate = double(replaced) / double(eligible);
  ok &= eligible >= 10000 && std::abs(rate - 0.10) <= 0.01;
  notes.push_back(fmt("rate %.4f over %zu eligible", rate, eligible));

  // Rate 0 writes every pair back byte for byte.
  const std::vector<QueryLabelPair> odd = {
      {"Hello,  World!", "  Foo  Bar? ", "xx"}, {"w1 W2\xC2\xA0w3", "状 w4", "xx"}};
  policy.rate = 0.0;
  const auto dir = scratch_dir();
  save_cs_corpus(dir / "cs.tsv", build_cs_knowledge(odd, {dict}, policy));
  std::string expect;
  for (const auto& p : odd) expect += p.query + '\t' + p.label + '\t' + p.language + "\t\t\n";
  const bool identical = slurp(dir / "cs.tsv") == expect;
  std::filesystem::remove_all(dir);
  ok &= identical;
  notes.push_back(identical ? "rate 0 identical" : "rate 0 differs");

  // Fixture: S covers the 1st and 3rd tokens.
  BilingualDictionary zh("en-zh");
  zh.add("i", "我");
  zh.add("music", "音乐");
  SwitchPolicy all;
  all.rate = 1.0;
  std::mt19937_64 rng(0);
  const auto r = code_switch(tokenize("I like music"), zh, all, rng);
  const bool fixture = join_tokens(r.tokens) == "我 like 音乐" &&
                       r.replaced == std::vector<std::size_t>{0, 2};
  ok &= fixture;
  notes.push_back("fixture -> " + join_tokens(r.tokens));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

Outcome retrieval_oracle() {
  const auto t0 = Clock::now();
  const std::size_t n = 1000, d = 64;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  std::vector<SentenceVector> vectors(n, SentenceVector{std::vector<double>(d)});
  for (auto& v : vectors)
    for (double& x : v.values) x = normal(rng);
  // Duplicate a few rows so ties must be broken by id.
  vectors[700] = vectors[3];
  vectors[900] = vectors[3];
  const Index index = build_index(vectors);

  bool ok = true;
  std::size_t queries = 0;
  for (int qi = 0; qi < 20; ++qi) {
    SentenceVector q{std::vector<double>(d)};
    if (qi == 0) {
      q = vectors[3];
    } else {
      for (double& x : q.values) x = normal(rng);
    }
    // Exhaustive oracle: cosine against the raw vectors, sort by (-score, id).
    double qn = 0.0;
    for (double x : q.values) qn += x * x;
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0, vn = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        dot += q.values[j] * vectors[i].values[j];
        vn += vectors[i].values[j] * vectors[i].values[j];
      }
      all.push_back({dot / std::sqrt(qn * vn), i});
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      // Scores within rounding are the same cosine; order those by id.
      if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t k : {1u, 10u, 30u}) {
      const auto got = rank(index, q, k);
      const auto serial = rank_serial(index, q, k);
      ok &= got.hits.size() == k && got.hits == serial.hits;
      for (std::size_t r = 0; r < k && r < got.hits.size(); ++r)
        ok &= got.hits[r].id == all[r].second && std::abs(got.hits[r].score - all[r].first) <= 1e-9;
      ++queries;
    }
  }
  const double secs = seconds_since(t0);
  ok &= secs < 10.0;
  return {ok, fmt("%zu ranked lists over 1000x64 match the oracle, %.2fs", queries, secs)};
}

Outcome metric_fixtures() {
  bool ok = true;
  auto close = [&](double got, double want) { ok &= std::abs(got - want) <= 1e-9; };
  // ranked lists with gold sets; hand-computed below.
  const std::vector<EvalRecord> recs = {
      {"a", {4, 1, 7, 2, 9}, {1}},     // gold at rank 2
      {"b", {3, 5, 6, 8, 0}, {3, 8}},  // ranks 1 and 4
      {"c", {2, 0, 1, 5, 4}, {9}},     // absent
      {"d", {6, 2, 4, 3, 1}, {1}}};    // rank 5
  close(accuracy_at_k(recs, 1), 1.0 / 4);
  close(accuracy_at_k(recs, 2), 2.0 / 4);
  close(accuracy_at_k(recs, 5), 3.0 / 4);
  close(precision_at_k(recs, 1), 1.0 / 4);
  close(precision_at_k(recs, 5), (1.0 / 5 + 2.0 / 5 + 0.0 + 1.0 / 5) / 4);
  close(mrr_at_n(recs, 10), (1.0 / 2 + 1.0 + 0.0 + 1.0 / 5) / 4);
  // Ranks (1, 2.5, 2.5, 4) vs (1, 3, 2, 4): rho = 4.5 / sqrt(4.5 * 5) = 3 / sqrt(10).
  close(spearman({1.0, 2.0, 2.0, 3.0}, {10.0, 30.0, 20.0, 40.0}), 3.0 / std::sqrt(10.0));
  // Ranks (1..5) vs (1, 2, 3.5, 5, 3.5): rho = 8 / sqrt(10 * 9.5).
  close(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}), 8.0 / std::sqrt(95.0));
  double prev = 0.0;
  for (std::size_t k = 1; k <= 6; ++k) {
    const double a = accuracy_at_k(recs, k);
    ok &= a >= prev;
    prev = a;
  }
  return {ok, "accuracy@{1,2,5}, p@1, p@5, MRR@10, two Spearman fixtures; acc@k monotone"};
}

Outcome similarity_effect(double* joint_all) {
  const auto t0 = Clock::now();
  const SynthBenchmark bench = make_synth_benchmark({});
  PipelineConfig joint = benchmark_config();
  PipelineConfig mlm_only = joint;
  mlm_only.pretrain.use_sim_loss = false;
  std::printf("  joint loss\n");
  const BenchScores j = run_benchmark(joint, bench);
  std::printf("  MLM-only pre-training\n");
  const BenchScores m = run_benchmark(mlm_only, bench);
  const double secs = seconds_since(t0);
  *joint_all = j.mixed;
  const double gap = 100.0 * (j.all - m.all);
  return {gap >= 5.0 && secs < 600.0,
          fmt("acc@1 joint %.4f vs MLM-only %.4f (+%.1f points; mono %.4f vs %.4f), %.0fs",
              j.all, m.all, gap, j.mono, m.mono, secs)};
}

Outcome codeswitch_effect(double joint_mixed) {
  const auto t0 = Clock::now();
  const SynthBenchmark bench = make_synth_benchmark({});
  PipelineConfig no_cs = benchmark_config();
  no_cs.pretrain.cmd_rate = 0.0;
  std::printf("  Cmd_r = 0\n");
  const BenchScores z = run_benchmark(no_cs, bench);
  const double secs = seconds_since(t0);
  return {joint_mixed > z.mixed && secs < 900.0,
          fmt("code-mixed acc@1 rate 0.10 %.4f vs rate 0 %.4f, %.0fs (rate 0 runs)", joint_mixed,
              z.mixed, secs)};
}

Outcome determinism() {
  SynthConfig sc;
  sc.pairs_per_language = 30;
  sc.tests_per_language = 10;
  const SynthBenchmark bench = make_synth_benchmark(sc);
  std::vector<std::string> queries;
  for (const auto& t : bench.mixed_tests) queries.push_back(t.text);
  for (const auto& t : bench.mono_tests) queries.push_back(t.text);
  PipelineConfig pc = benchmark_config();
  pc.encoder.dropout = 0.1;
  pc.pretrain.steps = 40;
  pc.finetune.steps = 20;

  const auto dir = scratch_dir();
  std::vector<std::string> files;
  for (int run = 0; run < 2; ++run) {
    const auto out = run_pipeline(queries, KnowledgeBase(bench.kb), bench.dictionaries,
                                  with_seed(pc, 17));
    const std::string tag = std::to_string(run);
    write_loss_log(dir / ("pre" + tag), out.pretrain_log);
    write_loss_log(dir / ("ft" + tag), out.finetune_log);
    write_results(dir / ("res" + tag), queries, out.results);
    save_checkpoint(out.checkpoint, dir / ("ck" + tag));
    files.push_back(slurp(dir / ("pre" + tag)) + slurp(dir / ("ft" + tag)));
    files.push_back(slurp(dir / ("res" + tag)));
    files.push_back(slurp(dir / ("ck" + tag)));
  }
  std::filesystem::remove_all(dir);
  const bool logs = files[0] == files[3] && !files[0].empty();
  const bool results = files[1] == files[4] && !files[1].empty();
  const bool ckpt = files[2] == files[5];
  return {logs && results && ckpt,
          fmt("loss logs %s, retrieval files %s (%zu bytes), checkpoints %s",
              logs ? "identical" : "differ", results ? "identical" : "differ", files[1].size(),
              ckpt ? "identical" : "differ")};
}

Outcome checkpoint_round_trip() {
  SynthConfig sc;
  sc.pairs_per_language = 25;
  sc.tests_per_language = 2;
  const SynthBenchmark bench = make_synth_benchmark(sc);
  const KnowledgeBase kb(bench.kb);
  PipelineConfig pc = benchmark_config();
  pc.pretrain.steps = 20;
  pc.finetune.steps = 10;
  const auto out = run_pipeline({}, kb, bench.dictionaries, with_seed(pc, 8));

  const auto dir = scratch_dir();
  save_checkpoint(out.checkpoint, dir / "model.ckpt");
  const Checkpoint loaded = load_checkpoint(dir / "model.ckpt");
  const Index fresh = build_index(kb, loaded);
  save_index(fresh, dir / "kb.index");
  const Index reread = load_index(dir / "kb.index");
  std::filesystem::remove_all(dir);

  auto same_bits = [](const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    return true;
  };
  const bool rows = same_bits(out.index.rows, fresh.rows);
  const bool file = same_bits(fresh.rows, reread.rows) && fresh.fingerprint == reread.fingerprint;
  return {rows && file, fmt("%zu x %zu index rows: reindex %s, index file %s", fresh.size(),
                            fresh.dim(), rows ? "bit-identical" : "differs",
                            file ? "bit-identical" : "differs")};
}

}  // namespace
}  // namespace xsr

int main() {
  using namespace xsr;
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  double joint_mixed = 0.0;
  report(1, "gradient fidelity", gradient_fidelity);
  report(2, "loss identities", loss_identities);
  report(3, "MLM sanity", mlm_sanity);
  report(4, "code-switch statistics", codeswitch_statistics);
  report(5, "retrieval oracle", retrieval_oracle);
  report(6, "metric fixtures", metric_fixtures);
  report(7, "similarity loss effect", [&] { return similarity_effect(&joint_mixed); });
  report(8, "code-switching effect", [&] { return codeswitch_effect(joint_mixed); });
  report(9, "determinism", determinism);
  report(10, "checkpoint round trip", checkpoint_round_trip);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
