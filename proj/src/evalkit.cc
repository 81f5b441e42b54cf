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
#include "xsr/evalkit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>
#include "xsr/errors.h"
#include "xsr/objectives.h"

namespace xsr {
namespace {

void require_records(const std::vector<EvalRecord>& records, std::size_t k, const char* what) {
  if (records.empty()) throw ContractError(std::string(what) + ": no records");
  if (k < 1) throw ContractError(std::string(what) + ": cutoff must be at least 1");
}

std::set<std::size_t> parse_id_set(const std::string& text) {
  const auto ids = parse_indices(text);
  return {ids.begin(), ids.end()};
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

}  // namespace

double accuracy_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
  require_records(records, k, "accuracy_at_k");
  std::size_t hits = 0;
  for (const auto& r : records) {
    const std::size_t n = std::min(k, r.ranked.size());
    if (std::any_of(r.ranked.begin(), r.ranked.begin() + static_cast<long>(n),
                    [&](std::size_t id) { return r.gold.count(id) > 0; }))
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double precision_at_k(const std::vector<EvalRecord>& records, std::size_t k) {
  require_records(records, k, "precision_at_k");
  double total = 0.0;
  for (const auto& r : records) {
    const std::size_t n = std::min(k, r.ranked.size());
    const auto relevant = std::count_if(r.ranked.begin(), r.ranked.begin() + static_cast<long>(n),
                                        [&](std::size_t id) { return r.gold.count(id) > 0; });
    total += static_cast<double>(relevant) / static_cast<double>(k);
  }
  return total / static_cast<double>(records.size());
}

double mrr_at_n(const std::vector<EvalRecord>& records, std::size_t n) {
  require_records(records, n, "mrr_at_n");
  double total = 0.0;
  for (const auto& r : records) {
    const std::size_t limit = std::min(n, r.ranked.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (r.gold.count(r.ranked[i])) {
        total += 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(records.size());
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the mean 1-based rank.
    const double mean = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ContractError("spearman: length mismatch");
  if (x.size() < 2) throw ContractError("spearman: need at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ContractError("spearman: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalRecord make_record(std::string query_id, const RetrievalResult& result,
                       std::set<std::size_t> gold) {
  if (gold.empty()) throw ContractError("evaluation record " + query_id + " has no gold ids");
  EvalRecord r{std::move(query_id), {}, std::move(gold)};
  for (const Hit& h : result.hits) r.ranked.push_back(h.id);
  return r;
}

std::map<std::string, std::set<std::size_t>> load_gold(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::set<std::size_t>> gold;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path.string(), lineno, "expected query id<TAB>gold ids");
    try {
      auto ids = parse_id_set(line.substr(tab + 1));
      if (ids.empty()) throw ContractError("no gold ids");
      gold[line.substr(0, tab)] = std::move(ids);
    } catch (const ContractError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return gold;
}

std::map<std::string, std::vector<std::size_t>> load_ranked(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> by_query;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      by_query[std::to_string(j.at("query_id").get<std::size_t>())].emplace_back(
          j.at("rank").get<std::size_t>(), j.at("id").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  std::map<std::string, std::vector<std::size_t>> ranked;
  for (auto& [q, hits] : by_query) {
    std::sort(hits.begin(), hits.end());
    for (const auto& h : hits) ranked[q].push_back(h.second);
  }
  return ranked;
}

std::vector<EvalRecord> join_records(const std::map<std::string, std::set<std::size_t>>& gold,
                                     const std::map<std::string, std::vector<std::size_t>>& ranked) {
  std::vector<EvalRecord> records;
  for (const auto& [q, ids] : gold) {
    auto it = ranked.find(q);
    records.push_back({q, it == ranked.end() ? std::vector<std::size_t>{} : it->second, ids});
  }
  return records;
}

std::vector<TestQuery> load_test_queries(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<TestQuery> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() < 2 || cols.size() > 3)
      throw ParseError(path.string(), lineno, "expected query<TAB>gold ids<TAB>language");
    try {
      out.push_back({cols[0], parse_id_set(cols[1]), cols.size() == 3 ? cols[2] : ""});
    } catch (const ContractError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    if (out.back().gold.empty()) throw ParseError(path.string(), lineno, "no gold ids");
  }
  return out;
}

void save_test_queries(const std::filesystem::path& path, const std::vector<TestQuery>& queries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& q : queries)
    out << q.text << '\t' << format_indices({q.gold.begin(), q.gold.end()}) << '\t'
        << q.language << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "lambda") return SweepParameter::kLambda;
  if (name == "cmd_rate") return SweepParameter::kCmdRate;
  throw ConfigError("param", "expected lambda or cmd_rate, got '" + std::string(name) + "'");
}

std::string_view sweep_parameter_name(SweepParameter p) {
  return p == SweepParameter::kLambda ? "lambda" : "cmd_rate";
}

Accuracy evaluate_accuracy(const std::vector<RetrievalResult>& results,
                           const std::vector<TestQuery>& tests, std::size_t k) {
  if (results.size() != tests.size())
    throw ContractError("evaluate_accuracy: result and test counts differ");
  std::vector<EvalRecord> all;
  std::map<std::string, std::vector<EvalRecord>> by_language;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    EvalRecord r = make_record(std::to_string(i), results[i], tests[i].gold);
    by_language[tests[i].language].push_back(r);
    all.push_back(std::move(r));
  }
  Accuracy acc;
  acc.overall = accuracy_at_k(all, k);
  for (const auto& [lang, records] : by_language)
    acc.per_language[lang] = accuracy_at_k(records, k);
  return acc;
}

SweepReport sweep(SweepParameter parameter, std::vector<double> values,
                  const PipelineConfig& base, const KnowledgeBase& kb,
                  const std::vector<BilingualDictionary>& dicts,
                  const std::vector<TestQuery>& tests, std::size_t k,
                  const std::vector<std::uint64_t>& seeds) {
  if (values.size() < 2) throw ConfigError("values", "a sweep needs at least two values");
  if (seeds.empty()) throw ConfigError("seeds", "a sweep needs at least one seed");
  if (tests.empty()) throw ConfigError("tests", "a sweep needs test queries");
  std::sort(values.begin(), values.end());
  if (std::adjacent_find(values.begin(), values.end()) != values.end())
    throw ConfigError("values", "sweep values must be distinct");

  SweepReport report;
  report.parameter = std::string(sweep_parameter_name(parameter));
  report.k = k;
  report.seeds = seeds;
  report.lambda = base.pretrain.lambda;
  report.default_value =
      parameter == SweepParameter::kLambda ? kDefaultLambda : kDefaultCmdRate;

  std::vector<std::string> queries;
  for (const auto& t : tests) queries.push_back(t.text);
  for (double value : values) {
    SweepRow row;
    row.value = value;
    std::map<std::string, double> lang_sum;
    for (std::uint64_t seed : seeds) {
      PipelineConfig config = with_seed(base, seed);
      config.k = std::max(config.k, k);
      if (parameter == SweepParameter::kLambda) {
        config.pretrain.lambda = value;
      } else {
        config.pretrain.cmd_rate = value;
      }
      const PipelineOutput out = run_pipeline(queries, kb, dicts, config);
      const Accuracy acc = evaluate_accuracy(out.results, tests, k);
      row.per_seed.push_back(acc.overall);
      for (const auto& [lang, a] : acc.per_language) lang_sum[lang] += a;
    }
    row.mean_accuracy = std::accumulate(row.per_seed.begin(), row.per_seed.end(), 0.0) /
                        static_cast<double>(seeds.size());
    for (const auto& [lang, s] : lang_sum)
      row.per_language[lang] = s / static_cast<double>(seeds.size());
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string sweep_csv(const SweepReport& report) {
  std::set<std::string> langs;
  for (const auto& r : report.rows)
    for (const auto& [l, _] : r.per_language) langs.insert(l);
  std::ostringstream out;
  out << report.parameter << ",default,accuracy@" << report.k;
  for (const auto& l : langs) out << ',' << csv_escape(l.empty() ? "-" : l);
  out << '\n';
  for (const auto& r : report.rows) {
    out << fmt(r.value, 4) << ',' << (r.value == report.default_value ? "*" : "") << ','
        << fmt(r.mean_accuracy);
    for (const auto& l : langs) {
      auto it = r.per_language.find(l);
      out << ',' << (it == r.per_language.end() ? "" : fmt(it->second));
    }
    out << '\n';
  }
  return out.str();
}

std::string sweep_text(const SweepReport& report) {
  std::ostringstream out;
  out << "sweep " << report.parameter << " (accuracy@" << report.k << ", "
      << report.seeds.size() << " seed(s), default lambda " << fmt(kDefaultLambda, 1)
      << ", lambda in use " << fmt(report.lambda, 3) << ")\n";
  for (const auto& r : report.rows) {
    out << "  " << report.parameter << '=' << fmt(r.value, 4)
        << (r.value == report.default_value ? " [default]" : "") << "  mean="
        << fmt(r.mean_accuracy, 4);
    for (const auto& [l, a] : r.per_language) out << "  " << (l.empty() ? "-" : l) << '=' << fmt(a, 4);
    out << '\n';
  }
  return out.str();
}

std::vector<std::vector<double>> similarity_matrix(const std::vector<std::string>& queries,
                                                   const std::vector<std::string>& labels,
                                                   const Checkpoint& checkpoint) {
  const auto qv = encode_batch(queries, checkpoint.vocab, checkpoint.params, checkpoint.script);
  const auto lv = encode_batch(labels, checkpoint.vocab, checkpoint.params, checkpoint.script);
  std::vector<std::vector<double>> m(qv.size(), std::vector<double>(lv.size()));
  for (std::size_t i = 0; i < qv.size(); ++i)
    for (std::size_t j = 0; j < lv.size(); ++j) m[i][j] = cosine_sim(qv[i], lv[j]);
  return m;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void export_sim_matrix(const std::vector<std::string>& queries,
                       const std::vector<std::string>& labels, const Checkpoint& checkpoint,
                       const std::filesystem::path& path) {
  const auto m = similarity_matrix(queries, labels, checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "query";
  for (const auto& l : labels) out << ',' << csv_escape(l);
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out << csv_escape(queries[i]);
    for (double v : m[i]) out << ',' << v;
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace xsr
