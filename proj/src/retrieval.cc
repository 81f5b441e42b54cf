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
#include "xsr/retrieval.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>
#include "xsr/errors.h"

namespace xsr {

KnowledgeBase::KnowledgeBase(const std::vector<QueryLabelPair>& pairs) {
  entries_.reserve(pairs.size());
  for (const auto& p : pairs)
    entries_.push_back({entries_.size(), p.query, p.label, p.language});
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  return KnowledgeBase(load_pairs(path));
}

std::vector<QueryLabelPair> KnowledgeBase::pairs() const {
  std::vector<QueryLabelPair> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.query, e.label, e.language});
  return out;
}

IndexField parse_index_field(std::string_view name) {
  if (name == "query") return IndexField::kQuery;
  if (name == "label") return IndexField::kLabel;
  throw ConfigError("index_field", "expected query or label, got '" + std::string(name) + "'");
}

Index build_index(const std::vector<SentenceVector>& vectors, std::string fingerprint) {
  if (vectors.empty()) throw ContractError("cannot index an empty knowledge base");
  const std::size_t d = vectors.front().size();
  Index index{Tensor({vectors.size(), d}), std::move(fingerprint), IndexField::kQuery};
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    if (vectors[r].size() != d) throw ShapeError("index vectors differ in length");
    double ss = 0.0;
    for (double v : vectors[r].values) ss += v * v;
    const double norm = std::sqrt(ss);
    if (norm == 0.0 || !std::isfinite(norm))
      throw DomainError("cannot index entry " + std::to_string(r) + ": zero-norm vector");
    auto row = index.rows.row(r);
    for (std::size_t j = 0; j < d; ++j) row[j] = vectors[r].values[j] / norm;
  }
  return index;
}

Index build_index(const KnowledgeBase& kb, const Checkpoint& checkpoint, IndexField field) {
  if (kb.empty()) throw ContractError("cannot index an empty knowledge base");
  std::vector<std::string> texts;
  texts.reserve(kb.size());
  for (const auto& e : kb.entries())
    texts.push_back(field == IndexField::kQuery ? e.query : e.label);
  auto vectors = encode_batch(texts, checkpoint.vocab, checkpoint.params, checkpoint.script);
  Index index = build_index(vectors, fingerprint(checkpoint.params));
  index.field = field;
  return index;
}

void save_index(const Index& index, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "index files are little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const nlohmann::ordered_json header = {
      {"fingerprint", index.fingerprint},
      {"field", index.field == IndexField::kQuery ? "query" : "label"},
      {"rows", index.size()},
      {"dim", index.dim()}};
  out << "XSRINDEX 1\n" << header.dump() << '\n';
  const auto data = index.rows.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw IoError("failed writing " + path.string());
}

Index load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != "XSRINDEX 1")
    throw ParseError(path.string(), 1, "not an index file");
  if (!std::getline(in, header_line)) throw ParseError(path.string(), 2, "missing header");
  Index index;
  std::size_t rows = 0, dim = 0;
  try {
    const auto h = nlohmann::json::parse(header_line);
    index.fingerprint = h.at("fingerprint").get<std::string>();
    index.field = parse_index_field(h.at("field").get<std::string>());
    rows = h.at("rows").get<std::size_t>();
    dim = h.at("dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 2, e.what());
  }
  if (rows == 0 || dim == 0) throw ParseError(path.string(), 2, "empty index");
  index.rows = Tensor({rows, dim});
  auto data = index.rows.data();
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double)))
    throw ParseError(path.string(), 3, "truncated index data");
  if (in.peek() != std::ifstream::traits_type::eof())
    throw ParseError(path.string(), 3, "trailing bytes after index data");
  return index;
}

namespace {

std::vector<double> unit(const Index& index, const SentenceVector& query) {
  if (index.size() == 0) throw ContractError("index is empty");
  if (query.size() != index.dim())
    throw ShapeError("query vector has " + std::to_string(query.size()) +
                     " dims, index has " + std::to_string(index.dim()));
  double ss = 0.0;
  for (double v : query.values) ss += v * v;
  if (ss == 0.0) throw DomainError("query vector has zero norm");
  const double norm = std::sqrt(ss);
  std::vector<double> q(query.values);
  for (double& v : q) v /= norm;
  return q;
}

RetrievalResult to_result(const std::vector<kernels::Scored>& scored) {
  RetrievalResult r;
  r.hits.reserve(scored.size());
  for (const auto& [id, score] : scored) r.hits.push_back({id, std::clamp(score, -1.0, 1.0)});
  return r;
}

}  // namespace

RetrievalResult rank(const Index& index, const SentenceVector& query, std::size_t k) {
  if (k < 1) throw ContractError("k must be at least 1");
  const auto q = unit(index, query);
  std::vector<double> scores(index.size());
  kernels::parallel::row_dots(index.rows.data(), q, scores, index.dim());
  return to_result(kernels::parallel::top_k(scores, k));
}

RetrievalResult rank_serial(const Index& index, const SentenceVector& query, std::size_t k) {
  if (k < 1) throw ContractError("k must be at least 1");
  const auto q = unit(index, query);
  std::vector<double> scores(index.size());
  kernels::serial::row_dots(index.rows.data(), q, scores, index.dim());
  return to_result(kernels::serial::top_k(scores, k));
}

RetrievalResult retrieve_top_k(std::string_view query, const Index& index,
                               const Checkpoint& checkpoint, std::size_t k) {
  if (k < 1) throw ContractError("k must be at least 1");
  if (!index.fingerprint.empty() && index.fingerprint != fingerprint(checkpoint.params))
    throw ContractError("index was built with a different checkpoint");
  return rank(index, encode_sentence(query, checkpoint.vocab, checkpoint.params,
                                     checkpoint.script),
              k);
}

void write_results(const std::filesystem::path& path, const std::vector<std::string>& queries,
                   const std::vector<RetrievalResult>& results) {
  if (queries.size() != results.size())
    throw ContractError("write_results: query and result counts differ");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t q = 0; q < results.size(); ++q) {
    for (std::size_t r = 0; r < results[q].hits.size(); ++r) {
      const Hit& h = results[q].hits[r];
      nlohmann::ordered_json line = {{"query_id", q},
                                     {"query", queries[q]},
                                     {"rank", r + 1},
                                     {"id", h.id},
                                     {"score", h.score}};
      out << line.dump() << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace xsr
