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
#include "xsr/kernels.h"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace xsr::kernels {
namespace {

// One output row of a * b. Shared by both flavours.
inline void matmul_row(const double* a_row, const double* b, double* out_row,
                       std::size_t k, std::size_t n) {
  std::fill(out_row, out_row + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a_row[p];
    if (av == 0.0) continue;
    const double* b_row = b + p * n;
    for (std::size_t j = 0; j < n; ++j) out_row[j] += av * b_row[j];
  }
}

inline double dot(const double* x, const double* y, std::size_t k) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc += x[p] * y[p];
  return acc;
}

inline void matmul_bt_row(const double* a_row, const double* b, double* out_row,
                          std::size_t k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out_row[j] = dot(a_row, b + j * k, k);
}

std::vector<Scored> select_top(std::vector<Scored> items, std::size_t k) {
  k = std::min(k, items.size());
  std::partial_sort(items.begin(), items.begin() + static_cast<long>(k),
                    items.end(), ranks_before);
  items.resize(k);
  return items;
}

}  // namespace

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t m, std::size_t k,
            std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    matmul_row(a.data() + i * k, b.data(), out.data() + i * n, k, n);
}

void matmul_bt(std::span<const double> a, std::span<const double> b,
               std::span<double> out, std::size_t m, std::size_t k,
               std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    matmul_bt_row(a.data() + i * k, b.data(), out.data() + i * n, k, n);
}

void row_dots(std::span<const double> rows, std::span<const double> query,
              std::span<double> out, std::size_t dim) {
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = dot(rows.data() + r * dim, query.data(), dim);
}

std::vector<Scored> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<Scored> all;
  all.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) all.emplace_back(i, scores[i]);
  std::sort(all.begin(), all.end(), ranks_before);
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t m, std::size_t k,
            std::size_t n) {
  const long rows = static_cast<long>(m);
  const bool wide = m * k * n >= kParallelFlopThreshold;
#pragma omp parallel for schedule(static) if (wide)
  for (long i = 0; i < rows; ++i)
    matmul_row(a.data() + i * k, b.data(), out.data() + i * n, k, n);
}

void matmul_bt(std::span<const double> a, std::span<const double> b,
               std::span<double> out, std::size_t m, std::size_t k,
               std::size_t n) {
  const long rows = static_cast<long>(m);
  const bool wide = m * k * n >= kParallelFlopThreshold;
#pragma omp parallel for schedule(static) if (wide)
  for (long i = 0; i < rows; ++i)
    matmul_bt_row(a.data() + i * k, b.data(), out.data() + i * n, k, n);
}

void row_dots(std::span<const double> rows, std::span<const double> query,
              std::span<double> out, std::size_t dim) {
  const long n = static_cast<long>(out.size());
  const bool wide = out.size() * dim >= kParallelFlopThreshold;
#pragma omp parallel for schedule(static) if (wide)
  for (long r = 0; r < n; ++r)
    out[r] = dot(rows.data() + r * dim, query.data(), dim);
}

std::vector<Scored> top_k(std::span<const double> scores, std::size_t k) {
  const std::size_t n = scores.size();
  const int threads = max_threads();
  std::vector<std::vector<Scored>> partial(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
  {
#ifdef _OPENMP
    const std::size_t t = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t nt = static_cast<std::size_t>(omp_get_num_threads());
#else
    const std::size_t t = 0, nt = 1;
#endif
    const std::size_t begin = n * t / nt, end = n * (t + 1) / nt;
    std::vector<Scored> local;
    local.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) local.emplace_back(i, scores[i]);
    partial[t] = select_top(std::move(local), k);
  }
  std::vector<Scored> merged;
  for (auto& p : partial) merged.insert(merged.end(), p.begin(), p.end());
  return select_top(std::move(merged), k);
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace xsr::kernels
