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
#ifndef XSR_KERNELS_H_
#define XSR_KERNELS_H_

// Hot inner loops in two flavours. `serial` is the reference; `parallel`
// splits the outer loop across OpenMP threads. Each output element is computed
// by the same instruction sequence in both, so results agree bit for bit.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace xsr::kernels {

// (entry id, score), ordered by descending score then ascending id.
using Scored = std::pair<std::size_t, double>;

inline bool ranks_before(const Scored& a, const Scored& b) {
  if (a.second != b.second) return a.second > b.second;
  return a.first < b.first;
}

namespace serial {

// out[m x n] = a[m x k] * b[k x n]
void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t m, std::size_t k, std::size_t n);
// out[m x n] = a[m x k] * b[n x k]^T
void matmul_bt(std::span<const double> a, std::span<const double> b,
               std::span<double> out, std::size_t m, std::size_t k,
               std::size_t n);
// out[r] = dot(rows[r], query) for a row-major [n x dim] matrix.
void row_dots(std::span<const double> rows, std::span<const double> query,
              std::span<double> out, std::size_t dim);
// Full sort of every score; keeps the first k.
std::vector<Scored> top_k(std::span<const double> scores, std::size_t k);

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t m, std::size_t k, std::size_t n);
void matmul_bt(std::span<const double> a, std::span<const double> b,
               std::span<double> out, std::size_t m, std::size_t k,
               std::size_t n);
void row_dots(std::span<const double> rows, std::span<const double> query,
              std::span<double> out, std::size_t dim);
// Per-thread partial top-k heaps merged under the same total order.
std::vector<Scored> top_k(std::span<const double> scores, std::size_t k);

}  // namespace parallel

// Below this many multiply-adds the parallel matmul stays on one thread.
inline constexpr std::size_t kParallelFlopThreshold = 1 << 16;

int max_threads();

}  // namespace xsr::kernels

#endif  // XSR_KERNELS_H_
