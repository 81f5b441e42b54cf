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
#ifndef XSR_AUTODIFF_H_
#define XSR_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "xsr/tensor.h"

namespace xsr::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

// Lazily-zeroed gradient buffers, one per tape node.
class GradBuffer {
 public:
  explicit GradBuffer(const Tape& tape);
  Tensor& at(std::size_t id);
  bool touched(std::size_t id) const { return !grads_[id].empty(); }
  Tensor take(std::size_t id);

 private:
  const Tape& tape_;
  std::vector<Tensor> grads_;
};

class Gradients {
 public:
  explicit Gradients(std::vector<Tensor> grads) : grads_(std::move(grads)) {}
  // Gradient of the loss with respect to `v`; zeros if `v` did not reach it.
  const Tensor& operator[](Var v) const { return grads_.at(v.id); }

 private:
  std::vector<Tensor> grads_;
};

// Records operations in execution order. Node inputs always precede the node,
// so the graph is acyclic by construction.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& grad_out, GradBuffer&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value);
  // Leaf that reads `value` in place. It must outlive the tape and stay
  // unchanged while the tape is in use.
  Var borrow(const Tensor& value);
  Var record(Tensor value, BackwardFn backward);

  const Tensor& value(Var v) const { return value(v.id); }
  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.borrowed ? *n.borrowed : n.value;
  }
  std::size_t size() const { return nodes_.size(); }

  // d loss / d node for every node. Does not modify the tape, so repeated
  // calls return the same result.
  Gradients backward(Var loss) const;

 private:
  struct Node {
    Tensor value;
    const Tensor* borrowed = nullptr;
    BackwardFn backward;  // empty for leaves
  };
  std::vector<Node> nodes_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
// x[r x c] + bias[c] broadcast over rows.
Var add_row(Var x, Var bias);
// Adds a constant tensor; no gradient flows into the constant.
Var add_const(Var x, const Tensor& c);
Var mul(Var a, Var b);
Var mul_const(Var x, const Tensor& c);
Var scale(Var x, double s);
Var sum(Var x);

Var matmul(Var a, Var b);
Var matmul_bt(Var a, Var b);

// Rows of `table` picked by `ids` (embedding lookup).
Var gather_rows(Var table, std::vector<std::size_t> ids);
Var select_rows(Var x, std::vector<std::size_t> rows);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var concat_cols(const std::vector<Var>& parts);
// Stacks rank-1 or 1 x d nodes into an n x d matrix.
Var stack_rows(const std::vector<Var>& rows);

Var gelu(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = kLayerNormEps);
Var softmax_rows(Var x);
// Divides each row by its L2 norm. Throws DomainError on a zero row.
Var l2_normalize_rows(Var x);
// Inverted dropout. Identity when `rate` is 0.
Var dropout(Var x, double rate, std::mt19937_64& rng);

// sum_i -log softmax(logits[i])[targets[i]].
Var cross_entropy_sum(Var logits, std::vector<std::size_t> targets);

// The tanh approximation used by BERT-family encoders.
double gelu_value(double x);

}  // namespace xsr::ad

#endif  // XSR_AUTODIFF_H_
