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
#include "xsr/autodiff.h"

#include <algorithm>
#include <cmath>

#include "xsr/errors.h"
#include "xsr/kernels.h"

namespace xsr::ad {
namespace {

constexpr double kSqrt2OverPi = 0.7978845608028654;
constexpr double kGeluCubic = 0.044715;

Tape& tape_of(Var a) {
  if (!a.tape) throw ContractError("variable is not attached to a tape");
  return *a.tape;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("variables live on different tapes");
  return tape_of(a);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": " + a.shape_string() + " vs " +
                     b.shape_string());
}

void axpy(std::span<double> dst, std::span<const double> src, double s = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

}  // namespace

const Tensor& Var::value() const { return tape_of(*this).value(*this); }

GradBuffer::GradBuffer(const Tape& tape) : tape_(tape), grads_(tape.size()) {}

Tensor& GradBuffer::at(std::size_t id) {
  Tensor& g = grads_[id];
  if (g.empty()) g = Tensor(tape_.value(id).shape());
  return g;
}

Tensor GradBuffer::take(std::size_t id) {
  if (grads_[id].empty()) return Tensor(tape_.value(id).shape());
  return std::move(grads_[id]);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back({std::move(value), nullptr, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::borrow(const Tensor& value) {
  nodes_.push_back({Tensor(), &value, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, BackwardFn backward) {
  nodes_.push_back({std::move(value), nullptr, std::move(backward)});
  return {this, nodes_.size() - 1};
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape != this) throw ContractError("loss is not on this tape");
  if (value(loss).size() != 1)
    throw ContractError("backward needs a scalar loss, got " +
                        value(loss).shape_string());
  GradBuffer buffer(*this);
  buffer.at(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (!nodes_[i].backward || !buffer.touched(i)) continue;
    // Copy: the rule may accumulate into other slots while reading this one.
    const Tensor grad_out = buffer.at(i);
    nodes_[i].backward(grad_out, buffer);
  }
  std::vector<Tensor> grads;
  grads.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) grads.push_back(buffer.take(i));
  return Gradients(std::move(grads));
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  axpy(out.data(), b.value().data());
  return t.record(std::move(out), [a = a.id, b = b.id](const Tensor& g, GradBuffer& buf) {
    axpy(buf.at(a).data(), g.data());
    axpy(buf.at(b).data(), g.data());
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  axpy(out.data(), b.value().data(), -1.0);
  return t.record(std::move(out), [a = a.id, b = b.id](const Tensor& g, GradBuffer& buf) {
    axpy(buf.at(a).data(), g.data());
    axpy(buf.at(b).data(), g.data(), -1.0);
  });
}

Var add_row(Var x, Var bias) {
  Tape& t = tape_of(x, bias);
  const Tensor& xv = x.value();
  const std::size_t c = xv.cols();
  if (bias.value().size() != c)
    throw ShapeError("add_row: bias " + bias.value().shape_string() +
                     " for " + xv.shape_string());
  Tensor out = xv;
  for (std::size_t r = 0; r < xv.rows(); ++r) axpy(out.row(r), bias.value().data());
  return t.record(std::move(out), [x = x.id, b = bias.id, c](const Tensor& g, GradBuffer& buf) {
    axpy(buf.at(x).data(), g.data());
    auto gb = buf.at(b).data();
    for (std::size_t i = 0; i < g.size(); ++i) gb[i % c] += g[i];
  });
}

Var add_const(Var x, const Tensor& c) {
  Tape& t = tape_of(x);
  require_same_shape(x.value(), c, "add_const");
  Tensor out = x.value();
  axpy(out.data(), c.data());
  return t.record(std::move(out), [x = x.id](const Tensor& g, GradBuffer& buf) {
    axpy(buf.at(x).data(), g.data());
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return t.record(std::move(out), [&t, a = a.id, b = b.id](const Tensor& g, GradBuffer& buf) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    auto ga = buf.at(a).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    auto gb = buf.at(b).data();
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var mul_const(Var x, const Tensor& c) {
  Tape& t = tape_of(x);
  require_same_shape(x.value(), c, "mul_const");
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  return t.record(std::move(out), [x = x.id, c](const Tensor& g, GradBuffer& buf) {
    auto gx = buf.at(x).data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c[i];
  });
}

Var scale(Var x, double s) {
  Tape& t = tape_of(x);
  Tensor out = x.value();
  for (double& v : out.data()) v *= s;
  return t.record(std::move(out), [x = x.id, s](const Tensor& g, GradBuffer& buf) {
    axpy(buf.at(x).data(), g.data(), s);
  });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return t.record(Tensor::scalar(total), [x = x.id](const Tensor& g, GradBuffer& buf) {
    for (double& v : buf.at(x).data()) v += g[0];
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Tensor out = xsr::matmul(a.value(), b.value());
  return t.record(std::move(out), [&t, a = a.id, b = b.id](const Tensor& g, GradBuffer& buf) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    // dA = G B^T, dB = A^T G
    Tensor da = xsr::matmul_bt(g, bv);
    axpy(buf.at(a).data(), da.data());
    Tensor db = xsr::matmul(transpose(av), g);
    axpy(buf.at(b).data(), db.data());
  });
}

Var matmul_bt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Tensor out = xsr::matmul_bt(a.value(), b.value());
  return t.record(std::move(out), [&t, a = a.id, b = b.id](const Tensor& g, GradBuffer& buf) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    // out = A B^T: dA = G B, dB = G^T A
    Tensor da = xsr::matmul(g, bv);
    axpy(buf.at(a).data(), da.data());
    Tensor db = xsr::matmul(transpose(g), av);
    axpy(buf.at(b).data(), db.data());
  });
}

Var gather_rows(Var table, std::vector<std::size_t> ids) {
  Tape& t = tape_of(table);
  const Tensor& tv = table.value();
  const std::size_t d = tv.cols();
  if (ids.empty()) throw ContractError("gather_rows with no ids");
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.rows())
      throw ContractError("gather_rows id " + std::to_string(ids[i]) +
                          " out of range " + std::to_string(tv.rows()));
    std::copy_n(tv.row(ids[i]).begin(), d, out.row(i).begin());
  }
  return t.record(std::move(out), [tb = table.id, ids = std::move(ids)](const Tensor& g, GradBuffer& buf) {
    Tensor& gt = buf.at(tb);
    for (std::size_t i = 0; i < ids.size(); ++i) axpy(gt.row(ids[i]), g.row(i));
  });
}

Var select_rows(Var x, std::vector<std::size_t> rows) {
  return gather_rows(x, std::move(rows));
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  if (begin >= end || end > xv.cols())
    throw ContractError("slice_cols [" + std::to_string(begin) + "," +
                        std::to_string(end) + ") of " + xv.shape_string());
  const std::size_t w = end - begin;
  Tensor out({xv.rows(), w});
  for (std::size_t r = 0; r < xv.rows(); ++r)
    std::copy_n(xv.row(r).begin() + begin, w, out.row(r).begin());
  return t.record(std::move(out), [x = x.id, begin, w](const Tensor& g, GradBuffer& buf) {
    Tensor& gx = buf.at(x);
    for (std::size_t r = 0; r < g.rows(); ++r)
      axpy(gx.row(r).subspan(begin, w), g.row(r));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  const std::size_t rows = parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  for (Var p : parts) {
    tape_of(p, parts.front());
    if (p.value().rows() != rows) throw ShapeError("concat_cols row mismatch");
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Tensor out({rows, total});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.row(r).begin(), pv.cols(), out.row(r).begin() + offset);
    offset += pv.cols();
  }
  return t.record(std::move(out), [ids, widths](const Tensor& g, GradBuffer& buf) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& gp = buf.at(ids[k]);
      for (std::size_t r = 0; r < g.rows(); ++r)
        axpy(gp.row(r), g.row(r).subspan(off, widths[k]));
      off += widths[k];
    }
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw ContractError("stack_rows of nothing");
  Tape& t = tape_of(rows.front());
  const std::size_t d = rows.front().value().size();
  Tensor out({rows.size(), d});
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    tape_of(rows[i], rows.front());
    const Tensor& rv = rows[i].value();
    if (rv.size() != d) throw ShapeError("stack_rows width mismatch");
    std::copy(rv.data().begin(), rv.data().end(), out.row(i).begin());
    ids.push_back(rows[i].id);
  }
  return t.record(std::move(out), [ids](const Tensor& g, GradBuffer& buf) {
    for (std::size_t i = 0; i < ids.size(); ++i) axpy(buf.at(ids[i]).data(), g.row(i));
  });
}

double gelu_value(double x) {
  return 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + kGeluCubic * x * x * x)));
}

Var gelu(Var x) {
  Tape& t = tape_of(x);
  Tensor out = x.value();
  for (double& v : out.data()) v = gelu_value(v);
  return t.record(std::move(out), [&t, x = x.id](const Tensor& g, GradBuffer& buf) {
    const Tensor& xv = t.value(x);
    auto gx = buf.at(x).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double th = std::tanh(kSqrt2OverPi * (v + kGeluCubic * v * v * v));
      const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
      gx[i] += g[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * dinner);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& t = tape_of(x, gamma);
  tape_of(x, beta);
  const Tensor& xv = x.value();
  const std::size_t n = xv.cols(), rows = xv.rows();
  if (gamma.value().size() != n || beta.value().size() != n)
    throw ShapeError("layer_norm affine length must equal " + std::to_string(n));
  Tensor xhat(xv.shape());
  std::vector<double> inv(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = xv.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    inv[r] = 1.0 / std::sqrt(var + eps);
    auto h = xhat.row(r);
    for (std::size_t j = 0; j < n; ++j) h[j] = (in[j] - mean) * inv[r];
  }
  Tensor out = xhat;
  for (std::size_t r = 0; r < rows; ++r) {
    auto o = out.row(r);
    for (std::size_t j = 0; j < n; ++j)
      o[j] = o[j] * gamma.value()[j] + beta.value()[j];
  }
  return t.record(std::move(out), [&t, x = x.id, gm = gamma.id, bt = beta.id,
                                   xhat = std::move(xhat), inv = std::move(inv)](
                                      const Tensor& g, GradBuffer& buf) {
    const Tensor& gv = t.value(gm);
    const std::size_t n = xhat.cols();
    auto ggamma = buf.at(gm).data();
    auto gbeta = buf.at(bt).data();
    Tensor& gx = buf.at(x);
    std::vector<double> dxhat(n);
    for (std::size_t r = 0; r < xhat.rows(); ++r) {
      auto gr = g.row(r);
      auto h = xhat.row(r);
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        ggamma[j] += gr[j] * h[j];
        gbeta[j] += gr[j];
        dxhat[j] = gr[j] * gv[j];
        s1 += dxhat[j];
        s2 += dxhat[j] * h[j];
      }
      auto out = gx.row(r);
      const double nn = static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j)
        out[j] += inv[r] / nn * (nn * dxhat[j] - s1 - h[j] * s2);
    }
  });
}

Var softmax_rows(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out = xv.rank() == 2 ? softmax(xv, 1) : softmax(xv, 0);
  Tensor y = out;
  return t.record(std::move(out), [x = x.id, y = std::move(y)](const Tensor& g, GradBuffer& buf) {
    Tensor& gx = buf.at(x);
    const std::size_t rows = y.rank() == 2 ? y.rows() : 1;
    const std::size_t n = y.size() / rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = y.data().data() + r * n;
      const double* gr = g.data().data() + r * n;
      double* out = gx.data().data() + r * n;
      double dotp = 0.0;
      for (std::size_t j = 0; j < n; ++j) dotp += gr[j] * yr[j];
      for (std::size_t j = 0; j < n; ++j) out[j] += yr[j] * (gr[j] - dotp);
    }
  });
}

Var l2_normalize_rows(Var x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), n = xv.cols();
  Tensor out = xv;
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (double v : xv.row(r)) ss += v * v;
    norms[r] = std::sqrt(ss);
    if (norms[r] == 0.0)
      throw DomainError("cannot normalise zero-norm row " + std::to_string(r));
    for (double& v : out.row(r)) v /= norms[r];
  }
  Tensor y = out;
  return t.record(std::move(out), [x = x.id, y = std::move(y), norms = std::move(norms), n](
                                      const Tensor& g, GradBuffer& buf) {
    Tensor& gx = buf.at(x);
    for (std::size_t r = 0; r < norms.size(); ++r) {
      auto yr = y.row(r);
      auto gr = g.row(r);
      double dotp = 0.0;
      for (std::size_t j = 0; j < n; ++j) dotp += yr[j] * gr[j];
      auto o = gx.row(r);
      for (std::size_t j = 0; j < n; ++j) o[j] += (gr[j] - yr[j] * dotp) / norms[r];
    }
  });
}

Var dropout(Var x, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout rate must be in [0,1)");
  if (rate == 0.0) return x;
  Tensor mask(x.value().shape());
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = keep(rng) ? s : 0.0;
  return mul_const(x, mask);
}

Var cross_entropy_sum(Var logits, std::vector<std::size_t> targets) {
  Tape& t = tape_of(logits);
  const Tensor& lv = logits.value();
  if (lv.rows() != targets.size())
    throw ContractError("cross_entropy_sum: " + std::to_string(lv.rows()) +
                        " logit rows for " + std::to_string(targets.size()) +
                        " targets");
  const std::size_t n = lv.cols();
  Tensor probs = lv.rank() == 2 ? softmax(lv, 1) : softmax(lv, 0);
  double total = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] >= n)
      throw ContractError("target id " + std::to_string(targets[r]) +
                          " out of range " + std::to_string(n));
    auto row = lv.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double acc = 0.0;
    for (double v : row) acc += std::exp(v - mx);
    total += mx + std::log(acc) - row[targets[r]];
  }
  return t.record(Tensor::scalar(total), [x = logits.id, probs = std::move(probs),
                                          targets = std::move(targets)](
                                             const Tensor& g, GradBuffer& buf) {
    Tensor& gx = buf.at(x);
    for (std::size_t r = 0; r < targets.size(); ++r) {
      auto p = probs.row(r);
      auto o = gx.row(r);
      for (std::size_t j = 0; j < p.size(); ++j) o[j] += g[0] * p[j];
      o[targets[r]] -= g[0];
    }
  });
}

}  // namespace xsr::ad
