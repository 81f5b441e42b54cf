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
#include "xsr/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "xsr/autodiff.h"
#include "xsr/errors.h"
#include "xsr/trainer.h"

namespace xsr {
namespace {

struct Fixture {
  std::vector<MaskedView> queries;
  std::vector<MaskedView> labels;
};

Fixture make_fixture(const GradcheckOptions& o) {
  std::mt19937_64 rng(o.seed);
  const std::size_t vocab = o.config.vocab_size;
  std::uniform_int_distribution<TokenId> token(static_cast<TokenId>(special::kCount),
                                               static_cast<TokenId>(vocab - 1));
  std::uniform_int_distribution<std::size_t> length(2, std::min<std::size_t>(6, o.config.max_len - 2));
  auto sentence = [&] {
    std::vector<TokenId> ids{special::kCls};
    for (std::size_t n = length(rng); n > 0; --n) ids.push_back(token(rng));
    ids.push_back(special::kSep);
    return ids;
  };
  std::vector<std::vector<TokenId>> q, l;
  for (std::size_t i = 0; i < o.batch_size; ++i) {
    q.push_back(sentence());
    l.push_back(sentence());
  }
  Fixture f{mask_batch(q, 0.4, vocab, rng), mask_batch(l, 0.4, vocab, rng)};
  // Keep the MLM term alive on the first query whatever the draw.
  if (f.queries[0].positions.empty()) {
    f.queries[0].positions = {1};
    f.queries[0].targets = {q[0][1]};
    f.queries[0].input[1] = special::kMask;
  }
  return f;
}

double loss_value(const EncoderParams& params, const Fixture& f, const TrainConfig& tc,
                  double lambda, std::uint64_t seed) {
  ad::Tape tape;
  EncoderGraph graph(tape, params);
  std::mt19937_64 rng(seed);
  return joint_loss(graph, f.queries, f.labels, lambda, tc, &rng).total.value().item();
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(const GradcheckOptions& o) {
  o.config.validate();
  if (!(o.h > 0.0)) throw ConfigError("h", "must be positive");
  if (o.batch_size == 0) throw ConfigError("batch_size", "must be positive");
  const Fixture fixture = make_fixture(o);
  TrainConfig tc;
  tc.lambda = o.lambda;
  const std::uint64_t dropout_seed = derive_seed(o.seed, 1);
  const EncoderParams base = init_params(o.config, derive_seed(o.seed, 2));

  std::vector<Tensor> analytic;
  {
    ad::Tape tape;
    EncoderGraph graph(tape, base);
    std::mt19937_64 rng(dropout_seed);
    const ad::Var total =
        joint_loss(graph, fixture.queries, fixture.labels, o.lambda, tc, &rng).total;
    const ad::Gradients grads = tape.backward(total);
    for (ad::Var leaf : graph.leaves()) analytic.push_back(grads[leaf]);
  }

  GradcheckReport report;
  report.params.resize(base.count());
  for (std::size_t p = 0; p < base.count(); ++p) {
    const std::size_t n = base.tensor(p).size();
    std::vector<double> numeric(n);
#pragma omp parallel
    {
      EncoderParams local = base;
#pragma omp for schedule(dynamic, 8)
      for (std::size_t j = 0; j < n; ++j) {
        double& w = local.tensor(p).data()[j];
        const double saved = w;
        w = saved + o.h;
        const double up = loss_value(local, fixture, tc, o.lambda, dropout_seed);
        w = saved - o.h;
        const double down = loss_value(local, fixture, tc, o.lambda, dropout_seed);
        w = saved;
        numeric[j] = (up - down) / (2.0 * o.h);
      }
    }
    ParamError& e = report.params[p];
    e.name = base.name(p);
    e.size = n;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = analytic[p].data()[j];
      const double r = relative_error(a, numeric[j], o.floor);
      if (r > e.max_rel_error || j == 0) {
        e.max_rel_error = r;
        e.worst_index = j;
        e.analytic = a;
        e.numeric = numeric[j];
      }
    }
    report.checked += n;
    if (e.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = e.max_rel_error;
      report.worst_param = e.name;
    }
  }
  return report;
}

}  // namespace xsr
