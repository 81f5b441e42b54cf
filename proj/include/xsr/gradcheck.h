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
#ifndef XSR_GRADCHECK_H_
#define XSR_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xsr/encoder.h"

namespace xsr {

struct GradcheckOptions {
  EncoderConfig config{.d_model = 8, .n_layers = 2, .n_heads = 2, .d_ff = 16,
                       .max_len = 12, .vocab_size = 16, .dropout = 0.1};
  double lambda = 0.2;
  double h = 1e-5;
  // Denominator floor for the relative error, so entries whose true gradient
  // is zero are judged on absolute error.
  double floor = 1e-6;
  std::size_t batch_size = 3;
  std::uint64_t seed = 7;
};

struct ParamError {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradcheckReport {
  std::vector<ParamError> params;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

// Compares backward() of the joint loss (masked XMLM plus similarity, fixed
// dropout masks) against central differences for every parameter entry.
GradcheckReport gradcheck(const GradcheckOptions& options = {});

}  // namespace xsr

#endif  // XSR_GRADCHECK_H_
