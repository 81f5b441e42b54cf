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
#include "xsr/tensor.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.h"
#include "xsr/errors.h"

namespace xsr {
namespace {

using testing::random_tensor;

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  return out;
}

TEST(TensorTest, ConstructionChecksSize) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.shape_string(), "[2x3]");
}

TEST(MatmulTest, IdentityLeavesMatrixUnchanged) {
  const Tensor a = Tensor::matrix({{1.5, -2}, {0.25, 7}});
  EXPECT_EQ(matmul(Tensor::identity(2), a), a);
}

TEST(MatmulTest, ZeroMatrixGivesZero) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(Tensor({2, 2}), a), Tensor({2, 2}));
}

TEST(MatmulTest, RowTimesColumn) {
  const Tensor c = matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  ASSERT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_EQ(c.item(), 1 * 3 + 2 * 4);
}

TEST(MatmulTest, InnerDimensionMismatchThrows) {
  EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST(MatmulTest, MatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  for (auto [m, k, n] : {std::tuple{1, 1, 1}, {3, 5, 2}, {17, 9, 33}, {64, 80, 48}}) {
    const Tensor a = random_tensor({std::size_t(m), std::size_t(k)}, rng);
    const Tensor b = random_tensor({std::size_t(k), std::size_t(n)}, rng);
    const Tensor got = matmul(a, b);
    const Tensor want = naive_matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(MatmulTest, BtAndTransposeAgree) {
  std::mt19937_64 rng(4);
  const Tensor a = random_tensor({6, 4}, rng);
  const Tensor b = random_tensor({5, 4}, rng);
  const Tensor x = matmul_bt(a, b);
  const Tensor y = matmul(a, transpose(b));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-12);
}

TEST(MatmulTest, Associativity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor a = random_tensor({4, 6}, rng);
    const Tensor b = random_tensor({6, 3}, rng);
    const Tensor c = random_tensor({3, 5}, rng);
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) EXPECT_NEAR(left[i], right[i], 1e-9);
  }
}

TEST(SoftmaxTest, EqualLogitsAreUniform) {
  const Tensor s = softmax(Tensor::vector({0, 0}));
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  for (double c : {-1e6, -3.0, 0.0, 12.5, 1e6}) {
    const Tensor t = softmax(Tensor::vector({c, c, c}));
    for (double v : t.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  }
}

TEST(SoftmaxTest, ClosedFormLnThree) {
  // e^0 / (e^0 + e^ln3) = 1/4.
  const Tensor s = softmax(Tensor::vector({0.0, std::log(3.0)}));
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(SoftmaxTest, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor({5, 7}, rng, 4.0);
    const double c = shift(rng);
    Tensor shifted = x;
    for (double& v : shifted.data()) v += c;
    const Tensor a = softmax(x);
    const Tensor b = softmax(shifted);
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0.0;
      for (double v : a.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(SoftmaxTest, AxisZeroNormalisesColumns) {
  const Tensor x = Tensor::matrix({{0, 1}, {std::log(3.0), 1}});
  const Tensor s = softmax(x, 0);
  EXPECT_NEAR(s.at(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(s.at(1, 0), 0.75, 1e-15);
  EXPECT_NEAR(s.at(0, 1), 0.5, 1e-15);
  EXPECT_THROW(softmax(x, 2), ContractError);
}

TEST(SoftmaxTest, MaskedLogitStaysFinite) {
  const Tensor s = softmax(Tensor::vector({1.0, kMaskedLogit, 2.0}));
  EXPECT_TRUE(s.all_finite());
  EXPECT_EQ(s[1], 0.0);
}

TEST(LayerNormTest, ConstantRowGivesZeros) {
  const Tensor y = layer_norm(Tensor::matrix({{4, 4, 4}}), Tensor::vector({1, 1, 1}),
                              Tensor::vector({0, 0, 0}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNormTest, HandValues) {
  const Tensor one = Tensor::vector({1, 1});
  const Tensor zero = Tensor::vector({0, 0});
  const Tensor a = layer_norm(Tensor::matrix({{1, -1}}), one, zero, 0.0);
  EXPECT_NEAR(a[0], 1.0, 1e-15);
  EXPECT_NEAR(a[1], -1.0, 1e-15);
  // Mean 3, population std 1.
  const Tensor b = layer_norm(Tensor::matrix({{2, 4}}), one, zero, 0.0);
  EXPECT_NEAR(b[0], -1.0, 1e-15);
  EXPECT_NEAR(b[1], 1.0, 1e-15);
}

TEST(LayerNormTest, AffineApplied) {
  const Tensor y = layer_norm(Tensor::matrix({{2, 4}}), Tensor::vector({2, 3}),
                              Tensor::vector({0.5, -1}), 0.0);
  EXPECT_NEAR(y[0], -2.0 + 0.5, 1e-15);
  EXPECT_NEAR(y[1], 3.0 - 1.0, 1e-15);
}

TEST(LayerNormTest, MomentsOnRandomRows) {
  std::mt19937_64 rng(8);
  const std::size_t d = 16;
  const Tensor x = random_tensor({40, d}, rng, 3.0);
  const Tensor y = layer_norm(x, Tensor({d}, 1.0), Tensor({d}, 0.0), kLayerNormEps);
  for (std::size_t r = 0; r < 40; ++r) {
    // Normalised variance is s / (s + eps) for input variance s.
    double in_mean = 0.0, in_var = 0.0;
    for (double v : x.row(r)) in_mean += v;
    in_mean /= d;
    for (double v : x.row(r)) in_var += (v - in_mean) * (v - in_mean);
    in_var /= d;
    double mean = 0.0, var = 0.0;
    for (double v : y.row(r)) mean += v;
    mean /= d;
    for (double v : y.row(r)) var += (v - mean) * (v - mean);
    var /= d;
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, in_var / (in_var + kLayerNormEps), 1e-12);
  }
}

TEST(LayerNormTest, AffineLengthMismatchThrows) {
  EXPECT_THROW(layer_norm(Tensor({2, 3}), Tensor({2}, 1.0), Tensor({3})), ShapeError);
}

}  // namespace
}  // namespace xsr
