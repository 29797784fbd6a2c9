// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "adapt/error.hpp"
#include "adapt/numerics/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/primitive_cases.hpp"

using namespace adapt;
using namespace adapt::testing;
namespace ops = adapt::nn;

namespace {

constexpr double kPrimitiveTol = 1e-4;

}  // namespace

TEST(Ops, MatmulValues) {
  nn::Tensor<double> a({2, 3}, {1, 2, 3, 4, 5, 6});
  nn::Tensor<double> b({3, 2}, {7, 8, 9, 10, 11, 12});
  const auto c = ops::matmul(a, b);
  ASSERT_EQ(c.shape(), (nn::Shape{2, 2}));
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()),
            (std::vector<double>{58, 64, 139, 154}));
}

TEST(Ops, MatmulShapeErrorNamesBothShapes) {
  nn::Tensor<float> a = nn::Tensor<float>::zeros({2, 3});
  nn::Tensor<float> b = nn::Tensor<float>::zeros({4, 2});
  try {
    ops::matmul(a, b);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("(2,3)"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("(4,2)"), std::string::npos) << e.what();
  }
}

TEST(Ops, SoftmaxRowsSumToOne) {
  Rng rng(1);
  const auto x = random_tensor({3, 7}, rng, 5.0, false);
  const auto s = ops::softmax(x, 1);
  for (std::size_t r = 0; r < 3; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < 7; ++c) sum += s.data()[r * 7 + c];
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Ops, SoftmaxRejectsNonFinite) {
  nn::Tensor<float> x({2}, {1.0f, std::numeric_limits<float>::infinity()});
  EXPECT_THROW(ops::softmax(x, 0), NumericError);
}

TEST(Ops, LayerNormNormalizes) {
  Rng rng(2);
  const auto x = random_tensor({4, 16}, rng, 3.0, false);
  const auto y = ops::layer_norm(x, DTensor::full({16}, 1.0), DTensor::zeros({16}));
  for (std::size_t r = 0; r < 4; ++r) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 16; ++c) mean += y.data()[r * 16 + c];
    mean /= 16;
    for (std::size_t c = 0; c < 16; ++c) var += std::pow(y.data()[r * 16 + c] - mean, 2);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var / 16, 1.0, 1e-4);
  }
}

TEST(Ops, CrossEntropyOfUniformLogitsIsLogC) {
  nn::Tensor<double> logits({2, 4}, std::vector<double>(8, 0.3));
  const int labels[] = {1, 3};
  EXPECT_NEAR(ops::cross_entropy(logits, labels).item(), std::log(4.0), 1e-12);
}

TEST(Ops, CrossEntropyRejectsBadLabel) {
  nn::Tensor<double> logits({1, 2}, {0.0, 1.0});
  const int labels[] = {2};
  EXPECT_THROW(ops::cross_entropy(logits, labels), InputError);
}

TEST(Ops, ReshapeSharesStorage) {
  Rng rng(3);
  const auto x = random_tensor({2, 6}, rng);
  EXPECT_TRUE(ops::reshape(x, {3, 4}).shares_storage_with(x));
  EXPECT_THROW(ops::reshape(x, {5}), DimensionError);
}

TEST(Ops, TransposeRoundTrip) {
  Rng rng(4);
  const auto x = random_tensor({2, 3, 4, 5}, rng, 1.0, false);
  const auto y = ops::transpose(ops::transpose(x, 1, 3), 1, 3);
  EXPECT_EQ(std::vector<double>(x.data().begin(), x.data().end()),
            std::vector<double>(y.data().begin(), y.data().end()));
}

TEST(Ops, SecondBackwardIsRejected) {
  nn::Tape<double> tape;
  auto scope = tape.activate();
  DTensor x({2}, {1.0, 2.0}, true);
  const auto loss = ops::sum(ops::mul(x, x));
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), TapeError);
}

TEST(Ops, BackwardRequiresScalar) {
  nn::Tape<double> tape;
  auto scope = tape.activate();
  DTensor x({2}, {1.0, 2.0}, true);
  EXPECT_THROW(tape.backward(ops::scale(x, 2.0)), TapeError);
}

TEST(Ops, BroadcastWeightAccumulatesPerBatchMember) {
  Rng rng(5);
  nn::Tape<double> tape;
  auto scope = tape.activate();
  const auto x = random_tensor({4, 3, 5}, rng, 1.0, false);
  auto w = random_tensor({5, 2}, rng);
  tape.backward(ops::sum(ops::matmul(x, w)));
  EXPECT_EQ(w.grad_accumulations(), 4u);
}

TEST(Gradcheck, EveryPrimitive) {
  for (auto& c : primitive_cases()) {
    SCOPED_TRACE(c.name);
    EXPECT_LT(gradcheck(c.loss, c.inputs).rel_error, kPrimitiveTol);
  }
}
