// SPDX-License-Identifier: Apache-2.0
// One finite-difference case per differentiable primitive.

#pragma once

#include <string>
#include <vector>

#include "support/gradcheck.hpp"

namespace adapt::testing {

struct GradCase {
  std::string name;
  std::function<DTensor(const std::vector<DTensor>&)> loss;
  std::vector<DTensor> inputs;
};

inline std::vector<GradCase> primitive_cases() {
  namespace ops = adapt::nn;
  Rng rng(2024);
  auto r = [&](nn::Shape s, double sd = 1.0) { return random_tensor(std::move(s), rng, sd); };
  auto w = [](auto f) {
    return [f](const std::vector<DTensor>& in) { return weighted_sum(f(in)); };
  };
  std::vector<GradCase> cases;
  cases.push_back({"matmul", w([](auto& in) { return ops::matmul(in[0], in[1]); }), {r({3, 4}), r({4, 5})}});
  cases.push_back({"matmul_batched", w([](auto& in) { return ops::matmul(in[0], in[1]); }),
                   {r({2, 3, 3, 4}), r({2, 3, 4, 2})}});
  cases.push_back({"matmul_shared_weight", w([](auto& in) { return ops::matmul(in[0], in[1]); }),
                   {r({3, 2, 4}), r({4, 5})}});
  cases.push_back({"add_broadcast", w([](auto& in) { return ops::add(in[0], in[1]); }), {r({2, 3, 4}), r({4})}});
  cases.push_back({"sub", w([](auto& in) { return ops::sub(in[0], in[1]); }), {r({3, 4}), r({3, 4})}});
  cases.push_back({"mul", w([](auto& in) { return ops::mul(in[0], in[1]); }), {r({3, 4}), r({3, 4})}});
  cases.push_back({"scale", w([](auto& in) { return ops::scale(in[0], 0.7); }), {r({3, 4})}});
  cases.push_back({"sum", [](auto& in) { return ops::sum(ops::mul(in[0], in[0])); }, {r({3, 5})}});
  cases.push_back({"mean", [](auto& in) { return ops::mean(ops::mul(in[0], in[0])); }, {r({3, 5})}});
  cases.push_back({"sum_axis", w([](auto& in) { return ops::sum_axis(in[0], 1, true); }), {r({2, 3, 4})}});
  cases.push_back({"mean_axis", w([](auto& in) { return ops::mean_axis(in[0], 0); }), {r({3, 4})}});
  cases.push_back({"concat", w([](auto& in) { return ops::concat<double>({in[0], in[1]}, 1); }),
                   {r({2, 3, 4}), r({2, 2, 4})}});
  cases.push_back({"slice", w([](auto& in) { return ops::slice(in[0], 1, 1, 3); }), {r({2, 4, 3})}});
  cases.push_back({"split", w([](auto& in) {
                     const auto p = ops::split(in[0], 0, {1, 2});
                     return ops::mul(ops::repeat(p[0], 0, 2), p[1]);
                   }),
                   {r({3, 4})}});
  cases.push_back({"reshape", w([](auto& in) { return ops::reshape(in[0], {3, 2, 2}); }), {r({2, 6})}});
  cases.push_back({"transpose", w([](auto& in) { return ops::transpose(in[0], 1, 3); }), {r({2, 3, 2, 4})}});
  cases.push_back({"repeat", w([](auto& in) { return ops::repeat(in[0], 1, 3); }), {r({2, 1, 4})}});
  cases.push_back({"gelu", w([](auto& in) { return ops::gelu(in[0]); }), {r({4, 6}, 2.0)}});
  cases.push_back({"softmax", w([](auto& in) { return ops::softmax(in[0], 1); }), {r({2, 5, 3})}});
  cases.push_back({"layer_norm", w([](auto& in) { return ops::layer_norm(in[0], in[1], in[2]); }),
                   {r({3, 8}), r({8}), r({8})}});
  cases.push_back({"linear", w([](auto& in) { return ops::linear(in[0], in[1], in[2]); }),
                   {r({2, 3, 4}), r({4, 5}), r({5})}});
  cases.push_back({"cross_entropy",
                   [](auto& in) {
                     const int labels[] = {0, 2, 1};
                     return ops::cross_entropy(in[0], labels);
                   },
                   {r({3, 3})}});
  return cases;
}

}  // namespace adapt::testing
