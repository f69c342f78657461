// Copyright 2026 The aiscale Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Cross-checks between the analytic cost model and the counting engine.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aiscale/cost_model.hpp"
#include "aiscale/micro_trainer.hpp"
#include "aiscale/rng.hpp"

namespace aiscale::oracle {

using arch::Count;
using arch::ModelSpec;
using arch::OpSpec;
using arch::TensorShape;

struct CaseResult {
  std::string name;
  Count counted_forward = 0;
  Count counted_backward = 0;
  Count model_forward = 0;
  double ratio = 0;  // (forward + backward) / forward
  bool pass = false;
};

/// Dense stack with 1..4 layers of width 1..8 and leaky activations between.
inline ModelSpec random_dense_net(std::uint64_t seed, bool bias = false) {
  SplitMix64 rng(seed);
  ModelSpec m;
  m.name = "dense";
  m.input = TensorShape{1 + rng.below(8), {}};
  const int layers = 1 + static_cast<int>(rng.below(4));
  for (int i = 0; i < layers; ++i) {
    if (i > 0) m.head.push_back(OpSpec::leaky_relu());
    m.head.push_back(OpSpec::dense(1 + rng.below(8), bias));
  }
  return m;
}

/// One conv3d with side 6..10, 1..3 input and output channels, kernel
/// 1, 3 or 5 (5 only from side 10) and stride 1 or 2.
inline ModelSpec random_conv_net(std::uint64_t seed, bool bias = false) {
  SplitMix64 rng(seed);
  ModelSpec m;
  m.name = "conv";
  const Count side = 6 + rng.below(5);
  const Count cin = 1 + rng.below(3);
  static constexpr int kernels[] = {1, 3, 5};
  int k = kernels[rng.below(side >= 10 ? 3 : 2)];
  const int stride = 1 + static_cast<int>(rng.below(2));
  m.input = TensorShape{cin, {side, side, side}};
  m.stem = {OpSpec::conv3d(1 + rng.below(3), k, stride, bias), OpSpec::leaky_relu()};
  m.head_input = arch::HeadInput::flatten;
  return m;
}

inline std::string describe(const ModelSpec& m) {
  std::string s = m.input.str();
  for (const auto& op : m.stem) {
    if (op.kind == arch::OpKind::conv3d) {
      s += " conv k" + std::to_string(op.kernel) + " s" + std::to_string(op.stride) + " ->" +
           std::to_string(op.out_channels) + (op.bias ? "+b" : "");
    }
  }
  for (const auto& op : m.head) {
    if (op.kind == arch::OpKind::dense) s += " dense " + std::to_string(op.out_channels) + (op.bias ? "+b" : "");
  }
  return s;
}

/// Runs one forward and one backward pass with a unit upstream gradient.
inline CaseResult count_case(const ModelSpec& m, std::uint64_t seed) {
  train::Net net = train::Net::build(m, seed);
  SplitMix64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  train::Vec x(m.input.elements());
  for (double& v : x) v = rng.uniform(-1, 1);
  train::CountedOps fwd, bwd;
  const auto y = net.forward(x, &fwd);
  net.backward(train::Vec(y.size(), 1.0), &bwd);
  CaseResult r;
  r.name = describe(m);
  r.counted_forward = fwd.multiply_adds;
  r.counted_backward = bwd.multiply_adds;
  r.model_forward = cost::forward_addmul(m, m.input, 1);
  r.ratio = static_cast<double>(fwd.multiply_adds + bwd.multiply_adds) /
            static_cast<double>(fwd.multiply_adds);
  return r;
}

/// Bias-free dense stacks: counted forward equals the cost model and
/// (forward + backward) / forward is exactly 3.
inline std::vector<CaseResult> dense_suite(int cases, std::uint64_t seed) {
  std::vector<CaseResult> out;
  for (int i = 0; i < cases; ++i) {
    CaseResult r = count_case(random_dense_net(derive_seed(seed, 10, i)), derive_seed(seed, 11, i));
    r.pass = r.counted_forward == r.model_forward && r.counted_backward == 2 * r.counted_forward;
    out.push_back(r);
  }
  return out;
}

/// Single conv layers: counted forward equals the cost model and the
/// (forward + backward) / forward ratio lies in [2.5, 3.5].
inline std::vector<CaseResult> conv_suite(int cases, std::uint64_t seed) {
  std::vector<CaseResult> out;
  for (int i = 0; i < cases; ++i) {
    const bool bias = i % 2 == 1;
    CaseResult r =
        count_case(random_conv_net(derive_seed(seed, 12, i), bias), derive_seed(seed, 13, i));
    r.pass = r.counted_forward == r.model_forward && r.ratio >= 2.5 && r.ratio <= 3.5;
    out.push_back(r);
  }
  return out;
}

struct GradCheck {
  double max_rel_error = 0;
  std::size_t checked = 0;
  bool pass = false;
};

/// Central finite differences of sum(u * f(x)) against backward(), per
/// parameter, with |a - b| <= rtol * max(|a|, |b|) + atol.
inline GradCheck gradient_check(const ModelSpec& m, std::uint64_t seed, double rtol = 1e-4,
                                double atol = 1e-9, double h = 1e-5) {
  train::Net net = train::Net::build(m, seed);
  SplitMix64 rng(seed + 1);
  for (double& p : net.params()) p += rng.uniform(-0.1, 0.1);  // non-zero biases too
  train::Vec x(m.input.elements());
  for (double& v : x) v = rng.uniform(-1, 1);
  train::Vec u(net.output_shape().elements());
  for (double& v : u) v = rng.uniform(-1, 1);
  auto objective = [&]() {
    const auto y = net.forward(x);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += u[i] * y[i];
    return s;
  };
  objective();
  const auto g = net.backward(u).params;
  GradCheck r;
  bool ok = true;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double saved = net.params()[i];
    net.params()[i] = saved + h;
    const double up = objective();
    net.params()[i] = saved - h;
    const double down = objective();
    net.params()[i] = saved;
    const double fd = (up - down) / (2 * h);
    const double err = std::abs(fd - g[i]);
    const double scale = std::max(std::abs(fd), std::abs(g[i]));
    if (err > rtol * scale + atol) ok = false;
    if (scale > 0) r.max_rel_error = std::max(r.max_rel_error, err / scale);
    ++r.checked;
  }
  r.pass = ok;
  return r;
}

}  // namespace aiscale::oracle
