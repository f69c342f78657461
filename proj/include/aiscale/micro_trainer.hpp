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

// Reference forward/backward engine for small dense and conv3d networks.
//
// Every multiply-add executed by a loop body bumps a counter, so the counts
// are literal rather than derived. Forward convolution visits every kernel
// tap, padding included; input-gradient convolution visits only taps that
// land inside the input.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aiscale/arch_ir.hpp"
#include "aiscale/datagen.hpp"
#include "aiscale/error.hpp"
#include "aiscale/rng.hpp"

namespace aiscale::train {

using arch::Count;
using arch::ModelSpec;
using arch::OpKind;
using arch::OpSpec;
using arch::TensorShape;

struct CountedOps {
  Count multiply_adds = 0;
  Count reads = 0;
  Count writes = 0;

  void reset() { *this = {}; }
  CountedOps& operator+=(const CountedOps& o) {
    multiply_adds += o.multiply_adds;
    reads += o.reads;
    writes += o.writes;
    return *this;
  }
  bool operator==(const CountedOps&) const = default;
};

using Vec = std::vector<double>;

class Net {
 public:
  enum class LayerKind { conv3d, dense, leaky_relu, identity, global_average, flatten };

  struct Layer {
    LayerKind kind;
    OpSpec op;
    TensorShape in;
    TensorShape out;
    std::size_t weight_offset = 0;
    std::size_t weight_count = 0;
    std::size_t bias_offset = 0;
    std::size_t bias_count = 0;
    Count fan_in = 0;
  };

  /// Builds from stem and head only; cells are outside the oracle's op set.
  /// Weights are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases start at 0.
  static Net build(const ModelSpec& model, std::uint64_t seed) {
    if (!model.cells.empty()) {
      fail(ErrorKind::UnsupportedOpForOracle, "cells are not supported by the reference engine");
    }
    Net net;
    net.input_ = model.input;
    TensorShape cur = model.input;
    auto add = [&](const OpSpec& op, const std::string& where) {
      Layer l{};
      l.op = op;
      l.in = cur;
      switch (op.kind) {
        case OpKind::conv3d: l.kind = LayerKind::conv3d; break;
        case OpKind::dense: l.kind = LayerKind::dense; break;
        case OpKind::leaky_relu: l.kind = LayerKind::leaky_relu; break;
        case OpKind::identity: l.kind = LayerKind::identity; break;
        default:
          fail(ErrorKind::UnsupportedOpForOracle,
               where + ": " + std::string(arch::to_string(op.kind)) + " is not supported");
      }
      if (op.kind == OpKind::conv3d && (op.dilation != 1 || cur.rank() == 0)) {
        fail(ErrorKind::UnsupportedOpForOracle, where + ": conv3d needs dilation 1 and spatial input");
      }
      l.out = arch::apply_op(op, cur);
      if (l.kind == LayerKind::conv3d) {
        Count taps = 1;
        for (std::size_t i = 0; i < cur.rank(); ++i) taps *= static_cast<Count>(op.kernel);
        l.fan_in = taps * cur.channels;
        l.weight_count = l.fan_in * l.out.channels;
      } else if (l.kind == LayerKind::dense) {
        l.fan_in = cur.elements();
        l.weight_count = l.fan_in * l.out.channels;
      }
      if (op.bias && (l.kind == LayerKind::conv3d || l.kind == LayerKind::dense)) {
        l.bias_count = l.out.channels;
      }
      l.weight_offset = net.param_count_;
      l.bias_offset = l.weight_offset + l.weight_count;
      net.param_count_ += l.weight_count + l.bias_count;
      cur = l.out;
      net.layers_.push_back(l);
    };
    for (std::size_t i = 0; i < model.stem.size(); ++i) add(model.stem[i], "stem[" + std::to_string(i) + "]");
    if (cur.rank() != 0) {
      Layer b{};
      b.kind = model.head_input == arch::HeadInput::flatten ? LayerKind::flatten
                                                            : LayerKind::global_average;
      b.in = cur;
      b.out = TensorShape{b.kind == LayerKind::flatten ? cur.elements() : cur.channels, {}};
      b.weight_offset = b.bias_offset = net.param_count_;
      cur = b.out;
      net.layers_.push_back(b);
    }
    for (std::size_t i = 0; i < model.head.size(); ++i) add(model.head[i], "head[" + std::to_string(i) + "]");
    net.output_ = cur;

    net.params_.assign(net.param_count_, 0.0);
    SplitMix64 rng(seed);
    for (const Layer& l : net.layers_) {
      if (l.weight_count == 0) continue;
      const double bound = 1.0 / std::sqrt(static_cast<double>(l.fan_in));
      for (std::size_t i = 0; i < l.weight_count; ++i) {
        net.params_[l.weight_offset + i] = rng.uniform(-bound, bound);
      }
    }
    return net;
  }

  const std::vector<Layer>& layers() const { return layers_; }
  const TensorShape& input_shape() const { return input_; }
  const TensorShape& output_shape() const { return output_; }
  std::size_t param_count() const { return param_count_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  /// Single-sample forward pass; caches activations for backward().
  Vec forward(const Vec& x, CountedOps* ops = nullptr) {
    if (x.size() != input_.elements()) fail(ErrorKind::ShapeMismatch, "input size mismatch");
    CountedOps local;
    acts_.clear();
    acts_.push_back(x);
    for (const Layer& l : layers_) acts_.push_back(forward_layer(l, acts_.back(), local));
    if (ops) *ops += local;
    return acts_.back();
  }

  struct Gradients {
    Vec params;
    Vec input;
  };

  /// Gradients of sum(upstream * output) for the cached forward pass.
  Gradients backward(const Vec& upstream, CountedOps* ops = nullptr) {
    if (acts_.size() != layers_.size() + 1) fail(ErrorKind::NoCachedForward, "call forward() first");
    if (upstream.size() != output_.elements()) fail(ErrorKind::ShapeMismatch, "upstream size mismatch");
    CountedOps local;
    Gradients g;
    g.params.assign(param_count_, 0.0);
    Vec grad = upstream;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      grad = backward_layer(layers_[i], acts_[i], acts_[i + 1], grad, g.params, local);
    }
    g.input = std::move(grad);
    if (ops) *ops += local;
    return g;
  }

  bool has_cached_forward() const { return acts_.size() == layers_.size() + 1; }
  void clear_cache() { acts_.clear(); }

 private:
  struct Window {
    std::array<Count, 3> in{1, 1, 1};
    std::array<Count, 3> out{1, 1, 1};
    std::array<int, 3> k{1, 1, 1};
    int stride = 1;
    int pad = 0;
  };

  static Window window(const Layer& l) {
    Window w;
    const std::size_t r = l.in.rank();
    for (std::size_t i = 0; i < r; ++i) {
      w.in[i] = l.in.spatial[i];
      w.out[i] = l.out.spatial[i];
      w.k[i] = l.op.kernel;
    }
    w.stride = l.op.stride;
    w.pad = arch::pad_before(l.op.kernel, 1);
    return w;
  }

  // Visits every (output position, tap) pair; `in_index` is -1 for padding.
  template <typename F>
  static void for_each_tap(const Window& w, F&& f) {
    for (Count oz = 0; oz < w.out[2]; ++oz)
      for (Count oy = 0; oy < w.out[1]; ++oy)
        for (Count ox = 0; ox < w.out[0]; ++ox) {
          const Count o = (oz * w.out[1] + oy) * w.out[0] + ox;
          Count tap = 0;
          for (int kz = 0; kz < w.k[2]; ++kz)
            for (int ky = 0; ky < w.k[1]; ++ky)
              for (int kx = 0; kx < w.k[0]; ++kx, ++tap) {
                auto coord = [&](Count oc, int kc, std::size_t axis) -> long long {
                  if (w.k[axis] == 1 && w.out[axis] == 1 && w.in[axis] == 1) return 0;
                  return static_cast<long long>(oc) * w.stride + kc - w.pad;
                };
                const long long x = coord(ox, kx, 0), y = coord(oy, ky, 1), z = coord(oz, kz, 2);
                long long idx = -1;
                if (x >= 0 && y >= 0 && z >= 0 && x < static_cast<long long>(w.in[0]) &&
                    y < static_cast<long long>(w.in[1]) && z < static_cast<long long>(w.in[2])) {
                  idx = (z * static_cast<long long>(w.in[1]) + y) * static_cast<long long>(w.in[0]) + x;
                }
                f(o, tap, idx);
              }
        }
  }

  Vec forward_layer(const Layer& l, const Vec& x, CountedOps& ops) const {
    Vec y(l.out.elements(), 0.0);
    switch (l.kind) {
      case LayerKind::identity:
      case LayerKind::flatten:
        y = x;
        break;
      case LayerKind::leaky_relu:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : arch::kLeakySlope * x[i];
        ops.reads += x.size();
        break;
      case LayerKind::global_average: {
        const Count vol = l.in.spatial_volume();
        for (Count c = 0; c < l.in.channels; ++c) {
          double s = 0;
          for (Count v = 0; v < vol; ++v) s += x[c * vol + v];
          y[c] = s / static_cast<double>(vol);
        }
        ops.reads += x.size();
        break;
      }
      case LayerKind::dense: {
        const Count n_in = l.in.elements();
        for (Count o = 0; o < l.out.channels; ++o) {
          double acc = 0;
          for (Count i = 0; i < n_in; ++i) {
            acc += params_[l.weight_offset + o * n_in + i] * x[i];
            ++ops.multiply_adds;
            ops.reads += 2;
          }
          if (l.bias_count) {
            acc += params_[l.bias_offset + o];
            ++ops.multiply_adds;
            ++ops.reads;
          }
          y[o] = acc;
        }
        break;
      }
      case LayerKind::conv3d: {
        const Window w = window(l);
        const Count in_vol = l.in.spatial_volume(), out_vol = l.out.spatial_volume();
        const Count taps = l.fan_in / l.in.channels;
        for (Count co = 0; co < l.out.channels; ++co) {
          for (Count ci = 0; ci < l.in.channels; ++ci) {
            const double* wk = &params_[l.weight_offset + (co * l.in.channels + ci) * taps];
            const double* xc = &x[ci * in_vol];
            double* yc = &y[co * out_vol];
            for_each_tap(w, [&](Count o, Count tap, long long idx) {
              ++ops.multiply_adds;
              ++ops.reads;
              if (idx >= 0) {
                yc[o] += wk[tap] * xc[idx];
                ++ops.reads;
              }
            });
          }
          if (l.bias_count) {
            for (Count o = 0; o < out_vol; ++o) {
              y[co * out_vol + o] += params_[l.bias_offset + co];
              ++ops.multiply_adds;
              ++ops.reads;
            }
          }
        }
        break;
      }
    }
    ops.writes += y.size();
    return y;
  }

  Vec backward_layer(const Layer& l, const Vec& x, const Vec& y, const Vec& gy, Vec& gparams,
                     CountedOps& ops) const {
    (void)y;
    Vec gx(l.in.elements(), 0.0);
    switch (l.kind) {
      case LayerKind::identity:
      case LayerKind::flatten:
        gx = gy;
        break;
      case LayerKind::leaky_relu:
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > 0 ? gy[i] : arch::kLeakySlope * gy[i];
        ops.reads += 2 * x.size();
        break;
      case LayerKind::global_average: {
        const Count vol = l.in.spatial_volume();
        for (Count c = 0; c < l.in.channels; ++c)
          for (Count v = 0; v < vol; ++v) gx[c * vol + v] = gy[c] / static_cast<double>(vol);
        ops.reads += gx.size();
        break;
      }
      case LayerKind::dense: {
        const Count n_in = l.in.elements();
        for (Count o = 0; o < l.out.channels; ++o) {
          for (Count i = 0; i < n_in; ++i) {
            gparams[l.weight_offset + o * n_in + i] += gy[o] * x[i];
            gx[i] += params_[l.weight_offset + o * n_in + i] * gy[o];
            ops.multiply_adds += 2;
            ops.reads += 4;
            ops.writes += 1;
          }
          if (l.bias_count) {
            gparams[l.bias_offset + o] += gy[o];
            ++ops.multiply_adds;
            ++ops.reads;
            ++ops.writes;
          }
        }
        break;
      }
      case LayerKind::conv3d: {
        const Window w = window(l);
        const Count in_vol = l.in.spatial_volume(), out_vol = l.out.spatial_volume();
        const Count taps = l.fan_in / l.in.channels;
        for (Count co = 0; co < l.out.channels; ++co) {
          const double* gyc = &gy[co * out_vol];
          for (Count ci = 0; ci < l.in.channels; ++ci) {
            const std::size_t wbase = l.weight_offset + (co * l.in.channels + ci) * taps;
            const double* xc = &x[ci * in_vol];
            double* gxc = &gx[ci * in_vol];
            // weight gradient: every tap, padding contributes zeros
            for_each_tap(w, [&](Count o, Count tap, long long idx) {
              ++ops.multiply_adds;
              ++ops.reads;
              if (idx >= 0) {
                gparams[wbase + tap] += gyc[o] * xc[idx];
                ++ops.reads;
              }
            });
            // input gradient: only taps that touch the input
            for_each_tap(w, [&](Count o, Count tap, long long idx) {
              if (idx < 0) return;
              gxc[idx] += params_[wbase + tap] * gyc[o];
              ++ops.multiply_adds;
              ops.reads += 2;
              ++ops.writes;
            });
          }
          if (l.bias_count) {
            for (Count o = 0; o < out_vol; ++o) {
              gparams[l.bias_offset + co] += gyc[o];
              ++ops.multiply_adds;
              ++ops.reads;
            }
          }
        }
        break;
      }
    }
    ops.writes += gx.size();
    return gx;
  }

  TensorShape input_;
  TensorShape output_;
  std::vector<Layer> layers_;
  std::size_t param_count_ = 0;
  Vec params_;
  std::vector<Vec> acts_;
};

inline Net::Gradients backward_counted(Net& net, const Vec& upstream, CountedOps& ops) {
  return net.backward(upstream, &ops);
}

inline Vec forward_counted(Net& net, const Vec& x, CountedOps& ops) { return net.forward(x, &ops); }

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  Vec first_moment;
  Vec second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;

  explicit AdamState(std::size_t n = 0, double lr = 1e-3)
      : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {}
};

inline void adam_step(Vec& params, const Vec& grads, AdamState& s) {
  if (grads.size() != params.size() || s.first_moment.size() != params.size() ||
      s.second_moment.size() != params.size()) {
    fail(ErrorKind::ShapeMismatch, "adam: params, grads and moments must have equal size");
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.first_moment[i] = s.beta1 * s.first_moment[i] + (1.0 - s.beta1) * grads[i];
    s.second_moment[i] = s.beta2 * s.second_moment[i] + (1.0 - s.beta2) * grads[i] * grads[i];
    const double m_hat = s.first_moment[i] / c1;
    const double v_hat = s.second_moment[i] / c2;
    params[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training

/// Labels min-max scaled to [0, 1] per component. Point ranges map to 0.
inline Vec scaled_label(const datagen::CosmoLabel& l, const datagen::LabelRanges& r) {
  auto s = [](double v, const datagen::Range& range) {
    const double w = range.hi - range.lo;
    return w > 0 ? (v - range.lo) / w : 0.0;
  };
  return {s(l.omega_m, r.omega_m), s(l.sigma8, r.sigma8), s(l.n_s, r.n_s)};
}

/// Mean squared error over the three label components and every sample.
inline double mse_loss(Net& net, const std::vector<datagen::CosmoSample>& data,
                       const datagen::LabelRanges& ranges) {
  double total = 0;
  for (const auto& s : data) {
    const Vec y = net.forward(s.grid.values);
    const Vec t = scaled_label(s.label, ranges);
    for (std::size_t k = 0; k < 3; ++k) total += (y[k] - t[k]) * (y[k] - t[k]);
  }
  return total / (3.0 * static_cast<double>(data.size()));
}

struct TrainOptions {
  int epochs = 50;
  double learning_rate = 3e-3;
  std::uint64_t seed = 0;
  datagen::LabelRanges ranges;
};

/// Full-batch Adam on MSE. Returns the loss before each epoch followed by
/// the final loss, so the trace has epochs + 1 entries.
inline std::vector<double> train_tiny(Net& net, const std::vector<datagen::CosmoSample>& data,
                                      const TrainOptions& opt) {
  if (data.empty()) fail(ErrorKind::EmptyInput, "training set is empty");
  if (net.output_shape().elements() != 3) fail(ErrorKind::ShapeMismatch, "net output width must be 3");
  if (opt.epochs < 0) fail(ErrorKind::InvalidConfig, "epochs must be >= 0");
  AdamState state(net.param_count(), opt.learning_rate);
  std::vector<double> trace;
  const double norm = 2.0 / (3.0 * static_cast<double>(data.size()));
  for (int epoch = 0; epoch <= opt.epochs; ++epoch) {
    Vec grads(net.param_count(), 0.0);
    double total = 0;
    for (const auto& s : data) {
      const Vec y = net.forward(s.grid.values);
      const Vec t = scaled_label(s.label, opt.ranges);
      Vec up(3);
      for (std::size_t k = 0; k < 3; ++k) {
        total += (y[k] - t[k]) * (y[k] - t[k]);
        up[k] = norm * (y[k] - t[k]);
      }
      if (epoch < opt.epochs) {
        const auto g = net.backward(up);
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += g.params[i];
      }
    }
    trace.push_back(total / (3.0 * static_cast<double>(data.size())));
    if (epoch < opt.epochs) adam_step(net.params(), grads, state);
  }
  return trace;
}

/// Tiny conv net for 16^3 sub-volumes: two strided conv stages, then a
/// global average and a small dense head.
inline ModelSpec tiny_conv_net(Count side = 16) {
  ModelSpec m;
  m.name = "tiny";
  m.input = TensorShape{1, {side, side, side}};
  m.channel_width = 4;
  m.stem = {OpSpec::conv3d(4, 3, 2, true), OpSpec::leaky_relu(), OpSpec::conv3d(8, 3, 2, true),
            OpSpec::leaky_relu()};
  m.head_input = arch::HeadInput::global_average;
  m.head = {OpSpec::dense(16), OpSpec::leaky_relu(), OpSpec::dense(3)};
  return m;
}

/// Samples for train_tiny: sims x 8 sub-volumes from a grid of side 2 * side.
inline std::vector<datagen::CosmoSample> tiny_dataset(std::uint64_t sims, std::uint32_t side,
                                                      std::uint64_t master_seed,
                                                      const datagen::LabelRanges& ranges = {}) {
  datagen::SimConfig cfg = datagen::SimConfig::desk_scale();
  cfg.grid_d = 2 * side;
  std::vector<datagen::CosmoSample> out;
  for (std::uint64_t i = 0; i < sims; ++i) {
    auto samples = datagen::simulate_samples(datagen::label_for(ranges, master_seed, i), cfg,
                                             datagen::sim_seed_for(master_seed, i));
    for (auto& s : samples) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace aiscale::train
