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

// Analytic compute and memory cost of a ModelSpec.
//
// Training cost = forward add-multiplies x FLOPs per add-multiply x FB, where
// FB = 3 accounts for the backward pass (one product for the input gradient
// and one for the weight gradient per forward product).
//
// Counting conventions:
//   conv3d     k^r * C_in * C_out * |out|  (+ C_out * |out| with bias)
//   separable  k^r * C_in * |out| + C_in * C_out * |out|  (dilation ignored)
//   dense      in * out (+ out with bias)
//   batch_norm 2 * C * |spatial|  (scale and shift, inference style)
//   pooling, activations, identity, zero: 0
// where r is the spatial rank (3 for volumetric ops).
//
// Memory accesses use a one-touch model: each op reads its input activations
// once plus its weights, and writes its output once. It is an estimate, not a
// cache simulation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "aiscale/arch_ir.hpp"
#include "aiscale/error.hpp"

namespace aiscale::cost {

using arch::Count;
using arch::ModelSpec;
using arch::OpKind;
using arch::OpSpec;
using arch::TensorShape;

struct CostParams {
  Count flop_per_addmul = 2;
  Count fb_factor = 3;
  Count element_bytes = 4;
};

struct CostReport {
  std::string model;
  Count forward_addmul = 0;
  Count training_flops = 0;
  Count params = 0;
  Count mem_reads = 0;
  Count mem_writes = 0;
  double intensity = 0.0;
  Count weight_bytes = 0;
  Count activation_bytes = 0;

  bool operator==(const CostReport&) const = default;
};

inline Count kernel_taps(const OpSpec& op, const TensorShape& in) {
  Count taps = 1;
  for (std::size_t i = 0; i < in.rank(); ++i) taps *= static_cast<Count>(op.kernel);
  return taps;
}

/// Add-multiplies of one op for a single sample.
inline Count op_addmul(const OpSpec& op, const TensorShape& in, const TensorShape& out) {
  const Count out_vol = out.spatial_volume();
  switch (op.kind) {
    case OpKind::conv3d: {
      Count n = kernel_taps(op, in) * in.channels * out.channels * out_vol;
      if (op.bias) n += out.channels * out_vol;
      return n;
    }
    case OpKind::separable_conv3d:
    case OpKind::dilated_separable_conv3d: {
      Count n = kernel_taps(op, in) * in.channels * out_vol + in.channels * out.channels * out_vol;
      if (op.bias) n += out.channels * out_vol;
      return n;
    }
    case OpKind::dense: {
      Count n = in.elements() * out.channels;
      if (op.bias) n += out.channels;
      return n;
    }
    case OpKind::batch_norm:
      return 2 * in.elements();
    case OpKind::max_pool3d:
    case OpKind::avg_pool3d:
    case OpKind::leaky_relu:
    case OpKind::identity:
    case OpKind::zero:
      return 0;
  }
  fail(ErrorKind::UnsupportedOp, "no add-multiply rule for op");
}

/// Learnable parameters of one op.
inline Count op_params(const OpSpec& op, const TensorShape& in, const TensorShape& out) {
  switch (op.kind) {
    case OpKind::conv3d:
      return kernel_taps(op, in) * in.channels * out.channels + (op.bias ? out.channels : 0);
    case OpKind::separable_conv3d:
    case OpKind::dilated_separable_conv3d:
      return kernel_taps(op, in) * in.channels + in.channels * out.channels +
             (op.bias ? out.channels : 0);
    case OpKind::dense:
      return in.elements() * out.channels + (op.bias ? out.channels : 0);
    case OpKind::batch_norm:
      return 2 * in.channels;
    default:
      return 0;
  }
}

inline Count forward_addmul(const ModelSpec& model, const TensorShape& input, Count batch) {
  Count total = 0;
  for (const auto& inst : arch::infer_shapes(model, input)) {
    total += op_addmul(inst.op, inst.in, inst.out);
  }
  return batch * total;
}

inline Count training_flops_from_addmul(Count forward, const CostParams& p = {}) {
  return forward * p.flop_per_addmul * p.fb_factor;
}

inline Count training_flops(const ModelSpec& model, const TensorShape& input, Count batch,
                            const CostParams& p = {}) {
  return training_flops_from_addmul(forward_addmul(model, input, batch), p);
}

inline Count param_count(const ModelSpec& model, const TensorShape& input) {
  Count total = 0;
  for (const auto& inst : arch::infer_shapes(model, input)) {
    total += op_params(inst.op, inst.in, inst.out);
  }
  return total;
}

inline Count param_count(const ModelSpec& model) { return param_count(model, model.input); }

struct MemoryAccesses {
  Count reads = 0;
  Count writes = 0;
};

inline MemoryAccesses memory_access_estimate(const ModelSpec& model, const TensorShape& input,
                                             Count batch) {
  MemoryAccesses acc;
  for (const auto& inst : arch::infer_shapes(model, input)) {
    acc.reads += batch * inst.in.elements() + op_params(inst.op, inst.in, inst.out);
    acc.writes += batch * inst.out.elements();
  }
  return acc;
}

/// FLOPs per memory access.
inline double arithmetic_intensity(double flops, double reads, double writes) {
  const double accesses = reads + writes;
  if (!(accesses > 0.0)) fail(ErrorKind::ZeroAccesses, "no memory accesses");
  return flops / accesses;
}

struct Footprint {
  Count weight_bytes = 0;
  Count activation_bytes = 0;
};

inline Footprint memory_footprint(const ModelSpec& model, const TensorShape& input, Count batch,
                                  const CostParams& p = {}) {
  Footprint f;
  Count outputs = 0;
  for (const auto& inst : arch::infer_shapes(model, input)) {
    f.weight_bytes += op_params(inst.op, inst.in, inst.out) * p.element_bytes;
    outputs += inst.out.elements();
  }
  f.activation_bytes = p.element_bytes * batch * outputs;
  return f;
}

/// Classic roofline ceiling in FLOP/s. `intensity` is FLOPs per element
/// access, so bytes moved per FLOP is element_bytes / intensity.
inline double roofline_bound(double intensity, double element_bytes, double mem_bw, double peak) {
  if (!(intensity > 0 && element_bytes > 0 && mem_bw > 0 && peak > 0)) {
    fail(ErrorKind::InvalidConfig, "roofline inputs must be positive");
  }
  return std::min(peak, intensity * mem_bw / element_bytes);
}

/// Everything above in one pass over the shape table.
inline CostReport estimate(const ModelSpec& model, const TensorShape& input, Count batch,
                           const CostParams& p = {}) {
  CostReport r;
  r.model = model.name;
  Count forward = 0, outputs = 0;
  for (const auto& inst : arch::infer_shapes(model, input)) {
    const Count params = op_params(inst.op, inst.in, inst.out);
    forward += op_addmul(inst.op, inst.in, inst.out);
    r.params += params;
    r.mem_reads += batch * inst.in.elements() + params;
    r.mem_writes += batch * inst.out.elements();
    outputs += inst.out.elements();
  }
  r.forward_addmul = batch * forward;
  r.training_flops = training_flops_from_addmul(r.forward_addmul, p);
  const Count accesses = r.mem_reads + r.mem_writes;
  r.intensity = accesses == 0 ? 0.0
                              : static_cast<double>(r.training_flops) / static_cast<double>(accesses);
  r.weight_bytes = r.params * p.element_bytes;
  r.activation_bytes = p.element_bytes * batch * outputs;
  return r;
}

inline CostReport estimate(const ModelSpec& model, Count batch, const CostParams& p = {}) {
  return estimate(model, model.input, batch, p);
}

}  // namespace aiscale::cost
