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

// Static description of 3D CNN architectures: a stem, a stack of DAG cells and
// a dense classifier head. Nothing here owns weights or executes; the IR only
// has to be precise enough that every tensor shape can be inferred.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aiscale/error.hpp"

namespace aiscale::arch {

using Count = std::uint64_t;

enum class OpKind {
  conv3d,
  separable_conv3d,
  dilated_separable_conv3d,
  max_pool3d,
  avg_pool3d,
  batch_norm,
  leaky_relu,
  identity,
  zero,
  dense,
};

inline constexpr double kLeakySlope = 0.01;

constexpr std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::conv3d: return "conv3d";
    case OpKind::separable_conv3d: return "separable_conv3d";
    case OpKind::dilated_separable_conv3d: return "dilated_separable_conv3d";
    case OpKind::max_pool3d: return "max_pool3d";
    case OpKind::avg_pool3d: return "avg_pool3d";
    case OpKind::batch_norm: return "batch_norm";
    case OpKind::leaky_relu: return "leaky_relu";
    case OpKind::identity: return "identity";
    case OpKind::zero: return "zero";
    case OpKind::dense: return "dense";
  }
  return "?";
}

inline constexpr OpKind kAllOpKinds[] = {
    OpKind::conv3d,     OpKind::separable_conv3d, OpKind::dilated_separable_conv3d,
    OpKind::max_pool3d, OpKind::avg_pool3d,       OpKind::batch_norm,
    OpKind::leaky_relu, OpKind::identity,         OpKind::zero,
    OpKind::dense};

inline std::optional<OpKind> parse_op_kind(std::string_view text) {
  for (OpKind k : kAllOpKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

constexpr bool is_conv(OpKind k) {
  return k == OpKind::conv3d || k == OpKind::separable_conv3d ||
         k == OpKind::dilated_separable_conv3d;
}
constexpr bool is_pool(OpKind k) { return k == OpKind::max_pool3d || k == OpKind::avg_pool3d; }
constexpr bool is_windowed(OpKind k) { return is_conv(k) || is_pool(k); }
constexpr bool is_separable(OpKind k) {
  return k == OpKind::separable_conv3d || k == OpKind::dilated_separable_conv3d;
}

/// Channel count plus 0..3 spatial extents. Rank 0 is a flat feature vector,
/// which only appears after the flatten boundary in front of the head.
struct TensorShape {
  Count channels = 1;
  std::vector<Count> spatial;

  Count spatial_volume() const {
    Count v = 1;
    for (Count e : spatial) v *= e;
    return v;
  }
  Count elements() const { return channels * spatial_volume(); }
  std::size_t rank() const { return spatial.size(); }

  bool operator==(const TensorShape&) const = default;

  /// "C x D x H x W", e.g. "1x128x128x128".
  std::string str() const {
    std::string out = std::to_string(channels);
    for (Count e : spatial) out += "x" + std::to_string(e);
    return out;
  }

  static TensorShape parse(std::string_view text) {
    TensorShape s;
    std::vector<Count> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('x', start);
      if (end == std::string_view::npos) end = text.size();
      std::string token(text.substr(start, end - start));
      if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
        fail(ErrorKind::ParseError, "bad shape '" + std::string(text) + "'");
      }
      parts.push_back(std::stoull(token));
      start = end + 1;
    }
    if (parts.empty() || parts.size() > 4) {
      fail(ErrorKind::ParseError, "shape needs 1 to 4 extents: '" + std::string(text) + "'");
    }
    s.channels = parts.front();
    s.spatial.assign(parts.begin() + 1, parts.end());
    return s;
  }
};

struct OpSpec {
  OpKind kind = OpKind::identity;
  int kernel = 0;  // 3 or 5 for windowed ops, 0 otherwise
  int stride = 1;
  int dilation = 1;
  Count out_channels = 0;  // conv3d/dense; 0 on cell edges means "cell width"
  bool bias = false;

  bool operator==(const OpSpec&) const = default;

  static OpSpec conv3d(Count out, int kernel = 3, int stride = 1, bool bias = false) {
    return {OpKind::conv3d, kernel, stride, 1, out, bias};
  }
  static OpSpec separable(int kernel, Count out = 0) {
    return {OpKind::separable_conv3d, kernel, 1, 1, out, false};
  }
  static OpSpec dilated_separable(int kernel, int dilation = 2, Count out = 0) {
    return {OpKind::dilated_separable_conv3d, kernel, 1, dilation, out, false};
  }
  static OpSpec max_pool(int kernel = 3, int stride = 1) {
    return {OpKind::max_pool3d, kernel, stride, 1, 0, false};
  }
  static OpSpec avg_pool(int kernel = 3, int stride = 1) {
    return {OpKind::avg_pool3d, kernel, stride, 1, 0, false};
  }
  static OpSpec batch_norm() { return {OpKind::batch_norm, 0, 1, 1, 0, false}; }
  static OpSpec leaky_relu() { return {OpKind::leaky_relu, 0, 1, 1, 0, false}; }
  static OpSpec identity() { return {OpKind::identity, 0, 1, 1, 0, false}; }
  static OpSpec zero() { return {OpKind::zero, 0, 1, 1, 0, false}; }
  static OpSpec dense(Count out, bool bias = true) { return {OpKind::dense, 0, 1, 1, out, bias}; }
};

struct CellEdge {
  int from = 0;
  int to = 1;
  OpSpec op;

  bool operator==(const CellEdge&) const = default;
};

/// A DAG of `node_count` feature maps. Node 0 is the cell input; node outputs
/// are the elementwise sum of their incoming edges and the last node is the
/// cell output. Every edge op yields the cell width.
struct CellSpec {
  int node_count = 7;
  std::vector<CellEdge> edges;
  bool is_reduction = false;
  Count channels = 0;          // cell width; 0 while the cell is a template
  bool conv_epilogue = true;   // batch-norm + leaky-relu after every conv edge

  bool operator==(const CellSpec&) const = default;
};

enum class HeadInput { flatten, global_average };

constexpr std::string_view to_string(HeadInput h) {
  return h == HeadInput::flatten ? "flatten" : "global_average";
}

struct ModelSpec {
  std::string name;
  TensorShape input{1, {128, 128, 128}};
  std::vector<OpSpec> stem;
  std::vector<CellSpec> cells;
  std::set<int> reduction_positions;  // 1-based cell indices
  Count channel_width = 0;
  HeadInput head_input = HeadInput::flatten;
  std::vector<OpSpec> head;

  bool operator==(const ModelSpec&) const = default;
};

/// One executed op with its resolved spec and shapes. `path` names the op
/// inside the model, e.g. "stem[0]", "cell[3].edge[2].bn", "head[1]".
struct OpInstance {
  std::string path;
  OpSpec op;
  TensorShape in;
  TensorShape out;
};

using ShapeTable = std::vector<OpInstance>;

// ---------------------------------------------------------------------------
// Shape inference

/// "Same" padding: total padding dilation*(k-1), split floor/ceil, so the
/// output extent is ceil(in / stride).
inline Count windowed_extent(Count in, int kernel, int stride, int dilation) {
  const Count span = static_cast<Count>(dilation) * static_cast<Count>(kernel - 1);
  const Count padded = in + span;
  if (padded < span + 1) fail(ErrorKind::UnderflowedExtent, "extent underflow");
  return (padded - span - 1) / static_cast<Count>(stride) + 1;
}

inline int pad_before(int kernel, int dilation) { return dilation * (kernel - 1) / 2; }

inline TensorShape apply_op(const OpSpec& op, const TensorShape& in) {
  for (Count e : in.spatial) {
    if (e == 0) fail(ErrorKind::UnderflowedExtent, "zero extent in " + in.str());
  }
  if (in.channels == 0) fail(ErrorKind::UnderflowedExtent, "zero channels");
  TensorShape out = in;
  switch (op.kind) {
    case OpKind::batch_norm:
    case OpKind::leaky_relu:
    case OpKind::identity:
    case OpKind::zero:
      return out;
    case OpKind::dense:
      if (in.rank() != 0) {
        fail(ErrorKind::UnsupportedOp, "dense needs a flat input, got " + in.str());
      }
      out.channels = op.out_channels;
      return out;
    default:
      break;
  }
  if (in.rank() == 0) {
    fail(ErrorKind::UnsupportedOp,
         std::string(to_string(op.kind)) + " needs spatial input, got " + in.str());
  }
  for (Count& e : out.spatial) e = windowed_extent(e, op.kernel, op.stride, op.dilation);
  if (is_conv(op.kind)) out.channels = op.out_channels == 0 ? in.channels : op.out_channels;
  return out;
}

namespace detail {

inline void push_op(ShapeTable& table, std::string path, const OpSpec& op, TensorShape& cur) {
  TensorShape out = apply_op(op, cur);
  table.push_back({std::move(path), op, cur, out});
  cur = std::move(out);
}

inline void push_conv_epilogue(ShapeTable& table, const std::string& path, TensorShape& cur) {
  push_op(table, path + ".bn", OpSpec::batch_norm(), cur);
  push_op(table, path + ".act", OpSpec::leaky_relu(), cur);
}

inline TensorShape lower_cell(ShapeTable& table, const CellSpec& cell, std::size_t index,
                              TensorShape in) {
  const std::string prefix = "cell[" + std::to_string(index) + "]";
  const Count width = cell.channels == 0 ? in.channels : cell.channels;
  if (cell.is_reduction || width != in.channels) {
    push_op(table, prefix + ".pre", OpSpec::conv3d(width, 3, cell.is_reduction ? 2 : 1), in);
    push_conv_epilogue(table, prefix + ".pre", in);
  }
  if (cell.node_count < 2) fail(ErrorKind::InvalidCell, prefix + " needs at least 2 nodes");
  std::vector<std::optional<TensorShape>> nodes(static_cast<std::size_t>(cell.node_count));
  nodes[0] = in;
  for (int node = 1; node < cell.node_count; ++node) {
    for (std::size_t e = 0; e < cell.edges.size(); ++e) {
      const CellEdge& edge = cell.edges[e];
      if (edge.to != node) continue;
      if (edge.from < 0 || edge.from >= node || !nodes[edge.from]) {
        fail(ErrorKind::InvalidCell, prefix + " edge " + std::to_string(e) + " is not forward");
      }
      OpSpec op = edge.op;
      if (is_conv(op.kind) && op.out_channels == 0) op.out_channels = width;
      TensorShape cur = *nodes[edge.from];
      const std::string path = prefix + ".edge[" + std::to_string(e) + "]";
      push_op(table, path, op, cur);
      if (cell.conv_epilogue && is_conv(op.kind)) push_conv_epilogue(table, path, cur);
      auto& slot = nodes[static_cast<std::size_t>(node)];
      if (!slot) {
        slot = cur;
      } else if (!(*slot == cur)) {
        fail(ErrorKind::ShapeMismatch, prefix + " node " + std::to_string(node) +
                                           " sums " + slot->str() + " and " + cur.str());
      }
    }
    if (!nodes[static_cast<std::size_t>(node)]) {
      fail(ErrorKind::InvalidCell,
           prefix + " node " + std::to_string(node) + " has no incoming edge");
    }
  }
  return *nodes.back();
}

}  // namespace detail

/// Shape of the tensor entering the head, before the flatten boundary.
struct HeadEntry {
  TensorShape before_boundary;
  TensorShape after_boundary;
};

inline ShapeTable infer_shapes(const ModelSpec& model, const TensorShape& input,
                               HeadEntry* head_entry = nullptr) {
  ShapeTable table;
  TensorShape cur = input;
  for (std::size_t i = 0; i < model.stem.size(); ++i) {
    detail::push_op(table, "stem[" + std::to_string(i) + "]", model.stem[i], cur);
  }
  for (std::size_t i = 0; i < model.cells.size(); ++i) {
    cur = detail::lower_cell(table, model.cells[i], i, cur);
  }
  HeadEntry entry{cur, cur};
  if (cur.rank() != 0) {
    const Count features = model.head_input == HeadInput::flatten ? cur.elements() : cur.channels;
    cur = TensorShape{features, {}};
  }
  entry.after_boundary = cur;
  for (std::size_t i = 0; i < model.head.size(); ++i) {
    detail::push_op(table, "head[" + std::to_string(i) + "]", model.head[i], cur);
  }
  if (head_entry) *head_entry = entry;
  return table;
}

inline ShapeTable infer_shapes(const ModelSpec& model) { return infer_shapes(model, model.input); }

// ---------------------------------------------------------------------------
// Validation

struct Validation {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline void check_op(const OpSpec& op, const std::string& where, std::vector<std::string>& out) {
  const std::string name = where + " " + std::string(to_string(op.kind));
  if (is_windowed(op.kind)) {
    if (op.kernel != 3 && op.kernel != 5) out.push_back(name + ": kernel must be 3 or 5");
  } else if (op.kernel != 0) {
    out.push_back(name + ": kernel not applicable");
  }
  if (op.stride != 1 && op.stride != 2) out.push_back(name + ": stride must be 1 or 2");
  if (op.kind == OpKind::dilated_separable_conv3d) {
    if (op.dilation < 1) out.push_back(name + ": dilation must be >= 1");
  } else if (op.dilation != 1) {
    out.push_back(name + ": dilation only allowed on dilated ops");
  }
  if ((op.kind == OpKind::dense || op.kind == OpKind::conv3d) && op.out_channels == 0 &&
      where.find(".edge") == std::string::npos) {
    out.push_back(name + ": out_channels must be positive");
  }
  if ((op.kind == OpKind::identity || op.kind == OpKind::zero) && op.bias) {
    out.push_back(name + ": parameter-free op cannot carry a bias");
  }
}

/// Structural checks on a single cell; channel width may still be unassigned.
inline Validation validate_cell(const CellSpec& cell, const std::string& where = "cell") {
  Validation v;
  if (cell.node_count < 2) v.violations.push_back(where + ": needs at least 2 nodes");
  std::vector<bool> has_input(static_cast<std::size_t>(std::max(cell.node_count, 0)), false);
  for (std::size_t e = 0; e < cell.edges.size(); ++e) {
    const CellEdge& edge = cell.edges[e];
    const std::string name = where + ".edge[" + std::to_string(e) + "]";
    if (edge.from < 0 || edge.to < 0 || edge.from >= cell.node_count ||
        edge.to >= cell.node_count) {
      v.violations.push_back(name + ": node index out of range");
      continue;
    }
    if (edge.from >= edge.to) {
      v.violations.push_back(name + ": edge not forward (" + std::to_string(edge.from) + "->" +
                             std::to_string(edge.to) + ")");
      continue;
    }
    if (edge.op.kind == OpKind::dense) v.violations.push_back(name + ": dense op outside head");
    if (edge.op.stride != 1) v.violations.push_back(name + ": cell edges must have stride 1");
    check_op(edge.op, name, v.violations);
    has_input[static_cast<std::size_t>(edge.to)] = true;
  }
  for (int n = 1; n < cell.node_count; ++n) {
    if (!has_input[static_cast<std::size_t>(n)]) {
      v.violations.push_back(where + ": node " + std::to_string(n) + " has no incoming edge");
    }
  }
  return v;
}

inline Validation validate_model(const ModelSpec& model) {
  Validation v;
  for (std::size_t i = 0; i < model.stem.size(); ++i) {
    const std::string where = "stem[" + std::to_string(i) + "]";
    if (model.stem[i].kind == OpKind::dense) v.violations.push_back(where + ": dense op outside head");
    check_op(model.stem[i], where, v.violations);
  }
  for (std::size_t i = 0; i < model.cells.size(); ++i) {
    const std::string where = "cell[" + std::to_string(i) + "]";
    auto cell_v = validate_cell(model.cells[i], where);
    v.violations.insert(v.violations.end(), cell_v.violations.begin(), cell_v.violations.end());
    const bool listed = model.reduction_positions.count(static_cast<int>(i) + 1) != 0;
    if (listed != model.cells[i].is_reduction) {
      v.violations.push_back(where + ": reduction flag disagrees with reduction_positions");
    }
  }
  for (int pos : model.reduction_positions) {
    if (pos < 1 || pos > static_cast<int>(model.cells.size())) {
      v.violations.push_back("reduction position " + std::to_string(pos) + " out of range [1, " +
                             std::to_string(model.cells.size()) + "]");
    }
  }
  bool has_dense = false;
  for (std::size_t i = 0; i < model.head.size(); ++i) {
    const OpSpec& op = model.head[i];
    const std::string where = "head[" + std::to_string(i) + "]";
    if (op.kind == OpKind::dense) {
      has_dense = true;
    } else if (op.kind != OpKind::leaky_relu && op.kind != OpKind::identity &&
               op.kind != OpKind::batch_norm) {
      v.violations.push_back(where + ": only dense and elementwise ops allowed in head");
    }
    check_op(op, where, v.violations);
  }
  if (!has_dense) v.violations.push_back("head has no dense layer");
  if (v.ok()) {
    try {
      (void)infer_shapes(model);
    } catch (const Error& e) {
      v.violations.push_back(std::string("shape inference failed: ") + e.what());
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Builders

struct SmallNet {};

struct CellNet {
  CellSpec cell;
  int count = 16;
  std::set<int> reductions{1, 5, 13};
  Count channel_width = 32;
};

using NetScale = std::variant<SmallNet, CellNet>;

inline std::vector<OpSpec> default_head() {
  return {OpSpec::dense(128), OpSpec::leaky_relu(), OpSpec::dense(64), OpSpec::leaky_relu(),
          OpSpec::dense(3)};
}

namespace detail {

// Four conv/leaky/pool stages over a 128^3 sub-volume. The first conv is
// strided and the base width is 18 so that one training sample costs about
// 6.9 GFLOPs (forward + backward).
inline ModelSpec small_net() {
  ModelSpec m;
  m.name = "small";
  m.input = TensorShape{1, {128, 128, 128}};
  m.channel_width = 18;
  Count width = m.channel_width;
  for (int stage = 0; stage < 4; ++stage) {
    m.stem.push_back(OpSpec::conv3d(width, 3, stage == 0 ? 2 : 1, true));
    m.stem.push_back(OpSpec::leaky_relu());
    m.stem.push_back(OpSpec::avg_pool(3, 2));
    width *= 2;
  }
  m.head_input = HeadInput::flatten;
  m.head = default_head();
  return m;
}

inline ModelSpec cell_net(const CellNet& spec) {
  auto v = validate_cell(spec.cell);
  if (!v.ok()) fail(ErrorKind::InvalidCell, v.violations.front());
  if (spec.count < 1) fail(ErrorKind::InvalidCell, "cell count must be positive");
  if (spec.channel_width == 0) fail(ErrorKind::InvalidCell, "channel width must be positive");
  ModelSpec m;
  m.name = "cells";
  m.input = TensorShape{1, {128, 128, 128}};
  m.channel_width = spec.channel_width;
  m.reduction_positions = spec.reductions;
  m.stem = {OpSpec::conv3d(spec.channel_width, 3, 1), OpSpec::batch_norm(), OpSpec::leaky_relu()};
  Count width = spec.channel_width;
  for (int i = 1; i <= spec.count; ++i) {
    CellSpec cell = spec.cell;
    cell.is_reduction = spec.reductions.count(i) != 0;
    if (cell.is_reduction) width *= 2;
    cell.channels = width;
    cell.conv_epilogue = true;
    for (auto& e : cell.edges) {
      if (is_conv(e.op.kind)) e.op.out_channels = 0;
    }
    m.cells.push_back(std::move(cell));
  }
  m.head_input = HeadInput::global_average;
  m.head = default_head();
  return m;
}

}  // namespace detail

inline ModelSpec build_cosmo_net(const NetScale& scale) {
  if (std::holds_alternative<SmallNet>(scale)) return detail::small_net();
  return detail::cell_net(std::get<CellNet>(scale));
}

}  // namespace aiscale::arch
