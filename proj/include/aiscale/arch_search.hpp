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

// Cost-targeted architecture generation: seeded sampling of cells from a
// fixed operation set, a filter that keeps candidates inside a FLOP window,
// and a channel-width solver that hits a FLOP target.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <thread>
#include <vector>

#include "aiscale/arch_ir.hpp"
#include "aiscale/cost_model.hpp"
#include "aiscale/error.hpp"
#include "aiscale/rng.hpp"

namespace aiscale::search {

using arch::CellSpec;
using arch::Count;
using arch::ModelSpec;
using arch::OpSpec;
using arch::TensorShape;

/// 3x3 and 5x5 separable, 3x3 and 5x5 dilated separable, 3x3 max and
/// average pooling, identity and zero.
inline std::vector<OpSpec> default_candidate_ops() {
  return {OpSpec::separable(3),         OpSpec::separable(5), OpSpec::dilated_separable(3),
          OpSpec::dilated_separable(5), OpSpec::max_pool(3),  OpSpec::avg_pool(3),
          OpSpec::identity(),           OpSpec::zero()};
}

struct SearchSpace {
  int node_count = 7;
  std::vector<OpSpec> candidate_ops = default_candidate_ops();
  int cell_count = 16;
  std::set<int> reduction_positions{1, 5, 13};
  Count channel_min = 1;
  Count channel_max = 1024;
  int max_in_edges_per_node = 2;
  TensorShape input{1, {128, 128, 128}};

  void validate() const {
    if (candidate_ops.empty()) fail(ErrorKind::InvalidConfig, "no candidate ops");
    if (node_count < 2) fail(ErrorKind::InvalidConfig, "node_count must be >= 2");
    if (max_in_edges_per_node < 1) fail(ErrorKind::InvalidConfig, "max_in_edges must be >= 1");
    if (channel_min < 1 || channel_max < channel_min) {
      fail(ErrorKind::InvalidConfig, "channel range must satisfy 1 <= min <= max");
    }
    for (int r : reduction_positions) {
      if (r < 1 || r > cell_count) fail(ErrorKind::InvalidConfig, "reduction out of range");
    }
  }
};

/// Closed FLOP window [lo, hi] on per-sample training cost.
struct FlopTarget {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  static FlopTarget around(double target, double tolerance = 0.05) {
    if (!(tolerance > 0.0 && tolerance < 0.5)) {
      fail(ErrorKind::BadRange, "tolerance must lie in (0, 0.5)");
    }
    return {target * (1.0 - tolerance), target * (1.0 + tolerance)};
  }
  static FlopTarget range(double lo, double hi) {
    if (!(lo < hi)) fail(ErrorKind::BadRange, "target range needs lo < hi");
    return {lo, hi};
  }
  bool contains(double flops) const { return lo <= flops && flops <= hi; }
};

/// For each non-input node pick 1..max_in_edges distinct predecessors, each
/// edge carrying a uniformly drawn candidate op.
inline CellSpec sample_cell(const SearchSpace& space, std::uint64_t seed) {
  space.validate();
  SplitMix64 rng(seed);
  CellSpec cell;
  cell.node_count = space.node_count;
  for (int node = 1; node < space.node_count; ++node) {
    const int max_edges = std::min(space.max_in_edges_per_node, node);
    const int n_edges = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_edges)));
    std::vector<int> preds(static_cast<std::size_t>(node));
    for (int i = 0; i < node; ++i) preds[static_cast<std::size_t>(i)] = i;
    // partial Fisher-Yates
    for (int i = 0; i < n_edges; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     rng.below(static_cast<std::uint64_t>(node - i));
      std::swap(preds[static_cast<std::size_t>(i)], preds[j]);
    }
    std::sort(preds.begin(), preds.begin() + n_edges);
    for (int i = 0; i < n_edges; ++i) {
      const auto& op = space.candidate_ops[rng.below(space.candidate_ops.size())];
      cell.edges.push_back({preds[static_cast<std::size_t>(i)], node, op});
    }
  }
  return cell;
}

inline ModelSpec model_for_width(const CellSpec& cell, const SearchSpace& space, Count width) {
  ModelSpec m = arch::build_cosmo_net(
      arch::CellNet{cell, space.cell_count, space.reduction_positions, width});
  m.input = space.input;
  return m;
}

inline double per_sample_cost(const ModelSpec& model, const TensorShape& input) {
  return static_cast<double>(cost::training_flops(model, input, 1));
}

struct Accepted {
  std::size_t index = 0;  // position in the candidate list
  cost::CostReport report;
};

/// Keeps the candidates whose training cost at `batch` lies in the target
/// window, in input order. `threads` > 1 evaluates candidates concurrently.
inline std::vector<Accepted> filter_models(const std::vector<ModelSpec>& candidates,
                                           const FlopTarget& target, const TensorShape& input,
                                           Count batch = 1, unsigned threads = 1) {
  std::vector<cost::CostReport> reports(candidates.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < candidates.size(); i += stride) {
      reports[i] = cost::estimate(candidates[i], input, batch);
    }
  };
  if (threads <= 1 || candidates.size() < 2) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  std::vector<Accepted> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (target.contains(static_cast<double>(reports[i].training_flops))) {
      out.push_back({i, reports[i]});
    }
  }
  return out;
}

struct SolveResult {
  Count channels = 0;
  ModelSpec model;
  double cost = 0.0;
  bool tolerance_missed = false;
};

/// Integer search over a nondecreasing cost curve: the smallest width whose
/// cost reaches the target is found by bisection, then compared with its
/// predecessor. Equidistant ties go to the smaller width.
inline Count closest_width(const std::function<double(Count)>& cost, Count lo, Count hi,
                           double target) {
  const double c_lo = cost(lo), c_hi = cost(hi);
  if (target < c_lo || target > c_hi) {
    fail(ErrorKind::TargetUnreachable, "target " + std::to_string(target) + " outside [" +
                                           std::to_string(c_lo) + ", " + std::to_string(c_hi) + "]");
  }
  Count a = lo, b = hi;  // invariant: cost(b) >= target
  while (a < b) {
    const Count mid = a + (b - a) / 2;
    if (cost(mid) >= target) {
      b = mid;
    } else {
      a = mid + 1;
    }
  }
  if (b == lo) return lo;
  const double above = cost(b) - target;
  const double below = target - cost(b - 1);
  return below <= above ? b - 1 : b;
}

inline SolveResult solve_channels(const CellSpec& cell, const SearchSpace& space, double target,
                                  const TensorShape& input, double rel_tol = 0.05) {
  auto cost_at = [&](Count c) { return per_sample_cost(model_for_width(cell, space, c), input); };
  SolveResult r;
  r.channels = closest_width(cost_at, space.channel_min, space.channel_max, target);
  r.model = model_for_width(cell, space, r.channels);
  r.cost = per_sample_cost(r.model, input);
  r.tolerance_missed = std::abs(r.cost - target) > rel_tol * target;
  return r;
}

struct FamilyMember {
  double target = 0.0;
  SolveResult solved;
  cost::CostReport report;
};

/// One sampled cell, widened to each target. Targets must ascend.
inline std::vector<FamilyMember> generate_scaled_family(const SearchSpace& space,
                                                        const std::vector<double>& targets,
                                                        std::uint64_t seed,
                                                        double rel_tol = 0.05) {
  if (targets.empty()) fail(ErrorKind::EmptyInput, "no targets");
  if (!std::is_sorted(targets.begin(), targets.end())) {
    fail(ErrorKind::BadRange, "targets must be sorted ascending");
  }
  const CellSpec cell = sample_cell(space, seed);
  std::vector<FamilyMember> family;
  for (double t : targets) {
    FamilyMember m;
    m.target = t;
    m.solved = solve_channels(cell, space, t, space.input, rel_tol);
    m.solved.model.name = "family_" + std::to_string(family.size());
    m.report = cost::estimate(m.solved.model, space.input, 1);
    if (!family.empty() && !(m.solved.cost > family.back().solved.cost)) {
      fail(ErrorKind::TargetUnreachable, "targets too close: family cost not strictly increasing");
    }
    family.push_back(std::move(m));
  }
  return family;
}

}  // namespace aiscale::search
