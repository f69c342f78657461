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

#include "aiscale/arch_search.hpp"

#include <cmath>
#include <set>

#include "test_util.hpp"

using namespace aiscale;
using namespace aiscale::search;
using arch::Count;
using arch::ModelSpec;
using arch::OpKind;
using arch::OpSpec;
using arch::TensorShape;

namespace {

/// A single dense layer whose per-sample training cost is exactly `flops`
/// (6 FLOPs per add-multiply).
ModelSpec dense_with_cost(double flops) {
  ModelSpec m;
  m.input = TensorShape{static_cast<Count>(flops / 6), {}};
  m.head = {OpSpec::dense(1, false)};
  return m;
}

}  // namespace

TEST(SampleCell, Deterministic) {
  const SearchSpace space;
  EXPECT_EQ(sample_cell(space, 99), sample_cell(space, 99));
  EXPECT_NE(sample_cell(space, 99), sample_cell(space, 100));
}

TEST(SampleCell, ShapeOfDraw) {
  const SearchSpace space;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto cell = sample_cell(space, seed);
    EXPECT_TRUE(arch::validate_cell(cell).ok());
    std::vector<int> in_degree(static_cast<std::size_t>(space.node_count), 0);
    for (const auto& e : cell.edges) {
      EXPECT_LT(e.from, e.to);
      ++in_degree[static_cast<std::size_t>(e.to)];
    }
    for (int n = 1; n < space.node_count; ++n) {
      EXPECT_GE(in_degree[static_cast<std::size_t>(n)], 1);
      EXPECT_LE(in_degree[static_cast<std::size_t>(n)], space.max_in_edges_per_node);
    }
  }
}

TEST(SampleCell, IdentityOnlySpaceCostsNothing) {
  SearchSpace space;
  space.candidate_ops = {OpSpec::identity()};
  const auto cell = sample_cell(space, 5);
  ModelSpec m;
  m.input = TensorShape{4, {8, 8, 8}};
  arch::CellSpec c = cell;
  c.channels = 4;
  m.cells = {c};
  m.head = {OpSpec::dense(3)};
  Count cell_addmul = 0;
  for (const auto& inst : arch::infer_shapes(m)) {
    if (inst.path.rfind("cell", 0) == 0) cell_addmul += cost::op_addmul(inst.op, inst.in, inst.out);
  }
  EXPECT_EQ(cell_addmul, 0u);
}

TEST(SampleCell, EveryCandidateAppearsInThousandDraws) {
  const SearchSpace space;
  std::set<std::pair<OpKind, int>> seen;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (const auto& e : sample_cell(space, seed).edges) seen.insert({e.op.kind, e.op.kernel});
  }
  EXPECT_EQ(seen.size(), space.candidate_ops.size());
}

TEST(SampleCell, InvalidSpace) {
  SearchSpace space;
  space.candidate_ops.clear();
  EXPECT_ERROR_KIND(sample_cell(space, 1), ErrorKind::InvalidConfig);
}

TEST(FlopTargetRange, Construction) {
  const auto t = FlopTarget::around(4e12);
  EXPECT_DOUBLE_EQ(t.lo, 3.8e12);
  EXPECT_DOUBLE_EQ(t.hi, 4.2e12);
  EXPECT_ERROR_KIND(FlopTarget::around(4e12, 0.5), ErrorKind::BadRange);
  EXPECT_ERROR_KIND(FlopTarget::range(2, 1), ErrorKind::BadRange);
}

TEST(Filter, AcceptsOnlyCostsInsideWindow) {
  std::vector<ModelSpec> cands;
  for (double c : {1e12, 3.9e12, 4.1e12, 20e12}) cands.push_back(dense_with_cost(c));
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto r = filter_models({cands[i]}, FlopTarget::around(4e12), cands[i].input, 1);
    if (!r.empty()) accepted.push_back(i);
  }
  EXPECT_EQ(accepted, (std::vector<std::size_t>{1, 2}));
}

TEST(Filter, AllAndNone) {
  const SearchSpace space;
  std::vector<ModelSpec> cands;
  for (std::uint64_t s = 0; s < 6; ++s) cands.push_back(model_for_width(sample_cell(space, s), space, 8));
  const auto all = filter_models(cands, FlopTarget{}, space.input);
  ASSERT_EQ(all.size(), cands.size());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].index, i);
  EXPECT_TRUE(filter_models(cands, FlopTarget::range(1, 2), space.input).empty());
}

TEST(Filter, AcceptedInsideRejectedOutside) {
  const SearchSpace space;
  std::vector<ModelSpec> cands;
  for (std::uint64_t s = 0; s < 24; ++s) {
    cands.push_back(model_for_width(sample_cell(space, s), space, 4 + s));
  }
  const auto target = FlopTarget::range(5e10, 5e11);
  const auto acc = filter_models(cands, target, space.input);
  std::set<std::size_t> kept;
  for (const auto& a : acc) {
    kept.insert(a.index);
    EXPECT_TRUE(target.contains(static_cast<double>(a.report.training_flops)));
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (kept.count(i)) continue;
    EXPECT_FALSE(target.contains(per_sample_cost(cands[i], space.input)));
  }
}

TEST(Filter, ThreadCountDoesNotChangeResult) {
  const SearchSpace space;
  std::vector<ModelSpec> cands;
  for (std::uint64_t s = 0; s < 10; ++s) cands.push_back(model_for_width(sample_cell(space, s), space, 16));
  const auto a = filter_models(cands, FlopTarget::range(0, 1e12), space.input, 1, 1);
  const auto b = filter_models(cands, FlopTarget::range(0, 1e12), space.input, 1, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index, b[i].index);
    EXPECT_EQ(a[i].report, b[i].report);
  }
}

TEST(ClosestWidth, QuadraticCurve) {
  auto cost = [](Count c) { return 1e6 * static_cast<double>(c) * static_cast<double>(c); };
  EXPECT_EQ(closest_width(cost, 1, 1024, 4e8), 20u);
  EXPECT_EQ(closest_width(cost, 1, 1024, cost(1)), 1u);
  EXPECT_EQ(closest_width(cost, 1, 1024, cost(1024)), 1024u);
  EXPECT_ERROR_KIND(closest_width(cost, 1, 1024, 0.5e6), ErrorKind::TargetUnreachable);
  EXPECT_ERROR_KIND(closest_width(cost, 1, 1024, 2e12), ErrorKind::TargetUnreachable);
}

TEST(ClosestWidth, TieGoesToSmallerWidth) {
  auto cost = [](Count c) { return 10.0 * static_cast<double>(c); };
  EXPECT_EQ(closest_width(cost, 1, 100, 55.0), 5u);
}

TEST(ClosestWidth, MatchesExhaustiveSearch) {
  auto cost = [](Count c) { return std::floor(std::pow(static_cast<double>(c), 2.3)); };
  for (double target : {3.0, 17.5, 1000.0, 12345.0, 50000.0}) {
    Count best = 1;
    for (Count c = 1; c <= 200; ++c) {
      if (std::abs(cost(c) - target) < std::abs(cost(best) - target)) best = c;
    }
    EXPECT_EQ(closest_width(cost, 1, 200, target), best) << target;
  }
}

TEST(SolveChannels, CostIsMonotoneOnDefaultGrammar) {
  const SearchSpace space;
  const auto cell = sample_cell(space, 3);
  double prev = 0;
  for (Count c = 1; c <= 64; ++c) {
    const double v = per_sample_cost(model_for_width(cell, space, c), space.input);
    EXPECT_GE(v, prev) << c;
    prev = v;
  }
}

TEST(SolveChannels, BoundaryTarget) {
  const SearchSpace space;
  const auto cell = sample_cell(space, 3);
  const double at_min = per_sample_cost(model_for_width(cell, space, space.channel_min), space.input);
  EXPECT_EQ(solve_channels(cell, space, at_min, space.input).channels, space.channel_min);
}

TEST(Family, MediumAndLargeTargets) {
  const SearchSpace space;
  const auto fam = generate_scaled_family(space, {4e12, 16e12}, 7);
  ASSERT_EQ(fam.size(), 2u);
  for (const auto& m : fam) {
    EXPECT_NEAR(m.solved.cost, m.target, 0.05 * m.target);
    EXPECT_FALSE(m.solved.tolerance_missed);
    EXPECT_DOUBLE_EQ(static_cast<double>(cost::estimate(m.solved.model, space.input, 1).training_flops),
                     m.solved.cost);
  }
  EXPECT_LT(fam[0].solved.cost, fam[1].solved.cost);
  const double ratio = static_cast<double>(fam[1].report.params) / static_cast<double>(fam[0].report.params);
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
}

TEST(Family, Singleton) {
  EXPECT_EQ(generate_scaled_family(SearchSpace{}, {1e12}, 1).size(), 1u);
}

TEST(Family, Deterministic) {
  const SearchSpace space;
  const auto a = generate_scaled_family(space, {2e12, 8e12}, 11);
  const auto b = generate_scaled_family(space, {2e12, 8e12}, 11);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].solved.model, b[i].solved.model);
    EXPECT_EQ(a[i].report, b[i].report);
  }
}

TEST(Family, UnsortedTargets) {
  EXPECT_ERROR_KIND(generate_scaled_family(SearchSpace{}, {16e12, 4e12}, 1), ErrorKind::BadRange);
  EXPECT_ERROR_KIND(generate_scaled_family(SearchSpace{}, {}, 1), ErrorKind::EmptyInput);
}

TEST(Family, UnreachableTarget) {
  EXPECT_ERROR_KIND(generate_scaled_family(SearchSpace{}, {1e30}, 1), ErrorKind::TargetUnreachable);
}
