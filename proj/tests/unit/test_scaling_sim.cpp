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

#include "aiscale/scaling_sim.hpp"

#include <cmath>
#include <limits>

#include "test_util.hpp"

using namespace aiscale;
using namespace aiscale::sim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ClusterConfig ideal_cluster() {
  ClusterConfig c;
  c.net_latency = 0;
  c.net_bw = kInf;
  c.intra_node_bw = kInf;
  c.fs_read_bw = kInf;
  return c;
}

ModelProfile toy_profile() {
  ModelProfile p;
  p.name = "toy";
  p.params = 1e6;
  p.per_sample_training_flops = 1e9;
  p.batch_per_gpu = 2;
  p.sustained_flops_per_gpu = 1e12;
  return p;
}

}  // namespace

TEST(Allreduce, RingFormula) {
  EXPECT_EQ(allreduce_time(1e9, 1, 1e10, 1e-3), 0.0);
  EXPECT_DOUBLE_EQ(allreduce_time(1e9, 4, 1e10, 0), 0.15);
  EXPECT_DOUBLE_EQ(allreduce_time(1e9, 4, 1e10, 1e-3), 0.15 + 6e-3);
  EXPECT_ERROR_KIND(allreduce_time(1, 0, 1, 0), ErrorKind::InvalidConfig);
}

TEST(Allreduce, IncreasingAndBounded) {
  double prev = 0;
  for (std::uint32_t n = 2; n <= 1024; n *= 2) {
    const double t = allreduce_time(1e9, n, 1e10, 1e-6);
    EXPECT_GT(t, prev);
    prev = t;
  }
  EXPECT_NEAR(allreduce_time(1e9, 1u << 20, 1e10, 0), 2 * 1e9 / 1e10, 1e-6);
}

TEST(Iteration, SingleGpu) {
  const auto t = iteration_time(toy_profile(), ClusterConfig{}, 1);
  EXPECT_EQ(t.allreduce_s, 0.0);
  EXPECT_DOUBLE_EQ(t.compute_s, 2e9 / 1e12);
}

TEST(Iteration, SustainedHalvesCompute) {
  ModelProfile p = toy_profile();
  const double a = iteration_time(p, ClusterConfig{}, 4).compute_s;
  p.sustained_flops_per_gpu *= 2;
  EXPECT_DOUBLE_EQ(iteration_time(p, ClusterConfig{}, 4).compute_s, a / 2);
}

TEST(Iteration, MediumProfile) {
  const auto t = iteration_time(fp32(medium_profile()), ClusterConfig{}, 4);
  EXPECT_NEAR(t.compute_s, 1.80, 0.01);
}

TEST(Iteration, IntraNodeBandwidthWithinOneNode) {
  ClusterConfig c;
  c.intra_node_bw = 1e11;
  c.net_bw = 1e9;
  const ModelProfile p = toy_profile();
  EXPECT_DOUBLE_EQ(iteration_time(p, c, 4).allreduce_s, allreduce_time(4e6, 4, 1e11, c.net_latency));
  EXPECT_DOUBLE_EQ(iteration_time(p, c, 8).allreduce_s, allreduce_time(4e6, 8, 1e9, c.net_latency));
}

TEST(Swap, Fraction) {
  const ClusterConfig c;
  EXPECT_EQ(swap_fraction(1e9, c), 0.0);
  EXPECT_EQ(swap_fraction(400 * kGiB, c), 0.0);
  EXPECT_NEAR(swap_fraction(800 * kGiB, c), 1 - 716.8 / 800, 1e-12);
  EXPECT_GT(swap_fraction(800 * kGiB, c), 0.1);
  EXPECT_NEAR(swap_fraction(1600 * kGiB, c), 0.552, 1e-3);
}

TEST(Epoch, PhasesAreAdditive) {
  const auto r = epoch_time(fp32(small_profile()), ClusterConfig{}, 5000, 16.8e6);
  EXPECT_EQ(r.epoch_time_s, r.compute_s + r.allreduce_s + r.load_s);
  EXPECT_DOUBLE_EQ(r.aggregate_flops, 5000 * small_profile().per_sample_training_flops / r.epoch_time_s);
  EXPECT_DOUBLE_EQ(r.per_gpu_flops * r.gpus, r.aggregate_flops);
  EXPECT_EQ(r.iterations, (5000u + 159u) / 160u);
}

TEST(Epoch, IdealLimit) {
  const ModelProfile p = toy_profile();
  const auto r = epoch_time(p, ideal_cluster(), 1000, 1e6);
  const auto it = iteration_time(p, ideal_cluster(), 16);
  EXPECT_DOUBLE_EQ(r.epoch_time_s, static_cast<double>(r.iterations) * (it.compute_s + it.allreduce_s));
  EXPECT_EQ(r.load_s, 0.0);
}

TEST(Epoch, DoublingDatasetWithoutSwap) {
  const ModelProfile p = toy_profile();
  const ClusterConfig c;
  const auto a = epoch_time(p, c, 3200, 1e6);
  const auto b = epoch_time(p, c, 6400, 1e6);
  EXPECT_EQ(b.iterations, 2 * a.iterations);
  EXPECT_DOUBLE_EQ(b.load_s, 2 * a.load_s);
  EXPECT_FALSE(b.swap_engaged);
}

TEST(Epoch, Errors) {
  const ModelProfile p = toy_profile();
  EXPECT_ERROR_KIND(epoch_time(p, ClusterConfig{}, 31, 1e6), ErrorKind::InsufficientSamples);
  ModelProfile hot = p;
  hot.sustained_flops_per_gpu = 20e12;
  EXPECT_ERROR_KIND(epoch_time(hot, ClusterConfig{}, 1000, 1e6), ErrorKind::InvalidConfig);
  ClusterConfig bad;
  bad.usable_memory_fraction = 1.5;
  EXPECT_ERROR_KIND(epoch_time(p, bad, 1000, 1e6), ErrorKind::InvalidConfig);
}

TEST(Epoch, Monotonicity) {
  const ModelProfile base = fp32(medium_profile());
  const ClusterConfig c;
  const double t0 = epoch_time(base, c, 4000, 16.8e6).epoch_time_s;
  ModelProfile faster = base;
  faster.sustained_flops_per_gpu *= 1.2;
  EXPECT_LE(epoch_time(faster, c, 4000, 16.8e6).epoch_time_s, t0);
  ModelProfile bigger = base;
  bigger.params *= 2;
  EXPECT_GE(epoch_time(bigger, c, 4000, 16.8e6).epoch_time_s, t0);
  ClusterConfig net = c;
  net.net_bw *= 2;
  EXPECT_LE(epoch_time(base, net, 4000, 16.8e6).epoch_time_s, t0);
  ClusterConfig fs = c;
  fs.fs_read_bw *= 2;
  EXPECT_LE(epoch_time(base, fs, 4000, 16.8e6).epoch_time_s, t0);
  EXPECT_GE(epoch_time(base, c, 8000, 16.8e6).epoch_time_s, t0);
}

TEST(Epoch, AggregateBoundedBySustained) {
  for (const auto& p : reference_profiles()) {
    for (std::uint32_t n : default_node_list()) {
      ClusterConfig c;
      c.nodes = n;
      const auto r = epoch_time(p, c, 3159, DatasetSpec{}.sample_bytes());
      EXPECT_LE(r.aggregate_flops, r.gpus * p.sustained_flops_per_gpu * p.mixed_precision_speedup * (1 + 1e-12));
    }
  }
}

TEST(Epoch, LargerBatchShrinksAllreduceShare) {
  ModelProfile small_batch = fp32(medium_profile());
  ModelProfile big_batch = small_batch;
  big_batch.batch_per_gpu = 8;
  ClusterConfig c;
  c.nodes = 8;
  const auto a = epoch_time(small_batch, c, 3200, 16.8e6);
  const auto b = epoch_time(big_batch, c, 3200, 16.8e6);
  EXPECT_LT(b.iterations, a.iterations);
  EXPECT_LT(b.allreduce_s / b.epoch_time_s, a.allreduce_s / a.epoch_time_s);
}

TEST(Strong, IdealLimitIsLinear) {
  const DatasetSpec even{163840, 1600 * kGiB};
  for (const auto& p : reference_profiles()) {
    const auto recs = strong_scaling(p, ideal_cluster(), default_node_list(), 1.0 / 32, even);
    EXPECT_NEAR(speedup(recs), 32.0, 32.0 * 1e-12) << p.name;
  }
}

TEST(Strong, OrderingWithCalibratedProfiles) {
  const auto profiles = reference_profiles();
  std::vector<double> s;
  for (const auto& p : profiles) s.push_back(speedup(strong_scaling(p, {}, default_node_list(), 1.0 / 32)));
  EXPECT_GT(s[0], s[1]);
  EXPECT_GT(s[1], s[2]);
  for (double v : s) {
    EXPECT_GT(v, 1);
    EXPECT_LT(v, 32);
  }
}

TEST(Strong, AggregateNondecreasingInNodesWithUniformRing) {
  ClusterConfig c;
  c.intra_node_bw = c.net_bw;
  for (const auto& p : reference_profiles()) {
    const auto recs = strong_scaling(p, c, default_node_list(), 1.0 / 32);
    ASSERT_EQ(recs.size(), 6u);
    for (std::size_t i = 1; i < recs.size(); ++i) {
      EXPECT_GE(recs[i].aggregate_flops, recs[i - 1].aggregate_flops) << p.name << " " << recs[i].nodes;
      EXPECT_EQ(recs[i].mode, "strong");
    }
  }
}

TEST(Strong, AggregateNondecreasingOnceRingLeavesNode) {
  for (const auto& p : reference_profiles()) {
    const auto recs = strong_scaling(p, {}, {2, 4, 8, 16, 32}, 1.0 / 32);
    for (std::size_t i = 1; i < recs.size(); ++i) {
      EXPECT_GE(recs[i].aggregate_flops, recs[i - 1].aggregate_flops) << p.name << " " << recs[i].nodes;
    }
  }
}

// The single-node fast path can beat two nodes on the slow link.
TEST(Strong, IntraNodeRingCanOutrunTwoNodes) {
  const auto recs = strong_scaling(fp32(large_profile()), {}, {1, 2}, 1.0 / 32);
  EXPECT_GT(recs[0].aggregate_flops, recs[1].aggregate_flops);
}

TEST(Strong, ThreadsDoNotChangeRecords) {
  const auto p = fp32(large_profile());
  EXPECT_EQ(strong_scaling(p, {}, default_node_list(), 1.0 / 32, {}, 1),
            strong_scaling(p, {}, default_node_list(), 1.0 / 32, {}, 3));
}

TEST(Strong, Errors) {
  EXPECT_ERROR_KIND(strong_scaling(toy_profile(), {}, {}, 1.0 / 32), ErrorKind::EmptyInput);
  EXPECT_ERROR_KIND(strong_scaling(toy_profile(), {}, {4, 2}, 1.0 / 32), ErrorKind::BadRange);
}

TEST(Data, SwapBoundary) {
  const auto recs = data_scaling(fp32(small_profile()), {}, default_fractions());
  ASSERT_EQ(recs.size(), 7u);
  for (const auto& r : recs) {
    EXPECT_EQ(r.swap_engaged, r.dataset_fraction >= 0.5) << r.dataset_fraction;
    EXPECT_EQ(r.mode, "data");
  }
}

TEST(Data, SmallProfileLoadShareAndDrop) {
  const auto recs = data_scaling(fp32(small_profile()), {}, {0.25, 1.0});
  const auto& q = recs[0];
  const auto& f = recs[1];
  EXPECT_LE(q.load_s / q.epoch_time_s, 0.05);
  EXPECT_GE(f.load_s / f.epoch_time_s, 0.15);
  EXPECT_LE(f.per_gpu_flops, 0.75 * q.per_gpu_flops);
}

TEST(Data, SmallFractionsAreFlat) {
  const auto recs = data_scaling(fp32(small_profile()), {}, {1.0 / 64, 1.0 / 32, 1.0 / 16});
  for (const auto& r : recs) EXPECT_NEAR(r.per_gpu_flops, recs[0].per_gpu_flops, 0.02 * recs[0].per_gpu_flops);
}

TEST(Data, FractionRange) {
  EXPECT_ERROR_KIND(data_scaling(toy_profile(), {}, {1.0 / 128}), ErrorKind::BadRange);
  EXPECT_ERROR_KIND(data_scaling(toy_profile(), {}, {1.5}), ErrorKind::BadRange);
}

TEST(Profiles, Calibration) {
  const auto m = medium_profile();
  EXPECT_DOUBLE_EQ(m.params, 101.6e6);
  EXPECT_EQ(m.batch_per_gpu, 4u);
  EXPECT_NEAR(m.mixed_precision_speedup, 364.06 / 205.38, 1e-12);
  EXPECT_EQ(large_profile().batch_per_gpu, 1u);
  EXPECT_EQ(small_profile().batch_per_gpu, 10u);
  EXPECT_EQ(small_profile().mixed_precision_speedup, 1.0);
  for (const auto& p : reference_profiles()) EXPECT_EQ(p.mixed_precision_speedup, 1.0);
}

TEST(Profiles, PrecisionSpeedupFloor) {
  EXPECT_EQ(precision_speedup(1, 2), 1.0);
  EXPECT_DOUBLE_EQ(precision_speedup(4, 2), 2.0);
  EXPECT_ERROR_KIND(precision_speedup(0, 1), ErrorKind::InvalidConfig);
}

TEST(Profiles, MixedPrecisionShortensCompute) {
  const auto mixed = medium_profile();
  const auto plain = fp32(mixed);
  const ClusterConfig c;
  EXPECT_NEAR(iteration_time(plain, c, 4).compute_s / iteration_time(mixed, c, 4).compute_s,
              mixed.mixed_precision_speedup, 1e-12);
}
