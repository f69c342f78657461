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

// Analytic model of synchronous data-parallel training.
//
// An epoch is iterations x (compute + allreduce) plus a data-load phase at
// its start. Phases never overlap, so every record decomposes exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "aiscale/arch_ir.hpp"
#include "aiscale/cost_model.hpp"
#include "aiscale/error.hpp"

namespace aiscale::sim {

inline constexpr double kGiB = 1024.0 * 1024.0 * 1024.0;

struct ClusterConfig {
  std::uint32_t nodes = 4;
  std::uint32_t gpus_per_node = 4;
  double peak_flops_per_gpu = 15.7e12;
  double mem_bw_per_gpu = 9e11;
  double node_memory = 256.0 * kGiB;
  double usable_memory_fraction = 0.7;
  double fs_read_bw = 1e12;  // shared filesystem, bytes/s
  double swap_penalty = 32.0;
  double net_bw = 0.8e9;        // inter-node ring link, bytes/s
  double net_latency = 5e-6;    // per ring step, s
  double intra_node_bw = 150e9; // used when every GPU sits in one node

  std::uint32_t total_gpus() const { return nodes * gpus_per_node; }

  void validate() const {
    if (nodes < 1 || gpus_per_node < 1) fail(ErrorKind::InvalidConfig, "nodes and gpus_per_node must be >= 1");
    if (!(peak_flops_per_gpu > 0 && mem_bw_per_gpu > 0 && node_memory > 0 && fs_read_bw > 0 &&
          net_bw > 0 && intra_node_bw > 0)) {
      fail(ErrorKind::InvalidConfig, "cluster rates and capacities must be positive");
    }
    if (!(usable_memory_fraction > 0 && usable_memory_fraction <= 1)) {
      fail(ErrorKind::InvalidConfig, "usable_memory_fraction must lie in (0, 1]");
    }
    if (!(swap_penalty >= 1)) fail(ErrorKind::InvalidConfig, "swap_penalty must be >= 1");
    if (!(net_latency >= 0)) fail(ErrorKind::InvalidConfig, "net_latency must be >= 0");
  }

  bool operator==(const ClusterConfig&) const = default;
};

struct ModelProfile {
  std::string name = "model";
  double params = 0;
  double bytes_per_param = 4;
  double per_sample_training_flops = 0;
  std::uint32_t batch_per_gpu = 1;
  double sustained_flops_per_gpu = 0;
  double mixed_precision_speedup = 1.0;

  void validate() const {
    if (batch_per_gpu < 1) fail(ErrorKind::InvalidConfig, "batch_per_gpu must be >= 1");
    if (!(params > 0 && bytes_per_param > 0 && per_sample_training_flops > 0 &&
          sustained_flops_per_gpu > 0)) {
      fail(ErrorKind::InvalidConfig, "profile '" + name + "' needs positive params, flops, sustained");
    }
    if (!(mixed_precision_speedup >= 1)) {
      fail(ErrorKind::InvalidConfig, "mixed_precision_speedup must be >= 1");
    }
  }

  bool operator==(const ModelProfile&) const = default;
};

struct ScalingRecord {
  std::string profile;
  std::string mode;  // "strong", "data" or "single"
  std::uint32_t nodes = 0;
  std::uint32_t gpus = 0;
  double dataset_fraction = 0;
  std::uint64_t samples = 0;
  double dataset_bytes = 0;
  std::uint64_t iterations = 0;
  double epoch_time_s = 0;
  double compute_s = 0;
  double allreduce_s = 0;
  double load_s = 0;
  double aggregate_flops = 0;
  double per_gpu_flops = 0;
  double swap_fraction = 0;
  bool swap_engaged = false;

  bool operator==(const ScalingRecord&) const = default;
};

/// Ring allreduce: 2(n-1) latency steps, each worker moving 2(n-1)/n of the payload.
inline double allreduce_time(double param_bytes, std::uint32_t n_workers, double net_bw,
                             double net_latency) {
  if (n_workers < 1) fail(ErrorKind::InvalidConfig, "allreduce needs >= 1 worker");
  if (n_workers == 1) return 0.0;
  const double n = n_workers;
  return 2.0 * (n - 1.0) * net_latency + 2.0 * ((n - 1.0) / n) * param_bytes / net_bw;
}

struct IterationTime {
  double compute_s = 0;
  double allreduce_s = 0;
};

inline IterationTime iteration_time(const ModelProfile& p, const ClusterConfig& c,
                                    std::uint32_t total_gpus) {
  if (total_gpus < 1) fail(ErrorKind::InvalidConfig, "total_gpus must be >= 1");
  IterationTime t;
  t.compute_s = p.batch_per_gpu * p.per_sample_training_flops /
                (p.sustained_flops_per_gpu * p.mixed_precision_speedup);
  const double bw = total_gpus <= c.gpus_per_node ? c.intra_node_bw : c.net_bw;
  t.allreduce_s = allreduce_time(p.params * p.bytes_per_param, total_gpus, bw, c.net_latency);
  return t;
}

inline double usable_memory(const ClusterConfig& c) {
  return c.usable_memory_fraction * c.nodes * c.node_memory;
}

inline double swap_fraction(double dataset_bytes, const ClusterConfig& c) {
  if (!(dataset_bytes > 0)) return 0.0;
  return std::max(0.0, 1.0 - usable_memory(c) / dataset_bytes);
}

inline ScalingRecord epoch_time(const ModelProfile& p, const ClusterConfig& c,
                                std::uint64_t dataset_samples, double sample_bytes) {
  p.validate();
  c.validate();
  if (p.sustained_flops_per_gpu > c.peak_flops_per_gpu) {
    fail(ErrorKind::InvalidConfig, "sustained flops of '" + p.name + "' exceed cluster peak");
  }
  const std::uint32_t gpus = c.total_gpus();
  const std::uint64_t global_batch = static_cast<std::uint64_t>(p.batch_per_gpu) * gpus;
  if (dataset_samples < global_batch) {
    fail(ErrorKind::InsufficientSamples, std::to_string(dataset_samples) + " samples < global batch " +
                                             std::to_string(global_batch));
  }
  ScalingRecord r;
  r.profile = p.name;
  r.nodes = c.nodes;
  r.gpus = gpus;
  r.samples = dataset_samples;
  r.dataset_bytes = static_cast<double>(dataset_samples) * sample_bytes;
  r.iterations = (dataset_samples + global_batch - 1) / global_batch;
  const IterationTime it = iteration_time(p, c, gpus);
  r.compute_s = static_cast<double>(r.iterations) * it.compute_s;
  r.allreduce_s = static_cast<double>(r.iterations) * it.allreduce_s;
  r.swap_fraction = swap_fraction(r.dataset_bytes, c);
  r.swap_engaged = r.swap_fraction > 0.0;
  const double swapped = r.swap_fraction * r.dataset_bytes;
  const double resident = r.dataset_bytes - swapped;
  r.load_s = resident / c.fs_read_bw + swapped * c.swap_penalty / c.fs_read_bw;
  r.epoch_time_s = r.compute_s + r.allreduce_s + r.load_s;
  r.aggregate_flops =
      static_cast<double>(dataset_samples) * p.per_sample_training_flops / r.epoch_time_s;
  r.per_gpu_flops = r.aggregate_flops / gpus;
  return r;
}

/// Dataset geometry for the sweeps: total samples and bytes at fraction 1.
struct DatasetSpec {
  std::uint64_t full_samples = 101088;
  double full_bytes = 1600.0 * kGiB;

  double sample_bytes() const { return full_bytes / static_cast<double>(full_samples); }
  std::uint64_t samples_at(double fraction) const {
    return static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(full_samples)));
  }
};

namespace detail {

template <typename T, typename F>
std::vector<ScalingRecord> sweep(const std::vector<T>& points, unsigned threads, F&& eval) {
  std::vector<ScalingRecord> out(points.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < points.size(); i += stride) out[i] = eval(points[i]);
  };
  if (threads <= 1 || points.size() < 2) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return out;
}

}  // namespace detail

/// Fixed dataset fraction, varying node count.
inline std::vector<ScalingRecord> strong_scaling(const ModelProfile& p, const ClusterConfig& tmpl,
                                                 const std::vector<std::uint32_t>& node_list,
                                                 double dataset_fraction, const DatasetSpec& ds = {},
                                                 unsigned threads = 1) {
  if (node_list.empty()) fail(ErrorKind::EmptyInput, "node list is empty");
  if (!std::is_sorted(node_list.begin(), node_list.end())) {
    fail(ErrorKind::BadRange, "node list must be ascending");
  }
  const std::uint64_t samples = ds.samples_at(dataset_fraction);
  return detail::sweep(node_list, threads, [&](std::uint32_t n) {
    ClusterConfig c = tmpl;
    c.nodes = n;
    ScalingRecord r = epoch_time(p, c, samples, ds.sample_bytes());
    r.mode = "strong";
    r.dataset_fraction = dataset_fraction;
    return r;
  });
}

/// Fixed cluster, varying dataset fraction.
inline std::vector<ScalingRecord> data_scaling(const ModelProfile& p, const ClusterConfig& c,
                                               const std::vector<double>& fractions,
                                               const DatasetSpec& ds = {}, unsigned threads = 1) {
  if (fractions.empty()) fail(ErrorKind::EmptyInput, "fraction list is empty");
  for (double f : fractions) {
    if (!(f >= 1.0 / 64.0 && f <= 1.0)) fail(ErrorKind::BadRange, "fraction outside [1/64, 1]");
  }
  return detail::sweep(fractions, threads, [&](double f) {
    ScalingRecord r = epoch_time(p, c, ds.samples_at(f), ds.sample_bytes());
    r.mode = "data";
    r.dataset_fraction = f;
    return r;
  });
}

/// epoch_time(first) / epoch_time(last).
inline double speedup(const std::vector<ScalingRecord>& records) {
  if (records.empty()) fail(ErrorKind::EmptyInput, "no records");
  return records.front().epoch_time_s / records.back().epoch_time_s;
}

/// Ratio of two measured epoch times, floored at 1.
inline double precision_speedup(double fp32_seconds, double mixed_seconds) {
  if (!(fp32_seconds > 0 && mixed_seconds > 0)) fail(ErrorKind::InvalidConfig, "times must be positive");
  return std::max(1.0, fp32_seconds / mixed_seconds);
}

// ---------------------------------------------------------------------------
// Reference profiles

/// Baseline model: parameters and per-sample cost come from the cost model.
inline ModelProfile small_profile() {
  const arch::ModelSpec m = arch::build_cosmo_net(arch::SmallNet{});
  ModelProfile p;
  p.name = "small";
  p.params = static_cast<double>(cost::param_count(m));
  p.per_sample_training_flops = static_cast<double>(cost::training_flops(m, m.input, 1));
  p.batch_per_gpu = 10;
  p.sustained_flops_per_gpu = 0.8e12;
  p.mixed_precision_speedup = precision_speedup(18.71, 19.46);
  return p;
}

inline ModelProfile medium_profile() {
  ModelProfile p;
  p.name = "medium";
  p.params = 101.6e6;
  p.per_sample_training_flops = 4.15e12;
  p.batch_per_gpu = 4;
  p.sustained_flops_per_gpu = 9.21e12;
  p.mixed_precision_speedup = precision_speedup(364.06, 205.38);
  return p;
}

inline ModelProfile large_profile() {
  ModelProfile p;
  p.name = "large";
  p.params = 374.2e6;
  p.per_sample_training_flops = 16.2e12;
  p.batch_per_gpu = 1;
  // 379.2 Tflops aggregate at 128 GPUs with a 13.45x speedup over 4 GPUs
  p.sustained_flops_per_gpu = 379.2e12 / 13.45 / 4.0;
  p.mixed_precision_speedup = precision_speedup(2497.2, 1867.9);
  return p;
}

/// FP32 runs use a speedup of 1 regardless of the profile's calibration.
inline ModelProfile fp32(ModelProfile p) {
  p.mixed_precision_speedup = 1.0;
  return p;
}

inline std::vector<ModelProfile> reference_profiles() {
  return {fp32(small_profile()), fp32(medium_profile()), fp32(large_profile())};
}

inline std::vector<double> default_fractions() {
  return {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
}

inline std::vector<std::uint32_t> default_node_list() { return {1, 2, 4, 8, 16, 32}; }

}  // namespace aiscale::sim
