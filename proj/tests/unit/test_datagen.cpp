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

#include "aiscale/datagen.hpp"

#include <atomic>
#include <cmath>
#include <numeric>

#include "test_util.hpp"

using namespace aiscale;
using namespace aiscale::datagen;

namespace {

SimConfig tiny_config() {
  SimConfig c = SimConfig::desk_scale();
  c.grid_d = 16;
  c.particles_per_side = 16;
  c.mode_count = 64;
  return c;
}

double sum(const DensityGrid& g) { return std::accumulate(g.values.begin(), g.values.end(), 0.0); }

}  // namespace

TEST(Labels, PointRangesGiveIdenticalLabels) {
  LabelRanges r;
  r.omega_m = {0.3, 0.3};
  r.sigma8 = {0.8, 0.8};
  r.n_s = {0.96, 0.96};
  for (const auto& l : sample_labels(r, 20, 5)) EXPECT_EQ(l, (CosmoLabel{0.3, 0.8, 0.96}));
}

TEST(Labels, MeansNearMidpoints) {
  const auto labels = sample_labels({}, 10000, 1);
  double om = 0, s8 = 0, ns = 0;
  for (const auto& l : labels) {
    om += l.omega_m;
    s8 += l.sigma8;
    ns += l.n_s;
  }
  EXPECT_NEAR(om / 1e4, 0.30, 0.02 * 0.30);
  EXPECT_NEAR(s8 / 1e4, 0.865, 0.02 * 0.865);
  EXPECT_NEAR(ns / 1e4, 0.95, 0.02 * 0.95);
}

TEST(Labels, InsideRanges) {
  for (const auto& l : sample_labels({}, 2000, 9)) {
    EXPECT_GE(l.omega_m, 0.25);
    EXPECT_LT(l.omega_m, 0.35);
    EXPECT_GE(l.sigma8, 0.78);
    EXPECT_LT(l.sigma8, 0.95);
    EXPECT_GE(l.n_s, 0.9);
    EXPECT_LT(l.n_s, 1.0);
  }
}

TEST(Labels, DependOnlyOnSeedAndIndex) {
  const auto batch = sample_labels({}, 50, 77);
  for (std::uint64_t i = 0; i < 50; ++i) EXPECT_EQ(label_for({}, 77, i), batch[i]);
  EXPECT_NE(label_for({}, 77, 3), label_for({}, 78, 3));
}

TEST(Labels, BadRange) {
  LabelRanges r;
  r.sigma8 = {0.9, 0.8};
  EXPECT_ERROR_KIND(sample_labels(r, 1, 0), ErrorKind::BadRange);
}

TEST(Simulation, ZeroAmplitudeStaysOnLattice) {
  const SimConfig c = tiny_config();
  CosmoLabel l;
  l.sigma8 = 0;
  const auto p = run_toy_simulation(l, c, 3);
  const double spacing = c.box_side / c.particles_per_side;
  std::size_t i = 0;
  for (std::uint32_t z = 0; z < c.particles_per_side; ++z)
    for (std::uint32_t y = 0; y < c.particles_per_side; ++y)
      for (std::uint32_t x = 0; x < c.particles_per_side; ++x, ++i) {
        EXPECT_EQ(p.positions[i][0], (x + 0.5) * spacing);
        EXPECT_EQ(p.positions[i][1], (y + 0.5) * spacing);
        EXPECT_EQ(p.positions[i][2], (z + 0.5) * spacing);
      }
}

TEST(Simulation, BitIdentical) {
  const SimConfig c = tiny_config();
  const CosmoLabel l{0.28, 0.9, 0.93};
  EXPECT_EQ(run_toy_simulation(l, c, 11).positions, run_toy_simulation(l, c, 11).positions);
}

TEST(Simulation, PositionsInsideBox) {
  const SimConfig c = tiny_config();
  for (const auto& x : run_toy_simulation({0.35, 0.95, 1.0}, c, 2).positions) {
    for (double v : x) {
      EXPECT_GE(v, 0.0);
      EXPECT_LT(v, c.box_side);
    }
  }
}

TEST(Simulation, VarianceIncreasesWithSigma8) {
  const SimConfig c = SimConfig::desk_scale();
  double prev = -1;
  for (double s8 : {0.78, 0.865, 0.95}) {
    const double v = density_variance(voxelize(run_toy_simulation({0.3, s8, 0.95}, c, 21), c));
    EXPECT_GT(v, prev) << s8;
    prev = v;
  }
}

TEST(Simulation, WrapPeriodic) {
  EXPECT_DOUBLE_EQ(wrap_periodic(-1, 10), 9);
  EXPECT_DOUBLE_EQ(wrap_periodic(10, 10), 0);
  EXPECT_DOUBLE_EQ(wrap_periodic(23.5, 10), 3.5);
  EXPECT_LT(wrap_periodic(-1e-18, 10), 10.0);
}

TEST(Voxelize, UniformLatticeIsAllOnes) {
  SimConfig c = tiny_config();
  c.particles_per_side = 32;  // 8 particles per voxel
  CosmoLabel flat;
  flat.sigma8 = 0;
  const auto g = voxelize(run_toy_simulation(flat, c, 0), c);
  for (double v : g.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Voxelize, SingleVoxel) {
  const SimConfig c = tiny_config();
  Particles p;
  p.positions.assign(100, {1.0, 1.0, 1.0});
  const auto g = voxelize(p, c);
  EXPECT_DOUBLE_EQ(g.at(0, 0, 0), 16.0 * 16 * 16);
  EXPECT_DOUBLE_EQ(sum(g), 16.0 * 16 * 16);
}

TEST(Voxelize, MeanIsOne) {
  const SimConfig c = tiny_config();
  const auto g = voxelize(run_toy_simulation({0.3, 0.9, 0.95}, c, 4), c);
  EXPECT_NEAR(sum(g) / static_cast<double>(g.values.size()), 1.0, 1e-12);
  for (double v : g.values) EXPECT_GE(v, 0.0);
}

TEST(Voxelize, OutsideBox) {
  Particles p;
  p.positions = {{600.0, 1.0, 1.0}};
  EXPECT_ERROR_KIND(voxelize(p, tiny_config()), ErrorKind::BadRange);
}

TEST(Config, FullGeometry) {
  const SimConfig c;
  EXPECT_EQ(c.grid_d, 256u);
  EXPECT_DOUBLE_EQ(c.voxel_resolution(), 2.0);
  SimConfig odd;
  odd.grid_d = 63;
  EXPECT_ERROR_KIND(odd.validate(), ErrorKind::InvalidConfig);
}

TEST(Split, OctantsAndReassembly) {
  const SimConfig c = tiny_config();
  const auto g = voxelize(run_toy_simulation({0.3, 0.9, 0.95}, c, 8), c);
  const auto oct = split_subvolumes(g);
  double total = 0;
  for (const auto& o : oct) {
    EXPECT_EQ(o.d, 8u);
    total += sum(o);
  }
  EXPECT_NEAR(total, sum(g), 1e-9);
  EXPECT_EQ(reassemble(oct), g);
}

TEST(Split, OrderIsZMajor) {
  DensityGrid g;
  g.d = 2;
  g.values = {0, 1, 2, 3, 4, 5, 6, 7};
  const auto oct = split_subvolumes(g);
  for (std::uint32_t o = 0; o < 8; ++o) EXPECT_EQ(oct[o].values[0], o);
}

TEST(Split, FullSizeOctants) {
  DensityGrid g;
  g.d = 256;
  g.values.assign(256u * 256u * 256u, 1.0);
  for (const auto& o : split_subvolumes(g)) EXPECT_EQ(o.values.size(), 128u * 128u * 128u);
}

TEST(Split, OddExtent) {
  DensityGrid g;
  g.d = 3;
  g.values.assign(27, 1.0);
  EXPECT_ERROR_KIND(split_subvolumes(g), ErrorKind::OddExtent);
}

TEST(Samples, StoredGridsHaveMeanOne) {
  const auto samples = simulate_samples({0.3, 0.9, 0.95}, tiny_config(), 2);
  for (const auto& s : samples) {
    EXPECT_NEAR(sum(s.grid) / static_cast<double>(s.grid.values.size()), 1.0, 1e-6);
    EXPECT_EQ(s.label, (CosmoLabel{0.3, 0.9, 0.95}));
  }
}

TEST(DatasetArithmetic, EightTimesSims) {
  EXPECT_EQ(dataset_size(4, 64).samples, 32u);
  const auto full = dataset_size(12632, 256);
  EXPECT_EQ(full.samples, 8u * 12632u);
  EXPECT_EQ(full.subvolume_d, 128u);
  EXPECT_EQ(full.payload_bytes, 16777216u);
  EXPECT_NEAR(static_cast<double>(full.total_bytes), 1.70e12, 0.01e12);
  EXPECT_ERROR_KIND(dataset_size(1, 5), ErrorKind::OddExtent);
}

TEST(Manifest, TextRoundTrip) {
  DatasetManifest m;
  m.sims_count = 1;
  m.sample_count = 8;
  m.grid_d = 16;
  m.subvolume_d = 8;
  m.box_side = 512;
  m.particles_per_side = 16;
  m.mode_count = 64;
  m.displacement_scale = 0.2;
  m.max_wavenumber = 8;
  m.master_seed = 42;
  for (std::uint32_t o = 0; o < 8; ++o) {
    m.records.push_back({sample_file_name(0, o), {0.1 + o, 1.0 / 3.0, 0.9}, 0, o, 0xdeadbeef00ULL + o});
  }
  EXPECT_EQ(parse_manifest(manifest_to_text(m)), m);
  EXPECT_EQ(m.records[3].path, "sample_000000_3.svox");
  EXPECT_EQ(m.total_bytes(), 8u * svox_file_bytes(8));
  EXPECT_ERROR_KIND(parse_manifest("sims=1\n"), ErrorKind::ParseError);
  EXPECT_ERROR_KIND(parse_manifest("format=aiscale-manifest 9\n"), ErrorKind::VersionUnsupported);
}

TEST(Pipeline, SmallRun) {
  DatasetOptions opt;
  opt.sims = 4;
  opt.workers = 2;
  opt.master_seed = 3;
  opt.config = tiny_config();
  opt.out_dir = fresh_dir("ds");
  const auto m = generate_dataset(opt);
  EXPECT_EQ(m.sample_count, 32u);
  EXPECT_EQ(m.records.size(), 32u);
  EXPECT_TRUE(std::filesystem::exists(opt.out_dir / kManifestName));
  EXPECT_FALSE(std::filesystem::exists(opt.out_dir / (std::string(kManifestName) + ".tmp")));
  EXPECT_EQ(read_manifest((opt.out_dir / kManifestName).string()), m);
  verify_dataset(m, opt.out_dir);
  for (const auto& r : m.records) {
    EXPECT_EQ(r.label, label_for(opt.ranges, 3, r.sim_index));
    const auto s = read_sample((opt.out_dir / r.path).string());
    EXPECT_EQ(s.grid.d, 8u);
  }
}

TEST(Pipeline, WorkerCountDoesNotChangeOutput) {
  DatasetOptions opt;
  opt.sims = 6;
  opt.master_seed = 12;
  opt.config = tiny_config();
  const auto dir1 = fresh_dir("w1"), dir5 = fresh_dir("w5");
  opt.workers = 1;
  opt.out_dir = dir1;
  const auto a = generate_dataset(opt);
  opt.workers = 5;
  opt.out_dir = dir5;
  const auto b = generate_dataset(opt);
  EXPECT_EQ(a, b);
  EXPECT_EQ(read_file_bytes((dir1 / kManifestName).string()), read_file_bytes((dir5 / kManifestName).string()));
  for (const auto& r : a.records) {
    EXPECT_EQ(read_file_bytes((dir1 / r.path).string()), read_file_bytes((dir5 / r.path).string())) << r.path;
  }
}

TEST(Pipeline, FailedTasksAreRetried) {
  DatasetOptions opt;
  opt.sims = 5;
  opt.workers = 3;
  opt.master_seed = 8;
  opt.config = tiny_config();
  opt.out_dir = fresh_dir("retry");
  std::atomic<int> injected{0};
  opt.fault_injector = [&](std::uint64_t task, int attempt) {
    if (task % 2 == 0 && attempt == 1) {
      ++injected;
      throw std::runtime_error("injected");
    }
  };
  const auto m = generate_dataset(opt);
  EXPECT_EQ(injected.load(), 3);
  verify_dataset(m, opt.out_dir);

  DatasetOptions clean = opt;
  clean.fault_injector = nullptr;
  clean.out_dir = fresh_dir("clean");
  EXPECT_EQ(generate_dataset(clean), m);
}

TEST(Pipeline, PersistentFailure) {
  DatasetOptions opt;
  opt.sims = 2;
  opt.workers = 2;
  opt.config = tiny_config();
  opt.out_dir = fresh_dir("fail");
  opt.fault_injector = [](std::uint64_t task, int) {
    if (task == 1) throw std::runtime_error("always");
  };
  EXPECT_ERROR_KIND(generate_dataset(opt), ErrorKind::WorkerFailure);
  EXPECT_FALSE(std::filesystem::exists(opt.out_dir / kManifestName));
}

TEST(Pipeline, VerifyDetectsTampering) {
  DatasetOptions opt;
  opt.sims = 1;
  opt.config = tiny_config();
  opt.out_dir = fresh_dir("tamper");
  auto m = generate_dataset(opt);
  m.records[2].checksum ^= 1;
  EXPECT_ERROR_KIND(verify_dataset(m, opt.out_dir), ErrorKind::ChecksumMismatch);
  m.sample_count = 9;
  EXPECT_ERROR_KIND(verify_dataset(m, opt.out_dir), ErrorKind::InvalidConfig);
}

TEST(Pipeline, InvalidOptions) {
  DatasetOptions opt;
  opt.sims = 0;
  EXPECT_ERROR_KIND(generate_dataset(opt), ErrorKind::InvalidConfig);
}
