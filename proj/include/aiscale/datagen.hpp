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

// Synthetic cosmology dataset pipeline.
//
// A coordinator hands out simulation indices; workers run a toy particle
// simulation per index, bin the particles into a normalized density grid,
// cut it into 8 octants and write each octant as an SVOX sample. Every output
// byte is a pure function of (sims, config, master seed): labels and
// simulation seeds are derived from the task index, never from scheduling.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aiscale/error.hpp"
#include "aiscale/rng.hpp"
#include "aiscale/stats.hpp"
#include "aiscale/svox.hpp"

namespace aiscale::datagen {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  bool operator==(const Range&) const = default;
};

struct LabelRanges {
  Range omega_m{0.25, 0.35};
  Range sigma8{0.78, 0.95};
  Range n_s{0.9, 1.0};

  void validate() const {
    for (const Range* r : {&omega_m, &sigma8, &n_s}) {
      if (!std::isfinite(r->lo) || !std::isfinite(r->hi) || r->lo > r->hi) {
        fail(ErrorKind::BadRange, "label range needs finite lo <= hi");
      }
    }
  }
  bool operator==(const LabelRanges&) const = default;
};

enum : std::uint64_t { kLabelStream = 1, kSimStream = 2 };

/// Label of simulation `index`; depends only on (ranges, master_seed, index).
inline CosmoLabel label_for(const LabelRanges& ranges, std::uint64_t master_seed,
                            std::uint64_t index) {
  SplitMix64 rng(derive_seed(master_seed, kLabelStream, index));
  CosmoLabel l;
  l.omega_m = rng.uniform(ranges.omega_m.lo, ranges.omega_m.hi);
  l.sigma8 = rng.uniform(ranges.sigma8.lo, ranges.sigma8.hi);
  l.n_s = rng.uniform(ranges.n_s.lo, ranges.n_s.hi);
  return l;
}

inline std::vector<CosmoLabel> sample_labels(const LabelRanges& ranges, std::size_t count,
                                             std::uint64_t master_seed) {
  ranges.validate();
  std::vector<CosmoLabel> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(label_for(ranges, master_seed, i));
  return out;
}

inline std::uint64_t sim_seed_for(std::uint64_t master_seed, std::uint64_t index) {
  return derive_seed(master_seed, kSimStream, index);
}

struct SimConfig {
  double box_side = 512.0;
  std::uint32_t grid_d = 256;
  std::uint32_t particles_per_side = 64;
  std::uint32_t mode_count = 1024;
  // Overall displacement amplitude: the modes' rms displacement is about
  // displacement_scale * box / (2 pi sqrt(modes)) times sigma8 * growth.
  double displacement_scale = 0.2;
  int max_wavenumber = 8;

  double voxel_resolution() const { return box_side / static_cast<double>(grid_d); }

  void validate() const {
    if (!(box_side > 0)) fail(ErrorKind::InvalidConfig, "box_side must be positive");
    if (grid_d == 0 || grid_d % 2 != 0) fail(ErrorKind::InvalidConfig, "grid_d must be even");
    if (particles_per_side < 2) fail(ErrorKind::InvalidConfig, "particles_per_side must be >= 2");
    if (max_wavenumber < 1) fail(ErrorKind::InvalidConfig, "max_wavenumber must be >= 1");
  }

  /// CI-sized geometry: 64^3 grid, 32^3 sub-volumes.
  static SimConfig desk_scale() {
    SimConfig c;
    c.grid_d = 64;
    return c;
  }

  bool operator==(const SimConfig&) const = default;
};

inline double growth(double omega_m) { return std::pow(omega_m, 0.55); }

struct Particles {
  std::vector<std::array<double, 3>> positions;  // x, y, z in [0, box_side)
};

inline double wrap_periodic(double x, double box) {
  double r = std::fmod(x, box);
  if (r < 0) r += box;
  if (r >= box) r = 0.0;
  return r;
}

/// Particles start on a uniform lattice and are displaced along the
/// wavevectors of `mode_count` random sinusoidal modes.
inline Particles run_toy_simulation(const CosmoLabel& label, const SimConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  struct Mode {
    std::array<double, 3> k;    // physical wavevector
    std::array<double, 3> dir;  // unit vector along k
    double amplitude;
    double phase;
  };
  SplitMix64 rng(seed);
  const auto span = static_cast<std::uint64_t>(2 * config.max_wavenumber + 1);
  const double base = config.displacement_scale * config.box_side /
                      (two_pi * std::sqrt(static_cast<double>(std::max(config.mode_count, 1u))));
  std::vector<Mode> modes;
  std::vector<double> kns;
  for (std::uint32_t m = 0; m < config.mode_count; ++m) {
    std::array<int, 3> n{};
    do {
      for (int& c : n) c = static_cast<int>(rng.below(span)) - config.max_wavenumber;
    } while (n[0] == 0 && n[1] == 0 && n[2] == 0);
    const double kn = std::sqrt(double(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]));
    Mode mode{};
    for (int c = 0; c < 3; ++c) {
      mode.k[c] = two_pi * n[c] / config.box_side;
      mode.dir[c] = n[c] / kn;
    }
    mode.phase = two_pi * rng.uniform();
    modes.push_back(mode);
    kns.push_back(kn);
  }
  // The draw of wavevectors is divided out through its rms 1/k, which is
  // label independent, so realizations share a common displacement scale.
  double rms = 0.0;
  for (double kn : kns) rms += 1.0 / (kn * kn);
  rms = kns.empty() ? 1.0 : std::sqrt(rms / static_cast<double>(kns.size()));
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double kn = kns[m];
    modes[m].amplitude =
        base * label.sigma8 * std::pow(kn, label.n_s - 1.0) / kn / rms * growth(label.omega_m);
  }

  const std::uint32_t p = config.particles_per_side;
  const double spacing = config.box_side / p;
  Particles out;
  out.positions.resize(static_cast<std::size_t>(p) * p * p);
  std::vector<double> q(p);
  for (std::uint32_t i = 0; i < p; ++i) q[i] = (i + 0.5) * spacing;
  std::size_t idx = 0;
  for (std::uint32_t iz = 0; iz < p; ++iz)
    for (std::uint32_t iy = 0; iy < p; ++iy)
      for (std::uint32_t ix = 0; ix < p; ++ix) out.positions[idx++] = {q[ix], q[iy], q[iz]};

  // sin(k.q + phase) = Im(e^{i kx qx} e^{i ky qy} e^{i (kz qz + phase)})
  using cplx = std::complex<double>;
  std::vector<cplx> ex(p), ey(p), ez(p);
  for (const Mode& mode : modes) {
    for (std::uint32_t i = 0; i < p; ++i) {
      ex[i] = std::polar(1.0, mode.k[0] * q[i]);
      ey[i] = std::polar(1.0, mode.k[1] * q[i]);
      ez[i] = std::polar(1.0, mode.k[2] * q[i] + mode.phase);
    }
    idx = 0;
    for (std::uint32_t iz = 0; iz < p; ++iz) {
      for (std::uint32_t iy = 0; iy < p; ++iy) {
        const cplx yz = ey[iy] * ez[iz];
        for (std::uint32_t ix = 0; ix < p; ++ix) {
          const double s = mode.amplitude * (ex[ix].real() * yz.imag() + ex[ix].imag() * yz.real());
          auto& x = out.positions[idx++];
          x[0] += s * mode.dir[0];
          x[1] += s * mode.dir[1];
          x[2] += s * mode.dir[2];
        }
      }
    }
  }
  for (auto& x : out.positions) {
    for (double& c : x) c = wrap_periodic(c, config.box_side);
  }
  return out;
}

/// Histogram of particle counts per voxel, divided by the mean count.
inline DensityGrid voxelize(const Particles& particles, const SimConfig& config) {
  config.validate();
  const std::uint32_t d = config.grid_d;
  const double res = config.voxel_resolution();
  DensityGrid g;
  g.d = d;
  g.values.assign(static_cast<std::size_t>(d) * d * d, 0.0);
  auto cell = [&](double x) {
    if (!(x >= 0.0 && x < config.box_side)) fail(ErrorKind::BadRange, "particle outside box");
    return std::min<std::uint32_t>(d - 1, static_cast<std::uint32_t>(x / res));
  };
  for (const auto& pos : particles.positions) {
    g.at(cell(pos[0]), cell(pos[1]), cell(pos[2])) += 1.0;
  }
  if (!particles.positions.empty()) {
    const double scale = static_cast<double>(g.values.size()) /
                         static_cast<double>(particles.positions.size());
    for (double& v : g.values) v *= scale;
  }
  return g;
}

/// Octants ordered z-major, then y, then x: index = (oz * 2 + oy) * 2 + ox.
inline std::array<DensityGrid, 8> split_subvolumes(const DensityGrid& grid) {
  if (grid.d == 0 || grid.d % 2 != 0) {
    fail(ErrorKind::OddExtent, "cannot split grid of side " + std::to_string(grid.d));
  }
  const std::uint32_t h = grid.d / 2;
  std::array<DensityGrid, 8> out;
  for (std::uint32_t o = 0; o < 8; ++o) {
    const std::uint32_t ox = o & 1, oy = (o >> 1) & 1, oz = (o >> 2) & 1;
    DensityGrid& sub = out[o];
    sub.d = h;
    sub.values.resize(static_cast<std::size_t>(h) * h * h);
    for (std::uint32_t z = 0; z < h; ++z)
      for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < h; ++x)
          sub.at(x, y, z) = grid.at(ox * h + x, oy * h + y, oz * h + z);
  }
  return out;
}

inline DensityGrid reassemble(const std::array<DensityGrid, 8>& octants) {
  const std::uint32_t h = octants[0].d;
  DensityGrid g;
  g.d = 2 * h;
  g.values.resize(static_cast<std::size_t>(g.d) * g.d * g.d);
  for (std::uint32_t o = 0; o < 8; ++o) {
    if (octants[o].d != h) fail(ErrorKind::ShapeMismatch, "octant sizes differ");
    const std::uint32_t ox = o & 1, oy = (o >> 1) & 1, oz = (o >> 2) & 1;
    for (std::uint32_t z = 0; z < h; ++z)
      for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < h; ++x)
          g.at(ox * h + x, oy * h + y, oz * h + z) = octants[o].at(x, y, z);
  }
  return g;
}

inline double density_variance(const DensityGrid& g) { return stats::variance(g.values); }

/// Rescales to mean 1. An all-zero grid is left unchanged.
inline void normalize(DensityGrid& g) {
  const double m = stats::mean(g.values);
  if (m > 0.0) {
    for (double& v : g.values) v /= m;
  }
}

/// The 8 labeled sub-volumes of one simulation, each renormalized to mean 1
/// before storage.
inline std::array<CosmoSample, 8> simulate_samples(const CosmoLabel& label, const SimConfig& config,
                                                   std::uint64_t seed) {
  auto grid = voxelize(run_toy_simulation(label, config, seed), config);
  auto octants = split_subvolumes(grid);
  std::array<CosmoSample, 8> out;
  for (std::size_t o = 0; o < 8; ++o) {
    normalize(octants[o]);
    out[o] = CosmoSample{label, std::move(octants[o])};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset arithmetic

struct DatasetSize {
  std::uint64_t sims = 0;
  std::uint64_t samples = 0;
  std::uint64_t subvolume_d = 0;
  std::uint64_t payload_bytes = 0;  // per sample
  std::uint64_t file_bytes = 0;     // per sample, header and checksum included
  std::uint64_t total_bytes = 0;
};

inline DatasetSize dataset_size(std::uint64_t sims, std::uint64_t grid_d) {
  if (grid_d % 2 != 0) fail(ErrorKind::OddExtent, "grid side must be even");
  DatasetSize s;
  s.sims = sims;
  s.samples = 8 * sims;
  s.subvolume_d = grid_d / 2;
  s.payload_bytes = 8 * s.subvolume_d * s.subvolume_d * s.subvolume_d;
  s.file_bytes = svox_file_bytes(s.subvolume_d);
  s.total_bytes = s.samples * s.file_bytes;
  return s;
}

// ---------------------------------------------------------------------------
// Manifest

struct SampleRecord {
  std::string path;  // relative to the manifest directory
  CosmoLabel label;
  std::uint64_t sim_index = 0;
  std::uint32_t subvolume_index = 0;
  std::uint64_t checksum = 0;

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  std::uint64_t sims_count = 0;
  std::uint64_t sample_count = 0;
  std::uint32_t grid_d = 0;
  std::uint32_t subvolume_d = 0;
  double box_side = 0.0;
  std::uint32_t particles_per_side = 0;
  std::uint32_t mode_count = 0;
  double displacement_scale = 0.0;
  int max_wavenumber = 0;
  LabelRanges ranges;
  std::uint64_t master_seed = 0;
  std::vector<SampleRecord> records;

  std::uint64_t total_bytes() const {
    return sample_count * svox_file_bytes(subvolume_d);
  }

  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr const char* kManifestName = "manifest.txt";

inline std::string sample_file_name(std::uint64_t sim, std::uint32_t octant) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "sample_%06llu_%u.svox", static_cast<unsigned long long>(sim),
                octant);
  return buf;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_range(const Range& r) { return fmt_double(r.lo) + "," + fmt_double(r.hi); }

inline Range parse_range(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) fail(ErrorKind::ParseError, "range '" + s + "'");
  return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

}  // namespace detail

/// Header block of key=value lines, then "records" followed by one line per
/// sample: <path> <omega_m> <sigma8> <n_s> <sim_index> <subvolume_index> <fnv1a hex>.
inline std::string manifest_to_text(const DatasetManifest& m) {
  std::ostringstream os;
  os << "format=aiscale-manifest 1\n";
  os << "sims=" << m.sims_count << "\n";
  os << "samples=" << m.sample_count << "\n";
  os << "grid_d=" << m.grid_d << "\n";
  os << "subvolume_d=" << m.subvolume_d << "\n";
  os << "box_side=" << detail::fmt_double(m.box_side) << "\n";
  os << "particles_per_side=" << m.particles_per_side << "\n";
  os << "mode_count=" << m.mode_count << "\n";
  os << "displacement_scale=" << detail::fmt_double(m.displacement_scale) << "\n";
  os << "max_wavenumber=" << m.max_wavenumber << "\n";
  os << "master_seed=" << m.master_seed << "\n";
  os << "omega_m_range=" << detail::fmt_range(m.ranges.omega_m) << "\n";
  os << "sigma8_range=" << detail::fmt_range(m.ranges.sigma8) << "\n";
  os << "n_s_range=" << detail::fmt_range(m.ranges.n_s) << "\n";
  os << "records\n";
  for (const auto& r : m.records) {
    char sum[20];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(r.checksum));
    os << r.path << ' ' << detail::fmt_double(r.label.omega_m) << ' '
       << detail::fmt_double(r.label.sigma8) << ' ' << detail::fmt_double(r.label.n_s) << ' '
       << r.sim_index << ' ' << r.subvolume_index << ' ' << sum << "\n";
  }
  return os.str();
}

inline DatasetManifest parse_manifest(const std::string& text) {
  DatasetManifest m;
  std::istringstream is(text);
  std::string line;
  bool in_records = false, saw_format = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (in_records) {
      std::istringstream ls(line);
      SampleRecord r;
      std::string sum;
      if (!(ls >> r.path >> r.label.omega_m >> r.label.sigma8 >> r.label.n_s >> r.sim_index >>
            r.subvolume_index >> sum)) {
        fail(ErrorKind::ParseError, "bad manifest record '" + line + "'");
      }
      r.checksum = std::stoull(sum, nullptr, 16);
      m.records.push_back(std::move(r));
      continue;
    }
    if (line == "records") {
      in_records = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ParseError, "bad manifest line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "format") {
      if (value != "aiscale-manifest 1") fail(ErrorKind::VersionUnsupported, "manifest " + value);
      saw_format = true;
    } else if (key == "sims") {
      m.sims_count = std::stoull(value);
    } else if (key == "samples") {
      m.sample_count = std::stoull(value);
    } else if (key == "grid_d") {
      m.grid_d = static_cast<std::uint32_t>(std::stoul(value));
    } else if (key == "subvolume_d") {
      m.subvolume_d = static_cast<std::uint32_t>(std::stoul(value));
    } else if (key == "box_side") {
      m.box_side = std::stod(value);
    } else if (key == "particles_per_side") {
      m.particles_per_side = static_cast<std::uint32_t>(std::stoul(value));
    } else if (key == "mode_count") {
      m.mode_count = static_cast<std::uint32_t>(std::stoul(value));
    } else if (key == "displacement_scale") {
      m.displacement_scale = std::stod(value);
    } else if (key == "max_wavenumber") {
      m.max_wavenumber = std::stoi(value);
    } else if (key == "master_seed") {
      m.master_seed = std::stoull(value);
    } else if (key == "omega_m_range") {
      m.ranges.omega_m = detail::parse_range(value);
    } else if (key == "sigma8_range") {
      m.ranges.sigma8 = detail::parse_range(value);
    } else if (key == "n_s_range") {
      m.ranges.n_s = detail::parse_range(value);
    } else {
      fail(ErrorKind::ParseError, "unknown manifest key '" + key + "'");
    }
  }
  if (!saw_format) fail(ErrorKind::ParseError, "missing manifest format line");
  return m;
}

inline DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

/// Writes to a temporary file then renames it into place.
inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& dir) {
  const auto final_path = dir / kManifestName;
  const auto tmp_path = dir / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp_path.string());
    out << manifest_to_text(m);
    if (!out) fail(ErrorKind::Io, "write failed for " + tmp_path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) fail(ErrorKind::Io, "rename failed: " + ec.message());
}

/// Checks the 8x relation and re-hashes every sample file.
inline void verify_dataset(const DatasetManifest& m, const std::filesystem::path& dir) {
  if (m.sample_count != 8 * m.sims_count || m.records.size() != m.sample_count) {
    fail(ErrorKind::InvalidConfig, "manifest violates samples = 8 x sims");
  }
  for (const auto& r : m.records) {
    auto bytes = read_file_bytes((dir / r.path).string());
    (void)decode_sample(bytes);
    if (stored_checksum(bytes) != r.checksum) {
      fail(ErrorKind::ChecksumMismatch, "manifest checksum differs for " + r.path);
    }
  }
}

// ---------------------------------------------------------------------------
// Coordinator / workers

struct DatasetOptions {
  std::uint64_t sims = 1;
  unsigned workers = 1;
  std::filesystem::path out_dir;
  std::uint64_t master_seed = 0;
  SimConfig config = SimConfig::desk_scale();
  LabelRanges ranges;
  int max_attempts = 3;
  // Test hook, called before each attempt; throwing simulates a worker fault.
  std::function<void(std::uint64_t task, int attempt)> fault_injector;
};

inline std::array<SampleRecord, 8> run_task(const DatasetOptions& opt, std::uint64_t index) {
  const CosmoLabel label = label_for(opt.ranges, opt.master_seed, index);
  auto samples = simulate_samples(label, opt.config, sim_seed_for(opt.master_seed, index));
  std::array<SampleRecord, 8> recs;
  for (std::uint32_t o = 0; o < 8; ++o) {
    const std::string name = sample_file_name(index, o);
    recs[o] = SampleRecord{name, label, index, o, write_sample(samples[o], (opt.out_dir / name).string())};
  }
  return recs;
}

/// Runs `sims` simulations on `workers` threads. Workers claim task indices
/// from a shared counter; a failed task is queued for retry, preferably by a
/// different worker, up to `max_attempts` attempts. The manifest is written
/// last, after every task has completed.
inline DatasetManifest generate_dataset(const DatasetOptions& opt) {
  if (opt.sims < 1) fail(ErrorKind::InvalidConfig, "sims must be >= 1");
  if (opt.workers < 1) fail(ErrorKind::InvalidConfig, "workers must be >= 1");
  opt.ranges.validate();
  opt.config.validate();
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + opt.out_dir.string() + ": " + ec.message());

  struct Retry {
    std::uint64_t task;
    int attempt;
    unsigned failed_on;
  };
  std::vector<std::array<SampleRecord, 8>> results(opt.sims);
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint64_t> finished{0};
  std::atomic<bool> aborted{false};
  std::mutex mu;
  std::deque<Retry> retries;
  std::string failure;

  auto worker = [&](unsigned me) {
    while (!aborted.load()) {
      std::uint64_t task = 0;
      int attempt = 1;
      const std::uint64_t claimed = next.fetch_add(1);
      if (claimed < opt.sims) {
        task = claimed;
      } else {
        std::unique_lock lock(mu);
        if (retries.empty()) {
          lock.unlock();
          if (finished.load() >= opt.sims) return;
          std::this_thread::sleep_for(std::chrono::milliseconds(1));
          continue;
        }
        // prefer a task this worker did not fail; take any if none is left
        auto it = std::find_if(retries.begin(), retries.end(),
                               [&](const Retry& r) { return r.failed_on != me; });
        if (it == retries.end()) it = retries.begin();
        task = it->task;
        attempt = it->attempt;
        retries.erase(it);
      }
      try {
        if (opt.fault_injector) opt.fault_injector(task, attempt);
        results[task] = run_task(opt, task);
        finished.fetch_add(1);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (attempt >= opt.max_attempts) {
          failure = "task " + std::to_string(task) + " failed " + std::to_string(attempt) +
                    " times: " + e.what();
          aborted = true;
        } else {
          retries.push_back({task, attempt + 1, me});
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < opt.workers; ++w) pool.emplace_back(worker, w);
  }
  if (aborted) fail(ErrorKind::WorkerFailure, failure);

  DatasetManifest m;
  m.sims_count = opt.sims;
  m.sample_count = 8 * opt.sims;
  m.grid_d = opt.config.grid_d;
  m.subvolume_d = opt.config.grid_d / 2;
  m.box_side = opt.config.box_side;
  m.particles_per_side = opt.config.particles_per_side;
  m.mode_count = opt.config.mode_count;
  m.displacement_scale = opt.config.displacement_scale;
  m.max_wavenumber = opt.config.max_wavenumber;
  m.ranges = opt.ranges;
  m.master_seed = opt.master_seed;
  for (const auto& recs : results) m.records.insert(m.records.end(), recs.begin(), recs.end());
  write_manifest(m, opt.out_dir);
  return m;
}

}  // namespace aiscale::datagen
