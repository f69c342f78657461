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

// Metrics summary and record serialization.
//
// Human-readable numbers use 4 significant digits. CSV numbers use 17 so
// that parsing an emitted file gives back the exact doubles.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aiscale/cost_model.hpp"
#include "aiscale/datagen.hpp"
#include "aiscale/error.hpp"
#include "aiscale/scaling_sim.hpp"

namespace aiscale::report {

// ---------------------------------------------------------------------------
// Number formatting

inline std::string sig4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Unit {
  double scale;
  const char* name;
};

/// Tflops at or above 1e12, Gflops below.
inline Unit flops_unit(double v) { return v >= 1e12 ? Unit{1e12, "Tflops"} : Unit{1e9, "Gflops"}; }

inline std::string format_flops(double v) {
  const Unit u = flops_unit(v);
  return sig4(v / u.scale) + " " + u.name;
}

/// FLOP counts (not rates).
inline Unit count_unit(double v) { return v >= 1e12 ? Unit{1e12, "TFLOPs"} : Unit{1e9, "GFLOPs"}; }

inline Unit bytes_unit(double v) {
  if (v >= 1e12) return {1e12, "TB"};
  if (v >= 1e9) return {1e9, "GB"};
  if (v >= 1e6) return {1e6, "MB"};
  if (v >= 1e3) return {1e3, "KB"};
  return {1, "B"};
}

inline std::string format_bytes(double v) {
  const Unit u = bytes_unit(v);
  return sig4(v / u.scale) + " " + u.name;
}

inline std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

struct Range {
  double min = 0;
  double max = 0;
  bool operator==(const Range&) const = default;
};

inline Range range_of(const std::vector<double>& v, const std::string& what) {
  if (v.empty()) fail(ErrorKind::EmptyInput, "no values for " + what);
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

/// Both ends in the unit of the larger one: "0.51 - 9.21 Tflops".
inline std::string unit_range(const Range& r, Unit (*unit_for)(double)) {
  const Unit u = unit_for(r.max);
  return sig4(r.min / u.scale) + " - " + sig4(r.max / u.scale) + " " + u.name;
}

/// "69.6 (5.2%) - 797.1 Tflops (59.6%)" with percent = value / peak_total.
inline std::string flops_range_with_peak(const Range& r, double peak_total) {
  const Unit u = flops_unit(r.max);
  return sig4(r.min / u.scale) + " (" + percent(r.min / peak_total) + ") - " + sig4(r.max / u.scale) +
         " " + u.name + " (" + percent(r.max / peak_total) + ")";
}

inline std::string speedup_range(const Range& r) { return sig4(r.min) + "x - " + sig4(r.max) + "x"; }

inline std::string plain_range(const Range& r) { return sig4(r.min) + " - " + sig4(r.max); }

// ---------------------------------------------------------------------------
// Summary table

struct SummaryTable {
  std::string domain = "Cosmology";
  std::string data_augment = "Parameter-sampled simulation";
  std::string model_augment = "Cell search with FLOP filter";
  std::string dnn_model = "3D CNN";
  std::string data_format = "SVOX v1 (3D density, f64)";

  Range dataset_bytes;
  Range model_flops;
  Range achieved_flops;
  double peak_total = 0;  // max GPUs x peak per GPU
  std::uint32_t peak_gpus = 0;
  Range single_gpu_flops;
  std::optional<Range> speedup;
  Range intensity;
  std::optional<Range> loss;

  std::vector<std::pair<std::string, std::string>> rows() const {
    std::vector<std::pair<std::string, std::string>> r = {
        {"Domain", domain},
        {"Data augment", data_augment},
        {"Model augment", model_augment},
        {"DNN model", dnn_model},
        {"Data format", data_format},
        {"Dataset size", unit_range(dataset_bytes, bytes_unit)},
        {"Model FLOPs", unit_range(model_flops, count_unit)},
        {"Achieved flops", flops_range_with_peak(achieved_flops, peak_total)},
        {"Single GPU flops", unit_range(single_gpu_flops, flops_unit)},
        {"Speedup", speedup ? speedup_range(*speedup) : "n/a"},
        {"Arithmetic intensity", plain_range(intensity)},
        {"Loss", loss ? plain_range(*loss) : "n/a"},
    };
    return r;
  }
};

/// Epoch-time ratio between the smallest and largest GPU count of each
/// profile's strong-scaling records.
inline std::map<std::string, double> strong_speedups(const std::vector<sim::ScalingRecord>& records) {
  std::map<std::string, std::pair<const sim::ScalingRecord*, const sim::ScalingRecord*>> ends;
  for (const auto& r : records) {
    if (r.mode != "strong") continue;
    auto& e = ends[r.profile];
    if (!e.first || r.gpus < e.first->gpus) e.first = &r;
    if (!e.second || r.gpus > e.second->gpus) e.second = &r;
  }
  std::map<std::string, double> out;
  for (const auto& [name, e] : ends) {
    if (e.first->gpus != e.second->gpus) out[name] = e.first->epoch_time_s / e.second->epoch_time_s;
  }
  return out;
}

/// Ranges are exact min/max over the inputs. The percent-of-peak
/// denominator uses the largest GPU count among the records.
inline SummaryTable summarize(const std::vector<cost::CostReport>& costs,
                              const std::optional<datagen::DatasetManifest>& manifest,
                              const std::vector<sim::ScalingRecord>& records,
                              const sim::ClusterConfig& cluster,
                              const std::vector<double>& losses = {}) {
  if (costs.empty()) fail(ErrorKind::EmptyInput, "no cost reports");
  if (records.empty()) fail(ErrorKind::EmptyInput, "no scaling records");
  SummaryTable t;
  std::vector<double> bytes, flops, intensity, aggregate, per_gpu;
  for (const auto& c : costs) {
    flops.push_back(static_cast<double>(c.training_flops));
    intensity.push_back(c.intensity);
  }
  std::uint32_t max_gpus = 0;
  for (const auto& r : records) {
    if (r.dataset_bytes > 0) bytes.push_back(r.dataset_bytes);
    aggregate.push_back(r.aggregate_flops);
    per_gpu.push_back(r.per_gpu_flops);
    max_gpus = std::max(max_gpus, r.gpus);
  }
  if (manifest) bytes.push_back(static_cast<double>(manifest->total_bytes()));
  t.dataset_bytes = range_of(bytes, "dataset size");
  t.model_flops = range_of(flops, "model FLOPs");
  t.intensity = range_of(intensity, "arithmetic intensity");
  t.achieved_flops = range_of(aggregate, "achieved flops");
  t.single_gpu_flops = range_of(per_gpu, "single GPU flops");
  t.peak_gpus = max_gpus;
  t.peak_total = static_cast<double>(max_gpus) * cluster.peak_flops_per_gpu;
  if (!(t.peak_total > 0)) fail(ErrorKind::InvalidConfig, "peak must be positive");
  const auto speedups = strong_speedups(records);
  if (!speedups.empty()) {
    std::vector<double> s;
    for (const auto& [name, v] : speedups) s.push_back(v);
    t.speedup = range_of(s, "speedup");
  }
  if (!losses.empty()) t.loss = range_of(losses, "loss");
  return t;
}

enum class Format { text, csv };

inline Format parse_format(const std::string& s) {
  if (s == "text") return Format::text;
  if (s == "csv") return Format::csv;
  fail(ErrorKind::ParseError, "unknown format '" + s + "'");
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& text, const std::string& header) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != header) {
    fail(ErrorKind::ParseError, "expected CSV header '" + header + "'");
  }
  const std::size_t columns = split_csv_line(header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != columns) fail(ErrorKind::ParseError, "wrong column count in '" + line + "'");
    rows.push_back(std::move(f));
  }
  return rows;
}

inline double to_double(const std::string& s) {
  try {
    std::size_t n = 0;
    const double v = std::stod(s, &n);
    if (n != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::ParseError, "not a number: '" + s + "'");
  }
}

inline std::uint64_t to_u64(const std::string& s) {
  try {
    std::size_t n = 0;
    const auto v = std::stoull(s, &n);
    if (n != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::ParseError, "not an unsigned integer: '" + s + "'");
  }
}

}  // namespace detail

inline std::string emit(const SummaryTable& t, Format f) {
  std::ostringstream os;
  const auto rows = t.rows();
  if (f == Format::csv) {
    os << "metric,value\n";
    for (const auto& [k, v] : rows) os << detail::csv_field(k) << ',' << detail::csv_field(v) << '\n';
    return os.str();
  }
  std::size_t width = 6;
  for (const auto& row : rows) width = std::max(width, row.first.size());
  os << "Metric" << std::string(width - 6 + 2, ' ') << "Value\n";
  os << std::string(width, '-') << "  " << std::string(5, '-') << '\n';
  for (const auto& [k, v] : rows) os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Scaling records

inline constexpr const char* kScalingHeader =
    "profile,mode,nodes,gpus,dataset_fraction,samples,dataset_bytes,iterations,epoch_time_s,"
    "compute_s,allreduce_s,load_s,aggregate_flops,per_gpu_flops,swap_fraction,swap_engaged";

inline std::string emit(const std::vector<sim::ScalingRecord>& records, Format f) {
  std::ostringstream os;
  if (f == Format::csv) {
    os << kScalingHeader << '\n';
    for (const auto& r : records) {
      os << detail::csv_field(r.profile) << ',' << detail::csv_field(r.mode) << ',' << r.nodes << ','
         << r.gpus << ',' << exact(r.dataset_fraction) << ',' << r.samples << ','
         << exact(r.dataset_bytes) << ',' << r.iterations << ',' << exact(r.epoch_time_s) << ','
         << exact(r.compute_s) << ',' << exact(r.allreduce_s) << ',' << exact(r.load_s) << ','
         << exact(r.aggregate_flops) << ',' << exact(r.per_gpu_flops) << ','
         << exact(r.swap_fraction) << ',' << (r.swap_engaged ? 1 : 0) << '\n';
    }
    return os.str();
  }
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-6s %5s %5s %9s %10s %10s %10s %10s %8s %14s %14s %5s\n",
                "profile", "mode", "nodes", "gpus", "fraction", "epoch_s", "compute_s",
                "allreduce_s", "load_s", "load%", "aggregate", "per_gpu", "swap");
  os << line;
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%-8s %-6s %5u %5u %9s %10s %10s %10s %10s %8s %14s %14s %5s\n",
                  r.profile.c_str(), r.mode.c_str(), r.nodes, r.gpus, sig4(r.dataset_fraction).c_str(),
                  sig4(r.epoch_time_s).c_str(), sig4(r.compute_s).c_str(),
                  sig4(r.allreduce_s).c_str(), sig4(r.load_s).c_str(),
                  percent(r.load_s / r.epoch_time_s).c_str(), format_flops(r.aggregate_flops).c_str(),
                  format_flops(r.per_gpu_flops).c_str(), r.swap_engaged ? "yes" : "no");
    os << line;
  }
  return os.str();
}

inline std::vector<sim::ScalingRecord> parse_scaling_csv(const std::string& text) {
  std::vector<sim::ScalingRecord> out;
  for (const auto& f : detail::read_csv(text, kScalingHeader)) {
    sim::ScalingRecord r;
    r.profile = f[0];
    r.mode = f[1];
    r.nodes = static_cast<std::uint32_t>(detail::to_u64(f[2]));
    r.gpus = static_cast<std::uint32_t>(detail::to_u64(f[3]));
    r.dataset_fraction = detail::to_double(f[4]);
    r.samples = detail::to_u64(f[5]);
    r.dataset_bytes = detail::to_double(f[6]);
    r.iterations = detail::to_u64(f[7]);
    r.epoch_time_s = detail::to_double(f[8]);
    r.compute_s = detail::to_double(f[9]);
    r.allreduce_s = detail::to_double(f[10]);
    r.load_s = detail::to_double(f[11]);
    r.aggregate_flops = detail::to_double(f[12]);
    r.per_gpu_flops = detail::to_double(f[13]);
    r.swap_fraction = detail::to_double(f[14]);
    r.swap_engaged = detail::to_u64(f[15]) != 0;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cost reports

inline constexpr const char* kCostHeader =
    "model,forward_addmul,training_flops,params,mem_reads,mem_writes,intensity,weight_bytes,"
    "activation_bytes";

inline std::string emit(const std::vector<cost::CostReport>& reports, Format f) {
  std::ostringstream os;
  if (f == Format::csv) {
    os << kCostHeader << '\n';
    for (const auto& r : reports) {
      os << detail::csv_field(r.model) << ',' << r.forward_addmul << ',' << r.training_flops << ','
         << r.params << ',' << r.mem_reads << ',' << r.mem_writes << ',' << exact(r.intensity) << ','
         << r.weight_bytes << ',' << r.activation_bytes << '\n';
    }
    return os.str();
  }
  for (const auto& r : reports) {
    os << "model            " << r.model << '\n'
       << "forward addmul   " << sig4(static_cast<double>(r.forward_addmul)) << '\n'
       << "training FLOPs   " << sig4(static_cast<double>(r.training_flops)) << '\n'
       << "parameters       " << sig4(static_cast<double>(r.params)) << '\n'
       << "memory reads     " << sig4(static_cast<double>(r.mem_reads)) << '\n'
       << "memory writes    " << sig4(static_cast<double>(r.mem_writes)) << '\n'
       << "intensity        " << sig4(r.intensity) << '\n'
       << "weight bytes     " << format_bytes(static_cast<double>(r.weight_bytes)) << '\n'
       << "activation bytes " << format_bytes(static_cast<double>(r.activation_bytes)) << '\n';
  }
  return os.str();
}

inline std::vector<cost::CostReport> parse_cost_csv(const std::string& text) {
  std::vector<cost::CostReport> out;
  for (const auto& f : detail::read_csv(text, kCostHeader)) {
    cost::CostReport r;
    r.model = f[0];
    r.forward_addmul = detail::to_u64(f[1]);
    r.training_flops = detail::to_u64(f[2]);
    r.params = detail::to_u64(f[3]);
    r.mem_reads = detail::to_u64(f[4]);
    r.mem_writes = detail::to_u64(f[5]);
    r.intensity = detail::to_double(f[6]);
    r.weight_bytes = detail::to_u64(f[7]);
    r.activation_bytes = detail::to_u64(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss traces

inline constexpr const char* kLossHeader = "epoch,loss";

inline std::string emit_loss_trace(const std::vector<double>& trace) {
  std::ostringstream os;
  os << kLossHeader << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << exact(trace[i]) << '\n';
  return os.str();
}

inline std::vector<double> parse_loss_csv(const std::string& text) {
  std::vector<double> out;
  for (const auto& f : detail::read_csv(text, kLossHeader)) out.push_back(detail::to_double(f[1]));
  return out;
}

}  // namespace aiscale::report
