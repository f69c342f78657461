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

// key = value config files for clusters and model profiles.
//
//   # comment
//   peak_flops_per_gpu = 15.7T
//   node_memory = 256Gi
//
// Numbers accept a decimal suffix (k M G T P), a binary suffix (Ki Mi Gi Ti
// Pi) or a fraction "1/64".

#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "aiscale/error.hpp"
#include "aiscale/scaling_sim.hpp"

namespace aiscale::config {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) fail(ErrorKind::ParseError, "empty number");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    const double num = parse_number(s.substr(0, slash));
    const double den = parse_number(s.substr(slash + 1));
    if (den == 0) fail(ErrorKind::ParseError, "zero denominator in '" + s + "'");
    return num / den;
  }
  std::size_t n = 0;
  double v = 0;
  try {
    v = std::stod(s, &n);
  } catch (const std::exception&) {
    fail(ErrorKind::ParseError, "not a number: '" + s + "'");
  }
  const std::string suffix = s.substr(n);
  static const std::map<std::string, double> scale = {
      {"", 1.0},         {"k", 1e3},           {"M", 1e6},          {"G", 1e9},
      {"T", 1e12},       {"P", 1e15},          {"Ki", 1024.0},      {"Mi", 1048576.0},
      {"Gi", 1073741824.0}, {"Ti", 1099511627776.0}, {"Pi", 1125899906842624.0}};
  auto it = scale.find(suffix);
  if (it == scale.end()) fail(ErrorKind::ParseError, "unknown suffix in '" + s + "'");
  return v * it->second;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(parse_number(item));
  }
  if (out.empty()) fail(ErrorKind::ParseError, "empty list");
  return out;
}

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_kv(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

template <typename T>
void assign(T& field, const std::string& value) {
  const double v = parse_number(value);
  if constexpr (std::is_integral_v<T>) {
    if (v < 0 || v != std::floor(v)) fail(ErrorKind::ParseError, "expected a whole number, got " + value);
    field = static_cast<T>(v);
  } else {
    field = v;
  }
}

}  // namespace detail

inline sim::ClusterConfig cluster_from_kv(const KeyValues& kv, sim::ClusterConfig c = {}) {
  for (const auto& [k, v] : kv) {
    if (k == "nodes") detail::assign(c.nodes, v);
    else if (k == "gpus_per_node") detail::assign(c.gpus_per_node, v);
    else if (k == "peak_flops_per_gpu") detail::assign(c.peak_flops_per_gpu, v);
    else if (k == "mem_bw_per_gpu") detail::assign(c.mem_bw_per_gpu, v);
    else if (k == "node_memory") detail::assign(c.node_memory, v);
    else if (k == "usable_memory_fraction") detail::assign(c.usable_memory_fraction, v);
    else if (k == "fs_read_bw") detail::assign(c.fs_read_bw, v);
    else if (k == "swap_penalty") detail::assign(c.swap_penalty, v);
    else if (k == "net_bw") detail::assign(c.net_bw, v);
    else if (k == "net_latency") detail::assign(c.net_latency, v);
    else if (k == "intra_node_bw") detail::assign(c.intra_node_bw, v);
    else fail(ErrorKind::ParseError, "unknown cluster key '" + k + "'");
  }
  c.validate();
  return c;
}

inline sim::ModelProfile profile_from_kv(const KeyValues& kv, sim::ModelProfile p = {}) {
  for (const auto& [k, v] : kv) {
    if (k == "name") p.name = v;
    else if (k == "params") detail::assign(p.params, v);
    else if (k == "bytes_per_param") detail::assign(p.bytes_per_param, v);
    else if (k == "per_sample_training_flops") detail::assign(p.per_sample_training_flops, v);
    else if (k == "batch_per_gpu") detail::assign(p.batch_per_gpu, v);
    else if (k == "sustained_flops_per_gpu") detail::assign(p.sustained_flops_per_gpu, v);
    else if (k == "mixed_precision_speedup") detail::assign(p.mixed_precision_speedup, v);
    else fail(ErrorKind::ParseError, "unknown profile key '" + k + "'");
  }
  p.validate();
  return p;
}

inline sim::ClusterConfig load_cluster(const std::string& path) {
  return cluster_from_kv(parse_kv(read_text(path)));
}

inline sim::ModelProfile load_profile(const std::string& path) {
  return profile_from_kv(parse_kv(read_text(path)));
}

}  // namespace aiscale::config
