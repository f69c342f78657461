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

// "SVOX v1" sample container, little-endian:
//
//   offset  size   field
//   0       4      magic "SVOX"
//   4       2      version (u16) = 1
//   6       2      grid side d (u16)
//   8       1      element width in bytes (u8) = 8
//   9       1      reserved (u8) = 0
//   10      24     label: omega_m, sigma8, n_s (3 x f64)
//   34      8*d^3  density, f64, x fastest then y then z
//   34+8d^3 8      FNV-1a 64 over every preceding byte (u64)

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "aiscale/error.hpp"

namespace aiscale::datagen {

static_assert(std::endian::native == std::endian::little, "SVOX I/O assumes a little-endian host");

struct CosmoLabel {
  double omega_m = 0.30;
  double sigma8 = 0.865;
  double n_s = 0.95;

  bool operator==(const CosmoLabel&) const = default;
};

struct DensityGrid {
  std::uint32_t d = 0;
  std::vector<double> values;  // d^3, x fastest

  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return (static_cast<std::size_t>(z) * d + y) * d + x;
  }
  double& at(std::uint32_t x, std::uint32_t y, std::uint32_t z) { return values[index(x, y, z)]; }
  double at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const { return values[index(x, y, z)]; }

  bool operator==(const DensityGrid&) const = default;
};

struct CosmoSample {
  CosmoLabel label;
  DensityGrid grid;

  bool operator==(const CosmoSample&) const = default;
};

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = kFnvOffset) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

inline constexpr std::size_t kSvoxHeaderBytes = 34;
inline constexpr std::uint16_t kSvoxVersion = 1;

inline std::uint64_t svox_file_bytes(std::uint64_t d) {
  return kSvoxHeaderBytes + 8 * d * d * d + 8;
}

namespace detail {

template <typename T>
void put(std::vector<std::uint8_t>& buf, T value) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  buf.insert(buf.end(), raw.begin(), raw.end());
}

template <typename T>
T get(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_sample(const CosmoSample& s) {
  const std::uint64_t n = static_cast<std::uint64_t>(s.grid.d) * s.grid.d * s.grid.d;
  if (s.grid.d == 0 || s.grid.d > 0xffff || s.grid.values.size() != n) {
    fail(ErrorKind::InvalidConfig, "grid side must be in [1, 65535] with d^3 values");
  }
  std::vector<std::uint8_t> buf;
  buf.reserve(svox_file_bytes(s.grid.d));
  buf.insert(buf.end(), {'S', 'V', 'O', 'X'});
  detail::put<std::uint16_t>(buf, kSvoxVersion);
  detail::put<std::uint16_t>(buf, static_cast<std::uint16_t>(s.grid.d));
  detail::put<std::uint8_t>(buf, 8);
  detail::put<std::uint8_t>(buf, 0);
  detail::put(buf, s.label.omega_m);
  detail::put(buf, s.label.sigma8);
  detail::put(buf, s.label.n_s);
  const auto* raw = reinterpret_cast<const std::uint8_t*>(s.grid.values.data());
  buf.insert(buf.end(), raw, raw + n * 8);
  detail::put(buf, fnv1a(buf));
  return buf;
}

inline CosmoSample decode_sample(std::span<const std::uint8_t> buf) {
  if (buf.size() < 4 || std::memcmp(buf.data(), "SVOX", 4) != 0) {
    fail(ErrorKind::BadMagic, "not an SVOX file");
  }
  if (buf.size() < kSvoxHeaderBytes + 8) fail(ErrorKind::ChecksumMismatch, "truncated header");
  const auto version = detail::get<std::uint16_t>(buf.data() + 4);
  if (version != kSvoxVersion) {
    fail(ErrorKind::VersionUnsupported, "SVOX version " + std::to_string(version));
  }
  const std::uint64_t d = detail::get<std::uint16_t>(buf.data() + 6);
  const auto width = detail::get<std::uint8_t>(buf.data() + 8);
  if (width != 8) fail(ErrorKind::VersionUnsupported, "element width " + std::to_string(width));
  if (buf.size() != svox_file_bytes(d)) {
    fail(ErrorKind::ChecksumMismatch, "size " + std::to_string(buf.size()) + " does not match d=" +
                                          std::to_string(d));
  }
  const std::size_t body = buf.size() - 8;
  const auto stored = detail::get<std::uint64_t>(buf.data() + body);
  if (fnv1a(buf.first(body)) != stored) fail(ErrorKind::ChecksumMismatch, "payload checksum");
  CosmoSample s;
  s.label.omega_m = detail::get<double>(buf.data() + 10);
  s.label.sigma8 = detail::get<double>(buf.data() + 18);
  s.label.n_s = detail::get<double>(buf.data() + 26);
  s.grid.d = static_cast<std::uint32_t>(d);
  s.grid.values.resize(d * d * d);
  std::memcpy(s.grid.values.data(), buf.data() + kSvoxHeaderBytes, d * d * d * 8);
  return s;
}

/// Trailing checksum of an encoded sample.
inline std::uint64_t stored_checksum(std::span<const std::uint8_t> buf) {
  if (buf.size() < 8) fail(ErrorKind::ChecksumMismatch, "truncated");
  return detail::get<std::uint64_t>(buf.data() + buf.size() - 8);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::Io, "read failed for " + path);
  return bytes;
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

/// Returns the checksum written into the file.
inline std::uint64_t write_sample(const CosmoSample& s, const std::string& path) {
  auto bytes = encode_sample(s);
  write_file_bytes(path, bytes);
  return stored_checksum(bytes);
}

inline CosmoSample read_sample(const std::string& path) { return decode_sample(read_file_bytes(path)); }

}  // namespace aiscale::datagen
