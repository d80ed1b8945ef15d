// Copyright 2026 The TransDeno Authors
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
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "transdeno/io/binary.hpp"
#include "transdeno/io/tensor_file.hpp"
#include "transdeno/transdeno.hpp"

namespace transdeno::io {

// Checkpoint layout, version 1 (integers little-endian):
//   8 bytes  magic "GSCHKPT\0"
//   u32      format version
//   u32 x 4  C, H, W, reduction ratio
//   u32      number of candidate group counts, then each count as u32
//   u8       bilinear convention (0 direct, 1 standard)
//   u8       attention axis (0 spatial, 1 channel-transposed)
//   u8       offset mode (0 softmax, 1 linear)
//   u8       dtype (1 binary32, 2 binary64)
//   u32      record count
//   records in ascending byte-wise path order, each:
//     u32 path length, path bytes, u32 ndim, u32 x ndim dims, payload
inline constexpr std::string_view kCheckpointMagic{"GSCHKPT\0", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <std::floating_point T>
Bytes encode_checkpoint(const TransDenoParams<T>& p) {
  const auto& cfg = p.config();
  ByteWriter w;
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  for (auto v : {cfg.channels, cfg.height, cfg.width, cfg.reduction}) w.u32(static_cast<std::uint32_t>(v));
  w.u32(static_cast<std::uint32_t>(cfg.degrofc.group_counts.size()));
  for (auto g : cfg.degrofc.group_counts) w.u32(static_cast<std::uint32_t>(g));
  w.u8(cfg.degrofc.convention == BlendConvention::direct ? 0 : 1);
  w.u8(cfg.axis == AttentionAxis::spatial ? 0 : 1);
  w.u8(cfg.degrofc.offset_mode == OffsetMode::softmax ? 0 : 1);
  w.u8(std::is_same_v<T, float> ? 1 : 2);

  struct Record {
    std::vector<std::size_t> dims;
    std::span<const T> values;
  };
  std::map<std::string, Record> records;
  p.visit([&](const std::string& path, std::span<const T> v, const std::vector<std::size_t>& dims) {
    records.emplace(path, Record{dims, v});
  });
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& [path, rec] : records) {
    w.u32(static_cast<std::uint32_t>(path.size()));
    w.raw(path);
    w.u32(static_cast<std::uint32_t>(rec.dims.size()));
    for (auto d : rec.dims) w.u32(static_cast<std::uint32_t>(d));
    for (T x : rec.values) {
      if constexpr (std::is_same_v<T, float>) w.f32(x);
      else w.f64(x);
    }
  }
  return w.take();
}

/// Decodes a checkpoint into parameters of type T (payloads are converted
/// if the stored dtype differs). Unknown versions, missing or extra
/// records and shape disagreements are FormatErrors.
template <std::floating_point T>
TransDenoParams<T> decode_checkpoint(const Bytes& bytes, const std::string& source = "checkpoint") {
  ByteReader r(bytes, source);
  if (r.raw(kCheckpointMagic.size()) != kCheckpointMagic) r.fail("bad magic (not a checkpoint)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    r.fail("unsupported checkpoint version " + std::to_string(version) + " (this build reads version " +
           std::to_string(kCheckpointVersion) + ")");
  }
  TransDenoConfig cfg;
  cfg.channels = r.u32();
  cfg.height = r.u32();
  cfg.width = r.u32();
  cfg.reduction = r.u32();
  const std::uint32_t k = r.u32();
  r.need(static_cast<std::size_t>(k) * 4);
  cfg.degrofc.group_counts.resize(k);
  for (auto& g : cfg.degrofc.group_counts) g = r.u32();
  const auto conv = r.u8(), axis = r.u8(), mode = r.u8(), dtype = r.u8();
  if (conv > 1 || axis > 1 || mode > 1) r.fail("invalid configuration flag");
  if (dtype != 1 && dtype != 2) r.fail("unknown dtype code " + std::to_string(dtype));
  cfg.degrofc.convention = conv == 0 ? BlendConvention::direct : BlendConvention::standard;
  cfg.axis = axis == 0 ? AttentionAxis::spatial : AttentionAxis::channel;
  cfg.degrofc.offset_mode = mode == 0 ? OffsetMode::softmax : OffsetMode::linear;

  std::optional<TransDenoParams<T>> params;
  try {
    params.emplace(cfg);
  } catch (const ShapeError& e) {
    r.fail(std::string("invalid configuration: ") + e.what());
  }

  struct Slot {
    std::span<T> values;
    std::vector<std::size_t> dims;
    bool filled = false;
  };
  std::map<std::string, Slot> slots;
  params->visit([&](const std::string& path, std::span<T> v, const std::vector<std::size_t>& dims) {
    slots.emplace(path, Slot{v, dims});
  });

  const std::uint32_t n_records = r.u32();
  if (n_records != slots.size()) {
    r.fail("expected " + std::to_string(slots.size()) + " parameter records, found " + std::to_string(n_records));
  }
  std::string previous;
  for (std::uint32_t i = 0; i < n_records; ++i) {
    const std::uint32_t len = r.u32();
    const std::string path = r.raw(len);
    if (i > 0 && !(previous < path)) r.fail("records are not in strictly ascending path order");
    previous = path;
    auto it = slots.find(path);
    if (it == slots.end()) r.fail("unknown parameter record '" + path + "'");
    const std::uint32_t ndim = r.u32();
    r.need(static_cast<std::size_t>(ndim) * 4);
    std::vector<std::size_t> dims(ndim);
    for (auto& d : dims) d = r.u32();
    if (dims != it->second.dims) r.fail("record '" + path + "' has the wrong shape");
    auto dst = it->second.values;
    if (dtype == 1) {
      const auto v = detail::get_values<float>(r, dst.size());
      std::copy(v.begin(), v.end(), dst.begin());
    } else {
      const auto v = detail::get_values<double>(r, dst.size());
      std::copy(v.begin(), v.end(), dst.begin());
    }
    it->second.filled = true;
  }
  if (r.remaining() != 0) r.fail("trailing bytes after the last record");
  return std::move(*params);
}

template <std::floating_point T>
void write_checkpoint(const std::filesystem::path& path, const TransDenoParams<T>& p) {
  write_file_atomic(path, encode_checkpoint(p));
}

template <std::floating_point T>
TransDenoParams<T> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<T>(read_file(path), path.string());
}

}  // namespace transdeno::io
