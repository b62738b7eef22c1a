// Copyright 2026 The dlem Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dlem/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dlem/error.hpp"

namespace dlem {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'D', 'L', 'E', 'M'};
constexpr std::uint32_t kFlagStandardize = 1u << 0;
constexpr std::uint32_t kFlagRectify = 1u << 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffu));
  }
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    if (bytes_.size() - pos_ < 4) throw CorruptArtifact("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks to stay within range.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const MlpEncoder& enc) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(enc.layer_count()));
  for (const AffineLayer& layer : enc.layers()) {
    put_u32(out, static_cast<std::uint32_t>(layer.fan_in()));
    put_u32(out, static_cast<std::uint32_t>(layer.fan_out()));
    std::uint32_t flags = 0;
    if (layer.standardize) flags |= kFlagStandardize;
    if (layer.rectify) flags |= kFlagRectify;
    put_u32(out, flags);
    for (Index r = 0; r < layer.fan_in(); ++r) {
      for (Index c = 0; c < layer.fan_out(); ++c) put_f32(out, layer.weights(r, c));
    }
    for (Index c = 0; c < layer.fan_out(); ++c) put_f32(out, layer.bias(c));
  }
  put_u32(out, crc32(out));
  return out;
}

MlpEncoder decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 12 ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw CorruptArtifact("not a DLEM checkpoint (bad magic)");
  }
  Reader header(bytes.subspan(kMagic.size()));
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw CorruptArtifact("unsupported checkpoint version " + std::to_string(version) +
                          " (reader supports " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto payload = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.last(4));
  if (trailer.u32() != crc32(payload)) throw CorruptArtifact("checkpoint CRC mismatch");

  Reader in(payload.subspan(kMagic.size() + 4));
  const std::uint32_t count = in.u32();
  if (count == 0) throw CorruptArtifact("checkpoint has no layers");
  std::vector<AffineLayer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t fan_in = in.u32();
    const std::uint32_t fan_out = in.u32();
    const std::uint32_t flags = in.u32();
    if (fan_in == 0 || fan_out == 0 || (flags & ~(kFlagStandardize | kFlagRectify)) != 0) {
      throw CorruptArtifact("invalid layer header in checkpoint");
    }
    const std::uint64_t needed = (std::uint64_t{fan_in} * fan_out + fan_out) * 4;
    if (in.remaining() < needed) throw CorruptArtifact("checkpoint truncated");
    AffineLayer layer;
    layer.weights.resize(fan_in, fan_out);
    for (Index r = 0; r < fan_in; ++r) {
      for (Index c = 0; c < fan_out; ++c) layer.weights(r, c) = in.f32();
    }
    layer.bias.resize(fan_out);
    for (Index c = 0; c < fan_out; ++c) layer.bias(c) = in.f32();
    layer.standardize = (flags & kFlagStandardize) != 0;
    layer.rectify = (flags & kFlagRectify) != 0;
    layers.push_back(std::move(layer));
  }
  if (in.remaining() != 0) throw CorruptArtifact("trailing bytes in checkpoint");
  try {
    return MlpEncoder(std::move(layers));
  } catch (const InvalidArgument& e) {
    throw CorruptArtifact(std::string("inconsistent layer shapes: ") + e.what());
  }
}

void save_checkpoint(const MlpEncoder& enc, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(enc);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

MlpEncoder load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptArtifact("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace dlem
