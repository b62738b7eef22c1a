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

#ifndef DLEM_CHECKPOINT_HPP_
#define DLEM_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dlem/encoder.hpp"

namespace dlem {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout, all integers little-endian u32:
//   "DLEM" | version | layer count |
//   per layer: fan_in | fan_out | flags (bit0 standardize, bit1 rectify) |
//              weights row-major f32 | bias f32 |
//   CRC-32 of every preceding byte.
// Parameters are stored in single precision, so a save/load round trip is
// bit-exact for encoders whose parameters are already f32-representable
// (e.g. anything that was itself loaded from a checkpoint).
std::vector<std::uint8_t> encode_checkpoint(const MlpEncoder& enc);
MlpEncoder decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const MlpEncoder& enc, const std::filesystem::path& path);
MlpEncoder load_checkpoint(const std::filesystem::path& path);

/// Standard CRC-32 (IEEE 802.3 polynomial).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace dlem

#endif  // DLEM_CHECKPOINT_HPP_
