// Copyright 2026 The dupaudit Authors.
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

#ifndef DUPAUDIT_CHUNK_ID_H_
#define DUPAUDIT_CHUNK_ID_H_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace dupaudit {

// 128-bit content hash identifying a corpus chunk. Ordered bytewise, which
// matches the ordering of the lowercase hex form.
struct ChunkId {
  std::array<std::uint8_t, 16> bytes{};

  std::string ToHex() const;
  // Throws ParseError unless `hex` is exactly 32 hex digits.
  static ChunkId FromHex(std::string_view hex);

  auto operator<=>(const ChunkId&) const = default;
  bool operator==(const ChunkId&) const = default;
};

// BLAKE2b-128 over dataset_id, a zero byte, and the NFC-normalized trimmed
// text.
ChunkId ComputeChunkId(std::string_view dataset_id, std::string_view text);

// BLAKE2b-128 of arbitrary bytes, hex encoded. Used for config and input
// fingerprints in run ledgers.
std::string ContentHashHex(std::string_view bytes);

}  // namespace dupaudit

template <>
struct std::hash<dupaudit::ChunkId> {
  std::size_t operator()(const dupaudit::ChunkId& id) const noexcept {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | id.bytes[i];
    return h;
  }
};

#endif  // DUPAUDIT_CHUNK_ID_H_
