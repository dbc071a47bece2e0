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

#include "dupaudit/chunk_id.h"

#include <sodium.h>

#include <stdexcept>

#include "dupaudit/errors.h"
#include "dupaudit/text.h"

namespace dupaudit {
namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

void EnsureSodium() {
  static const int init = sodium_init();
  if (init < 0) throw Error("libsodium initialization failed");
}

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string ToHexString(const unsigned char* data, std::size_t size) {
  std::string out(size * 2, '0');
  for (std::size_t i = 0; i < size; ++i) {
    out[2 * i] = kHexDigits[data[i] >> 4];
    out[2 * i + 1] = kHexDigits[data[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string ChunkId::ToHex() const {
  return ToHexString(bytes.data(), bytes.size());
}

ChunkId ChunkId::FromHex(std::string_view hex) {
  if (hex.size() != 32) {
    throw ParseError("chunk id must be 32 hex digits: '" + std::string(hex) +
                     "'");
  }
  ChunkId id;
  for (std::size_t i = 0; i < 16; ++i) {
    int hi = HexValue(hex[2 * i]);
    int lo = HexValue(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw ParseError("invalid hex in chunk id: '" + std::string(hex) + "'");
    }
    id.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return id;
}

ChunkId ComputeChunkId(std::string_view dataset_id, std::string_view text) {
  EnsureSodium();
  std::string normalized = NfcNormalize(Trim(text));
  crypto_generichash_state state;
  crypto_generichash_init(&state, nullptr, 0, 16);
  crypto_generichash_update(
      &state, reinterpret_cast<const unsigned char*>(dataset_id.data()),
      dataset_id.size());
  const unsigned char separator = 0;
  crypto_generichash_update(&state, &separator, 1);
  crypto_generichash_update(
      &state, reinterpret_cast<const unsigned char*>(normalized.data()),
      normalized.size());
  ChunkId id;
  crypto_generichash_final(&state, id.bytes.data(), id.bytes.size());
  return id;
}

std::string ContentHashHex(std::string_view bytes) {
  EnsureSodium();
  unsigned char out[16];
  crypto_generichash(out, sizeof(out),
                     reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size(), nullptr, 0);
  return ToHexString(out, sizeof(out));
}

}  // namespace dupaudit
