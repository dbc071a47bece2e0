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

#include "dupaudit/half.h"

#include <bit>

namespace dupaudit {

Half FloatToHalf(float value) {
  const std::uint32_t f = std::bit_cast<std::uint32_t>(value);
  const std::uint32_t sign = (f >> 16) & 0x8000u;
  const std::uint32_t abs = f & 0x7FFFFFFFu;

  if (abs >= 0x7F800000u) {
    // Inf or NaN.
    std::uint16_t mantissa = abs > 0x7F800000u ? 0x0200u : 0;
    return Half{static_cast<std::uint16_t>(sign | 0x7C00u | mantissa)};
  }
  // 65520 and above rounds to infinity.
  if (abs >= 0x477FF000u) {
    return Half{static_cast<std::uint16_t>(sign | 0x7C00u)};
  }
  if (abs < 0x38800000u) {
    // Result is subnormal (or zero): scale into the 10-bit mantissa with RNE.
    if (abs < 0x33000000u) return Half{static_cast<std::uint16_t>(sign)};
    const std::uint32_t exponent = abs >> 23;
    const std::uint32_t mantissa = (abs & 0x007FFFFFu) | 0x00800000u;
    const std::uint32_t shift = 126 - exponent;  // in [14, 24]
    std::uint32_t result = mantissa >> shift;
    const std::uint32_t remainder = mantissa & ((1u << shift) - 1);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (remainder > halfway || (remainder == halfway && (result & 1u))) {
      ++result;
    }
    return Half{static_cast<std::uint16_t>(sign | result)};
  }
  // Normal range: rebias exponent (127 -> 15) and round 13 dropped bits.
  std::uint32_t rebased = abs - 0x38000000u;
  std::uint32_t result = rebased >> 13;
  const std::uint32_t remainder = rebased & 0x1FFFu;
  if (remainder > 0x1000u || (remainder == 0x1000u && (result & 1u))) {
    ++result;
  }
  return Half{static_cast<std::uint16_t>(sign | result)};
}

float HalfToFloat(Half value) {
  const std::uint32_t sign = static_cast<std::uint32_t>(value.bits & 0x8000u)
                             << 16;
  const std::uint32_t exponent = (value.bits >> 10) & 0x1Fu;
  std::uint32_t mantissa = value.bits & 0x03FFu;

  std::uint32_t bits;
  if (exponent == 0x1Fu) {
    bits = sign | 0x7F800000u | (mantissa << 13);
  } else if (exponent != 0) {
    bits = sign | ((exponent + 112) << 23) | (mantissa << 13);
  } else if (mantissa == 0) {
    bits = sign;
  } else {
    // Subnormal half: normalize into a float.
    std::uint32_t e = 113;
    while ((mantissa & 0x0400u) == 0) {
      mantissa <<= 1;
      --e;
    }
    mantissa &= 0x03FFu;
    bits = sign | (e << 23) | (mantissa << 13);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace dupaudit
