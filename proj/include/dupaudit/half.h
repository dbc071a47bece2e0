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

#ifndef DUPAUDIT_HALF_H_
#define DUPAUDIT_HALF_H_

#include <cstdint>

namespace dupaudit {

// IEEE 754 binary16 stored as raw bits.
struct Half {
  std::uint16_t bits = 0;

  bool operator==(const Half&) const = default;
};

// Round-to-nearest-even conversion. Overflow saturates to infinity; NaN
// payloads are quieted.
Half FloatToHalf(float value);
float HalfToFloat(Half value);

}  // namespace dupaudit

#endif  // DUPAUDIT_HALF_H_
