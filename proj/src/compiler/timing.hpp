// Copyright 2026 The qubic-forge Authors
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

#include <cmath>
#include <cstdint>

namespace qubic::compiler::detail {

// Slack for ratios that should be whole numbers but carry float error.
inline constexpr double kTickSlack = 1e-9;

/// Round-half-up of t/unit to a whole count.
inline std::int64_t round_ticks(double t, double unit) {
  return static_cast<std::int64_t>(std::floor(t / unit + 0.5 + kTickSlack));
}

inline std::int64_t ceil_ticks(double t, double unit) {
  const double r = t / unit;
  const double n = std::round(r);
  if (std::abs(r - n) <= kTickSlack * std::max(1.0, std::abs(r)))
    return static_cast<std::int64_t>(n);
  return static_cast<std::int64_t>(std::ceil(r));
}

}  // namespace qubic::compiler::detail
