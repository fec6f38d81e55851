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

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace qubic::cmd {

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Field widths, LSB upward: trig_t, element, phase, length, start,
// destination, freq, condition, reserved.
inline constexpr unsigned kTrigBits = 24;
inline constexpr unsigned kStartBits = 12;
inline constexpr unsigned kLengthBits = 12;
inline constexpr unsigned kFreqBits = 24;
inline constexpr unsigned kPhaseBits = 14;
inline constexpr unsigned kElementBits = 8;
inline constexpr unsigned kDestBits = 2;
inline constexpr unsigned kConditionBits = 1;
inline constexpr unsigned kReservedBits = 31;

static_assert(kTrigBits + kStartBits + kLengthBits + kFreqBits + kPhaseBits + kElementBits +
                      kDestBits + kConditionBits + kReservedBits ==
                  128,
              "command fields must fill exactly 128 bits");

inline constexpr unsigned kTrigShift = 0;
inline constexpr unsigned kElementShift = kTrigShift + kTrigBits;        // 24
inline constexpr unsigned kPhaseShift = kElementShift + kElementBits;    // 32
inline constexpr unsigned kLengthShift = kPhaseShift + kPhaseBits;       // 46
inline constexpr unsigned kStartShift = kLengthShift + kLengthBits;      // 58
inline constexpr unsigned kDestShift = kStartShift + kStartBits;         // 70
inline constexpr unsigned kFreqShift = kDestShift + kDestBits;           // 72
inline constexpr unsigned kConditionShift = kFreqShift + kFreqBits;      // 96
inline constexpr unsigned kReservedShift = kConditionShift + kConditionBits;  // 97

struct CommandFields {
  std::uint32_t trig_t = 0;      // DSP clock cycles from sequence start
  std::uint32_t start = 0;       // envelope address
  std::uint32_t length = 0;      // envelope samples
  std::uint32_t freq_word = 0;   // sample_rate / 2^24 units
  std::uint32_t phase_word = 0;  // 2*pi / 2^14 units
  std::uint32_t element = 0;
  std::uint32_t destination = 0;
  bool condition = false;
  std::uint32_t reserved = 0;

  bool operator==(const CommandFields&) const = default;
};

/// 128-bit command, split into two 64-bit halves.
struct CommandWord {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  bool operator==(const CommandWord&) const = default;
  auto operator<=>(const CommandWord&) const = default;

  bool bit(unsigned i) const { return i < 64 ? (lo >> i) & 1 : (hi >> (i - 64)) & 1; }

  /// Big-endian (MSB first) wire bytes.
  std::array<std::uint8_t, 16> to_bytes() const;
  static CommandWord from_bytes(std::span<const std::uint8_t, 16> bytes);

  std::string to_hex() const;
};

CommandWord encode(const CommandFields& f);
CommandFields decode(const CommandWord& w, bool strict = true);

inline constexpr std::uint32_t kFreqSteps = 1u << kFreqBits;
inline constexpr std::uint32_t kPhaseSteps = 1u << kPhaseBits;

std::uint32_t freq_to_word(double freq_hz, double sample_rate);
double word_to_freq(std::uint32_t word, double sample_rate);

/// Any finite phase, wrapped into [0, 2*pi) first.
std::uint32_t phase_to_word(double phase_rad);
double word_to_phase(std::uint32_t word);

}  // namespace qubic::cmd
