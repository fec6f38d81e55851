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

#include "qubic/cmdcodec.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace qubic::cmd {

namespace {

constexpr std::uint64_t mask(unsigned bits) {
  return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1);
}

void put(CommandWord& w, unsigned shift, unsigned bits, std::uint64_t v) {
  v &= mask(bits);
  if (shift >= 64) {
    w.hi |= v << (shift - 64);
  } else if (shift + bits <= 64) {
    w.lo |= v << shift;
  } else {
    w.lo |= v << shift;
    w.hi |= v >> (64 - shift);
  }
}

std::uint64_t get(const CommandWord& w, unsigned shift, unsigned bits) {
  std::uint64_t v;
  if (shift >= 64)
    v = w.hi >> (shift - 64);
  else if (shift + bits <= 64)
    v = w.lo >> shift;
  else
    v = (w.lo >> shift) | (w.hi << (64 - shift));
  return v & mask(bits);
}

void check(std::uint64_t value, unsigned bits, const char* name) {
  if (value > mask(bits))
    throw CodecError(std::string("field ") + name + " = " + std::to_string(value) +
                     " overflows " + std::to_string(bits) + " bits");
}

}  // namespace

std::array<std::uint8_t, 16> CommandWord::to_bytes() const {
  std::array<std::uint8_t, 16> b{};
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    b[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
  }
  return b;
}

CommandWord CommandWord::from_bytes(std::span<const std::uint8_t, 16> b) {
  CommandWord w;
  for (int i = 0; i < 8; ++i) {
    w.hi = (w.hi << 8) | b[i];
    w.lo = (w.lo << 8) | b[8 + i];
  }
  return w;
}

std::string CommandWord::to_hex() const {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

CommandWord encode(const CommandFields& f) {
  check(f.trig_t, kTrigBits, "trig_t");
  check(f.start, kStartBits, "start");
  check(f.length, kLengthBits, "length");
  check(f.freq_word, kFreqBits, "freq_word");
  check(f.phase_word, kPhaseBits, "phase_word");
  check(f.element, kElementBits, "element");
  check(f.destination, kDestBits, "destination");
  if (f.reserved != 0) throw CodecError("reserved bits must be zero on encode");
  CommandWord w;
  put(w, kTrigShift, kTrigBits, f.trig_t);
  put(w, kElementShift, kElementBits, f.element);
  put(w, kPhaseShift, kPhaseBits, f.phase_word);
  put(w, kLengthShift, kLengthBits, f.length);
  put(w, kStartShift, kStartBits, f.start);
  put(w, kDestShift, kDestBits, f.destination);
  put(w, kFreqShift, kFreqBits, f.freq_word);
  put(w, kConditionShift, kConditionBits, f.condition ? 1 : 0);
  return w;
}

CommandFields decode(const CommandWord& w, bool strict) {
  CommandFields f;
  f.trig_t = static_cast<std::uint32_t>(get(w, kTrigShift, kTrigBits));
  f.element = static_cast<std::uint32_t>(get(w, kElementShift, kElementBits));
  f.phase_word = static_cast<std::uint32_t>(get(w, kPhaseShift, kPhaseBits));
  f.length = static_cast<std::uint32_t>(get(w, kLengthShift, kLengthBits));
  f.start = static_cast<std::uint32_t>(get(w, kStartShift, kStartBits));
  f.destination = static_cast<std::uint32_t>(get(w, kDestShift, kDestBits));
  f.freq_word = static_cast<std::uint32_t>(get(w, kFreqShift, kFreqBits));
  f.condition = get(w, kConditionShift, kConditionBits) != 0;
  f.reserved = static_cast<std::uint32_t>(get(w, kReservedShift, kReservedBits));
  if (strict && f.reserved != 0) throw CodecError("nonzero reserved bits in command word");
  return f;
}

std::uint32_t freq_to_word(double freq_hz, double sample_rate) {
  if (!(sample_rate > 0)) throw CodecError("sample rate must be positive");
  if (!(freq_hz >= 0 && freq_hz < sample_rate))
    throw CodecError("frequency " + std::to_string(freq_hz) + " Hz outside [0, sample_rate)");
  const long double x = static_cast<long double>(freq_hz) / sample_rate * kFreqSteps;
  const auto word = static_cast<std::uint64_t>(std::floor(x + 0.5L));
  return static_cast<std::uint32_t>(word % kFreqSteps);
}

double word_to_freq(std::uint32_t word, double sample_rate) {
  return static_cast<double>(word) * sample_rate / kFreqSteps;
}

std::uint32_t phase_to_word(double phase_rad) {
  if (!std::isfinite(phase_rad)) throw CodecError("phase must be finite");
  constexpr long double two_pi = 2 * std::numbers::pi_v<long double>;
  long double p = std::fmod(static_cast<long double>(phase_rad), two_pi);
  if (p < 0) p += two_pi;
  const auto word = static_cast<std::uint64_t>(std::floor(p / two_pi * kPhaseSteps + 0.5L));
  return static_cast<std::uint32_t>(word % kPhaseSteps);
}

double word_to_phase(std::uint32_t word) {
  return static_cast<double>(word % kPhaseSteps) * 2 * std::numbers::pi / kPhaseSteps;
}

}  // namespace qubic::cmd
