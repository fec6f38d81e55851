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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qubic/cmdcodec.hpp"

using namespace qubic::cmd;
using u128 = unsigned __int128;

namespace {

// Reference packing: one 128-bit integer, fields laid out MSB to LSB as
// reserved | condition | freq | dest | start | length | phase | element | trig.
u128 reference_pack(const CommandFields& f) {
  u128 w = f.reserved;
  w = (w << 1) | (f.condition ? 1 : 0);
  w = (w << 24) | f.freq_word;
  w = (w << 2) | f.destination;
  w = (w << 12) | f.start;
  w = (w << 12) | f.length;
  w = (w << 14) | f.phase_word;
  w = (w << 8) | f.element;
  w = (w << 24) | f.trig_t;
  return w;
}

u128 as_u128(const CommandWord& w) { return (u128(w.hi) << 64) | w.lo; }

CommandFields random_fields(std::mt19937_64& rng) {
  CommandFields f;
  f.trig_t = rng() & 0xFFFFFF;
  f.start = rng() & 0xFFF;
  f.length = rng() & 0xFFF;
  f.freq_word = rng() & 0xFFFFFF;
  f.phase_word = rng() & 0x3FFF;
  f.element = rng() & 0xFF;
  f.destination = rng() & 0x3;
  f.condition = rng() & 1;
  return f;
}

}  // namespace

TEST_CASE("zero fields give the zero word") {
  auto w = encode({});
  CHECK(w.hi == 0);
  CHECK(w.lo == 0);
}

TEST_CASE("trig_t = 1 sets only bit 0") {
  CommandFields f;
  f.trig_t = 1;
  auto w = encode(f);
  CHECK(w.lo == 1);
  CHECK(w.hi == 0);
  for (unsigned i = 1; i < 128; ++i) CHECK_FALSE(w.bit(i));
}

TEST_CASE("single-field placement matches the reference layout") {
  CommandFields f;
  f.condition = true;
  CHECK(as_u128(encode(f)) == u128(1) << 96);
  f = {};
  f.freq_word = 1;
  CHECK(as_u128(encode(f)) == u128(1) << 72);
  f = {};
  f.destination = 3;
  CHECK(as_u128(encode(f)) == u128(3) << 70);
  f = {};
  f.start = 0xFFF;
  CHECK(as_u128(encode(f)) == u128(0xFFF) << 58);
}

TEST_CASE("encode matches the reference on random fields") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100000; ++k) {
    auto f = random_fields(rng);
    REQUIRE(as_u128(encode(f)) == reference_pack(f));
  }
}

TEST_CASE("decode(encode(f)) == f and encode(decode(w)) == w") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200000; ++k) {
    auto f = random_fields(rng);
    REQUIRE(decode(encode(f)) == f);
    CommandWord w{rng() & ((1ULL << 33) - 1), rng()};  // reserved bits cleared
    REQUIRE(encode(decode(w)) == w);
  }
}

TEST_CASE("codec errors") {
  CommandFields f;
  f.trig_t = 1u << 24;
  CHECK_THROWS_AS(encode(f), CodecError);
  f = {};
  f.phase_word = 1u << 14;
  CHECK_THROWS_AS(encode(f), CodecError);
  f = {};
  f.destination = 4;
  CHECK_THROWS_AS(encode(f), CodecError);
  f = {};
  f.reserved = 1;
  CHECK_THROWS_AS(encode(f), CodecError);
  CommandWord w{1ULL << 40, 0};
  CHECK_THROWS_AS(decode(w), CodecError);
  CHECK(decode(w, false).reserved == (1u << 7));
}

TEST_CASE("wire bytes are big-endian") {
  CommandFields f;
  f.trig_t = 0x010203;
  auto b = encode(f).to_bytes();
  CHECK(b[15] == 0x03);
  CHECK(b[14] == 0x02);
  CHECK(b[13] == 0x01);
  CHECK(b[0] == 0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 1000; ++k) {
    auto w = encode(random_fields(rng));
    auto bytes = w.to_bytes();
    CHECK(CommandWord::from_bytes(bytes) == w);
  }
}

TEST_CASE("frequency words") {
  CHECK(freq_to_word(0, 1e9) == 0);
  CHECK(freq_to_word(100e6, 1e9) == 1677722);
  CHECK(word_to_freq(1, 1e9) == doctest::Approx(59.604644775390625).epsilon(1e-15));
  CHECK_THROWS_AS(freq_to_word(1e9, 1e9), CodecError);
  CHECK_THROWS_AS(freq_to_word(-1, 1e9), CodecError);

  // exact rational oracle on integer-Hz frequencies: floor(f*2^24/fs + 1/2)
  std::mt19937_64 rng(9);
  const std::uint64_t fs = 1000000000;
  for (int k = 0; k < 100000; ++k) {
    const std::uint64_t f = rng() % fs;
    const u128 num = u128(f) * 2 * (u128(1) << 24) + fs;
    const auto expect = static_cast<std::uint32_t>((num / (2 * fs)) % (1u << 24));
    REQUIRE(freq_to_word(static_cast<double>(f), 1e9) == expect);
    const double err = std::abs(word_to_freq(expect, 1e9) - static_cast<double>(f));
    // within half a step, except where the top bin wraps to zero
    if (expect != 0 || f < fs / 2) REQUIRE(err <= 1e9 / std::pow(2.0, 25) + 1e-6);
  }
}

TEST_CASE("phase words") {
  const double pi = std::numbers::pi;
  CHECK(phase_to_word(0) == 0);
  CHECK(phase_to_word(pi / 2) == 4096);
  CHECK(phase_to_word(-pi / 2) == 12288);
  CHECK(phase_to_word(pi) == 8192);
  CHECK(phase_to_word(2 * pi) == 0);
  CHECK_THROWS_AS(phase_to_word(NAN), CodecError);
  CHECK_THROWS_AS(phase_to_word(INFINITY), CodecError);
  CHECK(word_to_phase(1) * 180 / pi == doctest::Approx(0.02197265625));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (int k = 0; k < 10000; ++k) {
    const double phi = u(rng);
    const auto w = phase_to_word(phi);
    for (int turns : {-3, -1, 1, 2, 5}) {
      // 2*pi*k shifts carry float error; allow a neighbouring word only at exact halves
      const auto w2 = phase_to_word(phi + 2 * pi * turns);
      const auto diff = (w2 - w + kPhaseSteps) % kPhaseSteps;
      REQUIRE((diff == 0 || diff == 1 || diff == kPhaseSteps - 1));
    }
    double wrapped = std::fmod(phi, 2 * pi);
    if (wrapped < 0) wrapped += 2 * pi;
    REQUIRE(std::abs(std::remainder(word_to_phase(w) - wrapped, 2 * pi)) <= pi / kPhaseSteps + 1e-12);
  }
  // integer multiples of the step are invariant exactly
  for (std::uint32_t w = 0; w < kPhaseSteps; w += 97)
    for (int turns : {-2, 1, 3}) REQUIRE(phase_to_word(word_to_phase(w) + 2 * pi * turns) == w);
}
