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

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "qubic/dspsim.hpp"

namespace qubic::dsp {

namespace {

// Angles are carried in units of 2^-32 turn.
constexpr int kAngleBits = 32;
// x/y datapath fraction bits.
constexpr int kXYFrac = 30;

struct CordicTables {
  std::array<std::int64_t, kCordicIterations> atan{};
  std::int64_t x0 = 0;  // 1/K in Q30
};

const CordicTables& tables() {
  static const CordicTables t = [] {
    CordicTables c;
    double gain = 1.0;
    for (unsigned i = 0; i < kCordicIterations; ++i) {
      const double a = std::atan(std::ldexp(1.0, -static_cast<int>(i)));
      c.atan[i] = std::llround(a / (2 * std::numbers::pi) * std::ldexp(1.0, kAngleBits));
      gain *= std::sqrt(1.0 + std::ldexp(1.0, -2 * static_cast<int>(i)));
    }
    c.x0 = std::llround(std::ldexp(1.0, kXYFrac) / gain);
    return c;
  }();
  return t;
}

std::int32_t round_shift_q30_to_fs(std::int64_t v) {
  // v in Q30 -> full-scale 32767, round half away from zero
  const std::int64_t scaled = v * kFullScale;
  const std::int64_t half = std::int64_t{1} << (kXYFrac - 1);
  std::int64_t r = scaled >= 0 ? (scaled + half) >> kXYFrac : -((-scaled + half) >> kXYFrac);
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(r, -kFullScale, kFullScale));
}

std::int32_t div_round_fs(std::int64_t v) {
  // divide by 32767 (odd, so no exact halves) rounding to nearest
  constexpr std::int64_t half = kFullScale / 2;
  std::int64_t r = v >= 0 ? (v + half) / kFullScale : -((-v + half) / kFullScale);
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(r, -kFullScale, kFullScale));
}

}  // namespace

IQ from_packed(std::uint32_t word) {
  return {static_cast<std::int16_t>(word >> 16), static_cast<std::int16_t>(word & 0xFFFF)};
}

std::uint32_t to_packed(IQ v) {
  const auto i = static_cast<std::uint16_t>(static_cast<std::int16_t>(v.i));
  const auto q = static_cast<std::uint16_t>(static_cast<std::int16_t>(v.q));
  return (static_cast<std::uint32_t>(i) << 16) | q;
}

CosSin cordic_rotate(std::uint32_t phase24) {
  const auto& t = tables();
  phase24 &= kPhaseAccMask;
  // Reduce to [-1/8, 1/8) turn plus a quadrant count.
  unsigned quadrant = phase24 >> 22;
  std::int64_t residual = phase24 & ((1u << 22) - 1);
  if (residual >= (1 << 21)) {
    residual -= (1 << 22);
    quadrant = (quadrant + 1) & 3;
  }
  std::int64_t z = residual << (kAngleBits - kPhaseAccBits);
  std::int64_t x = t.x0;
  std::int64_t y = 0;
  for (unsigned i = 0; i < kCordicIterations; ++i) {
    const std::int64_t dx = y >> i;
    const std::int64_t dy = x >> i;
    if (z >= 0) {
      x -= dx;
      y += dy;
      z -= t.atan[i];
    } else {
      x += dx;
      y -= dy;
      z += t.atan[i];
    }
  }
  const std::int32_t c = round_shift_q30_to_fs(x);
  const std::int32_t s = round_shift_q30_to_fs(y);
  switch (quadrant) {
    case 0: return {c, s};
    case 1: return {-s, c};
    case 2: return {-c, -s};
    default: return {s, -c};
  }
}

std::uint32_t dlo_phase(std::uint32_t freq_word, std::uint32_t phase_word, std::uint64_t n) {
  const std::uint64_t fw = freq_word & kPhaseAccMask;
  const std::uint64_t steps = n & kPhaseAccMask;
  const std::uint64_t offset =
      static_cast<std::uint64_t>(phase_word & (cmd::kPhaseSteps - 1))
      << (kPhaseAccBits - cmd::kPhaseBits);
  return static_cast<std::uint32_t>((fw * steps + offset) & kPhaseAccMask);
}

IQ complex_mul(IQ a, CosSin r, bool conjugate_r) {
  const std::int64_t ai = a.i, aq = a.q, c = r.cos, s = conjugate_r ? -r.sin : r.sin;
  return {div_round_fs(ai * c - aq * s), div_round_fs(ai * s + aq * c)};
}

IQ up_convert_sample(IQ env, std::uint32_t freq_word, std::uint32_t phase_word,
                     std::uint64_t n) {
  return complex_mul(env, cordic_rotate(dlo_phase(freq_word, phase_word, n)));
}

IQ down_convert_sample(IQ adc, std::uint32_t freq_word, std::uint32_t phase_word,
                       std::uint64_t n) {
  return complex_mul(adc, cordic_rotate(dlo_phase(freq_word, phase_word, n)), true);
}

SwitchResult switch_and_sum(std::span<const ElementStream> inputs, unsigned n_pairs,
                            std::uint64_t length) {
  std::vector<std::vector<std::int64_t>> si(n_pairs, std::vector<std::int64_t>(length)),
      sq(n_pairs, std::vector<std::int64_t>(length));
  for (const auto& in : inputs) {
    if (in.destination >= n_pairs) throw SimError("switch input routed to a missing DAC pair");
    for (std::size_t k = 0; k < in.samples.size(); ++k) {
      const std::uint64_t n = in.offset + k;
      if (n >= length) break;
      si[in.destination][n] += in.samples[k].i;
      sq[in.destination][n] += in.samples[k].q;
    }
  }
  SwitchResult out;
  out.pairs.assign(n_pairs, std::vector<IQ>(length));
  for (unsigned p = 0; p < n_pairs; ++p) {
    for (std::uint64_t n = 0; n < length; ++n) {
      const auto ci = std::clamp<std::int64_t>(si[p][n], -kFullScale, kFullScale);
      const auto cq = std::clamp<std::int64_t>(sq[p][n], -kFullScale, kFullScale);
      if (ci != si[p][n] || cq != sq[p][n]) ++out.saturations;
      out.pairs[p][n] = {static_cast<std::int32_t>(ci), static_cast<std::int32_t>(cq)};
    }
  }
  return out;
}

}  // namespace qubic::dsp
