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

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qubic/chipcfg.hpp"

namespace qubic::env {

class EnvelopeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Complex baseband samples at the DAC rate, |z| <= 1.
struct Envelope {
  std::vector<std::complex<double>> samples;
  double dt = 1e-9;
};

inline constexpr std::int32_t kFullScale = 32767;

/// Number of samples for `twidth` at step `dt`. Throws unless the ratio is
/// a positive integer to within 1e-9 relative.
std::size_t exact_sample_count(double twidth, double dt);

/// Rounds `twidth` up to whole samples (the compiler's rounding rule).
std::size_t ceil_sample_count(double twidth, double dt);

/// Evaluates the envelope kernel on the grid t_n = n*dt, n = 0..N-1 with
/// N = twidth/dt. Kernels are peak-normalised; custom samples are returned
/// verbatim.
Envelope generate(const cfg::EnvelopeSpec& spec, double twidth, double dt);

/// Generates directly from a sample count.
Envelope generate_samples(const cfg::EnvelopeSpec& spec, std::size_t n, double dt);

/// One packed word: I in bits 31..16, Q in bits 15..0, both two's
/// complement with full scale +/-32767.
using PackedWord = std::uint32_t;

std::int16_t quantize(double x);
PackedWord pack_sample(std::complex<double> z);
std::complex<double> unpack_sample(PackedWord w);

std::vector<PackedWord> pack(const Envelope& e);
std::vector<PackedWord> pack(std::span<const std::complex<double>> samples);
Envelope unpack(std::span<const PackedWord> words, double dt = 1e-9);

/// Multiplies every sample by `amp`.
Envelope scaled(Envelope e, double amp);

}  // namespace qubic::env
