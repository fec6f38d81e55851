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

#include "qubic/envgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qubic::env {

std::size_t exact_sample_count(double twidth, double dt) {
  if (!(twidth > 0) || !(dt > 0))
    throw EnvelopeError("twidth and dt must be positive");
  const double ratio = twidth / dt;
  const double n = std::round(ratio);
  if (n < 1 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
    throw EnvelopeError("twidth/dt = " + std::to_string(ratio) + " is not a whole sample count");
  return static_cast<std::size_t>(n);
}

std::size_t ceil_sample_count(double twidth, double dt) {
  if (!(twidth > 0) || !(dt > 0))
    throw EnvelopeError("twidth and dt must be positive");
  const double ratio = twidth / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(std::max(1.0, n));
  return static_cast<std::size_t>(std::ceil(ratio));
}

namespace {

void peak_normalise(std::vector<std::complex<double>>& s) {
  double peak = 0;
  for (const auto& z : s) peak = std::max(peak, std::abs(z));
  if (peak > 0)
    for (auto& z : s) z /= peak;
}

}  // namespace

Envelope generate_samples(const cfg::EnvelopeSpec& spec, std::size_t n, double dt) {
  if (n == 0) throw EnvelopeError("envelope needs at least one sample");
  cfg::validate(spec, "env");
  Envelope e;
  e.dt = dt;
  e.samples.resize(n);
  const double width = static_cast<double>(n) * dt;

  switch (spec.kind) {
    case cfg::EnvelopeKind::square:
      std::fill(e.samples.begin(), e.samples.end(), std::complex<double>(1, 0));
      break;

    case cfg::EnvelopeKind::gaussian:
    case cfg::EnvelopeKind::drag: {
      const double sigma = spec.params.at("sigma_fraction") * width;
      const double alpha =
          spec.kind == cfg::EnvelopeKind::drag ? spec.params.at("alpha") : 0.0;
      const double mu = width / 2;
      for (std::size_t i = 0; i < n; ++i) {
        // x = (t - mu)/sigma; sigma * dg/dt = -x * g
        const double x = (static_cast<double>(i) * dt - mu) / sigma;
        const double g = std::exp(-0.5 * x * x);
        e.samples[i] = {g, -alpha * x * g};
      }
      peak_normalise(e.samples);
      break;
    }

    case cfg::EnvelopeKind::cos_edge_square: {
      const double ramp = spec.params.at("edge_fraction") * width;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double edge = std::min(t, width - t);
        const double v =
            edge < ramp ? 0.5 * (1 - std::cos(std::numbers::pi * edge / ramp)) : 1.0;
        e.samples[i] = {v, 0};
      }
      peak_normalise(e.samples);
      break;
    }

    case cfg::EnvelopeKind::custom_samples:
      if (spec.samples.size() != n)
        throw EnvelopeError("custom_samples has " + std::to_string(spec.samples.size()) +
                            " samples but the pulse needs " + std::to_string(n));
      e.samples = spec.samples;
      break;
  }
  return e;
}

Envelope generate(const cfg::EnvelopeSpec& spec, double twidth, double dt) {
  return generate_samples(spec, exact_sample_count(twidth, dt), dt);
}

std::int16_t quantize(double x) {
  // lround rounds half away from zero
  long v = std::lround(x * kFullScale);
  v = std::clamp<long>(v, -kFullScale, kFullScale);
  return static_cast<std::int16_t>(v);
}

PackedWord pack_sample(std::complex<double> z) {
  if (!(std::abs(z) <= 1.0 + 1e-12))
    throw EnvelopeError("envelope sample magnitude " + std::to_string(std::abs(z)) +
                        " exceeds full scale");
  const auto i = static_cast<std::uint16_t>(quantize(z.real()));
  const auto q = static_cast<std::uint16_t>(quantize(z.imag()));
  return (static_cast<PackedWord>(i) << 16) | q;
}

std::complex<double> unpack_sample(PackedWord w) {
  const auto i = static_cast<std::int16_t>(w >> 16);
  const auto q = static_cast<std::int16_t>(w & 0xFFFF);
  return {static_cast<double>(i) / kFullScale, static_cast<double>(q) / kFullScale};
}

std::vector<PackedWord> pack(std::span<const std::complex<double>> samples) {
  std::vector<PackedWord> out;
  out.reserve(samples.size());
  for (const auto& z : samples) out.push_back(pack_sample(z));
  return out;
}

std::vector<PackedWord> pack(const Envelope& e) { return pack(std::span(e.samples)); }

Envelope unpack(std::span<const PackedWord> words, double dt) {
  Envelope e;
  e.dt = dt;
  e.samples.reserve(words.size());
  for (auto w : words) e.samples.push_back(unpack_sample(w));
  return e;
}

Envelope scaled(Envelope e, double amp) {
  for (auto& z : e.samples) z *= amp;
  return e;
}

}  // namespace qubic::env
