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
#include <complex>
#include <numbers>
#include <random>

#include "qubic/dspsim.hpp"
#include "qubic/envgen.hpp"

using namespace qubic;
using namespace qubic::dsp;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

SimConfig small_config() {
  SimConfig c;
  c.n_up = 4;
  c.n_down = 2;
  c.n_pairs = 2;
  c.acc_depth = 10;
  c.acq_depth = 512;
  return c;
}

cmd::CommandWord command(std::uint32_t trig, unsigned element, std::uint32_t start,
                         std::uint32_t length, std::uint32_t freq_word, std::uint32_t phase_word,
                         unsigned dest, bool condition = false) {
  cmd::CommandFields f;
  f.trig_t = trig;
  f.element = element;
  f.start = start;
  f.length = length;
  f.freq_word = freq_word;
  f.phase_word = phase_word;
  f.destination = dest;
  f.condition = condition;
  return cmd::encode(f);
}

std::vector<std::uint32_t> constant_words(std::size_t n, std::complex<double> z) {
  return std::vector<std::uint32_t>(n, env::pack_sample(z));
}

double fs_err(std::int32_t v, double exact) { return std::abs(v / double(kFullScale) - exact); }

// One LSB of slack covers the CORDIC residual angle.
bool near(IQ a, IQ b, int tol = 1) { return std::abs(a.i - b.i) <= tol && std::abs(a.q - b.q) <= tol; }

}  // namespace

TEST_CASE("CORDIC spot values") {
  auto z = cordic_rotate(0);
  CHECK(fs_err(z.cos, 1) <= std::ldexp(1.0, -14));
  CHECK(fs_err(z.sin, 0) <= std::ldexp(1.0, -14));
  z = cordic_rotate(1u << 22);
  CHECK(fs_err(z.cos, 0) <= std::ldexp(1.0, -14));
  CHECK(fs_err(z.sin, 1) <= std::ldexp(1.0, -14));
  z = cordic_rotate(1u << 23);
  CHECK(fs_err(z.cos, -1) <= std::ldexp(1.0, -14));
}

TEST_CASE("CORDIC against double-precision trigonometry") {
  std::mt19937_64 rng(17);
  double worst = 0;
  for (int k = 0; k < 100000; ++k) {
    const auto p = static_cast<std::uint32_t>(rng() & kPhaseAccMask);
    const double a = kTwoPi * p / double(1u << 24);
    const auto z = cordic_rotate(p);
    worst = std::max({worst, fs_err(z.cos, std::cos(a)), fs_err(z.sin, std::sin(a))});
  }
  CHECK(worst <= std::ldexp(1.0, -14));
  // exhaustive sweep of octant boundaries
  for (std::uint32_t p = 0; p < (1u << 24); p += (1u << 21) - 1) {
    const double a = kTwoPi * p / double(1u << 24);
    const auto z = cordic_rotate(p);
    CHECK(fs_err(z.cos, std::cos(a)) <= std::ldexp(1.0, -14));
  }
}

TEST_CASE("phase accumulator wraps exactly") {
  for (std::uint32_t fw : {1u, 12345u, 1677722u, (1u << 24) - 1}) {
    PhaseAccumulator acc(fw, 777);
    for (std::uint32_t n = 0; n < (1u << 24); ++n) acc.step();
    CHECK(acc.value() == 777);
  }
  CHECK(dlo_phase(5, 0, 1u << 24) == 0);
  CHECK(dlo_phase(0, 4096, 0) == (1u << 22));
}

TEST_CASE("up-conversion spot values") {
  const IQ one{kFullScale, 0};
  for (std::uint64_t n : {0u, 1u, 17u}) CHECK(near(up_convert_sample(one, 0, 0, n), one));
  auto neg = up_convert_sample(one, 0, cmd::phase_to_word(std::numbers::pi), 3);
  CHECK(std::abs(neg.i + kFullScale) <= 1);
  CHECK(std::abs(neg.q) <= 1);
  // 250 MHz at 1 GSPS: 1, j, -1, -j
  const std::uint32_t fw = cmd::freq_to_word(250e6, 1e9);
  const std::complex<double> expect[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (std::uint64_t n = 0; n < 16; ++n) {
    auto z = up_convert_sample(one, fw, 0, n).to_complex();
    CHECK(std::abs(z - expect[n % 4]) <= std::ldexp(1.0, -14) * 1.5);
  }
}

TEST_CASE("down(up(e)) recovers the envelope") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> r(0, 1), ph(-std::numbers::pi, std::numbers::pi);
  const double bound = 2 * (std::ldexp(1.0, -14) + std::ldexp(1.0, -15));
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto fw = static_cast<std::uint32_t>(rng() & kPhaseAccMask);
    const auto pw = static_cast<std::uint32_t>(rng() & 0x3FFF);
    for (std::uint64_t n = 0; n < 200; ++n) {
      const IQ e = from_packed(env::pack_sample(std::polar(r(rng), ph(rng))));
      const IQ back = down_convert_sample(up_convert_sample(e, fw, pw, n), fw, pw, n);
      worst = std::max({worst, std::abs(back.i - e.i) / double(kFullScale),
                        std::abs(back.q - e.q) / double(kFullScale)});
    }
  }
  CHECK(worst <= bound);
}

TEST_CASE("switch and sum") {
  ElementStream a{0, 2, {{100, -50}, {200, 0}}};
  auto one = switch_and_sum(std::span(&a, 1), 2, 5);
  CHECK(one.pairs[0][2] == IQ{100, -50});
  CHECK(one.pairs[0][3] == IQ{200, 0});
  CHECK(one.pairs[1][2] == IQ{});
  CHECK(one.saturations == 0);

  const auto v = static_cast<std::int32_t>(std::lround(0.6 * kFullScale));
  std::vector<ElementStream> two = {{0, 0, {{v, 0}}}, {0, 0, {{v, 0}}}};
  auto sat = switch_and_sum(two, 1, 1);
  CHECK(sat.pairs[0][0].i == kFullScale);
  CHECK(sat.saturations > 0);

  std::vector<ElementStream> split = {{0, 0, {{v, 1}}}, {1, 0, {{-v, 2}}}};
  auto ind = switch_and_sum(split, 2, 1);
  CHECK(ind.pairs[0][0] == IQ{v, 1});
  CHECK(ind.pairs[1][0] == IQ{-v, 2});

  // linearity below saturation
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    ElementStream x{0, 0, {}}, y{0, 0, {}}, xy{0, 0, {}};
    for (int k = 0; k < 32; ++k) {
      IQ p{static_cast<std::int32_t>(rng() % 20000) - 10000, static_cast<std::int32_t>(rng() % 20000) - 10000};
      IQ q{static_cast<std::int32_t>(rng() % 20000) - 10000, static_cast<std::int32_t>(rng() % 20000) - 10000};
      x.samples.push_back(p);
      y.samples.push_back(q);
      xy.samples.push_back({p.i + q.i, p.q + q.q});
    }
    auto sx = switch_and_sum(std::span(&x, 1), 1, 32), sy = switch_and_sum(std::span(&y, 1), 1, 32);
    std::vector<ElementStream> both = {x, y};
    auto sb = switch_and_sum(both, 1, 32), sxy = switch_and_sum(std::span(&xy, 1), 1, 32);
    for (int k = 0; k < 32; ++k) {
      CHECK(sb.pairs[0][k] == sxy.pairs[0][k]);
      CHECK(sb.pairs[0][k].i == sx.pairs[0][k].i + sy.pairs[0][k].i);
    }
  }
}

TEST_CASE("loopback roundtrip accumulates the envelope") {
  const auto cfgs = small_config();
  MachineImage img;
  img.envelopes.push_back({0, 0, constant_words(100, {1, 0})});
  const std::uint32_t fw = cmd::freq_to_word(100e6, 1e9), pw = 1234;
  img.commands.push_back(command(2, 0, 0, 100, fw, pw, 1));
  img.commands.push_back(command(2, cfgs.n_up + 0, 0, 100, fw, pw, 0));
  Loopback lb(1, 0);
  RunOptions opt;
  opt.shots = 3;
  auto r = run_image(cfgs, img, opt, lb);
  REQUIRE(r.acc.elements[0].size() == 3);
  for (const auto& e : r.acc.elements[0]) {
    CHECK(std::abs(e.to_complex() - std::complex<double>(100, 0)) < 100 * 2e-4);
  }
  CHECK(r.faults.empty());
  CHECK(r.shots_completed == 3);
}

TEST_CASE("full-turn orthogonality matches the geometric series") {
  // input at f + k/N turns per sample, DLO at f, window N: sum vanishes
  const std::uint32_t N = 4096;
  const std::uint32_t fw = cmd::freq_to_word(50e6, 1e9);
  for (std::uint32_t k : {1u, 3u}) {
    const std::uint32_t offset = k * ((1u << 24) / N);
    SimConfig c = small_config();
    c.envelope_depth = 4096;
    MachineImage img;
    img.envelopes.push_back({0, 0, constant_words(N - 1, {0.9, 0})});
    img.commands.push_back(command(0, 0, 0, N - 1, fw + offset, 0, 0));
    img.commands.push_back(command(0, c.n_up, 0, N - 1, fw, 0, 0));
    Loopback lb(0, 0);
    auto r = run_image(c, img, {}, lb);
    REQUIRE(r.acc.elements[0].size() == 1);
    // oracle: 0.9 * sum_{n<N-1} e^{j 2 pi k n / N} = -0.9 e^{j 2 pi k (N-1)/N}
    std::complex<double> oracle = 0;
    for (std::uint32_t n = 0; n + 1 < N; ++n) oracle += 0.9 * std::polar(1.0, kTwoPi * k * n / N);
    CHECK(std::abs(r.acc.elements[0][0].to_complex() - oracle) < 0.05);
    CHECK(std::abs(oracle) == doctest::Approx(0.9).epsilon(1e-9));
  }
}

TEST_CASE("zero input and zero shots") {
  MachineImage img;
  img.commands.push_back(command(0, 4, 0, 50, 123, 0, 0));
  OpenLoop open;
  auto r = run_image(small_config(), img, {}, open);
  REQUIRE(r.acc.elements[0].size() == 1);
  CHECK(r.acc.elements[0][0] == AccEntry{0, 0});
  RunOptions none;
  none.shots = 0;
  auto z = run_image(small_config(), img, none, open);
  CHECK(z.acc.total() == 0);
  CHECK(z.shots_completed == 0);
}

TEST_CASE("condition-gated pulse never plays while the flag is 0") {
  SimConfig c = small_config();
  c.discriminators[0] = {0, 1e12};  // flag can never be set
  MachineImage img;
  img.envelopes.push_back({0, 0, constant_words(20, {0.5, 0})});
  img.commands.push_back(command(0, c.n_up, 0, 8, 0, 0, 0));       // readout -> flag 0
  img.commands.push_back(command(4, 0, 0, 20, 0, 0, 0, true));     // gated on flag 0
  OpenLoop open;
  RunOptions opt;
  opt.shots = 4;
  opt.record_dac = true;
  auto r = run_image(c, img, opt, open);
  for (const auto& s : r.dac[0]) CHECK(s == IQ{});
  CHECK(r.state_flags[0] == 0);

  // with a threshold the loopback clears, the flag rises and the pulse plays
  c.discriminators[0] = {0, 1.0};
  MachineImage img2;
  img2.envelopes.push_back({0, 0, constant_words(20, {0.5, 0})});
  img2.commands.push_back(command(0, 1, 0, 8, 0, 0, 1));             // drive pair 1
  img2.commands.push_back(command(0, c.n_up, 0, 8, 0, 0, 0));        // integrate -> flag 0
  img2.envelopes.push_back({1, 0, constant_words(8, {0.5, 0})});
  img2.commands.push_back(command(4, 0, 0, 20, 0, 0, 0, true));
  Loopback lb(1, 0);
  auto r2 = run_image(c, img2, opt, lb);
  CHECK(r2.state_flags[0] == 1);
  CHECK(std::abs(r2.dac[0][16].i - std::lround(0.5 * kFullScale)) <= 1);
}

TEST_CASE("faults: unwritten envelope and preemption") {
  MachineImage img;
  img.envelopes.push_back({0, 0, constant_words(4, {0.5, 0})});
  img.envelopes.push_back({1, 0, constant_words(8, {0.25, 0})});
  img.commands.push_back(command(0, 0, 0, 10, 0, 0, 0));  // reads past written region
  img.commands.push_back(command(0, 1, 0, 8, 0, 0, 1));
  img.commands.push_back(command(1, 1, 0, 4, 0, 0, 1));   // starts while element 1 is busy
  OpenLoop open;
  RunOptions opt;
  opt.record_dac = true;
  auto r = run_image(small_config(), img, opt, open);
  REQUIRE(r.faults.size() == 2);
  CHECK(r.faults[0].kind == Fault::Kind::element_preempted);
  CHECK(r.faults[0].sample == 4);
  CHECK(r.faults[1].kind == Fault::Kind::envelope_range);
  CHECK(r.faults[1].element == 0);
  const IQ half{static_cast<std::int32_t>(std::lround(0.5 * kFullScale)), 0};
  CHECK(near(r.dac[0][3], half));
  for (int n = 4; n < 10; ++n) CHECK(r.dac[0][n] == IQ{});  // unwritten reads emit zero
  CHECK(r.dac[1][7] != IQ{});
  CHECK(r.dac[1][8] == IQ{});  // replacement command ended after 4 samples
  CHECK(format_fault_log(r.faults).find("element_preempted") != std::string::npos);
}

TEST_CASE("load rejects images that do not fit") {
  Simulator sim(small_config());
  MachineImage img;
  img.envelopes.push_back({9, 0, {1}});
  CHECK_THROWS_AS(sim.load(img), SimError);
  img.envelopes = {{0, 1020, constant_words(10, {0, 0})}};
  CHECK_THROWS_AS(sim.load(img), SimError);
  img.envelopes.clear();
  img.commands = {command(0, 0, 0, 1, 0, 0, 3)};
  CHECK_THROWS_AS(sim.load(img), SimError);
}

TEST_CASE("acc buffer stops the run when full") {
  SimConfig c = small_config();
  MachineImage img;
  img.commands.push_back(command(0, c.n_up, 0, 4, 0, 0, 0));
  img.commands.push_back(command(1, c.n_up, 0, 4, 0, 0, 0));
  OpenLoop open;
  RunOptions opt;
  opt.shots = 100;
  auto r = run_image(c, img, opt, open);
  CHECK(r.acc.elements[0].size() == c.acc_depth);
  CHECK(r.acc_full);
  CHECK(r.shots_completed == c.acc_depth / 2);
}

TEST_CASE("acq taps and capture limits") {
  SimConfig c = small_config();
  MachineImage img;
  img.envelopes.push_back({0, 0, constant_words(64, {0.25, 0})});
  const std::uint32_t fw = cmd::freq_to_word(125e6, 1e9);
  img.commands.push_back(command(0, 0, 0, 64, fw, 0, 0));
  Loopback lb(0, 3);
  RunOptions opt;
  opt.acq = {AcqTap::adc, 0, 0, 0, 0};
  opt.record_dac = true;
  auto r = run_image(c, img, opt, lb);
  REQUIRE(r.acq.samples.size() == r.shot_length);
  for (std::size_t n = 0; n < 3; ++n) CHECK(r.acq.samples[n] == IQ{});
  for (std::size_t n = 3; n < 64; ++n) CHECK(r.acq.samples[n] == r.dac[0][n - 3]);

  opt.acq = {AcqTap::dlo, 0, 0, 8, 16};
  auto d = run_image(c, img, opt, lb);
  REQUIRE(d.acq.samples.size() == 16);
  const auto expect = cordic_rotate(dlo_phase(fw, 0, 8));
  CHECK(d.acq.samples[0] == IQ{expect.cos, expect.sin});

  opt.acq = {AcqTap::dac, 0, 0, 0, c.acq_depth + 1};
  CHECK_THROWS_WITH_AS(run_image(c, img, opt, lb), doctest::Contains("acq capture overflow"),
                       SimError);

  opt.acq = {AcqTap::dac, 0, 0, 0, 32};
  auto t = run_image(c, img, opt, lb);
  CHECK(acq_from_binary(acq_to_binary(t.acq)) == t.acq);
  CHECK(acq_to_csv(t.acq).rfind("sample,i,q\n", 0) == 0);
}

TEST_CASE("simulator determinism") {
  std::mt19937_64 rng(41);
  SimConfig c = small_config();
  MachineImage img;
  for (unsigned e = 0; e < c.n_up; ++e) {
    std::vector<std::uint32_t> w(64);
    for (auto& x : w) x = env::pack_sample(std::polar(0.2, double(rng() % 100)));
    img.envelopes.push_back({e, 0, w});
    img.commands.push_back(command(e * 3, e, 0, 64, rng() & kPhaseAccMask, rng() & 0x3FFF, e % 2));
  }
  img.commands.push_back(command(1, c.n_up, 0, 200, 77, 5, 0));
  Loopback lb1(0, 2), lb2(0, 2);
  RunOptions opt;
  opt.shots = 5;
  opt.record_dac = true;
  CHECK(run_image(c, img, opt, lb1) == run_image(c, img, opt, lb2));
}
