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

#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "qubic/chipcfg.hpp"

using namespace qubic::cfg;

namespace {

template <class F>
ConfigError expect_error(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected ConfigError");
  return ConfigError(ConfigError::Kind::parse, "", "");
}

const char* kChip = R"({"qubits":{"Q6":{"drive_freq":5.5e9,"readout_freq":6.52e9}}})";

}  // namespace

TEST_CASE("chip config with one qubit") {
  auto chip = load_chip_config(kChip);
  REQUIRE(chip.qubits.size() == 1);
  CHECK(chip.qubits.at("Q6").drive_freq == 5.5e9);
  CHECK(chip.qubits.at("Q6").readout_freq == 6.52e9);
  CHECK(chip.resolve("Q6.freq") == 5.5e9);
  CHECK(chip.resolve("Q6.readfreq") == 6.52e9);
  CHECK_FALSE(chip.resolve("Q6.phase"));
  CHECK_FALSE(chip.resolve("Q9.freq"));
}

TEST_CASE("empty chip is valid") { CHECK(load_chip_config(R"({"qubits":{}})").qubits.empty()); }

TEST_CASE("chip errors name the offending path") {
  auto e = expect_error([] {
    load_chip_config(R"({"qubits":{"Q0":{"drive_freq":-1,"readout_freq":6e9}}})");
  });
  CHECK(e.kind() == ConfigError::Kind::invariant);
  CHECK(e.path() == "Q0.drive_freq");

  CHECK(expect_error([] { load_chip_config("{\"qubits\": "); }).kind() ==
        ConfigError::Kind::parse);
  e = expect_error([] { load_chip_config(R"({"qubits":{},"extra":1})"); });
  CHECK(e.kind() == ConfigError::Kind::schema);
  CHECK(e.path() == "extra");
  e = expect_error([] { load_chip_config(R"({"qubits":{"Q0":{"drive_freq":5e9}}})"); });
  CHECK(e.path() == "qubits.Q0.readout_freq");
  CHECK(expect_error([] { load_chip_config(R"({"version":2,"qubits":{}})"); }).path() ==
        "version");
  e = expect_error([] {
    load_chip_config(R"({"qubits":{"Q0":{"drive_freq":5e9,"readout_freq":6e9},
                                    "Q0":{"drive_freq":5e9,"readout_freq":6e9}}})");
  });
  CHECK(e.kind() == ConfigError::Kind::schema);
}

TEST_CASE("gate spec resolves the Y180 example") {
  auto chip = load_chip_config(kChip);
  auto spec = load_gate_spec(R"({"gates":{"Q6.Y180":[{"dest":"Q6.qdrv","t0":0,"twidth":96e-9,
      "fcarrier":"Q6.freq","pcarrier":"numpy.pi/2","amp":0.873,
      "env":{"kind":"DRAG","params":{"sigma_fraction":0.25,"alpha":0.5}}}]}})",
                             chip);
  const auto& pulses = spec.gates.at("Q6.Y180");
  REQUIRE(pulses.size() == 1);
  CHECK(pulses[0].dest == "Q6.qdrv");
  CHECK(pulses[0].fcarrier == 5.5e9);
  CHECK(pulses[0].fcarrier_ref == "Q6.freq");
  CHECK(pulses[0].pcarrier == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(pulses[0].amp == 0.873);
  CHECK(pulses[0].env.kind == EnvelopeKind::drag);
}

TEST_CASE("gate spec edge cases") {
  auto chip = load_chip_config(kChip);
  auto zero = load_gate_spec(R"({"gates":{"Q6.I":[{"dest":"Q6.qdrv","twidth":4e-9,
      "fcarrier":1e8,"amp":0,"env":{"kind":"square"}}]}})",
                             chip);
  CHECK(zero.gates.at("Q6.I")[0].amp == 0);

  auto e = expect_error([&] {
    load_gate_spec(R"({"gates":{"Q9.X":[{"dest":"Q9.qdrv","twidth":4e-9,
        "fcarrier":"Q9.freq","amp":0.5,"env":{"kind":"square"}}]}})",
                   chip);
  });
  CHECK(e.kind() == ConfigError::Kind::unresolved);
  CHECK(e.path() == "gates.Q9.X[0].fcarrier");

  CHECK(expect_error([&] {
          load_gate_spec(R"({"gates":{"g":[{"dest":"a","twidth":4e-9,"fcarrier":1,
              "amp":1.5,"env":{"kind":"square"}}]}})",
                         chip);
        }).path() == "gates.g[0].amp");
  CHECK(expect_error([&] {
          load_gate_spec(R"({"gates":{"g":[{"dest":"a","twidth":4e-9,"fcarrier":1,
              "amp":0.5,"env":{"kind":"sinc"}}]}})",
                         chip);
        }).path() == "gates.g[0].env.kind");
  CHECK(expect_error([&] {
          load_gate_spec(R"({"gates":{"g":[{"dest":"a","twidth":0,"fcarrier":1,
              "amp":0.5,"env":{"kind":"square"}}]}})",
                         chip);
        }).path() == "gates.g[0].twidth");
  CHECK(expect_error([&] {
          load_gate_spec(R"({"gates":{"g":[{"dest":"a","twidth":4e-9,"fcarrier":1,
              "amp":0.5,"env":{"kind":"DRAG","params":{"alpha":1}}}]}})",
                         chip);
        }).path() == "gates.g[0].env.params.sigma_fraction");
  CHECK(expect_error([&] {
          load_gate_spec(R"({"gates":{"g":[{"dest":"a","twidth":4e-9,"fcarrier":1,
              "amp":0.5,"env":{"kind":"custom_samples","samples":[[0.9,0.9]]}}]}})",
                         chip);
        }).path() == "gates.g[0].env.samples[0]");
}

TEST_CASE("phase expressions") {
  const double pi = std::numbers::pi;
  CHECK(parse_phase_expr("numpy.pi/2") == doctest::Approx(pi / 2));
  CHECK(parse_phase_expr("-pi") == doctest::Approx(-pi));
  CHECK(parse_phase_expr("3*pi/4") == doctest::Approx(3 * pi / 4));
  CHECK(parse_phase_expr("0.25") == doctest::Approx(0.25));
  CHECK_FALSE(parse_phase_expr("tau"));
  CHECK_FALSE(parse_phase_expr("pi/0"));
}

TEST_CASE("hardware defaults and errors") {
  auto hw = load_hardware_config("{}");
  CHECK(hw.dac_sample_rate == 1e9);
  CHECK(hw.dsp_clock == 250e6);
  CHECK(hw.envelope_buffer_depth == 1024);
  CHECK(hw.command_buffer_depth == 65536);
  CHECK(hw.samples_per_cycle() == 4);

  auto e = expect_error([] { load_hardware_config(R"({"dac_sample_rate":1e9,"dsp_clock":333e6})"); });
  CHECK(e.path() == "dsp_clock");
  e = expect_error([] { load_hardware_config(R"({"envelope_buffer_depth":8192})"); });
  CHECK(e.path() == "envelope_buffer_depth");
  CHECK(load_hardware_config(R"({"envelope_buffer_depth":4096})").envelope_buffer_depth == 4096);
  e = expect_error([] { load_hardware_config(R"({"n_dac_pairs":5})"); });
  CHECK(e.path() == "n_dac_pairs");
  e = expect_error([] {
    load_hardware_config(
        R"({"n_dac_pairs":2,"channel_map":{"Q0.qdrv":{"element":0,"destination":2,"direction":"up"}}})");
  });
  CHECK(e.path() == "channel_map.Q0.qdrv.destination");
  e = expect_error([] {
    load_hardware_config(
        R"({"n_processing_elements_down":1,"channel_map":{"Q0.read":{"element":1,"destination":0,"direction":"down"}}})");
  });
  CHECK(e.path() == "channel_map.Q0.read.element");
}

TEST_CASE("global element numbering puts up elements first") {
  auto hw = qubic::test::bench_hardware();
  CHECK(hw.global_element(hw.channel_map.at("Q6.qdrv")) == 0);
  CHECK(hw.global_element(hw.channel_map.at("Q6.read")) == 8);
  CHECK(hw.is_down_element(8));
  CHECK_FALSE(hw.is_down_element(7));
}

TEST_CASE("bench configs load") {
  auto chip = qubic::test::bench_chip();
  auto gates = qubic::test::bench_gates();
  CHECK(gates.gates.at("Q6.Y180")[0].fcarrier == chip.qubits.at("Q6").drive_freq);
  CHECK(gates.gates.at("Q6.read")[0].fcarrier == chip.qubits.at("Q6").readout_freq);
}

TEST_CASE("load -> serialize -> load is identity on random configs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> freq(1e6, 9e9), unit(0, 1);
  const char* kinds[] = {"DRAG", "gaussian", "square", "cos_edge_square", "custom_samples"};
  for (int trial = 0; trial < 200; ++trial) {
    ChipConfig chip;
    const int nq = static_cast<int>(rng() % 5);
    for (int q = 0; q < nq; ++q) chip.qubits["Q" + std::to_string(q)] = {freq(rng), freq(rng)};
    if (trial % 3 == 0) chip.metadata["owner"] = "lab " + std::to_string(trial);
    auto chip2 = load_chip_config(to_json(chip));
    REQUIRE(chip2 == chip);

    GatePulseSpec spec;
    for (int g = 0; g < 4; ++g) {
      auto& pulses = spec.gates["G" + std::to_string(g)];
      for (int p = 0; p < 1 + static_cast<int>(rng() % 3); ++p) {
        PulseDef d;
        d.dest = "Q0.qdrv";
        d.t0 = unit(rng) * 1e-7;
        d.twidth = 1e-9 * (1 + rng() % 200);
        if (nq > 0 && rng() % 2) {
          d.fcarrier_ref = "Q0.freq";
          d.fcarrier = chip.qubits.at("Q0").drive_freq;
        } else {
          d.fcarrier = freq(rng);
        }
        d.pcarrier = (unit(rng) - 0.5) * 10;
        d.amp = unit(rng);
        auto kind = *envelope_kind_from_string(kinds[rng() % 5]);
        d.env.kind = kind;
        for (const auto& name : required_params(kind))
          d.env.params[name] = name == "edge_fraction" ? 0.49 * unit(rng) + 1e-3 : unit(rng) + 0.01;
        if (kind == EnvelopeKind::custom_samples)
          for (int s = 0; s < 5; ++s) d.env.samples.emplace_back(unit(rng) * 0.7, -unit(rng) * 0.7);
        pulses.push_back(d);
      }
    }
    REQUIRE(load_gate_spec(to_json(spec), chip) == spec);

    HardwareConfig hw;
    hw.n_dac_pairs = 1 + static_cast<unsigned>(rng() % 4);
    hw.envelope_buffer_depth = 1 + static_cast<unsigned>(rng() % 4096);
    hw.dsp_clock = hw.dac_sample_rate / static_cast<double>(1 + rng() % 8);
    for (int c = 0; c < 4; ++c) {
      ChannelInfo ch;
      ch.direction = rng() % 2 ? Direction::up : Direction::down;
      ch.element = static_cast<unsigned>(rng() % 4);
      ch.destination = static_cast<unsigned>(rng() % hw.n_dac_pairs);
      ch.lo_freq = freq(rng);
      hw.channel_map["C" + std::to_string(c)] = ch;
    }
    hw.discriminators[0] = {unit(rng), unit(rng) * 100};
    REQUIRE(load_hardware_config(to_json(hw)) == hw);
  }
}
