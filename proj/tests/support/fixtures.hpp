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

#include <string>

#include "qubic/chipcfg.hpp"

namespace qubic::test {

inline std::string config_path(const std::string& name) {
  return std::string(QUBIC_SOURCE_DIR) + "/configs/" + name;
}

inline cfg::ChipConfig bench_chip() { return cfg::load_chip_config_file(config_path("chip.json")); }

inline cfg::GatePulseSpec bench_gates() {
  return cfg::load_gate_spec_file(config_path("gates.json"), bench_chip());
}

inline cfg::HardwareConfig bench_hardware() {
  return cfg::load_hardware_config_file(config_path("hardware.json"));
}

}  // namespace qubic::test
