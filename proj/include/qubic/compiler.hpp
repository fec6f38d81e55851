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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qubic/chipcfg.hpp"
#include "qubic/cmdcodec.hpp"
#include "qubic/dspsim.hpp"

namespace qubic::compiler {

class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { optm, runc };

std::string_view to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Circuit

struct GateOverrides {
  std::optional<double> amp;
  std::optional<std::variant<double, std::string>> fcarrier;
  std::optional<double> pcarrier;
  std::optional<double> twidth;
  std::map<std::string, double> env_params;

  bool empty() const {
    return !amp && !fcarrier && !pcarrier && !twidth && env_params.empty();
  }
  bool operator==(const GateOverrides&) const = default;
};

inline constexpr std::string_view kVirtualZ = "virtual_z";

/// One circuit operation. Gates resolve to the gate-spec key formed by
/// concatenating the qubit names, a dot and the gate name ("Q6.Y180",
/// "Q5Q6.CR"). A virtual_z op names one qubit and carries `phase`.
struct CircuitOp {
  std::string name;
  std::vector<std::string> qubits;
  std::optional<double> start_time;  // s
  GateOverrides overrides;
  double phase = 0;        // virtual_z only
  bool condition = false;  // gate pulses execute only if the qubit flag is set

  bool is_virtual_z() const { return name == kVirtualZ; }
  std::string gate_key() const;
  bool operator==(const CircuitOp&) const = default;
};

struct Circuit {
  std::vector<CircuitOp> ops;
  double repeat_period = 0;  // s, 0 = last pulse end

  bool operator==(const Circuit&) const = default;
};

Circuit load_circuit(std::string_view json_text);
Circuit load_circuit_file(const std::string& path);
std::string to_json(const Circuit& c);

// ---------------------------------------------------------------------------
// Step 1: scheduling

struct Timing {
  double sample_period = 1e-9;
  double cycle_period = 4e-9;

  static Timing from_hardware(const cfg::HardwareConfig& hw) {
    return {hw.sample_period(), hw.cycle_period()};
  }
};

struct ScheduledGate {
  std::size_t op_index = 0;
  CircuitOp op;
  double start = 0;     // s
  double duration = 0;  // s, whole DSP cycles
};

/// Gate duration: max over pulses of t0 + twidth (twidth rounded up to
/// whole samples), rounded up to whole DSP cycles.
double gate_duration(const std::vector<cfg::PulseDef>& pulses, const GateOverrides& ov,
                     const Timing& timing);

/// Resolves a gate's pulses with overrides applied.
std::vector<cfg::PulseDef> resolve_pulses(const CircuitOp& op, const cfg::GatePulseSpec& spec,
                                          const cfg::ChipConfig* chip);

/// ASAP schedule with per-qubit serialisation; ops carrying explicit start
/// times on every op pass through unchanged.
std::vector<ScheduledGate> schedule(const Circuit& circuit, const cfg::GatePulseSpec& spec,
                                    const Timing& timing);

// ---------------------------------------------------------------------------
// Step 2: time-pulse pairs

struct TimePulse {
  double t = 0;  // s from sequence start
  std::string dest;
  double fcarrier = 0;  // Hz
  double pcarrier = 0;  // rad, includes accumulated virtual Z
  double amp = 0;
  cfg::EnvelopeSpec env;
  double twidth = 0;        // s, as specified
  std::size_t n_samples = 0;  // twidth rounded up to whole samples
  bool condition = false;
  std::string gate;

  bool operator==(const TimePulse&) const = default;
};

std::vector<TimePulse> lower_to_tp(const std::vector<ScheduledGate>& scheduled,
                                   const cfg::GatePulseSpec& spec, const cfg::ChipConfig& chip,
                                   const Timing& timing);

std::string format_tp(std::span<const TimePulse> pulses);

// ---------------------------------------------------------------------------
// Step 3: index-value pairs

struct ProgramMetadata {
  std::uint64_t circuit_hash = 0;
  std::uint64_t chip_hash = 0;
  std::uint64_t gate_hash = 0;
  std::uint64_t hw_hash = 0;
  Mode mode = Mode::optm;

  bool operator==(const ProgramMetadata&) const = default;
};

struct EnvelopeImage {
  unsigned element = 0;  // global element index
  std::uint32_t base = 0;
  std::vector<std::uint32_t> words;

  bool operator==(const EnvelopeImage&) const = default;
};

struct CompiledProgram {
  std::vector<EnvelopeImage> envelope_images;
  std::vector<cmd::CommandWord> commands;  // sorted by trig_t
  double repeat_period = 0;                // s
  ProgramMetadata metadata;

  bool operator==(const CompiledProgram&) const = default;
  std::size_t envelope_word_count() const;
};

/// Static envelope placement built once from a gate spec for RUNC: every
/// up-direction pulse of every gate, written at fixed addresses in its
/// channel's home element.
class StaticEnvelopeTable {
 public:
  StaticEnvelopeTable() = default;
  StaticEnvelopeTable(const cfg::GatePulseSpec& spec, const cfg::HardwareConfig& hw);

  struct Slot {
    unsigned element;
    std::uint32_t address;
    std::uint32_t length;
  };
  std::optional<Slot> find(unsigned element, const std::string& key) const;

  /// Keyed by "<element>|<envelope key>".
  const std::map<std::string, Slot>& slots() const { return slots_; }
  const std::vector<std::vector<std::uint32_t>>& images() const { return images_; }

 private:
  std::map<std::string, Slot> slots_;
  std::vector<std::vector<std::uint32_t>> images_;  // per global element
};

struct LowerOptions {
  bool dedup = true;
  const StaticEnvelopeTable* static_table = nullptr;  // RUNC only
};

/// Canonical dedup key for a pulse's stored envelope.
std::string envelope_key(const cfg::EnvelopeSpec& env, std::size_t n_samples, double amp);

CompiledProgram lower_to_nv(const std::vector<TimePulse>& tp, const cfg::HardwareConfig& hw,
                            Mode mode, const LowerOptions& options = {});

/// Batch-friendly front end; in RUNC mode the static envelope table is
/// built once at construction.
class Compiler {
 public:
  Compiler(cfg::ChipConfig chip, cfg::GatePulseSpec gates, cfg::HardwareConfig hw, Mode mode);

  CompiledProgram compile(const Circuit& circuit, bool dedup = true) const;
  std::vector<TimePulse> time_pulses(const Circuit& circuit) const;

  const cfg::HardwareConfig& hardware() const { return hw_; }
  Mode mode() const { return mode_; }

 private:
  cfg::ChipConfig chip_;
  cfg::GatePulseSpec gates_;
  cfg::HardwareConfig hw_;
  Mode mode_;
  Timing timing_;
  StaticEnvelopeTable table_;
  std::uint64_t chip_hash_, gate_hash_, hw_hash_;
};

CompiledProgram compile(const Circuit& circuit, const cfg::ChipConfig& chip,
                        const cfg::GatePulseSpec& gates, const cfg::HardwareConfig& hw,
                        Mode mode);

// ---------------------------------------------------------------------------
// Containers and simulation

std::vector<std::uint8_t> serialize(const CompiledProgram& p);
CompiledProgram deserialize(std::span<const std::uint8_t> bytes);

dsp::MachineImage to_machine_image(const CompiledProgram& p, const cfg::HardwareConfig& hw);

/// DAC-rate I/Q streams per destination pair, open loop, one shot.
std::vector<std::vector<dsp::IQ>> simulate_program(const CompiledProgram& p,
                                                   const cfg::HardwareConfig& hw);

std::string waveforms_to_csv(const std::vector<std::vector<dsp::IQ>>& streams);

}  // namespace qubic::compiler
