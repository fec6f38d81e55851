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
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qubic::cfg {

/// Raised for any configuration problem. `path()` names the offending
/// location in dotted form (e.g. "qubits.Q0.drive_freq").
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { parse, schema, invariant, unresolved };

  ConfigError(Kind kind, std::string path, const std::string& what);

  Kind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Chip

struct QubitFreqs {
  double drive_freq = 0;    // Hz
  double readout_freq = 0;  // Hz

  bool operator==(const QubitFreqs&) const = default;
};

struct ChipConfig {
  std::map<std::string, QubitFreqs> qubits;
  std::map<std::string, std::string> metadata;

  bool operator==(const ChipConfig&) const = default;

  /// Resolves "Q6.freq" (drive) or "Q6.readfreq" (readout) to Hz.
  std::optional<double> resolve(std::string_view ref) const;
};

ChipConfig load_chip_config(std::string_view json_text);
ChipConfig load_chip_config_file(const std::string& path);
std::string to_json(const ChipConfig& chip);

// ---------------------------------------------------------------------------
// Envelopes and gates

enum class EnvelopeKind { drag, gaussian, square, cos_edge_square, custom_samples };

std::string_view to_string(EnvelopeKind kind);
std::optional<EnvelopeKind> envelope_kind_from_string(std::string_view name);

/// Names of the real parameters each kernel requires.
std::vector<std::string> required_params(EnvelopeKind kind);

struct EnvelopeSpec {
  EnvelopeKind kind = EnvelopeKind::square;
  std::map<std::string, double> params;
  std::vector<std::complex<double>> samples;  // custom_samples only

  bool operator==(const EnvelopeSpec&) const = default;
};

/// Checks required params are present and finite and that custom sample
/// magnitudes do not exceed one. `where` prefixes error paths.
void validate(const EnvelopeSpec& env, const std::string& where);

struct PulseDef {
  std::string dest;
  double t0 = 0;      // s, offset from gate start
  double twidth = 0;  // s
  double fcarrier = 0;  // Hz, always resolved after loading
  std::string fcarrier_ref;  // symbolic source, empty if numeric
  double pcarrier = 0;  // rad
  double amp = 0;
  EnvelopeSpec env;

  bool operator==(const PulseDef&) const = default;
};

struct GatePulseSpec {
  std::map<std::string, std::vector<PulseDef>> gates;

  bool operator==(const GatePulseSpec&) const = default;
};

GatePulseSpec load_gate_spec(std::string_view json_text, const ChipConfig& chip);
GatePulseSpec load_gate_spec_file(const std::string& path, const ChipConfig& chip);
std::string to_json(const GatePulseSpec& spec);

/// Parses a phase given as a number or a small pi expression such as
/// "numpy.pi/2", "-pi", "3*pi/4".
std::optional<double> parse_phase_expr(std::string_view text);

// ---------------------------------------------------------------------------
// Hardware

enum class Direction { up, down };

struct ChannelInfo {
  unsigned element = 0;      // index within the direction's element bank
  unsigned destination = 0;  // DAC pair (up) or state-flag slot (down)
  Direction direction = Direction::up;
  double lo_freq = 0;  // Hz, subtracted from the carrier to obtain the IF

  bool operator==(const ChannelInfo&) const = default;
};

/// Rotate-then-threshold classifier feeding the condition flags.
struct Discriminator {
  double rotation = 0;   // rad
  double threshold = 0;  // full-scale units of the accumulated value

  bool operator==(const Discriminator&) const = default;
};

inline constexpr unsigned kMaxDacPairs = 4;
inline constexpr unsigned kMaxEnvelopeDepth = 4096;

struct HardwareConfig {
  double dac_sample_rate = 1e9;
  double dsp_clock = 250e6;
  unsigned n_processing_elements_up = 8;
  unsigned n_processing_elements_down = 4;
  unsigned n_dac_pairs = 4;
  std::map<std::string, ChannelInfo> channel_map;
  unsigned envelope_buffer_depth = 1024;
  unsigned command_buffer_depth = 65536;
  unsigned acc_buffer_depth = 1000;
  unsigned acq_buffer_depth = 8192;
  std::array<Discriminator, kMaxDacPairs> discriminators{};

  bool operator==(const HardwareConfig&) const = default;

  unsigned samples_per_cycle() const;
  double sample_period() const { return 1.0 / dac_sample_rate; }
  double cycle_period() const { return 1.0 / dsp_clock; }

  /// Element index as carried in the command word: up elements first,
  /// then down elements.
  unsigned global_element(const ChannelInfo& ch) const;
  bool is_down_element(unsigned global) const {
    return global >= n_processing_elements_up;
  }
  unsigned total_elements() const {
    return n_processing_elements_up + n_processing_elements_down;
  }
};

HardwareConfig load_hardware_config(std::string_view json_text);
HardwareConfig load_hardware_config_file(const std::string& path);
std::string to_json(const HardwareConfig& hw);

/// Stable 64-bit FNV-1a over arbitrary bytes.
std::uint64_t fnv1a64(std::string_view bytes);

std::string read_text_file(const std::string& path);

}  // namespace qubic::cfg
