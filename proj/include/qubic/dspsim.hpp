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
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qubic/chipcfg.hpp"
#include "qubic/cmdcodec.hpp"

namespace qubic::dsp {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int32_t kFullScale = 32767;
inline constexpr unsigned kPhaseAccBits = 24;
inline constexpr std::uint32_t kPhaseAccMask = (1u << kPhaseAccBits) - 1;

/// One complex sample in 16-bit fixed point (values kept in int32 so sums
/// can be formed before saturation).
struct IQ {
  std::int32_t i = 0;
  std::int32_t q = 0;

  bool operator==(const IQ&) const = default;
  std::complex<double> to_complex() const {
    return {static_cast<double>(i) / kFullScale, static_cast<double>(q) / kFullScale};
  }
};

IQ from_packed(std::uint32_t word);
std::uint32_t to_packed(IQ v);

// ---------------------------------------------------------------------------
// Arithmetic primitives

struct CosSin {
  std::int32_t cos = 0;
  std::int32_t sin = 0;
};

inline constexpr unsigned kCordicIterations = 16;

/// Rotation-mode CORDIC on a 24-bit fractional-turn phase.
CosSin cordic_rotate(std::uint32_t phase24);

/// 24-bit phase accumulator advanced by a frequency word per DAC sample.
class PhaseAccumulator {
 public:
  PhaseAccumulator() = default;
  explicit PhaseAccumulator(std::uint32_t freq_word, std::uint32_t value = 0)
      : freq_word_(freq_word & kPhaseAccMask), value_(value & kPhaseAccMask) {}

  std::uint32_t value() const { return value_; }
  void step() { value_ = (value_ + freq_word_) & kPhaseAccMask; }
  void reset_to(std::uint32_t value) { value_ = value & kPhaseAccMask; }

 private:
  std::uint32_t freq_word_ = 0;
  std::uint32_t value_ = 0;
};

/// DLO phase at absolute sample `n` of a shot: freq_word*n + phase offset,
/// modulo 2^24. The 14-bit phase word occupies the top bits.
std::uint32_t dlo_phase(std::uint32_t freq_word, std::uint32_t phase_word, std::uint64_t n);

/// Complex multiply in 16-bit fixed point with round-half-away-from-zero
/// and clamping to +/-full scale.
IQ complex_mul(IQ a, CosSin r, bool conjugate_r = false);

IQ up_convert_sample(IQ env, std::uint32_t freq_word, std::uint32_t phase_word,
                     std::uint64_t n);
IQ down_convert_sample(IQ adc, std::uint32_t freq_word, std::uint32_t phase_word,
                       std::uint64_t n);

struct ElementStream {
  unsigned destination = 0;
  std::uint64_t offset = 0;  // first sample index
  std::vector<IQ> samples;
};

struct SwitchResult {
  std::vector<std::vector<IQ>> pairs;
  std::uint64_t saturations = 0;  // samples where any component clamped
};

/// m-to-n switch: saturating per-sample sum of element outputs per pair.
SwitchResult switch_and_sum(std::span<const ElementStream> inputs, unsigned n_pairs,
                            std::uint64_t length);

// ---------------------------------------------------------------------------
// Machine state and runs

struct SimConfig {
  unsigned samples_per_cycle = 4;
  unsigned n_up = 8;
  unsigned n_down = 4;
  unsigned n_pairs = 4;
  unsigned envelope_depth = 1024;
  unsigned acc_depth = 1000;
  unsigned acq_depth = 8192;
  std::array<cfg::Discriminator, cfg::kMaxDacPairs> discriminators{};

  static SimConfig from_hardware(const cfg::HardwareConfig& hw);
  unsigned total_elements() const { return n_up + n_down; }
};

struct EnvelopeRegion {
  unsigned element = 0;
  std::uint32_t base = 0;
  std::vector<std::uint32_t> words;
};

/// Everything the gateware holds before a run.
struct MachineImage {
  std::vector<EnvelopeRegion> envelopes;
  std::vector<cmd::CommandWord> commands;
  std::uint64_t repeat_period_samples = 0;
};

struct AccEntry {
  std::int64_t i = 0;
  std::int64_t q = 0;

  bool operator==(const AccEntry&) const = default;
  std::complex<double> to_complex() const {
    return {static_cast<double>(i) / kFullScale, static_cast<double>(q) / kFullScale};
  }
};

/// Accumulated values per down element (indexed 0..n_down-1), one entry
/// per completed readout window.
struct AccResult {
  std::vector<std::vector<AccEntry>> elements;

  bool operator==(const AccResult&) const = default;
  std::size_t total() const;
};

enum class AcqTap { adc = 0, dac = 1, dlo = 2 };

struct AcqSettings {
  AcqTap tap = AcqTap::adc;
  unsigned index = 0;         // DAC pair or element, depending on tap
  std::uint64_t shot = 0;     // shot to capture
  std::uint64_t offset = 0;   // first sample within the shot
  std::uint64_t length = 0;   // 0 = up to the capture depth

  bool operator==(const AcqSettings&) const = default;
};

struct AcqTrace {
  AcqSettings settings;
  std::vector<IQ> samples;

  bool operator==(const AcqTrace&) const = default;
};

struct Fault {
  enum class Kind { envelope_range, element_preempted, unknown_element, bad_destination };
  Kind kind;
  std::uint64_t shot = 0;
  std::uint64_t sample = 0;
  unsigned element = 0;
  std::string message;

  bool operator==(const Fault&) const = default;
};

std::string format_fault_log(std::span<const Fault> faults);

/// Produces the ADC input sample by sample. `dac` holds this sample's
/// saturated output of every DAC pair.
class AdcSource {
 public:
  virtual ~AdcSource() = default;
  virtual void begin_shot(std::uint64_t /*shot*/) {}
  virtual IQ sample(std::uint64_t n, std::span<const IQ> dac) = 0;
};

class OpenLoop final : public AdcSource {
 public:
  IQ sample(std::uint64_t, std::span<const IQ>) override { return {}; }
};

/// Ideal loopback of one DAC pair into the ADC with an integer delay.
class Loopback final : public AdcSource {
 public:
  Loopback(unsigned pair, std::uint64_t delay) : pair_(pair), delay_(delay) {}
  void begin_shot(std::uint64_t) override;
  IQ sample(std::uint64_t n, std::span<const IQ> dac) override;

 private:
  unsigned pair_;
  std::uint64_t delay_;
  std::vector<IQ> line_;
  std::size_t head_ = 0;
};

/// Adapts a plain callable as an ADC source.
class ExternalResponse final : public AdcSource {
 public:
  using Fn = std::function<IQ(std::uint64_t shot, std::uint64_t n, std::span<const IQ> dac)>;
  explicit ExternalResponse(Fn fn) : fn_(std::move(fn)) {}
  void begin_shot(std::uint64_t shot) override { shot_ = shot; }
  IQ sample(std::uint64_t n, std::span<const IQ> dac) override { return fn_(shot_, n, dac); }

 private:
  Fn fn_;
  std::uint64_t shot_ = 0;
};

struct RunOptions {
  std::uint64_t shots = 1;
  AcqSettings acq;
  bool capture_acq = true;
  bool record_dac = false;  // keep full DAC streams of shot 0
  std::function<bool()> stop_requested;  // polled between shots
};

struct RunResult {
  AccResult acc;
  AcqTrace acq;
  std::vector<Fault> faults;
  std::uint64_t saturations = 0;
  std::uint64_t shots_completed = 0;
  std::uint64_t shot_length = 0;  // samples
  bool acc_full = false;
  std::vector<std::vector<IQ>> dac;  // [pair][sample], shot 0, if requested
  std::vector<int> state_flags;      // final condition flags per slot

  bool operator==(const RunResult&) const = default;
};

/// Sample-serial model of the DSP: command sequencer, processing elements,
/// switch, ADC path, accumulators and the capture buffer.
class Simulator {
 public:
  explicit Simulator(SimConfig config);

  const SimConfig& config() const { return config_; }

  /// Loads envelopes and commands. Throws SimError when the image does
  /// not fit the configured machine.
  void load(const MachineImage& image);

  RunResult run(const RunOptions& options, AdcSource& adc);

  /// Shot length in samples for the loaded image.
  std::uint64_t shot_length() const { return shot_length_; }

 private:
  struct Element;
  struct Pending {
    cmd::CommandFields f;
    std::uint64_t start_sample;
  };

  SimConfig config_;
  std::vector<std::vector<std::uint32_t>> memory_;
  std::vector<std::vector<bool>> written_;
  std::vector<Pending> commands_;
  std::uint64_t shot_length_ = 0;
};

/// Runs a machine image once on a fresh simulator.
RunResult run_image(const SimConfig& config, const MachineImage& image,
                    const RunOptions& options, AdcSource& adc);

std::string acq_to_csv(const AcqTrace& trace);
std::vector<std::uint8_t> acq_to_binary(const AcqTrace& trace);
AcqTrace acq_from_binary(std::span<const std::uint8_t> bytes);

}  // namespace qubic::dsp
