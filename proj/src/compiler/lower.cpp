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
#include <cmath>
#include <cstdio>
#include <map>

#include "qubic/compiler.hpp"
#include "qubic/envgen.hpp"
#include "timing.hpp"

namespace qubic::compiler {

namespace {

std::string slot_key(unsigned element, const std::string& key) {
  return std::to_string(element) + "|" + key;
}

std::vector<std::uint32_t> envelope_words(const cfg::EnvelopeSpec& spec, std::size_t n,
                                          double amp, double dt) {
  try {
    return env::pack(env::scaled(env::generate_samples(spec, n, dt), amp));
  } catch (const env::EnvelopeError& e) {
    throw CompileError(std::string("envelope generation failed: ") + e.what());
  }
}

const cfg::ChannelInfo& channel(const cfg::HardwareConfig& hw, const std::string& dest) {
  auto it = hw.channel_map.find(dest);
  if (it == hw.channel_map.end())
    throw CompileError("destination channel '" + dest + "' is not in the hardware channel map");
  return it->second;
}

double wrap_frequency(double f, double fs) {
  double w = std::fmod(f, fs);
  if (w < 0) w += fs;
  return w >= fs ? 0.0 : w;
}

}  // namespace

std::size_t CompiledProgram::envelope_word_count() const {
  std::size_t n = 0;
  for (const auto& img : envelope_images) n += img.words.size();
  return n;
}

std::string envelope_key(const cfg::EnvelopeSpec& env, std::size_t n_samples, double amp) {
  std::string key(cfg::to_string(env.kind));
  char buf[64];
  for (const auto& [k, v] : env.params) {
    std::snprintf(buf, sizeof buf, ";%s=%.17g", k.c_str(), v);
    key += buf;
  }
  for (const auto& z : env.samples) {
    std::snprintf(buf, sizeof buf, ";%.17g,%.17g", z.real(), z.imag());
    key += buf;
  }
  std::snprintf(buf, sizeof buf, "|n=%zu|amp=%.17g", n_samples, amp);
  return key + buf;
}

StaticEnvelopeTable::StaticEnvelopeTable(const cfg::GatePulseSpec& spec,
                                         const cfg::HardwareConfig& hw) {
  images_.assign(hw.total_elements(), {});
  const double dt = hw.sample_period();
  for (const auto& [gate, pulses] : spec.gates) {
    for (const auto& p : pulses) {
      auto it = hw.channel_map.find(p.dest);
      if (it == hw.channel_map.end() || it->second.direction != cfg::Direction::up) continue;
      const unsigned e = hw.global_element(it->second);
      const std::size_t n = env::ceil_sample_count(p.twidth, dt);
      const std::string key = slot_key(e, envelope_key(p.env, n, p.amp));
      if (slots_.count(key)) continue;
      auto& mem = images_[e];
      if (mem.size() + n > hw.envelope_buffer_depth)
        throw CompileError("static envelope table overflows element " + std::to_string(e) +
                           " while placing gate '" + gate + "'");
      const auto words = envelope_words(p.env, n, p.amp, dt);
      slots_[key] = {e, static_cast<std::uint32_t>(mem.size()), static_cast<std::uint32_t>(n)};
      mem.insert(mem.end(), words.begin(), words.end());
    }
  }
}

std::optional<StaticEnvelopeTable::Slot> StaticEnvelopeTable::find(unsigned element,
                                                                   const std::string& key) const {
  auto it = slots_.find(slot_key(element, key));
  if (it == slots_.end()) return std::nullopt;
  return it->second;
}

CompiledProgram lower_to_nv(const std::vector<TimePulse>& tp_in, const cfg::HardwareConfig& hw,
                            Mode mode, const LowerOptions& options) {
  const bool optm = mode == Mode::optm;
  const double dt = hw.sample_period();
  const double cycle = hw.cycle_period();
  const double fs = hw.dac_sample_rate;
  const std::int64_t spc = hw.samples_per_cycle();
  const unsigned n_up = hw.n_processing_elements_up;
  const unsigned depth = hw.envelope_buffer_depth;

  std::vector<TimePulse> sorted;
  const std::vector<TimePulse>* tps = &tp_in;
  if (!std::is_sorted(tp_in.begin(), tp_in.end(),
                      [](const TimePulse& a, const TimePulse& b) { return a.t < b.t; })) {
    sorted = tp_in;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const TimePulse& a, const TimePulse& b) { return a.t < b.t; });
    tps = &sorted;
  }

  struct Placement {
    unsigned element;
    std::uint32_t address;
  };
  std::vector<std::vector<std::uint32_t>> mem(n_up);
  if (!optm && options.static_table) {
    const auto& images = options.static_table->images();
    for (unsigned e = 0; e < n_up && e < images.size(); ++e) mem[e] = images[e];
  }
  std::vector<std::int64_t> busy_until(n_up, 0);
  std::map<std::string, std::vector<Placement>> placed;
  std::map<std::string, std::int64_t> channel_end;

  struct Cmd {
    std::uint32_t trig;
    cmd::CommandWord word;
  };
  std::vector<Cmd> cmds;
  cmds.reserve(tps->size());
  std::int64_t program_end = 0;

  for (const auto& tp : *tps) {
    const cfg::ChannelInfo& ch = channel(hw, tp.dest);
    const unsigned global = hw.global_element(ch);
    const bool up = ch.direction == cfg::Direction::up;
    const std::int64_t trig = detail::round_ticks(tp.t, cycle);
    if (trig < 0 || trig >= (std::int64_t{1} << cmd::kTrigBits))
      throw CompileError("pulse at t = " + std::to_string(tp.t) +
                         " s overflows the 24-bit trig_t field");
    const std::size_t n = tp.n_samples;
    if (n >= (std::size_t{1} << cmd::kLengthBits))
      throw CompileError("pulse on " + tp.dest + " has " + std::to_string(n) +
                         " samples, beyond the 12-bit length field");
    const double f_if = tp.fcarrier - ch.lo_freq;
    const std::int64_t start_s = trig * spc;
    const std::int64_t end_s = start_s + static_cast<std::int64_t>(n);

    if (optm) {
      if (!(std::abs(f_if) < fs / 2))
        throw CompileError("intermediate frequency " + std::to_string(f_if) + " Hz on " +
                           tp.dest + " is beyond the Nyquist limit " + std::to_string(fs / 2));
      if (!(tp.amp >= 0 && tp.amp <= 1))
        throw CompileError("pulse amplitude on " + tp.dest + " outside [0, 1]");
      try {
        cfg::validate(tp.env, tp.gate);
      } catch (const cfg::ConfigError& e) {
        throw CompileError(e.what());
      }
      if (up && n > depth)
        throw CompileError("pulse on " + tp.dest + " is longer than the envelope buffer");
      auto& last = channel_end[tp.dest];
      if (start_s < last)
        throw CompileError("pulses overlap on channel " + tp.dest + " after time quantization");
      last = end_s;
    }

    cmd::CommandFields f;
    f.trig_t = static_cast<std::uint32_t>(trig);
    f.length = static_cast<std::uint32_t>(n);
    f.destination = ch.destination;
    f.condition = tp.condition;
    try {
      f.freq_word = cmd::freq_to_word(wrap_frequency(f_if, fs), fs);
      f.phase_word = cmd::phase_to_word(tp.pcarrier);
    } catch (const cmd::CodecError& e) {
      throw CompileError(e.what());
    }

    if (!up) {
      f.element = global;
      f.start = 0;
    } else {
      const std::string key = envelope_key(tp.env, n, tp.amp);
      std::optional<Placement> chosen;
      if (optm) {
        if (options.dedup) {
          for (const auto& pl : placed[key])
            if (busy_until[pl.element] <= start_s) {
              chosen = pl;
              break;
            }
        }
        if (!chosen) {
          std::vector<std::uint32_t> words;
          auto try_element = [&](unsigned e) {
            if (chosen || busy_until[e] > start_s || mem[e].size() + n > depth) return;
            if (words.empty()) words = envelope_words(tp.env, n, tp.amp, dt);
            chosen = Placement{e, static_cast<std::uint32_t>(mem[e].size())};
            mem[e].insert(mem[e].end(), words.begin(), words.end());
            placed[key].push_back(*chosen);
          };
          try_element(global);
          for (unsigned e = 0; e < n_up; ++e)
            if (e != global) try_element(e);
        }
        if (!chosen)
          throw CompileError("envelope memory exhausted: no free element can hold " +
                             std::to_string(n) + " samples for " + tp.gate + " on " + tp.dest);
        busy_until[chosen->element] = std::max(busy_until[chosen->element], end_s);
      } else {
        if (options.static_table) {
          if (auto slot = options.static_table->find(global, key))
            chosen = Placement{slot->element, slot->address};
        }
        if (!chosen) {
          auto& list = placed[key];
          if (!list.empty()) {
            chosen = list.front();
          } else {
            if (mem[global].size() + n > depth)
              throw CompileError("envelope memory exhausted on element " +
                                 std::to_string(global));
            const auto words = envelope_words(tp.env, n, tp.amp, dt);
            chosen = Placement{global, static_cast<std::uint32_t>(mem[global].size())};
            mem[global].insert(mem[global].end(), words.begin(), words.end());
            list.push_back(*chosen);
          }
        }
      }
      f.element = chosen->element;
      f.start = chosen->address;
    }

    try {
      cmds.push_back({f.trig_t, cmd::encode(f)});
    } catch (const cmd::CodecError& e) {
      throw CompileError(std::string("command encoding failed: ") + e.what());
    }
    program_end = std::max(program_end, end_s);
  }

  if (optm && cmds.size() > hw.command_buffer_depth)
    throw CompileError(std::to_string(cmds.size()) + " commands exceed the command buffer depth " +
                       std::to_string(hw.command_buffer_depth));

  std::stable_sort(cmds.begin(), cmds.end(),
                   [](const Cmd& a, const Cmd& b) { return a.trig < b.trig; });
  CompiledProgram p;
  p.commands.reserve(cmds.size());
  for (const auto& c : cmds) p.commands.push_back(c.word);
  for (unsigned e = 0; e < n_up; ++e)
    if (!mem[e].empty()) p.envelope_images.push_back({e, 0, std::move(mem[e])});
  p.repeat_period = static_cast<double>(program_end) * dt;
  p.metadata.mode = mode;
  return p;
}

Compiler::Compiler(cfg::ChipConfig chip, cfg::GatePulseSpec gates, cfg::HardwareConfig hw,
                   Mode mode)
    : chip_(std::move(chip)),
      gates_(std::move(gates)),
      hw_(std::move(hw)),
      mode_(mode),
      timing_(Timing::from_hardware(hw_)),
      chip_hash_(cfg::fnv1a64(cfg::to_json(chip_))),
      gate_hash_(cfg::fnv1a64(cfg::to_json(gates_))),
      hw_hash_(cfg::fnv1a64(cfg::to_json(hw_))) {
  if (mode_ == Mode::runc) table_ = StaticEnvelopeTable(gates_, hw_);
}

std::vector<TimePulse> Compiler::time_pulses(const Circuit& circuit) const {
  return lower_to_tp(schedule(circuit, gates_, timing_), gates_, chip_, timing_);
}

CompiledProgram Compiler::compile(const Circuit& circuit, bool dedup) const {
  LowerOptions opt;
  opt.dedup = dedup;
  if (mode_ == Mode::runc) opt.static_table = &table_;
  CompiledProgram p = lower_to_nv(time_pulses(circuit), hw_, mode_, opt);
  p.repeat_period = std::max(p.repeat_period, circuit.repeat_period);
  p.metadata.circuit_hash = cfg::fnv1a64(to_json(circuit));
  p.metadata.chip_hash = chip_hash_;
  p.metadata.gate_hash = gate_hash_;
  p.metadata.hw_hash = hw_hash_;
  return p;
}

CompiledProgram compile(const Circuit& circuit, const cfg::ChipConfig& chip,
                        const cfg::GatePulseSpec& gates, const cfg::HardwareConfig& hw,
                        Mode mode) {
  return Compiler(chip, gates, hw, mode).compile(circuit);
}

}  // namespace qubic::compiler
