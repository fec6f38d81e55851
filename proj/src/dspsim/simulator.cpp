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
#include <cstring>
#include <sstream>

#include "qubic/dspsim.hpp"

namespace qubic::dsp {

SimConfig SimConfig::from_hardware(const cfg::HardwareConfig& hw) {
  SimConfig c;
  c.samples_per_cycle = hw.samples_per_cycle();
  c.n_up = hw.n_processing_elements_up;
  c.n_down = hw.n_processing_elements_down;
  c.n_pairs = hw.n_dac_pairs;
  c.envelope_depth = hw.envelope_buffer_depth;
  c.acc_depth = hw.acc_buffer_depth;
  c.acq_depth = hw.acq_buffer_depth;
  c.discriminators = hw.discriminators;
  return c;
}

std::size_t AccResult::total() const {
  std::size_t n = 0;
  for (const auto& e : elements) n += e.size();
  return n;
}

std::string format_fault_log(std::span<const Fault> faults) {
  std::ostringstream os;
  for (const auto& f : faults) {
    const char* kind = "";
    switch (f.kind) {
      case Fault::Kind::envelope_range: kind = "envelope_range"; break;
      case Fault::Kind::element_preempted: kind = "element_preempted"; break;
      case Fault::Kind::unknown_element: kind = "unknown_element"; break;
      case Fault::Kind::bad_destination: kind = "bad_destination"; break;
    }
    os << "fault kind=" << kind << " shot=" << f.shot << " sample=" << f.sample
       << " element=" << f.element << " msg=\"" << f.message << "\"\n";
  }
  return os.str();
}

void Loopback::begin_shot(std::uint64_t) {
  line_.assign(delay_, IQ{});
  head_ = 0;
}

IQ Loopback::sample(std::uint64_t, std::span<const IQ> dac) {
  const IQ in = pair_ < dac.size() ? dac[pair_] : IQ{};
  if (delay_ == 0) return in;
  if (line_.size() != delay_) begin_shot(0);
  const IQ out = line_[head_];
  line_[head_] = in;
  head_ = (head_ + 1) % line_.size();
  return out;
}

// ---------------------------------------------------------------------------

struct Simulator::Element {
  bool active = false;
  cmd::CommandFields f;
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  PhaseAccumulator dlo;
  std::int64_t acc_i = 0;
  std::int64_t acc_q = 0;
  bool faulted = false;
};

Simulator::Simulator(SimConfig config) : config_(config) {
  if (config_.samples_per_cycle == 0) throw SimError("samples_per_cycle must be positive");
  if (config_.n_pairs == 0 || config_.n_pairs > cfg::kMaxDacPairs)
    throw SimError("n_pairs must lie in [1, 4]");
  if (config_.envelope_depth == 0 || config_.envelope_depth > cfg::kMaxEnvelopeDepth)
    throw SimError("envelope depth must lie in [1, 4096]");
  memory_.assign(config_.total_elements(), std::vector<std::uint32_t>(config_.envelope_depth));
  written_.assign(config_.total_elements(), std::vector<bool>(config_.envelope_depth));
}

void Simulator::load(const MachineImage& image) {
  for (auto& m : memory_) std::fill(m.begin(), m.end(), 0);
  for (auto& w : written_) std::fill(w.begin(), w.end(), false);
  for (const auto& region : image.envelopes) {
    if (region.element >= config_.total_elements())
      throw SimError("envelope region for element " + std::to_string(region.element) +
                     " which does not exist");
    if (region.base + region.words.size() > config_.envelope_depth)
      throw SimError("envelope region of element " + std::to_string(region.element) +
                     " exceeds the buffer depth");
    std::copy(region.words.begin(), region.words.end(),
              memory_[region.element].begin() + region.base);
    std::fill_n(written_[region.element].begin() + region.base, region.words.size(), true);
  }

  commands_.clear();
  commands_.reserve(image.commands.size());
  shot_length_ = image.repeat_period_samples;
  for (std::size_t k = 0; k < image.commands.size(); ++k) {
    cmd::CommandFields f;
    try {
      f = cmd::decode(image.commands[k], true);
    } catch (const cmd::CodecError& e) {
      throw SimError("command " + std::to_string(k) + ": " + e.what());
    }
    if (f.element >= config_.total_elements())
      throw SimError("command " + std::to_string(k) + " addresses element " +
                     std::to_string(f.element) + " which does not exist");
    if (f.destination >= config_.n_pairs)
      throw SimError("command " + std::to_string(k) + " addresses DAC pair " +
                     std::to_string(f.destination) + " which does not exist");
    const std::uint64_t s = std::uint64_t{f.trig_t} * config_.samples_per_cycle;
    commands_.push_back({f, s});
    shot_length_ = std::max(shot_length_, s + f.length);
  }
  std::stable_sort(commands_.begin(), commands_.end(),
                   [](const Pending& a, const Pending& b) { return a.start_sample < b.start_sample; });
}

RunResult Simulator::run(const RunOptions& options, AdcSource& adc) {
  RunResult result;
  result.shot_length = shot_length_;
  result.acc.elements.assign(config_.n_down, {});
  result.acq.settings = options.acq;
  result.state_flags.assign(cfg::kMaxDacPairs, 0);

  const std::uint64_t L = shot_length_;
  const AcqSettings& acq = options.acq;
  std::uint64_t acq_len = 0;
  if (options.capture_acq) {
    if (acq.length > config_.acq_depth)
      throw SimError("acq capture overflow: requested " + std::to_string(acq.length) +
                     " samples, depth is " + std::to_string(config_.acq_depth));
    const std::uint64_t avail = acq.offset < L ? L - acq.offset : 0;
    acq_len = acq.length == 0 ? std::min<std::uint64_t>(config_.acq_depth, avail)
                              : std::min<std::uint64_t>(acq.length, avail);
    if ((acq.tap == AcqTap::dac && acq.index >= config_.n_pairs) ||
        (acq.tap == AcqTap::dlo && acq.index >= config_.total_elements()))
      throw SimError("acq tap index out of range");
  }
  if (options.record_dac && options.shots > 0)
    result.dac.assign(config_.n_pairs, std::vector<IQ>(L));

  std::vector<Element> elements(config_.total_elements());
  std::vector<unsigned> active_up, active_down;
  std::vector<std::int64_t> sum_i(config_.n_pairs), sum_q(config_.n_pairs);
  std::vector<IQ> dac(config_.n_pairs);
  auto& flags = result.state_flags;

  auto deactivate = [](std::vector<unsigned>& list, unsigned e) {
    auto it = std::find(list.begin(), list.end(), e);
    if (it != list.end()) {
      *it = list.back();
      list.pop_back();
    }
  };

  auto complete_down = [&](unsigned e_index) {
    Element& e = elements[e_index];
    const unsigned d = e_index - config_.n_up;
    auto& buf = result.acc.elements[d];
    AccEntry entry{e.acc_i, e.acc_q};
    if (buf.size() < config_.acc_depth) {
      buf.push_back(entry);
    } else {
      result.acc_full = true;
    }
    const auto& disc = config_.discriminators[e.f.destination];
    const std::complex<double> z =
        entry.to_complex() * std::polar(1.0, -disc.rotation);
    flags[e.f.destination] = z.real() > disc.threshold ? 1 : 0;
    e.active = false;
  };

  for (std::uint64_t shot = 0; shot < options.shots; ++shot) {
    if (options.stop_requested && options.stop_requested()) break;
    bool full = false;
    for (const auto& buf : result.acc.elements) full = full || buf.size() >= config_.acc_depth;
    if (full && !commands_.empty()) {
      result.acc_full = true;
      break;
    }
    adc.begin_shot(shot);
    for (auto& e : elements) e.active = false;
    active_up.clear();
    active_down.clear();
    const bool capture = options.capture_acq && shot == acq.shot;
    std::size_t next = 0;

    for (std::uint64_t n = 0; n < L; ++n) {
      // sequencer
      while (next < commands_.size() && commands_[next].start_sample == n) {
        const auto& c = commands_[next++];
        if (c.f.condition && flags[c.f.destination] == 0) continue;
        const unsigned idx = c.f.element;
        Element& e = elements[idx];
        const bool down = idx >= config_.n_up;
        if (e.active) {
          result.faults.push_back({Fault::Kind::element_preempted, shot, n, idx,
                                   "new command started before the previous one ended"});
          deactivate(down ? active_down : active_up, idx);
        }
        e.active = true;
        e.f = c.f;
        e.start = n;
        e.end = n + c.f.length;
        e.dlo = PhaseAccumulator(c.f.freq_word, dlo_phase(c.f.freq_word, c.f.phase_word, n));
        e.acc_i = e.acc_q = 0;
        e.faulted = false;
        if (c.f.length == 0) {
          if (down) complete_down(idx);
          e.active = false;
          continue;
        }
        (down ? active_down : active_up).push_back(idx);
      }

      // up conversion and switch
      CosSin dlo_probe{};
      std::fill(sum_i.begin(), sum_i.end(), 0);
      std::fill(sum_q.begin(), sum_q.end(), 0);
      for (std::size_t k = 0; k < active_up.size();) {
        const unsigned idx = active_up[k];
        Element& e = elements[idx];
        const std::uint64_t addr = e.f.start + (n - e.start);
        IQ env{};
        if (addr < config_.envelope_depth && written_[idx][addr]) {
          env = from_packed(memory_[idx][addr]);
        } else if (!e.faulted) {
          e.faulted = true;
          result.faults.push_back({Fault::Kind::envelope_range, shot, n, idx,
                                   "read of unwritten envelope address " +
                                       std::to_string(addr)});
        }
        const CosSin rot = cordic_rotate(e.dlo.value());
        if (capture && acq.tap == AcqTap::dlo && acq.index == idx) dlo_probe = rot;
        const IQ out = complex_mul(env, rot);
        sum_i[e.f.destination] += out.i;
        sum_q[e.f.destination] += out.q;
        e.dlo.step();
        if (n + 1 >= e.end) {
          e.active = false;
          active_up[k] = active_up.back();
          active_up.pop_back();
        } else {
          ++k;
        }
      }
      for (unsigned p = 0; p < config_.n_pairs; ++p) {
        const auto ci = std::clamp<std::int64_t>(sum_i[p], -kFullScale, kFullScale);
        const auto cq = std::clamp<std::int64_t>(sum_q[p], -kFullScale, kFullScale);
        if (ci != sum_i[p] || cq != sum_q[p]) ++result.saturations;
        dac[p] = {static_cast<std::int32_t>(ci), static_cast<std::int32_t>(cq)};
      }
      if (shot == 0 && !result.dac.empty())
        for (unsigned p = 0; p < config_.n_pairs; ++p) result.dac[p][n] = dac[p];

      // ADC path and down conversion
      const IQ in = adc.sample(n, dac);
      for (std::size_t k = 0; k < active_down.size();) {
        const unsigned idx = active_down[k];
        Element& e = elements[idx];
        const CosSin rot = cordic_rotate(e.dlo.value());
        if (capture && acq.tap == AcqTap::dlo && acq.index == idx) dlo_probe = rot;
        const IQ bb = complex_mul(in, rot, true);
        e.acc_i += bb.i;
        e.acc_q += bb.q;
        e.dlo.step();
        if (n + 1 >= e.end) {
          complete_down(idx);
          active_down[k] = active_down.back();
          active_down.pop_back();
        } else {
          ++k;
        }
      }

      if (capture && n >= acq.offset && n < acq.offset + acq_len) {
        IQ v{};
        switch (acq.tap) {
          case AcqTap::adc: v = in; break;
          case AcqTap::dac: v = dac[acq.index]; break;
          case AcqTap::dlo: v = {dlo_probe.cos, dlo_probe.sin}; break;
        }
        result.acq.samples.push_back(v);
      }
    }
    ++result.shots_completed;
  }
  return result;
}

RunResult run_image(const SimConfig& config, const MachineImage& image,
                    const RunOptions& options, AdcSource& adc) {
  Simulator sim(config);
  sim.load(image);
  return sim.run(options, adc);
}

// ---------------------------------------------------------------------------
// Acq export

std::string acq_to_csv(const AcqTrace& trace) {
  std::ostringstream os;
  os << "sample,i,q\n";
  for (std::size_t k = 0; k < trace.samples.size(); ++k)
    os << trace.settings.offset + k << ',' << trace.samples[k].i << ',' << trace.samples[k].q
       << '\n';
  return os.str();
}

namespace {

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int b = bytes - 1; b >= 0; --b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t& pos, int bytes) {
  if (pos + bytes > in.size()) throw SimError("truncated acq dump");
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v = (v << 8) | in[pos++];
  return v;
}

}  // namespace

std::vector<std::uint8_t> acq_to_binary(const AcqTrace& trace) {
  std::vector<std::uint8_t> out{'Q', 'A', 'C', 'Q'};
  put_be(out, 1, 4);
  put_be(out, static_cast<std::uint8_t>(trace.settings.tap), 4);
  put_be(out, trace.settings.index, 4);
  put_be(out, trace.settings.shot, 8);
  put_be(out, trace.settings.offset, 8);
  put_be(out, trace.settings.length, 8);
  put_be(out, trace.samples.size(), 4);
  for (const auto& s : trace.samples) {
    put_be(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s.i)), 2);
    put_be(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s.q)), 2);
  }
  return out;
}

AcqTrace acq_from_binary(std::span<const std::uint8_t> in) {
  if (in.size() < 4 || std::memcmp(in.data(), "QACQ", 4) != 0) throw SimError("bad acq magic");
  std::size_t pos = 4;
  if (get_be(in, pos, 4) != 1) throw SimError("unsupported acq dump version");
  AcqTrace t;
  const auto tap = get_be(in, pos, 4);
  if (tap > 2) throw SimError("bad acq tap");
  t.settings.tap = static_cast<AcqTap>(tap);
  t.settings.index = static_cast<unsigned>(get_be(in, pos, 4));
  t.settings.shot = get_be(in, pos, 8);
  t.settings.offset = get_be(in, pos, 8);
  t.settings.length = get_be(in, pos, 8);
  const auto count = get_be(in, pos, 4);
  t.samples.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto i = static_cast<std::int16_t>(get_be(in, pos, 2));
    const auto q = static_cast<std::int16_t>(get_be(in, pos, 2));
    t.samples.push_back({i, q});
  }
  if (pos != in.size()) throw SimError("trailing bytes in acq dump");
  return t;
}

}  // namespace qubic::dsp
