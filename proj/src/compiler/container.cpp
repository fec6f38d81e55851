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

#include <bit>
#include <cmath>
#include <cstring>

#include "qubic/compiler.hpp"

namespace qubic::compiler {

namespace {

constexpr char kMagic[4] = {'Q', 'B', 'C', 'P'};
constexpr std::uint16_t kContainerVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> out;

 private:
  void be(std::uint64_t v, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw CompileError("program container is truncated");
  }
  std::uint64_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | b_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const CompiledProgram& p) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kContainerVersion);
  w.u8(p.metadata.mode == Mode::optm ? 0 : 1);
  w.u8(0);
  w.f64(p.repeat_period);
  w.u64(p.metadata.circuit_hash);
  w.u64(p.metadata.chip_hash);
  w.u64(p.metadata.gate_hash);
  w.u64(p.metadata.hw_hash);
  w.u32(static_cast<std::uint32_t>(p.envelope_images.size()));
  for (const auto& img : p.envelope_images) {
    w.u16(static_cast<std::uint16_t>(img.element));
    w.u32(img.base);
    w.u32(static_cast<std::uint32_t>(img.words.size()));
    for (auto word : img.words) w.u32(word);
  }
  w.u32(static_cast<std::uint32_t>(p.commands.size()));
  for (const auto& c : p.commands) {
    w.u64(c.hi);
    w.u64(c.lo);
  }
  return std::move(w.out);
}

CompiledProgram deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw CompileError("not a program container");
  if (auto v = r.u16(); v != kContainerVersion)
    throw CompileError("unsupported program container version " + std::to_string(v));
  CompiledProgram p;
  const auto mode = r.u8();
  if (mode > 1) throw CompileError("bad mode byte in program container");
  p.metadata.mode = mode == 0 ? Mode::optm : Mode::runc;
  r.u8();
  p.repeat_period = r.f64();
  if (!std::isfinite(p.repeat_period) || p.repeat_period < 0)
    throw CompileError("bad repeat period in program container");
  p.metadata.circuit_hash = r.u64();
  p.metadata.chip_hash = r.u64();
  p.metadata.gate_hash = r.u64();
  p.metadata.hw_hash = r.u64();
  const auto n_images = r.u32();
  for (std::uint32_t k = 0; k < n_images; ++k) {
    EnvelopeImage img;
    img.element = r.u16();
    img.base = r.u32();
    const auto count = r.u32();
    if (count > r.remaining() / 4) throw CompileError("program container is truncated");
    img.words.resize(count);
    for (auto& word : img.words) word = r.u32();
    p.envelope_images.push_back(std::move(img));
  }
  const auto n_cmds = r.u32();
  if (n_cmds > r.remaining() / 16) throw CompileError("program container is truncated");
  p.commands.resize(n_cmds);
  for (auto& c : p.commands) {
    c.hi = r.u64();
    c.lo = r.u64();
  }
  if (r.remaining() != 0) throw CompileError("trailing bytes after program container");
  return p;
}

dsp::MachineImage to_machine_image(const CompiledProgram& p, const cfg::HardwareConfig& hw) {
  dsp::MachineImage image;
  for (const auto& img : p.envelope_images) image.envelopes.push_back({img.element, img.base, img.words});
  image.commands = p.commands;
  const double n = p.repeat_period / hw.sample_period();
  image.repeat_period_samples = static_cast<std::uint64_t>(std::ceil(n - 1e-9));
  return image;
}

std::vector<std::vector<dsp::IQ>> simulate_program(const CompiledProgram& p,
                                                   const cfg::HardwareConfig& hw) {
  dsp::RunOptions opt;
  opt.shots = 1;
  opt.capture_acq = false;
  opt.record_dac = true;
  dsp::OpenLoop open;
  auto result = dsp::run_image(dsp::SimConfig::from_hardware(hw), to_machine_image(p, hw), opt, open);
  return std::move(result.dac);
}

std::string waveforms_to_csv(const std::vector<std::vector<dsp::IQ>>& streams) {
  std::string s = "sample";
  for (std::size_t k = 0; k < streams.size(); ++k)
    s += ",pair" + std::to_string(k) + "_i,pair" + std::to_string(k) + "_q";
  s += "\n";
  const std::size_t len = streams.empty() ? 0 : streams.front().size();
  for (std::size_t n = 0; n < len; ++n) {
    s += std::to_string(n);
    for (const auto& st : streams) {
      s += "," + std::to_string(st[n].i);
      s += "," + std::to_string(st[n].q);
    }
    s += "\n";
  }
  return s;
}

}  // namespace qubic::compiler
