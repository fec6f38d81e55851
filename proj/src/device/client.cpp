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
#include <random>

#include "qubic/compiler.hpp"
#include "qubic/device.hpp"

namespace qubic::device {

namespace {

constexpr std::uint32_t kWordsPerPacket = (kMaxPayload / 4) & ~3u;  // keeps acc entries whole
constexpr std::uint32_t kCommandsPerPacket = kMaxPayload / 16;

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::vector<std::uint32_t> words_of(const Packet& p) {
  std::vector<std::uint32_t> w(p.payload.size() / 4);
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = get32(p.payload.data() + 4 * k);
  return w;
}

}  // namespace

Client::Client(std::unique_ptr<Transport> transport, const cfg::HardwareConfig& hw, RetryPolicy policy)
    : transport_(std::move(transport)),
      hw_(hw),
      sim_(dsp::SimConfig::from_hardware(hw)),
      policy_(policy),
      seq_(std::random_device{}()) {}

Packet Client::request(Packet rq) {
  rq.seq = seq_++;
  rq.response = false;
  const auto bytes = encode(rq);
  for (int attempt = 0; attempt <= policy_.retries; ++attempt) {
    if (attempt > 0) ++retransmissions_;
    transport_->send(bytes);
    const auto deadline = std::chrono::steady_clock::now() + policy_.timeout;
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) break;
      auto d = transport_->receive(left);
      if (!d) break;
      auto r = decode(*d);
      // corrupt, stale or duplicated responses are ignored
      if (!r || !r->response || r->seq != rq.seq || r->op != rq.op) continue;
      if (r->status != Status::ok) {
        std::string what = to_string(rq.op) + " " + to_string(rq.region) + " -> " + to_string(r->status);
        if (!r->payload.empty()) what += ": " + std::string(r->payload.begin(), r->payload.end());
        throw DeviceError(what, r->status);
      }
      return *r;
    }
  }
  throw TransportError("no response to " + to_string(rq.op) + " seq " + std::to_string(rq.seq) +
                           " after " + std::to_string(policy_.retries) + " retries",
                       rq.seq);
}

void Client::write_words(Region region, std::uint8_t element, std::uint32_t offset,
                         std::span<const std::uint32_t> words) {
  for (std::size_t k = 0; k < words.size(); k += kWordsPerPacket) {
    const auto n = static_cast<std::uint32_t>(std::min<std::size_t>(kWordsPerPacket, words.size() - k));
    Packet p;
    p.op = Op::write;
    p.region = region;
    p.element = element;
    p.offset = offset + static_cast<std::uint32_t>(k);
    p.count = n;
    for (std::uint32_t j = 0; j < n; ++j) put32(p.payload, words[k + j]);
    request(std::move(p));
  }
}

std::vector<std::uint32_t> Client::read_words(Region region, std::uint8_t element, std::uint32_t offset,
                                              std::uint32_t count) {
  std::vector<std::uint32_t> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; k += kWordsPerPacket) {
    Packet p;
    p.op = Op::read;
    p.region = region;
    p.element = element;
    p.offset = offset + k;
    p.count = std::min(kWordsPerPacket, count - k);
    auto w = words_of(request(std::move(p)));
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

void Client::write_commands(std::uint32_t offset, std::span<const cmd::CommandWord> words) {
  for (std::size_t k = 0; k < words.size(); k += kCommandsPerPacket) {
    const auto n = static_cast<std::uint32_t>(std::min<std::size_t>(kCommandsPerPacket, words.size() - k));
    Packet p;
    p.op = Op::write;
    p.region = Region::command;
    p.offset = offset + static_cast<std::uint32_t>(k);
    p.count = n;
    for (std::uint32_t j = 0; j < n; ++j) {
      const auto& w = words[k + j];
      put32(p.payload, static_cast<std::uint32_t>(w.hi >> 32));
      put32(p.payload, static_cast<std::uint32_t>(w.hi));
      put32(p.payload, static_cast<std::uint32_t>(w.lo >> 32));
      put32(p.payload, static_cast<std::uint32_t>(w.lo));
    }
    request(std::move(p));
  }
}

std::vector<cmd::CommandWord> Client::read_commands(std::uint32_t offset, std::uint32_t count) {
  std::vector<cmd::CommandWord> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; k += kCommandsPerPacket) {
    Packet p;
    p.op = Op::read;
    p.region = Region::command;
    p.offset = offset + k;
    p.count = std::min(kCommandsPerPacket, count - k);
    auto w = words_of(request(std::move(p)));
    for (std::size_t j = 0; j + 3 < w.size(); j += 4)
      out.push_back({(std::uint64_t{w[j]} << 32) | w[j + 1], (std::uint64_t{w[j + 2]} << 32) | w[j + 3]});
  }
  return out;
}

void Client::upload(const dsp::MachineImage& image) {
  if (image.commands.size() > hw_.command_buffer_depth)
    throw DeviceError("program has " + std::to_string(image.commands.size()) +
                          " commands, the buffer holds " + std::to_string(hw_.command_buffer_depth),
                      Status::range);
  const std::uint32_t clear = reg::action_clear_program;
  write_words(Region::control, 0, reg::action, std::span(&clear, 1));
  for (const auto& r : image.envelopes) {
    if (r.element > 255) throw DeviceError("element index above 255", Status::range);
    write_words(Region::envelope, static_cast<std::uint8_t>(r.element), r.base, r.words);
  }
  write_commands(0, image.commands);
  const std::uint32_t regs[] = {static_cast<std::uint32_t>(image.commands.size()),
                                static_cast<std::uint32_t>(image.repeat_period_samples),
                                static_cast<std::uint32_t>(image.repeat_period_samples >> 32)};
  write_words(Region::control, 0, reg::command_count, regs);
}

void Client::upload(const compiler::CompiledProgram& program) {
  upload(compiler::to_machine_image(program, hw_));
}

void Client::configure(const RunSetup& setup) {
  const std::uint32_t shots[] = {static_cast<std::uint32_t>(setup.shots),
                                 static_cast<std::uint32_t>(setup.shots >> 32)};
  write_words(Region::control, 0, reg::shots_lo, shots);
  const std::uint32_t acq[] = {static_cast<std::uint32_t>(setup.acq.tap),
                               setup.acq.index,
                               static_cast<std::uint32_t>(setup.acq.shot),
                               static_cast<std::uint32_t>(setup.acq.offset),
                               static_cast<std::uint32_t>(setup.acq.length),
                               setup.loopback ? 1u : 0u,
                               setup.loopback ? setup.loopback->first : 0u,
                               setup.loopback ? static_cast<std::uint32_t>(setup.loopback->second) : 0u};
  write_words(Region::control, 0, reg::acq_tap, acq);
  last_setup_ = setup;
}

void Client::start() {
  Packet p;
  p.op = Op::start;
  request(std::move(p));
}

void Client::stop() {
  Packet p;
  p.op = Op::stop;
  request(std::move(p));
}

DeviceStatus Client::status() {
  Packet p;
  p.op = Op::status;
  const auto w = words_of(request(std::move(p)));
  if (w.size() < reg::count) throw TransportError("short STATUS payload", seq_ - 1);
  DeviceStatus s;
  s.running = w[reg::run_state] != 0;
  s.saturations = w[reg::saturations];
  s.faults = w[reg::faults];
  s.shots_completed = w[reg::shots_done];
  s.acq_fill = w[reg::acq_fill];
  s.acc_full = w[reg::acc_full] != 0;
  for (unsigned d = 0; d < sim_.n_down; ++d) s.acc_counts.push_back(w[reg::acc_count_base + d]);
  return s;
}

void Client::wait_idle(std::chrono::milliseconds limit) {
  using namespace std::chrono;
  const auto begin = steady_clock::now();
  const auto deadline = begin + limit;
  while (status().running) {
    const auto now = steady_clock::now();
    if (now > deadline) throw TransportError("device still running after the wait limit", seq_ - 1);
    // poll at a tenth of the elapsed time: overshoot stays proportional to the run
    std::this_thread::sleep_for(std::clamp(duration_cast<microseconds>(now - begin) / 10, microseconds(20),
                                           microseconds(50000)));
  }
}

dsp::AccResult Client::read_acc() {
  const auto s = status();
  dsp::AccResult acc;
  acc.elements.resize(sim_.n_down);
  for (unsigned d = 0; d < sim_.n_down; ++d) {
    const auto n = static_cast<std::uint32_t>(s.acc_counts[d]);
    if (n == 0) continue;
    const auto w = read_words(Region::acc, static_cast<std::uint8_t>(d), 0,
                              n * static_cast<std::uint32_t>(kAccEntryWords));
    for (std::uint32_t e = 0; e < n; ++e) {
      const std::uint32_t* x = w.data() + e * kAccEntryWords;
      acc.elements[d].push_back({static_cast<std::int64_t>((std::uint64_t{x[0]} << 32) | x[1]),
                                 static_cast<std::int64_t>((std::uint64_t{x[2]} << 32) | x[3])});
    }
  }
  return acc;
}

dsp::AcqTrace Client::read_acq() {
  const auto s = status();
  dsp::AcqTrace t;
  t.settings = last_setup_.acq;
  if (s.acq_fill == 0) return t;
  for (auto w : read_words(Region::acq, 0, 0, static_cast<std::uint32_t>(s.acq_fill)))
    t.samples.push_back(dsp::from_packed(w));
  return t;
}

void Client::clear_acc() {
  const std::uint32_t v = reg::action_clear_acc;
  write_words(Region::control, 0, reg::action, std::span(&v, 1));
}

RemoteResult Client::run(const RunSetup& setup) {
  clear_acc();
  configure(setup);
  start();
  wait_idle();
  RemoteResult r;
  r.status = status();
  r.acc = read_acc();
  r.acq = read_acq();
  return r;
}

dsp::RunResult run_locally(const dsp::SimConfig& config, const dsp::MachineImage& image,
                           const RunSetup& setup) {
  dsp::RunOptions opt;
  opt.shots = setup.shots;
  opt.acq = setup.acq;
  opt.capture_acq = true;
  if (setup.loopback) {
    dsp::Loopback lb(setup.loopback->first, setup.loopback->second);
    return dsp::run_image(config, image, opt, lb);
  }
  dsp::OpenLoop open;
  return dsp::run_image(config, image, opt, open);
}

}  // namespace qubic::device
