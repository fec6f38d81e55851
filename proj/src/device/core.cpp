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

#include "qubic/device.hpp"

namespace qubic::device {

namespace {

constexpr std::size_t kCacheSize = 256;

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

std::uint64_t get64(const std::uint8_t* p) {
  return (std::uint64_t{get32(p)} << 32) | get32(p + 4);
}

Packet reply(const Packet& rq, Status status) {
  Packet r;
  r.seq = rq.seq;
  r.op = rq.op;
  r.response = true;
  r.status = status;
  r.region = rq.region;
  r.element = rq.element;
  r.offset = rq.offset;
  r.count = status == Status::ok && (rq.op == Op::read || rq.op == Op::status) ? rq.count : 0;
  return r;
}

Packet rejected(const Packet& rq, const std::string& why) {
  Packet r = reply(rq, Status::rejected);
  r.payload.assign(why.begin(), why.end());
  if (r.payload.size() > kMaxPayload) r.payload.resize(kMaxPayload);
  return r;
}

}  // namespace

DeviceCore::DeviceCore(const cfg::HardwareConfig& hw)
    : sim_(dsp::SimConfig::from_hardware(hw)),
      command_depth_(hw.command_buffer_depth),
      commands_(hw.command_buffer_depth),
      memory_(sim_.total_elements(), std::vector<std::uint32_t>(sim_.envelope_depth)),
      written_(sim_.total_elements(), std::vector<bool>(sim_.envelope_depth)),
      regs_(reg::count) {
  acc_.elements.assign(sim_.n_down, {});
  regs_[reg::shots_lo] = 1;
}

DeviceCore::~DeviceCore() {
  stop_ = true;
  if (worker_.joinable()) worker_.join();
}

void DeviceCore::wait_idle() {
  std::thread t;
  {
    std::lock_guard lock(mu_);
    t.swap(worker_);
  }
  if (t.joinable()) t.join();
}

std::vector<dsp::Fault> DeviceCore::fault_log() const {
  std::lock_guard lock(mu_);
  return faults_;
}

Packet DeviceCore::handle(const Packet& request) {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(request.seq); it != cache_.end()) return it->second;
  Packet r = execute(request);
  cache_[request.seq] = r;
  cache_order_.push_back(request.seq);
  if (cache_order_.size() > kCacheSize) {
    cache_.erase(cache_order_.front());
    cache_order_.pop_front();
  }
  return r;
}

Packet DeviceCore::execute(const Packet& rq) {
  if (rq.response) return reply(rq, Status::bad_request);
  switch (rq.op) {
    case Op::status: {
      Packet r = reply(rq, Status::ok);
      r.region = Region::control;
      r.offset = 0;
      r.count = reg::count;
      for (std::uint32_t k = 0; k < reg::count; ++k) put32(r.payload, read_register(k));
      return r;
    }
    case Op::stop:
      stop_ = true;
      return reply(rq, Status::ok);
    case Op::start:
      return do_start(rq);
    case Op::write:
      return do_write(rq);
    case Op::read:
      return do_read(rq);
  }
  return reply(rq, Status::bad_request);
}

std::uint32_t DeviceCore::read_register(std::uint32_t r) const {
  switch (r) {
    case reg::run_state: return running_ ? 1 : 0;
    case reg::saturations: return static_cast<std::uint32_t>(std::min<std::uint64_t>(saturations_, UINT32_MAX));
    case reg::faults: return static_cast<std::uint32_t>(faults_.size());
    case reg::shots_done: return static_cast<std::uint32_t>(shots_done_);
    case reg::acq_fill: return static_cast<std::uint32_t>(acq_.samples.size());
    case reg::acc_full: return acc_full_ ? 1 : 0;
    case reg::action: return 0;
    default: break;
  }
  if (r >= reg::acc_count_base && r < reg::acc_count_base + sim_.n_down)
    return static_cast<std::uint32_t>(acc_.elements[r - reg::acc_count_base].size());
  return regs_[r];
}

Packet DeviceCore::do_write(const Packet& rq) {
  if (running_) return reply(rq, Status::busy);
  const std::uint64_t end = std::uint64_t{rq.offset} + rq.count;
  const std::uint8_t* p = rq.payload.data();
  switch (rq.region) {
    case Region::command:
      if (end > command_depth_) return reply(rq, Status::range);
      for (std::uint32_t k = 0; k < rq.count; ++k, p += 16)
        commands_[rq.offset + k] = {get64(p), get64(p + 8)};
      return reply(rq, Status::ok);
    case Region::envelope:
      if (rq.element >= sim_.total_elements() || end > sim_.envelope_depth)
        return reply(rq, Status::range);
      for (std::uint32_t k = 0; k < rq.count; ++k, p += 4) {
        memory_[rq.element][rq.offset + k] = get32(p);
        written_[rq.element][rq.offset + k] = true;
      }
      return reply(rq, Status::ok);
    case Region::control: {
      if (end > reg::first_read_only) return reply(rq, Status::range);
      for (std::uint32_t k = 0; k < rq.count; ++k, p += 4) {
        const std::uint32_t r = rq.offset + k, v = get32(p);
        if (r != reg::action) {
          regs_[r] = v;
          continue;
        }
        if (v & reg::action_clear_acc) {
          acc_.elements.assign(sim_.n_down, {});
          acc_full_ = false;
        }
        if (v & reg::action_clear_program) {
          for (auto& m : memory_) std::fill(m.begin(), m.end(), 0);
          for (auto& w : written_) std::fill(w.begin(), w.end(), false);
          std::fill(commands_.begin(), commands_.end(), cmd::CommandWord{});
          regs_[reg::command_count] = 0;
          regs_[reg::repeat_lo] = regs_[reg::repeat_hi] = 0;
        }
      }
      return reply(rq, Status::ok);
    }
    case Region::acc:
    case Region::acq:
      return reply(rq, Status::bad_request);
  }
  return reply(rq, Status::bad_request);
}

Packet DeviceCore::do_read(const Packet& rq) {
  if (running_ && rq.region != Region::control) return reply(rq, Status::busy);
  if (static_cast<std::size_t>(rq.count) * word_size(rq.region) > kMaxPayload)
    return reply(rq, Status::range);
  const std::uint64_t end = std::uint64_t{rq.offset} + rq.count;
  Packet r = reply(rq, Status::ok);
  auto& out = r.payload;
  switch (rq.region) {
    case Region::command:
      if (end > command_depth_) return reply(rq, Status::range);
      for (std::uint32_t k = 0; k < rq.count; ++k) {
        const auto& w = commands_[rq.offset + k];
        put32(out, static_cast<std::uint32_t>(w.hi >> 32));
        put32(out, static_cast<std::uint32_t>(w.hi));
        put32(out, static_cast<std::uint32_t>(w.lo >> 32));
        put32(out, static_cast<std::uint32_t>(w.lo));
      }
      return r;
    case Region::envelope:
      if (rq.element >= sim_.total_elements() || end > sim_.envelope_depth)
        return reply(rq, Status::range);
      for (std::uint32_t k = 0; k < rq.count; ++k) put32(out, memory_[rq.element][rq.offset + k]);
      return r;
    case Region::acc: {
      if (rq.element >= sim_.n_down || end > std::uint64_t{sim_.acc_depth} * kAccEntryWords)
        return reply(rq, Status::range);
      const auto& entries = acc_.elements[rq.element];
      for (std::uint64_t w = rq.offset; w < end; ++w) {
        const std::size_t e = w / kAccEntryWords;
        std::uint64_t v = 0;
        if (e < entries.size()) {
          const std::int64_t x = (w % kAccEntryWords) < 2 ? entries[e].i : entries[e].q;
          v = static_cast<std::uint64_t>(x);
        }
        put32(out, (w % 2) == 0 ? static_cast<std::uint32_t>(v >> 32) : static_cast<std::uint32_t>(v));
      }
      return r;
    }
    case Region::acq:
      if (end > sim_.acq_depth) return reply(rq, Status::range);
      for (std::uint64_t k = rq.offset; k < end; ++k)
        put32(out, k < acq_.samples.size() ? dsp::to_packed(acq_.samples[k]) : 0);
      return r;
    case Region::control:
      if (end > reg::count) return reply(rq, Status::range);
      for (std::uint32_t k = 0; k < rq.count; ++k) put32(out, read_register(rq.offset + k));
      return r;
  }
  return reply(rq, Status::bad_request);
}

dsp::MachineImage DeviceCore::image() const {
  dsp::MachineImage img;
  for (unsigned e = 0; e < memory_.size(); ++e) {
    const auto& w = written_[e];
    std::size_t k = 0;
    while (k < w.size()) {
      if (!w[k]) {
        ++k;
        continue;
      }
      std::size_t j = k;
      while (j < w.size() && w[j]) ++j;
      img.envelopes.push_back({e, static_cast<std::uint32_t>(k),
                               {memory_[e].begin() + static_cast<std::ptrdiff_t>(k),
                                memory_[e].begin() + static_cast<std::ptrdiff_t>(j)}});
      k = j;
    }
  }
  const std::uint32_t n = std::min(regs_[reg::command_count], command_depth_);
  img.commands.assign(commands_.begin(), commands_.begin() + n);
  img.repeat_period_samples = (std::uint64_t{regs_[reg::repeat_hi]} << 32) | regs_[reg::repeat_lo];
  return img;
}

Packet DeviceCore::do_start(const Packet& rq) {
  if (running_) return reply(rq, Status::busy);
  if (worker_.joinable()) worker_.join();

  auto sim = std::make_shared<dsp::Simulator>(sim_);
  try {
    sim->load(image());
  } catch (const dsp::SimError& e) {
    return rejected(rq, e.what());
  }

  dsp::RunOptions opt;
  opt.shots = (std::uint64_t{regs_[reg::shots_hi]} << 32) | regs_[reg::shots_lo];
  opt.acq.tap = static_cast<dsp::AcqTap>(regs_[reg::acq_tap]);
  opt.acq.index = regs_[reg::acq_index];
  opt.acq.shot = regs_[reg::acq_shot];
  opt.acq.offset = regs_[reg::acq_offset];
  opt.acq.length = regs_[reg::acq_length];
  if (regs_[reg::acq_tap] > 2) return rejected(rq, "acq tap register out of range");
  if (opt.acq.length > sim_.acq_depth) return rejected(rq, "acq length exceeds the capture depth");
  if ((opt.acq.tap == dsp::AcqTap::dac && opt.acq.index >= sim_.n_pairs) ||
      (opt.acq.tap == dsp::AcqTap::dlo && opt.acq.index >= sim_.total_elements()))
    return rejected(rq, "acq tap index out of range");
  if (regs_[reg::adc_mode] == 1 && regs_[reg::loopback_pair] >= sim_.n_pairs)
    return rejected(rq, "loopback pair out of range");
  if (regs_[reg::adc_mode] == 1 && regs_[reg::loopback_delay] > (1u << 20))
    return rejected(rq, "loopback delay above 2^20 samples");
  std::shared_ptr<dsp::AdcSource> adc;
  if (regs_[reg::adc_mode] == 1)
    adc = std::make_shared<dsp::Loopback>(regs_[reg::loopback_pair], regs_[reg::loopback_delay]);
  else
    adc = std::make_shared<dsp::OpenLoop>();

  // status counters describe the most recent run
  faults_.clear();
  saturations_ = 0;
  shots_done_ = 0;
  stop_ = false;
  opt.stop_requested = [this] { return stop_.load(); };
  running_ = true;
  worker_ = std::thread([this, sim, adc, opt] {
    dsp::RunResult res;
    std::string error;
    try {
      res = sim->run(opt, *adc);
    } catch (const dsp::SimError& e) {
      error = e.what();
    }
    std::lock_guard lock(mu_);
    if (error.empty()) {
      for (unsigned d = 0; d < sim_.n_down; ++d) {
        auto& buf = acc_.elements[d];
        for (const auto& e : res.acc.elements[d]) {
          if (buf.size() < sim_.acc_depth)
            buf.push_back(e);
          else
            acc_full_ = true;
        }
      }
      acc_full_ = acc_full_ || res.acc_full;
      acq_ = std::move(res.acq);
      faults_.insert(faults_.end(), res.faults.begin(), res.faults.end());
      saturations_ += res.saturations;
      shots_done_ = res.shots_completed;
    } else {
      faults_.push_back({dsp::Fault::Kind::bad_destination, 0, 0, 0, error});
    }
    running_ = false;
  });
  return reply(rq, Status::ok);
}

}  // namespace qubic::device
