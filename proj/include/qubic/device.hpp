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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qubic/chipcfg.hpp"
#include "qubic/cmdcodec.hpp"
#include "qubic/dspsim.hpp"

namespace qubic::compiler {
struct CompiledProgram;
}

namespace qubic::device {

// ---------------------------------------------------------------------------
// Wire format (see docs/protocol.md)

inline constexpr char kMagic[4] = {'Q', 'B', 'C', '1'};
inline constexpr std::size_t kMaxDatagram = 8192;
inline constexpr std::size_t kHeaderSize = 20;
inline constexpr std::size_t kTrailerSize = 4;
inline constexpr std::size_t kMaxPayload = kMaxDatagram - kHeaderSize - kTrailerSize;

enum class Op : std::uint8_t { write = 1, read = 2, start = 3, stop = 4, status = 5 };
enum class Region : std::uint8_t { command = 0, envelope = 1, acc = 2, acq = 3, control = 4 };
enum class Status : std::uint8_t { ok = 0, busy = 1, range = 2, bad_request = 3, rejected = 4 };

std::string to_string(Op op);
std::string to_string(Region r);
std::string to_string(Status s);

/// Bytes per addressed word: 16 for the command buffer, 4 elsewhere.
std::size_t word_size(Region r);

struct Packet {
  std::uint32_t seq = 0;
  Op op = Op::status;
  bool response = false;
  Status status = Status::ok;
  Region region = Region::control;
  std::uint8_t element = 0;
  std::uint32_t offset = 0;
  std::uint32_t count = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Packet&) const = default;
};

/// Serializes with the CRC32 trailer. Throws std::length_error above
/// kMaxDatagram.
std::vector<std::uint8_t> encode(const Packet& p);

/// Returns nullopt for short datagrams, bad magic, CRC mismatch or an
/// inconsistent payload length.
std::optional<Packet> decode(std::span<const std::uint8_t> bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Control register file, 32-bit words.
namespace reg {
inline constexpr std::uint32_t shots_lo = 0;
inline constexpr std::uint32_t shots_hi = 1;
inline constexpr std::uint32_t command_count = 2;
inline constexpr std::uint32_t repeat_lo = 3;
inline constexpr std::uint32_t repeat_hi = 4;
inline constexpr std::uint32_t acq_tap = 5;
inline constexpr std::uint32_t acq_index = 6;
inline constexpr std::uint32_t acq_shot = 7;
inline constexpr std::uint32_t acq_offset = 8;
inline constexpr std::uint32_t acq_length = 9;
inline constexpr std::uint32_t adc_mode = 10;  // 0 open loop, 1 loopback
inline constexpr std::uint32_t loopback_pair = 11;
inline constexpr std::uint32_t loopback_delay = 12;
inline constexpr std::uint32_t action = 13;  // write-only strobe
inline constexpr std::uint32_t first_read_only = 16;
inline constexpr std::uint32_t run_state = 16;
inline constexpr std::uint32_t saturations = 17;
inline constexpr std::uint32_t faults = 18;
inline constexpr std::uint32_t shots_done = 19;
inline constexpr std::uint32_t acq_fill = 20;
inline constexpr std::uint32_t acc_full = 21;
inline constexpr std::uint32_t acc_count_base = 32;  // one per down element
inline constexpr std::uint32_t count = 64;

inline constexpr std::uint32_t action_clear_acc = 1;
inline constexpr std::uint32_t action_clear_program = 2;
}  // namespace reg

inline constexpr std::size_t kAccEntryWords = 4;  // i64 I, i64 Q

// ---------------------------------------------------------------------------
// Device model

/// The emulated buffer address space with an embedded simulator. Requests
/// are handled one at a time; START runs the simulator on a background
/// thread.
class DeviceCore {
 public:
  explicit DeviceCore(const cfg::HardwareConfig& hw);
  ~DeviceCore();
  DeviceCore(const DeviceCore&) = delete;
  DeviceCore& operator=(const DeviceCore&) = delete;

  /// Executes a request and returns the response. Repeated sequence numbers
  /// are answered from a response cache without re-executing.
  Packet handle(const Packet& request);

  bool running() const { return running_; }
  void wait_idle();
  const dsp::SimConfig& sim_config() const { return sim_; }
  std::vector<dsp::Fault> fault_log() const;

 private:
  Packet execute(const Packet& rq);
  Packet do_write(const Packet& rq);
  Packet do_read(const Packet& rq);
  Packet do_start(const Packet& rq);
  dsp::MachineImage image() const;
  std::uint32_t read_register(std::uint32_t r) const;

  dsp::SimConfig sim_;
  std::uint32_t command_depth_;
  std::vector<cmd::CommandWord> commands_;
  std::vector<std::vector<std::uint32_t>> memory_;
  std::vector<std::vector<bool>> written_;
  std::vector<std::uint32_t> regs_;

  dsp::AccResult acc_;
  bool acc_full_ = false;
  dsp::AcqTrace acq_;
  std::vector<dsp::Fault> faults_;
  std::uint64_t saturations_ = 0;
  std::uint64_t shots_done_ = 0;

  mutable std::mutex mu_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stop_{false};
  std::thread worker_;

  std::map<std::uint32_t, Packet> cache_;
  std::deque<std::uint32_t> cache_order_;
};

// ---------------------------------------------------------------------------
// Transports

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, std::uint32_t last_seq)
      : std::runtime_error(what), last_seq_(last_seq) {}
  std::uint32_t last_seq() const { return last_seq_; }

 private:
  std::uint32_t last_seq_;
};

/// A request the device answered with a non-ok status.
class DeviceError : public std::runtime_error {
 public:
  DeviceError(const std::string& what, Status status) : std::runtime_error(what), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

/// Client side of a datagram link.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::span<const std::uint8_t> datagram) = 0;
  virtual std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) = 0;
};

class UdpTransport final : public Transport {
 public:
  UdpTransport(const std::string& host, std::uint16_t port);
  ~UdpTransport() override;
  void send(std::span<const std::uint8_t> datagram) override;
  std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) override;

 private:
  int fd_ = -1;
};

/// Direct, synchronous link to a DeviceCore in the same process.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(DeviceCore& core) : core_(core) {}
  void send(std::span<const std::uint8_t> datagram) override;
  std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) override;

 private:
  DeviceCore& core_;
  std::deque<std::vector<std::uint8_t>> inbox_;
};

struct LossSettings {
  double drop = 0;       // per datagram, each direction
  double duplicate = 0;  // outgoing only
  double reorder = 0;    // hold a datagram back behind the next one
  std::uint64_t seed = 1;
};

struct LossCounters {
  std::uint64_t dropped = 0, duplicated = 0, reordered = 0;
};

/// Fault injection around another transport.
class LossyTransport final : public Transport {
 public:
  LossyTransport(std::unique_ptr<Transport> inner, LossSettings settings);
  void send(std::span<const std::uint8_t> datagram) override;
  std::optional<std::vector<std::uint8_t>> receive(std::chrono::milliseconds timeout) override;
  const LossCounters& counters() const { return counters_; }

 private:
  bool chance(double p);

  std::unique_ptr<Transport> inner_;
  LossSettings settings_;
  std::mt19937_64 rng_;
  std::optional<std::vector<std::uint8_t>> held_out_, held_in_;
  std::deque<std::vector<std::uint8_t>> ready_in_;
  LossCounters counters_;
};

// ---------------------------------------------------------------------------
// UDP server

/// Serves a DeviceCore on a UDP socket from a background thread until
/// stop() or destruction.
class Server {
 public:
  Server(const cfg::HardwareConfig& hw, const std::string& bind_host, std::uint16_t port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();
  DeviceCore& core() { return core_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t handled() const { return handled_; }

 private:
  void loop();

  DeviceCore core_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> dropped_{0}, handled_{0};
  std::thread thread_;
};

// ---------------------------------------------------------------------------
// Client

struct RetryPolicy {
  int retries = 3;  // resends after the first attempt
  std::chrono::milliseconds timeout{100};
};

struct DeviceStatus {
  bool running = false;
  std::uint64_t saturations = 0;
  std::uint64_t faults = 0;
  std::uint64_t shots_completed = 0;
  std::uint64_t acq_fill = 0;
  bool acc_full = false;
  std::vector<std::uint32_t> acc_counts;  // per down element
};

struct RunSetup {
  std::uint64_t shots = 1;
  dsp::AcqSettings acq;
  std::optional<std::pair<unsigned, std::uint64_t>> loopback;  // (pair, delay)
};

/// What a remote run returns; compares against the local simulator.
struct RemoteResult {
  dsp::AccResult acc;
  dsp::AcqTrace acq;
  DeviceStatus status;
};

class Client {
 public:
  Client(std::unique_ptr<Transport> transport, const cfg::HardwareConfig& hw,
         RetryPolicy policy = {});

  /// Stop-and-wait exchange. Throws TransportError after the retries run
  /// out, std::runtime_error on a non-ok status.
  Packet request(Packet rq);

  void write_words(Region region, std::uint8_t element, std::uint32_t offset,
                   std::span<const std::uint32_t> words);
  std::vector<std::uint32_t> read_words(Region region, std::uint8_t element, std::uint32_t offset,
                                        std::uint32_t count);
  void write_commands(std::uint32_t offset, std::span<const cmd::CommandWord> words);
  std::vector<cmd::CommandWord> read_commands(std::uint32_t offset, std::uint32_t count);

  void upload(const dsp::MachineImage& image);
  void upload(const compiler::CompiledProgram& program);
  void configure(const RunSetup& setup);
  void start();
  void stop();
  DeviceStatus status();
  void wait_idle(std::chrono::milliseconds limit = std::chrono::minutes(10));
  dsp::AccResult read_acc();
  dsp::AcqTrace read_acq();
  void clear_acc();

  /// configure + start + wait + read back.
  RemoteResult run(const RunSetup& setup);

  std::uint64_t retransmissions() const { return retransmissions_; }
  std::uint32_t next_seq() const { return seq_; }

 private:
  std::unique_ptr<Transport> transport_;
  cfg::HardwareConfig hw_;
  dsp::SimConfig sim_;
  RetryPolicy policy_;
  std::uint32_t seq_;
  std::uint64_t retransmissions_ = 0;
  RunSetup last_setup_;
};

/// Runs the same image on a local simulator with the same setup.
dsp::RunResult run_locally(const dsp::SimConfig& config, const dsp::MachineImage& image,
                           const RunSetup& setup);

}  // namespace qubic::device
