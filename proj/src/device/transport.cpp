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

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>

#include "qubic/device.hpp"

namespace qubic::device {

namespace {

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr)
    throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc), 0);
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

// Waits for readability; false on timeout.
bool wait_readable(int fd, std::chrono::milliseconds timeout) {
  pollfd p{fd, POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  return rc > 0 && (p.revents & POLLIN);
}

}  // namespace

// ---------------------------------------------------------------------------

UdpTransport::UdpTransport(const std::string& host, std::uint16_t port) {
  const sockaddr_in addr = resolve(host, port);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"), 0);
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    throw TransportError(errno_text("connect"), 0);
  }
}

UdpTransport::~UdpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpTransport::send(std::span<const std::uint8_t> datagram) {
  // ECONNREFUSED from an earlier ICMP error is not fatal here; the retry
  // loop above decides when to give up
  (void)::send(fd_, datagram.data(), datagram.size(), 0);
}

std::optional<std::vector<std::uint8_t>> UdpTransport::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::vector<std::uint8_t> buf(kMaxDatagram);
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left.count())) == 0) return std::nullopt;
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), MSG_DONTWAIT);
    if (n >= 0) {
      buf.resize(static_cast<std::size_t>(n));
      return buf;
    }
    if (errno != ECONNREFUSED && errno != EINTR && errno != EAGAIN)
      throw TransportError(errno_text("recv"), 0);
    // nobody listening; wait out the timeout as for a lost datagram
    std::this_thread::sleep_for(std::min(left, std::chrono::milliseconds(5)));
  }
}

// ---------------------------------------------------------------------------

void InProcessTransport::send(std::span<const std::uint8_t> datagram) {
  auto rq = decode(datagram);
  if (!rq) return;
  inbox_.push_back(encode(core_.handle(*rq)));
}

std::optional<std::vector<std::uint8_t>> InProcessTransport::receive(std::chrono::milliseconds) {
  if (inbox_.empty()) return std::nullopt;
  auto d = std::move(inbox_.front());
  inbox_.pop_front();
  return d;
}

// ---------------------------------------------------------------------------

LossyTransport::LossyTransport(std::unique_ptr<Transport> inner, LossSettings settings)
    : inner_(std::move(inner)), settings_(settings), rng_(settings.seed) {}

bool LossyTransport::chance(double p) {
  return p > 0 && std::uniform_real_distribution<double>(0, 1)(rng_) < p;
}

void LossyTransport::send(std::span<const std::uint8_t> datagram) {
  std::vector<std::uint8_t> d(datagram.begin(), datagram.end());
  if (chance(settings_.drop)) {
    ++counters_.dropped;
    return;
  }
  if (!held_out_ && chance(settings_.reorder)) {
    ++counters_.reordered;
    held_out_ = std::move(d);
    return;
  }
  inner_->send(d);
  if (chance(settings_.duplicate)) {
    ++counters_.duplicated;
    inner_->send(d);
  }
  if (held_out_) {
    inner_->send(*held_out_);
    held_out_.reset();
  }
}

std::optional<std::vector<std::uint8_t>> LossyTransport::receive(std::chrono::milliseconds timeout) {
  if (!ready_in_.empty()) {
    auto d = std::move(ready_in_.front());
    ready_in_.pop_front();
    return d;
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) break;
    auto d = inner_->receive(left);
    if (!d) break;
    if (chance(settings_.drop)) {
      ++counters_.dropped;
      continue;
    }
    if (!held_in_ && chance(settings_.reorder)) {
      ++counters_.reordered;
      held_in_ = std::move(d);
      continue;
    }
    if (held_in_) {
      ready_in_.push_back(std::move(*held_in_));
      held_in_.reset();
    }
    ready_in_.push_back(std::move(*d));
    auto out = std::move(ready_in_.front());
    ready_in_.pop_front();
    return out;
  }
  // a held datagram is released late rather than never
  if (held_in_) {
    auto d = std::move(*held_in_);
    held_in_.reset();
    return d;
  }
  if (held_out_) {
    inner_->send(*held_out_);
    held_out_.reset();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Server::Server(const cfg::HardwareConfig& hw, const std::string& bind_host, std::uint16_t port)
    : core_(hw) {
  sockaddr_in addr = resolve(bind_host, port);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"), 0);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string why = errno_text("bind");
    ::close(fd_);
    throw TransportError(why, 0);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { loop(); });
}

Server::~Server() { stop(); }

void Server::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Server::loop() {
  std::vector<std::uint8_t> buf(kMaxDatagram + 1);
  while (!stop_) {
    if (!wait_readable(fd_, std::chrono::milliseconds(50))) continue;
    sockaddr_in peer{};
    socklen_t plen = sizeof(peer);
    const ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&peer), &plen);
    if (n < 0) continue;
    auto rq = decode(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)));
    if (!rq) {
      ++dropped_;
      std::clog << "qubic-device: dropped malformed datagram of " << n << " bytes\n";
      continue;
    }
    const auto out = encode(core_.handle(*rq));
    ++handled_;
    ::sendto(fd_, out.data(), out.size(), 0, reinterpret_cast<const sockaddr*>(&peer), plen);
  }
}

}  // namespace qubic::device
