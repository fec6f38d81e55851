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

#include <zlib.h>

#include <cstring>

#include "qubic/device.hpp"

namespace qubic::device {

namespace {

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

bool valid_op(std::uint8_t v) { return v >= 1 && v <= 5; }
bool valid_region(std::uint8_t v) { return v <= 4; }
bool valid_status(std::uint8_t v) { return v <= 4; }

}  // namespace

std::string to_string(Op op) {
  switch (op) {
    case Op::write: return "WRITE";
    case Op::read: return "READ";
    case Op::start: return "START";
    case Op::stop: return "STOP";
    case Op::status: return "STATUS";
  }
  return "?";
}

std::string to_string(Region r) {
  switch (r) {
    case Region::command: return "COMMAND";
    case Region::envelope: return "ENVELOPE";
    case Region::acc: return "ACC";
    case Region::acq: return "ACQ";
    case Region::control: return "CONTROL";
  }
  return "?";
}

std::string to_string(Status s) {
  switch (s) {
    case Status::ok: return "OK";
    case Status::busy: return "BUSY";
    case Status::range: return "RANGE";
    case Status::bad_request: return "BAD_REQUEST";
    case Status::rejected: return "REJECTED";
  }
  return "?";
}

std::size_t word_size(Region r) { return r == Region::command ? 16 : 4; }

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::vector<std::uint8_t> encode(const Packet& p) {
  const std::size_t total = kHeaderSize + p.payload.size() + kTrailerSize;
  if (total > kMaxDatagram)
    throw std::length_error("datagram of " + std::to_string(total) + " bytes exceeds " +
                            std::to_string(kMaxDatagram));
  std::vector<std::uint8_t> out;
  out.reserve(total);
  out.insert(out.end(), kMagic, kMagic + 4);
  put32(out, p.seq);
  out.push_back(static_cast<std::uint8_t>(static_cast<std::uint8_t>(p.op) | (p.response ? 0x80 : 0)));
  out.push_back(static_cast<std::uint8_t>(p.status));
  out.push_back(static_cast<std::uint8_t>(p.region));
  out.push_back(p.element);
  put32(out, p.offset);
  put32(out, p.count);
  out.insert(out.end(), p.payload.begin(), p.payload.end());
  put32(out, crc32(out));
  return out;
}

std::optional<Packet> decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize + kTrailerSize || bytes.size() > kMaxDatagram) return std::nullopt;
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) return std::nullopt;
  const std::size_t body = bytes.size() - kTrailerSize;
  if (crc32(bytes.first(body)) != get32(bytes.data() + body)) return std::nullopt;

  const std::uint8_t* h = bytes.data();
  const std::uint8_t op = h[8] & 0x7F;
  if (!valid_op(op) || !valid_status(h[9]) || !valid_region(h[10])) return std::nullopt;
  Packet p;
  p.seq = get32(h + 4);
  p.op = static_cast<Op>(op);
  p.response = (h[8] & 0x80) != 0;
  p.status = static_cast<Status>(h[9]);
  p.region = static_cast<Region>(h[10]);
  p.element = h[11];
  p.offset = get32(h + 12);
  p.count = get32(h + 16);
  p.payload.assign(h + kHeaderSize, h + body);

  // payload rules: WRITE requests and ok READ/STATUS responses carry
  // count words; a rejected response may carry a text message
  const std::size_t expect = static_cast<std::size_t>(p.count) * word_size(p.region);
  const bool carries = (!p.response && p.op == Op::write) ||
                       (p.response && p.status == Status::ok &&
                        (p.op == Op::read || p.op == Op::status));
  if (carries) {
    if (p.payload.size() != expect) return std::nullopt;
  } else if (!(p.response && p.status == Status::rejected) && !p.payload.empty()) {
    return std::nullopt;
  }
  return p;
}

}  // namespace qubic::device
