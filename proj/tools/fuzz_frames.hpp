#pragma once

// Generator of malformed predictor response frames, shared by the mock
// predictor's fuzz mode and the protocol tests.

#include <cstdint>

#include "gencarve/io.hpp"
#include "gencarve/protocol.hpp"
#include "gencarve/rng.hpp"

namespace gencarve::fuzz {

enum class FrameFault {
  WrongMagic,
  OversizedLength,
  ShortPayload,     // well-formed but fewer bytes than requested
  TruncatedPayload,  // length says N, stream ends early
  TruncatedHeader,
  Empty,
  Garbage,
  kCount,
};

inline bool is_valid_response(ByteView frame, std::uint32_t requested) {
  if (frame.size() != protocol::kFrameHeaderSize + requested) return false;
  if (frame[0] != 'R' || frame[1] != 'S') return false;
  const std::uint32_t len = std::uint32_t{frame[2]} | (std::uint32_t{frame[3]} << 8) |
                            (std::uint32_t{frame[4]} << 16) | (std::uint32_t{frame[5]} << 24);
  return len == requested;
}

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

/// Bytes a misbehaving predictor writes before closing its stdout.
inline Bytes malformed_response(Rng& rng, std::uint32_t requested) {
  auto random_bytes = [&](std::size_t n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.next() >> 56);
    return b;
  };
  const auto fault = static_cast<FrameFault>(rng.below(static_cast<std::uint64_t>(FrameFault::kCount)));
  Bytes frame;
  switch (fault) {
    case FrameFault::WrongMagic: {
      frame = random_bytes(2);
      if (frame[0] == 'R' && frame[1] == 'S') frame[1] = 'X';
      put_u32(frame, requested);
      const Bytes body = random_bytes(requested);
      frame.insert(frame.end(), body.begin(), body.end());
      break;
    }
    case FrameFault::OversizedLength: {
      frame = {'R', 'S'};
      const std::uint32_t claimed = requested + 1 + static_cast<std::uint32_t>(rng.below(1u << 31));
      put_u32(frame, claimed);
      const Bytes body = random_bytes(rng.below(std::uint64_t{requested} + 8));
      frame.insert(frame.end(), body.begin(), body.end());
      break;
    }
    case FrameFault::ShortPayload: {
      frame = {'R', 'S'};
      const auto len = static_cast<std::uint32_t>(rng.below(requested));
      put_u32(frame, len);
      const Bytes body = random_bytes(len);
      frame.insert(frame.end(), body.begin(), body.end());
      break;
    }
    case FrameFault::TruncatedPayload: {
      frame = {'R', 'S'};
      put_u32(frame, requested);
      const Bytes body = random_bytes(rng.below(requested));
      frame.insert(frame.end(), body.begin(), body.end());
      break;
    }
    case FrameFault::TruncatedHeader: {
      frame = {'R', 'S'};
      put_u32(frame, requested);
      frame.resize(rng.below(protocol::kFrameHeaderSize));
      break;
    }
    case FrameFault::Empty:
      break;
    case FrameFault::Garbage:
    case FrameFault::kCount:
      frame = random_bytes(rng.below(std::uint64_t{requested} * 2 + 16));
      break;
  }
  if (is_valid_response(frame, requested)) frame[0] ^= 0xFF;
  return frame;
}

}  // namespace gencarve::fuzz
