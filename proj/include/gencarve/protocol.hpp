#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string_view>

#include "gencarve/error.hpp"
#include "gencarve/io.hpp"

// Predictor wire protocol (little-endian, over the predictor's stdio):
//   handshake  host -> "CGP1"            predictor -> "CGP1" 0x01
//   request    "RQ" u32 prefix_len u32 requested_len <prefix bytes>
//   response   "RS" u32 payload_len <payload bytes>   (payload_len == requested_len)
namespace gencarve::protocol {

inline constexpr std::string_view kHandshake = "CGP1";
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::string_view kRequestMagic = "RQ";
inline constexpr std::string_view kResponseMagic = "RS";
inline constexpr std::size_t kFrameHeaderSize = 6;
inline constexpr std::size_t kRequestHeaderSize = 10;

using Clock = std::chrono::steady_clock;

/// Raised when the peer closed its end before a full frame arrived.
class StreamClosed : public Error {
 public:
  explicit StreamClosed(const std::string& what) : Error(Errc::ProtocolError, what) {}
};

/// Blocking byte stream with deadlines.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void write_all(ByteView data, Clock::time_point deadline) = 0;
  virtual void read_exact(std::span<std::uint8_t> out, Clock::time_point deadline) = 0;
};

/// Channel over a pair of file descriptors (not owned).
class FdChannel : public Channel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  void write_all(ByteView data, Clock::time_point deadline) override;
  void read_exact(std::span<std::uint8_t> out, Clock::time_point deadline) override;

 private:
  int read_fd_;
  int write_fd_;
};

Bytes encode_request(ByteView prefix, std::uint32_t requested_length);
Bytes encode_response(ByteView payload);

// Host side.
void client_handshake(Channel& ch, Clock::duration timeout);
/// Reads and validates one response frame. Wrong magic or an oversized
/// length is ProtocolError; a well-formed frame carrying fewer bytes than
/// requested is ShortResponse.
Bytes read_response(Channel& ch, std::uint32_t requested_length, Clock::duration timeout);

// Predictor side.
struct Request {
  Bytes prefix;
  std::uint32_t requested_length = 0;
};

void server_handshake(Channel& ch, Clock::duration timeout);
/// nullopt-like behaviour via StreamClosed when the host hangs up between
/// frames; any other framing problem is ProtocolError.
Request read_request(Channel& ch, Clock::duration timeout, std::uint32_t max_prefix = 1u << 26);

}  // namespace gencarve::protocol
