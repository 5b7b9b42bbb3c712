#include "gencarve/protocol.hpp"

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace gencarve::protocol {

namespace {

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

void wait_ready(int fd, short events, Clock::time_point deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) throw Error(Errc::Timeout, "predictor did not respond in time");
    if (errno != EINTR) throw Error(Errc::IoError, std::string("poll: ") + std::strerror(errno));
  }
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

bool matches(const std::uint8_t* p, std::string_view magic) {
  return std::equal(magic.begin(), magic.end(), p, [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; });
}

}  // namespace

void FdChannel::write_all(ByteView data, Clock::time_point deadline) {
  std::size_t done = 0;
  while (done < data.size()) {
    wait_ready(write_fd_, POLLOUT, deadline);
    const ssize_t n = ::write(write_fd_, data.data() + done, data.size() - done);
    if (n > 0) {
      done += static_cast<std::size_t>(n);
    } else if (n < 0 && (errno == EINTR || errno == EAGAIN)) {
      continue;
    } else if (n < 0 && errno == EPIPE) {
      throw StreamClosed("predictor closed its input");
    } else {
      throw Error(Errc::IoError, std::string("write: ") + std::strerror(errno));
    }
  }
}

void FdChannel::read_exact(std::span<std::uint8_t> out, Clock::time_point deadline) {
  std::size_t done = 0;
  while (done < out.size()) {
    wait_ready(read_fd_, POLLIN, deadline);
    const ssize_t n = ::read(read_fd_, out.data() + done, out.size() - done);
    if (n > 0) {
      done += static_cast<std::size_t>(n);
    } else if (n == 0) {
      throw StreamClosed("stream closed after " + std::to_string(done) + " of " + std::to_string(out.size()) + " bytes");
    } else if (errno != EINTR && errno != EAGAIN) {
      throw Error(Errc::IoError, std::string("read: ") + std::strerror(errno));
    }
  }
}

Bytes encode_request(ByteView prefix, std::uint32_t requested_length) {
  Bytes out(kRequestMagic.begin(), kRequestMagic.end());
  put_u32(out, static_cast<std::uint32_t>(prefix.size()));
  put_u32(out, requested_length);
  out.insert(out.end(), prefix.begin(), prefix.end());
  return out;
}

Bytes encode_response(ByteView payload) {
  Bytes out(kResponseMagic.begin(), kResponseMagic.end());
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

void client_handshake(Channel& ch, Clock::duration timeout) {
  const auto deadline = Clock::now() + timeout;
  ch.write_all(as_bytes(kHandshake), deadline);
  std::uint8_t reply[5];
  ch.read_exact(reply, deadline);
  if (!matches(reply, kHandshake)) throw Error(Errc::ProtocolError, "bad handshake magic");
  if (reply[4] != kVersion) throw Error(Errc::ProtocolError, "unsupported protocol version " + std::to_string(reply[4]));
}

Bytes read_response(Channel& ch, std::uint32_t requested_length, Clock::duration timeout) {
  const auto deadline = Clock::now() + timeout;
  std::uint8_t header[kFrameHeaderSize];
  ch.read_exact(header, deadline);
  if (!matches(header, kResponseMagic)) throw Error(Errc::ProtocolError, "bad response magic");
  const std::uint32_t length = get_u32(header + 2);
  if (length > requested_length)
    throw Error(Errc::ProtocolError, "response claims " + std::to_string(length) + " bytes, requested " +
                                         std::to_string(requested_length));
  Bytes payload(length);
  ch.read_exact(payload, deadline);
  if (length < requested_length)
    throw Error(Errc::ShortResponse, "predictor returned " + std::to_string(length) + " of " +
                                         std::to_string(requested_length) + " bytes");
  return payload;
}

void server_handshake(Channel& ch, Clock::duration timeout) {
  const auto deadline = Clock::now() + timeout;
  std::uint8_t hello[4];
  ch.read_exact(hello, deadline);
  if (!matches(hello, kHandshake)) throw Error(Errc::ProtocolError, "bad handshake from host");
  Bytes reply(kHandshake.begin(), kHandshake.end());
  reply.push_back(kVersion);
  ch.write_all(reply, deadline);
}

Request read_request(Channel& ch, Clock::duration timeout, std::uint32_t max_prefix) {
  const auto deadline = Clock::now() + timeout;
  std::uint8_t header[kRequestHeaderSize];
  ch.read_exact(header, deadline);
  if (!matches(header, kRequestMagic)) throw Error(Errc::ProtocolError, "bad request magic");
  Request req;
  const std::uint32_t prefix_len = get_u32(header + 2);
  req.requested_length = get_u32(header + 6);
  if (prefix_len > max_prefix) throw Error(Errc::ProtocolError, "prefix too large");
  req.prefix.resize(prefix_len);
  ch.read_exact(req.prefix, deadline);
  return req;
}

}  // namespace gencarve::protocol
