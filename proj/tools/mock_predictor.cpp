// Conformance test double for the predictor wire protocol. The default mode
// answers every request with `length` copies of one byte; the other modes
// misbehave in specific ways so hosts can be tested against them.

#include <unistd.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "fuzz_frames.hpp"
#include "gencarve/protocol.hpp"
#include "gencarve/rng.hpp"

using namespace gencarve;

int main(int argc, char** argv) {
  CLI::App app{"Mock predictor speaking the gencarve wire protocol"};
  std::string mode = "echo";
  int fill = 0x41;
  std::size_t crash_after = 0;
  std::uint64_t seed = 0;
  std::size_t max_output = 0;
  app.add_option("--mode", mode, "echo|repeat-prefix|bad-handshake|bad-version|bad-magic|short|oversize|crash|hang|fuzz")
      ->check(CLI::IsMember({"echo", "repeat-prefix", "bad-handshake", "bad-version", "bad-magic", "short",
                             "oversize", "crash", "hang", "fuzz"}));
  app.add_option("--byte", fill, "Fill byte for echo mode");
  app.add_option("--crash-after", crash_after, "crash mode: requests answered before aborting");
  app.add_option("--seed", seed, "fuzz mode: frame generator seed");
  app.add_option("--max-output", max_output, "Truncate payloads to this many bytes (0: unlimited)");
  CLI11_PARSE(app, argc, argv);

  std::signal(SIGPIPE, SIG_IGN);
  protocol::FdChannel ch(STDIN_FILENO, STDOUT_FILENO);
  const auto forever = std::chrono::hours(24);
  const auto deadline = [&] { return protocol::Clock::now() + forever; };

  try {
    if (mode == "bad-handshake") {
      std::uint8_t hello[4];
      ch.read_exact(hello, deadline());
      ch.write_all(as_bytes("CGP2\x01"), deadline());
      return 0;
    }
    if (mode == "bad-version") {
      std::uint8_t hello[4];
      ch.read_exact(hello, deadline());
      ch.write_all(as_bytes("CGP1\x07"), deadline());
      return 0;
    }
    protocol::server_handshake(ch, forever);

    Rng rng(seed);
    for (std::size_t served = 0;; ++served) {
      protocol::Request req;
      try {
        req = protocol::read_request(ch, forever);
      } catch (const protocol::StreamClosed&) {
        return 0;  // host hung up between requests
      }
      Bytes payload;
      if (mode == "repeat-prefix" && !req.prefix.empty()) {
        for (std::uint32_t i = 0; i < req.requested_length; ++i) payload.push_back(req.prefix[i % req.prefix.size()]);
      } else {
        payload.assign(req.requested_length, static_cast<std::uint8_t>(fill));
      }
      if (max_output > 0 && payload.size() > max_output) payload.resize(max_output);

      if (mode == "crash" && served >= crash_after) std::abort();
      if (mode == "hang") {
        for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
      }
      if (mode == "fuzz") {
        ch.write_all(fuzz::malformed_response(rng, req.requested_length), deadline());
        return 0;
      }
      Bytes frame = protocol::encode_response(payload);
      if (mode == "bad-magic") frame[0] = 'X';
      if (mode == "short" && !payload.empty()) frame = protocol::encode_response(ByteView(payload).first(payload.size() - 1));
      if (mode == "oversize") {
        payload.push_back(0);
        frame = protocol::encode_response(payload);
      }
      ch.write_all(frame, deadline());
    }
  } catch (const Error& e) {
    std::cerr << "mock predictor: " << e.what() << "\n";
    return 3;
  }
}
