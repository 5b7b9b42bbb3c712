#pragma once

#include <sys/types.h>

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "gencarve/io.hpp"
#include "gencarve/protocol.hpp"

namespace gencarve {

struct ExternalPredictorConfig {
  std::vector<std::string> argv;  // argv[0] is looked up on PATH
  std::chrono::milliseconds timeout{30000};
};

/// A predictor process speaking the wire protocol over its stdin/stdout.
/// One request at a time. Any failure kills the process; call restart()
/// before the next request.
class ExternalPredictor {
 public:
  explicit ExternalPredictor(ExternalPredictorConfig config);
  ~ExternalPredictor();
  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  /// Exactly `length` bytes or an Error (ProtocolError, ShortResponse,
  /// Timeout, PredictorCrashed).
  Bytes predict(ByteView prefix, std::uint32_t length);

  void restart();
  bool alive() const { return pid_ > 0; }
  pid_t pid() const { return pid_; }
  std::string id() const;

 private:
  void spawn();
  void shutdown(bool force);
  [[noreturn]] void fail(const Error& e);

  ExternalPredictorConfig config_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int exit_status_ = 0;
};

std::vector<std::string> split_command(const std::string& command);

}  // namespace gencarve
