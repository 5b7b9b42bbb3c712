#include "gencarve/external_predictor.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>

#include "gencarve/error.hpp"

extern char** environ;

namespace gencarve {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

// Waits up to `grace` for the child to exit. Returns true if it was reaped.
bool reap(pid_t pid, int& status, std::chrono::milliseconds grace) {
  const auto until = std::chrono::steady_clock::now() + grace;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid || (r < 0 && errno == ECHILD)) return true;
    if (std::chrono::steady_clock::now() >= until) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

}  // namespace

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  std::istringstream in(command);
  for (std::string word; in >> word;) out.push_back(word);
  return out;
}

ExternalPredictor::ExternalPredictor(ExternalPredictorConfig config) : config_(std::move(config)) {
  if (config_.argv.empty()) throw Error(Errc::ConfigError, "external predictor command is empty");
  ignore_sigpipe();
  spawn();
}

ExternalPredictor::~ExternalPredictor() { shutdown(false); }

std::string ExternalPredictor::id() const {
  std::string s = "external:";
  for (std::size_t i = 0; i < config_.argv.size(); ++i) s += (i ? " " : "") + config_.argv[i];
  return s;
}

void ExternalPredictor::spawn() {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(Errc::IoError, "pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(Errc::IoError, "pipe failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> argv;
  for (auto& a : config_.argv) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw Error(Errc::PredictorCrashed, "cannot start '" + config_.argv[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    protocol::FdChannel ch(from_child_, to_child_);
    protocol::client_handshake(ch, config_.timeout);
  } catch (const Error& e) {
    fail(e);
  }
}

void ExternalPredictor::shutdown(bool force) {
  close_fd(to_child_);
  close_fd(from_child_);
  if (pid_ <= 0) return;
  if (force || !reap(pid_, exit_status_, std::chrono::milliseconds(500))) {
    ::kill(pid_, SIGKILL);
    reap(pid_, exit_status_, std::chrono::milliseconds(5000));
  }
  pid_ = -1;
}

void ExternalPredictor::fail(const Error& e) {
  // A closed stream is only a protocol violation if the process is still
  // healthy; a process that died abnormally is reported as a crash.
  if (dynamic_cast<const protocol::StreamClosed*>(&e) != nullptr && pid_ > 0) {
    close_fd(to_child_);
    int status = 0;
    if (reap(pid_, status, std::chrono::milliseconds(1000))) {
      pid_ = -1;
      close_fd(from_child_);
      const bool clean = WIFEXITED(status) && WEXITSTATUS(status) == 0;
      if (!clean) {
        const std::string how = WIFSIGNALED(status) ? "signal " + std::to_string(WTERMSIG(status))
                                                     : "exit status " + std::to_string(WEXITSTATUS(status));
        throw Error(Errc::PredictorCrashed, "predictor terminated (" + how + ")");
      }
    }
  }
  shutdown(true);
  throw;  // only ever called from inside a catch block
}

void ExternalPredictor::restart() {
  shutdown(true);
  spawn();
}

Bytes ExternalPredictor::predict(ByteView prefix, std::uint32_t length) {
  if (pid_ <= 0) throw Error(Errc::PredictorCrashed, "predictor is not running");
  if (length == 0) throw Error(Errc::InvalidArgument, "prediction length must be >= 1");
  try {
    protocol::FdChannel ch(from_child_, to_child_);
    ch.write_all(protocol::encode_request(prefix, length), protocol::Clock::now() + config_.timeout);
    return protocol::read_response(ch, length, config_.timeout);
  } catch (const Error& e) {
    fail(e);
  }
}

}  // namespace gencarve
