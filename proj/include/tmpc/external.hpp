#pragma once

// Line protocol to an external policy process: one JSON observation per line
// on its stdin, one JSON velocity command per line on its stdout.

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "tmpc/core.hpp"
#include "tmpc/rlenv.hpp"

namespace tmpc::external {

struct ProtocolError : Error {
  using Error::Error;
};

/// Child process running `/bin/sh -c command`. Requests are serialized.
class PolicyProcess {
 public:
  explicit PolicyProcess(const std::string& command) {
    // A dead child must surface as a write error, not a signal.
    signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw ProtocolError("pipe: " + std::string(std::strerror(errno)));
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw ProtocolError("pipe: " + std::string(std::strerror(errno)));
    }
    pid_ = fork();
    if (pid_ < 0) throw ProtocolError("fork: " + std::string(std::strerror(errno)));
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  PolicyProcess(const PolicyProcess&) = delete;
  PolicyProcess& operator=(const PolicyProcess&) = delete;

  ~PolicyProcess() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
    }
  }

  /// Sends one line and blocks for one line of reply.
  std::string request(const std::string& line) {
    std::lock_guard lock(mutex_);
    std::string out = line;
    out.push_back('\n');
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t n = write(write_fd_, out.data() + sent, out.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("external policy: write failed");
      }
      sent += static_cast<std::size_t>(n);
    }
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string reply = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return reply;
      }
      char chunk[4096];
      const ssize_t n = read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw ProtocolError("external policy: process closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

/// Decodes a reply: {"vx":..,"vy":..} in the global frame, or {"action": k}
/// indexing rlenv::action_space(v_pref) relative to heading psi.
inline Vec2 decode_command(const std::string& line, double v_pref, double psi) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError("external policy: malformed reply: " + std::string(e.what()));
  }
  if (j.contains("vx") && j.contains("vy")) return {j.at("vx").get<double>(), j.at("vy").get<double>()};
  if (j.contains("action")) {
    const auto actions = rlenv::action_space(v_pref);
    const auto k = j.at("action").get<long>();
    if (k < 0 || static_cast<std::size_t>(k) >= actions.size()) throw ProtocolError("external policy: action index out of range");
    return rlenv::action_velocity(actions[static_cast<std::size_t>(k)], psi);
  }
  throw ProtocolError("external policy: reply needs vx/vy or action");
}

/// Queries the process for the ego agent's next velocity.
inline Vec2 query(PolicyProcess& process, const rlenv::Observation& obs) {
  const std::string reply = process.request(rlenv::to_json(obs).dump());
  return decode_command(reply, obs.robot.v_pref, obs.robot.psi);
}

}  // namespace tmpc::external
