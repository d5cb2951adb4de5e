#pragma once

#include <json.hpp>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "shapdec/models.hpp"

namespace shapdec {

inline constexpr int kExternalProtocolVersion = 1;

/// Model served by a child process speaking line-delimited JSON on its
/// standard input/output:
///
///   -> {"op":"hello","version":1,"n_features":M}   <- {"ok":true}
///   -> {"op":"predict","inputs":[[...],...]}       <- {"outputs":[...]}
///
/// A reply carrying "error" aborts the call. The child's stderr is kept in a
/// temporary file and attached to every BridgeError. Requests are serialized
/// per instance.
class ExternalModel : public Predictor {
 public:
  ExternalModel(std::vector<std::string> cmd, std::size_t n_features, int timeout_ms = 120000)
      : cmd_(std::move(cmd)), m_(n_features), timeout_ms_(timeout_ms) {
    if (cmd_.empty()) throw BridgeError("external model needs a command line");
    if (m_ < 1) throw SizeError("external model needs at least one feature");
    spawn();
    nlohmann::json hello = {{"op", "hello"}, {"version", kExternalProtocolVersion}, {"n_features", m_}};
    const auto reply = request(hello);
    if (!reply.contains("ok") || reply["ok"] != true) fail("handshake rejected: " + reply.dump());
  }

  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;

  ~ExternalModel() override { shutdown(); }

  std::size_t features() const override { return m_; }
  std::string id() const override { return "external"; }
  const std::vector<std::string>& command() const noexcept { return cmd_; }

  nlohmann::json to_json() const override { return {{"kind", "external"}, {"cmd", cmd_}}; }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    nlohmann::json inputs = nlohmann::json::array();
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(rows.cols()));
      for (Eigen::Index c = 0; c < rows.cols(); ++c) row[static_cast<std::size_t>(c)] = rows(r, c);
      inputs.push_back(std::move(row));
    }
    const auto reply = request({{"op", "predict"}, {"inputs", inputs}});
    if (!reply.contains("outputs") || !reply["outputs"].is_array())
      fail("reply lacks an outputs array: " + reply.dump());
    const auto& outs = reply["outputs"];
    if (outs.size() != static_cast<std::size_t>(rows.rows()))
      fail("expected " + std::to_string(rows.rows()) + " outputs, got " + std::to_string(outs.size()));
    Vector out(rows.rows());
    for (std::size_t k = 0; k < outs.size(); ++k) {
      if (!outs[k].is_number()) fail("non-numeric output in reply");
      out[static_cast<Eigen::Index>(k)] = outs[k].get<double>();
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw BridgeError(what, diagnostics()); }

  std::string diagnostics() const {
    if (stderr_path_.empty()) return {};
    std::ifstream in(stderr_path_);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string s = ss.str();
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
  }

  void spawn() {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
      throw BridgeError(std::string("socketpair failed: ") + std::strerror(errno));

    char tmpl[] = "/tmp/shapdec-external-XXXXXX";
    const int err_fd = ::mkstemp(tmpl);
    if (err_fd < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw BridgeError(std::string("cannot create stderr capture file: ") + std::strerror(errno));
    }
    stderr_path_ = tmpl;

    std::vector<char*> argv;
    for (auto& a : cmd_) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      ::close(err_fd);
      throw BridgeError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(sv[1], STDIN_FILENO);
      ::dup2(sv[1], STDOUT_FILENO);
      ::dup2(err_fd, STDERR_FILENO);
      ::execvp(argv[0], argv.data());
      const std::string msg = std::string("exec failed: ") + std::strerror(errno) + "\n";
      [[maybe_unused]] auto n = ::write(STDERR_FILENO, msg.data(), msg.size());
      ::_exit(127);
    }
    ::close(sv[1]);
    ::close(err_fd);
    fd_ = sv[0];
  }

  void shutdown() noexcept {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ > 0) {
      int status = 0;
      bool exited = false;
      for (int i = 0; i < 50 && !exited; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) exited = true;
        else ::usleep(10000);
      }
      if (!exited) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
      }
      pid_ = -1;
    }
    if (!stderr_path_.empty()) {
      ::unlink(stderr_path_.c_str());
      stderr_path_.clear();
    }
  }

  nlohmann::json request(const nlohmann::json& msg) const {
    std::lock_guard lock(mutex_);
    if (fd_ < 0) fail("external model is not running");
    const std::string line = msg.dump() + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
      const auto n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(std::string("write to external model failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
    const std::string reply_line = read_line();
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(reply_line);
    } catch (const nlohmann::json::exception&) {
      fail("malformed reply from external model: '" + reply_line.substr(0, 200) + "'");
    }
    if (!reply.is_object()) fail("reply from external model is not a JSON object");
    if (reply.contains("error")) fail("external model reported an error: " + reply["error"].dump());
    return reply;
  }

  std::string read_line() const {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) fail("timed out waiting for the external model");
      pollfd p{fd_, POLLIN, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        fail(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[65536];
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(std::string("read from external model failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        // Give the child a moment to flush stderr before reporting.
        int status = 0;
        for (int i = 0; i < 20 && ::waitpid(pid_, &status, WNOHANG) == 0; ++i) ::usleep(5000);
        fail("external model closed its output");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::vector<std::string> cmd_;
  std::size_t m_;
  int timeout_ms_;
  int fd_ = -1;
  pid_t pid_ = -1;
  std::string stderr_path_;
  mutable std::string buffer_;
  mutable std::mutex mutex_;
};

}  // namespace shapdec
