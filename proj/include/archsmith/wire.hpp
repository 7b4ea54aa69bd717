// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited byte-stream transport shared by the proposer and evaluator
// protocols. Endpoints are "exec:<shell command>" (spawned subprocess, stdin
// and stdout are the stream) or "tcp:<host>:<port>".

#pragma once

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <string>
#include <string_view>

#include "archsmith/error.hpp"

namespace archsmith {

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Appends '\n'. The line must not contain a newline itself.
  virtual void write_line(std::string_view line) = 0;
  /// Blocks until a full line arrives (newline stripped, trailing CR too).
  /// Throws Timeout past the deadline and TransportError on EOF.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

namespace detail {

inline std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool is_socket)
      : read_fd_(read_fd), write_fd_(write_fd), is_socket_(is_socket) {}
  ~FdChannel() override { close_fds(); }
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void write_line(std::string_view line) override {
    if (line.find('\n') != std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "wire message contains a newline");
    }
    std::string buf(line);
    buf += '\n';
    std::size_t off = 0;
    while (off < buf.size()) {
      ssize_t n = is_socket_ ? ::send(write_fd_, buf.data() + off, buf.size() - off, MSG_NOSIGNAL)
                             : ::write(write_fd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::TransportError, errno_text("write"));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw Error(ErrorCode::Timeout, "no response within deadline");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::TransportError, errno_text("poll"));
      }
      if (rc == 0) throw Error(ErrorCode::Timeout, "no response within deadline");
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::TransportError, errno_text("read"));
      }
      if (n == 0) throw Error(ErrorCode::TransportError, "peer closed the stream");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    read_fd_ = write_fd_ = -1;
  }

 private:
  int read_fd_;
  int write_fd_;
  bool is_socket_;
  std::string buffer_;
};

class SubprocessChannel final : public FdChannel {
 public:
  SubprocessChannel(int read_fd, int write_fd, pid_t pid)
      : FdChannel(read_fd, write_fd, false), pid_(pid) {}
  ~SubprocessChannel() override {
    close_fds();  // child sees EOF on stdin
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
        ::usleep(10000);
      }
      ::kill(-pid_, SIGKILL);  // the whole group, so children of the shell go too
      ::waitpid(pid_, &status, 0);
    }
  }

 private:
  pid_t pid_;
};

inline std::unique_ptr<LineChannel> spawn(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw Error(ErrorCode::TransportError, errno_text("pipe"));
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(ErrorCode::TransportError, errno_text("pipe"));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::TransportError, errno_text("fork"));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  return std::make_unique<SubprocessChannel>(from_child[0], to_child[1], pid);
}

inline std::unique_ptr<LineChannel> connect_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::TransportError, "resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error(ErrorCode::TransportError, "cannot connect to " + host + ":" + port);
  return std::make_unique<FdChannel>(fd, fd, true);
}

}  // namespace detail

/// Opens "exec:<command>" or "tcp:<host>:<port>".
inline std::unique_ptr<LineChannel> open_channel(const std::string& endpoint) {
  // A dead subprocess must surface as a TransportError, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
  if (endpoint.rfind("exec:", 0) == 0) return detail::spawn(endpoint.substr(5));
  if (endpoint.rfind("tcp:", 0) == 0) {
    const std::string rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
      throw Error(ErrorCode::InvalidArgument, "tcp endpoint must be tcp:<host>:<port>");
    }
    return detail::connect_tcp(rest.substr(0, colon), rest.substr(colon + 1));
  }
  throw Error(ErrorCode::InvalidArgument,
              "endpoint must start with 'exec:' or 'tcp:', got '" + endpoint + "'");
}

}  // namespace archsmith
