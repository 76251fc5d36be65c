// Copyright 2026 The lesionseg Authors
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

#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <map>
#include <string>

#include "lesionseg/error.hpp"

namespace lesionseg {

namespace detail {

/// Broken pipes must surface as write errors, not process death.
inline void ignore_sigpipe_once() {
  static const bool done = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

}  // namespace detail

/// POSIX shell single-quoting.
inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

/// Replaces {key} placeholders. Values are inserted verbatim, so callers
/// quote paths with shell_quote first.
inline std::string expand_template(const std::string& tmpl,
                                   const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t end = tmpl.find('}', i);
      if (end != std::string::npos) {
        const auto it = vars.find(tmpl.substr(i + 1, end - i - 1));
        if (it != vars.end()) {
          out += it->second;
          i = end + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

/// One-directional pipe to a shell command (popen). Reading side streams the
/// command's stdout; writing side feeds its stdin.
class PipeProcess {
 public:
  enum class Direction { read, write };

  PipeProcess(const std::string& command, Direction dir)
      : command_(command), dir_(dir) {
    detail::ignore_sigpipe_once();
    file_ = ::popen(command.c_str(), dir == Direction::read ? "r" : "w");
    if (file_ == nullptr)
      raise(errc::decode_failure, "cannot start: " + command);
  }

  PipeProcess(const PipeProcess&) = delete;
  PipeProcess& operator=(const PipeProcess&) = delete;

  ~PipeProcess() {
    if (file_ != nullptr) ::pclose(file_);
  }

  /// Reads up to n bytes; short result means EOF (or error).
  std::size_t read_some(void* buf, std::size_t n) {
    return std::fread(buf, 1, n, file_);
  }

  bool write_all(const void* buf, std::size_t n) {
    return std::fwrite(buf, 1, n, file_) == n;
  }

  /// Closes the pipe and returns the command's exit code (-1 when it was
  /// killed or its status is unreadable).
  int close() {
    if (file_ == nullptr) return 0;
    const int status = ::pclose(file_);
    file_ = nullptr;
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
  }

  const std::string& command() const { return command_; }

 private:
  std::string command_;
  Direction dir_;
  std::FILE* file_ = nullptr;
};

/// Bidirectional subprocess: we write its stdin and read its stdout. Used by
/// the external segmentation backend.
class DuplexProcess {
 public:
  explicit DuplexProcess(const std::string& command) {
    detail::ignore_sigpipe_once();
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
      raise(errc::backend_failure, "pipe() failed");
    pid_ = ::fork();
    if (pid_ < 0) raise(errc::backend_failure, "fork() failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    stdin_fd_ = to_child[1];
    stdout_ = ::fdopen(from_child[0], "r");
    if (stdout_ == nullptr) raise(errc::backend_failure, "fdopen() failed");
  }

  DuplexProcess(const DuplexProcess&) = delete;
  DuplexProcess& operator=(const DuplexProcess&) = delete;

  ~DuplexProcess() {
    close_stdin();
    if (stdout_ != nullptr) std::fclose(stdout_);
    if (pid_ > 0) ::waitpid(pid_, nullptr, 0);
  }

  bool write_all(const void* buf, std::size_t n) {
    const char* p = static_cast<const char*>(buf);
    while (n > 0) {
      const ssize_t w = ::write(stdin_fd_, p, n);
      if (w <= 0) return false;
      p += w;
      n -= static_cast<std::size_t>(w);
    }
    return true;
  }

  bool read_line(std::string& line) {
    line.clear();
    int c;
    while ((c = std::fgetc(stdout_)) != EOF) {
      if (c == '\n') return true;
      line += static_cast<char>(c);
    }
    return !line.empty();
  }

  void close_stdin() {
    if (stdin_fd_ >= 0) {
      ::close(stdin_fd_);
      stdin_fd_ = -1;
    }
  }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  std::FILE* stdout_ = nullptr;
};

}  // namespace lesionseg
