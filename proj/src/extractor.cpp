// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

// Child-process side of the embedding extractor protocol.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "xdface/embed.hpp"

namespace xdface {

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return;  // child closed its stdin early; its exit status decides the outcome
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string read_all(int fd) {
  std::string out;
  char buf[1 << 16];
  for (;;) {
    const ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

struct ChildResult {
  int status = 0;
  std::string output;
};

ChildResult run_child(const std::string& command, const std::string& input) {
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw Error(ErrorCode::ExtractorFailed, "pipe() failed: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::ExtractorFailed, "fork() failed");
  if (pid == 0) {
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

  // Feed stdin from a separate thread so a chatty child cannot deadlock us.
  struct sigaction ignore{}, previous{};
  ignore.sa_handler = SIG_IGN;
  ::sigaction(SIGPIPE, &ignore, &previous);
  std::thread feeder([fd = to_child[1], &input] {
    write_all(fd, input);
    ::close(fd);
  });
  ChildResult result;
  result.output = read_all(from_child[0]);
  feeder.join();
  ::close(from_child[0]);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {}
  ::sigaction(SIGPIPE, &previous, nullptr);
  result.status = status;
  return result;
}

}  // namespace

EmbeddingStore extract_via_external(const std::string& command, const std::vector<ExtractorJob>& jobs,
                                    const std::string& backend_tag, int expected_dim) {
  std::string input;
  std::set<std::string> wanted;
  for (const auto& job : jobs) {
    input += job.image_id + '\t' + std::filesystem::absolute(job.path).string() + '\n';
    wanted.insert(job.image_id);
  }

  const ChildResult child = run_child(command, input);
  if (!WIFEXITED(child.status) || WEXITSTATUS(child.status) != 0) {
    const int code = WIFEXITED(child.status) ? WEXITSTATUS(child.status) : -1;
    throw Error(ErrorCode::ExtractorFailed,
                "extractor '" + command + "' exited with status " + std::to_string(code));
  }

  EmbeddingStore store(backend_tag, expected_dim);
  std::istringstream lines(child.output);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    const std::string id = line.substr(0, sp);
    if (!wanted.count(id)) {
      throw Error(ErrorCode::ExtractorFailed,
                  "extractor line " + std::to_string(line_no) + ": unexpected image id '" + id + "'");
    }
    std::vector<float> values;
    if (sp != std::string::npos) {
      const char* p = line.c_str() + sp + 1;
      char* end = nullptr;
      for (;;) {
        while (*p == ' ') ++p;
        if (*p == '\0' || *p == '\r') break;
        errno = 0;
        const float v = std::strtof(p, &end);
        if (end == p || errno == ERANGE || !std::isfinite(v)) {
          throw Error(ErrorCode::ExtractorFailed, id + ": unparsable vector component");
        }
        values.push_back(v);
        p = end;
      }
    }
    if (static_cast<int>(values.size()) != expected_dim) {
      throw Error(ErrorCode::DimMismatch, id + ": extractor produced dim " +
                                              std::to_string(values.size()) + ", expected " +
                                              std::to_string(expected_dim));
    }
    if (store.contains(id)) throw Error(ErrorCode::ExtractorFailed, id + ": emitted twice");
    store.insert(id, Eigen::Map<Eigen::VectorXf>(values.data(), expected_dim));
  }
  for (const auto& id : wanted) {
    if (!store.contains(id)) throw Error(ErrorCode::IncompleteStore, "extractor skipped " + id);
  }
  return store;
}

}  // namespace xdface
