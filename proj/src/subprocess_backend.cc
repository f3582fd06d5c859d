/*
 * Copyright 2026 The PSA Audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <future>
#include <thread>

#include "psa/errors.h"
#include "psa/scoring.h"

extern char** environ;

namespace psa {

struct SubprocessBackend::State {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;

  std::mutex write_mu;
  std::mutex mu;  // guards everything below
  uint64_t next_id = 0;
  std::unordered_map<uint64_t, std::promise<ScoreOutcome>> pending;
  std::exception_ptr failure;  // set once the process is unusable

  std::atomic<bool> stop{false};
  std::thread reader;

  void FailAll(std::exception_ptr e) {
    std::lock_guard lock(mu);
    if (!failure) failure = e;
    for (auto& [id, promise] : pending) promise.set_exception(e);
    pending.clear();
  }

  void HandleLine(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j["id"].is_number_integer()) {
      FailAll(std::make_exception_ptr(
          ProtocolError("subprocess scorer sent a malformed line: " + line)));
      return;
    }
    ScoreOutcome outcome;
    if (j.contains("score") && j["score"].is_number()) {
      outcome.score = j["score"].get<double>();
    } else if (j.contains("error")) {
      outcome.error = j["error"].is_string() ? j["error"].get<std::string>()
                                             : j["error"].dump();
    } else {
      FailAll(std::make_exception_ptr(ProtocolError(
          "subprocess reply has neither score nor error: " + line)));
      return;
    }
    std::lock_guard lock(mu);
    auto it = pending.find(j["id"].get<uint64_t>());
    if (it == pending.end()) return;  // timed out earlier
    it->second.set_value(std::move(outcome));
    pending.erase(it);
  }

  void ReadLoop() {
    std::string buffer;
    char chunk[4096];
    while (!stop.load()) {
      pollfd pfd{from_child, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 100);
      if (ready < 0 && errno == EINTR) continue;
      if (ready <= 0) continue;
      const ssize_t n = ::read(from_child, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<size_t>(n));
      size_t start = 0;
      for (size_t eol; (eol = buffer.find('\n', start)) != std::string::npos;
           start = eol + 1) {
        std::string line = buffer.substr(start, eol - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) HandleLine(line);
      }
      buffer.erase(0, start);
    }
    FailAll(std::make_exception_ptr(
        TransportError("subprocess scorer closed its output")));
  }
};

SubprocessBackend::SubprocessBackend(const std::string& command,
                                     std::chrono::milliseconds timeout)
    : state_(std::make_shared<State>()) {
  timeout_ = timeout;
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw TransportError(std::string("pipe: ") + std::strerror(errno));
  }
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw TransportError(std::string("pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw TransportError("cannot launch scorer '" + command +
                         "': " + std::strerror(rc));
  }
  state_->pid = pid;
  state_->to_child = in_pipe[1];
  state_->from_child = out_pipe[0];
  state_->reader = std::thread([s = state_.get()] { s->ReadLoop(); });
}

SubprocessBackend::~SubprocessBackend() {
  State& s = *state_;
  {
    std::lock_guard lock(s.write_mu);
    if (s.to_child >= 0) ::close(s.to_child);
    s.to_child = -1;
  }
  int status = 0;
  bool exited = false;
  for (int waited = 0; waited < 200; ++waited) {
    if (::waitpid(s.pid, &status, WNOHANG) == s.pid) {
      exited = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (!exited) {
    ::kill(s.pid, SIGKILL);
    ::waitpid(s.pid, &status, 0);
  }
  s.stop.store(true);
  if (s.reader.joinable()) s.reader.join();
  ::close(s.from_child);
}

std::vector<ScoreOutcome> SubprocessBackend::ScoreBatch(
    std::span<const std::string> texts) {
  State& s = *state_;
  std::vector<uint64_t> ids;
  std::vector<std::future<ScoreOutcome>> futures;
  std::string payload;
  {
    std::lock_guard write_lock(s.write_mu);
    {
      std::lock_guard lock(s.mu);
      if (s.failure) std::rethrow_exception(s.failure);
      for (const std::string& text : texts) {
        const uint64_t id = s.next_id++;
        ids.push_back(id);
        futures.push_back(s.pending[id].get_future());
        payload += nlohmann::json{{"id", id}, {"text", text}}.dump();
        payload.push_back('\n');
      }
    }
    size_t written = 0;
    while (written < payload.size()) {
      const ssize_t n = ::write(s.to_child, payload.data() + written,
                                payload.size() - written);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        const std::string reason = std::strerror(errno);
        std::lock_guard lock(s.mu);
        for (uint64_t id : ids) s.pending.erase(id);
        throw TransportError("write to subprocess scorer failed: " + reason);
      }
      written += static_cast<size_t>(n);
    }
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::vector<ScoreOutcome> out(texts.size());
  for (size_t k = 0; k < futures.size(); ++k) {
    if (futures[k].wait_until(deadline) != std::future_status::ready) {
      std::lock_guard lock(s.mu);
      // The reply may have landed between the wait and the lock.
      if (futures[k].wait_for(std::chrono::seconds(0)) !=
          std::future_status::ready) {
        s.pending.erase(ids[k]);
        out[k].error = "timed out waiting for subprocess scorer";
        continue;
      }
    }
    out[k] = futures[k].get();
  }
  return out;
}

}  // namespace psa
