// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promotectl/errors.hpp"

namespace promote {

namespace fs = std::filesystem;

struct AuditEvent {
  std::int64_t ts_ms = 0;
  std::string stage;
  std::string event;
  nlohmann::json detail;

  nlohmann::json to_json() const {
    return {{"ts", ts_ms},
            {"stage", stage},
            {"event", event},
            {"detail", detail}};
  }
};

// Line-oriented JSON audit trail: one object per event, appended with a
// single write each so concurrent readers never see torn lines. With no
// file configured events are only kept in memory (verify-only mode).
class AuditLog {
 public:
  explicit AuditLog(std::optional<fs::path> file = std::nullopt) {
    if (file) {
      fd_ = ::open(file->c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC,
                   0644);
      if (fd_ < 0)
        fail(Errc::contract_violation,
             "cannot open audit log '" + file->string() + "'");
      path_ = *file;
    }
  }

  ~AuditLog() {
    if (fd_ >= 0) ::close(fd_);
  }
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  void emit(std::string stage, std::string event, nlohmann::json detail) {
    AuditEvent ev;
    ev.ts_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
    ev.stage = std::move(stage);
    ev.event = std::move(event);
    ev.detail = std::move(detail);
    if (fd_ >= 0) {
      std::string line = ev.to_json().dump();
      line.push_back('\n');
      [[maybe_unused]] ssize_t n = ::write(fd_, line.data(), line.size());
    }
    events_.push_back(std::move(ev));
  }

  const std::vector<AuditEvent>& events() const { return events_; }
  const std::optional<fs::path>& path() const { return path_; }

  void close_for_exec() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
  std::optional<fs::path> path_;
  std::vector<AuditEvent> events_;
};

}  // namespace promote
