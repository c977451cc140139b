// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sys/types.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <string>
#include <vector>

#include "promotectl/errors.hpp"

namespace promote {

enum class BackendKind { real, sim };

inline const char* backend_name(BackendKind k) {
  return k == BackendKind::real ? "real" : "sim";
}

// Marker handed out by the engine once every manifest entry has been
// validated; regaining privilege demands one.
struct ValidationToken {
  explicit ValidationToken(std::size_t validated_entries)
      : validated_entries(validated_entries) {}
  std::size_t validated_entries;
};

// Elevated -> dropped -> elevated, exactly once each per run. The real
// backend uses effective-id switching with saved-id semantics so the drop is
// reversible inside one process; the simulated backend is a checked flag so
// the whole workflow can run unprivileged.
class PrivilegeContext {
 public:
  struct Transition {
    std::chrono::steady_clock::time_point at;
    std::string name;
  };

  static PrivilegeContext acquire(BackendKind kind) {
    PrivilegeContext ctx(kind);
    if (kind == BackendKind::real) {
      if (::geteuid() != 0)
        fail(Errc::contract_violation,
             "real backend requires superuser effective identity at start");
      ctx.unpriv_uid_ = target_uid();
      ctx.unpriv_gid_ = target_gid();
    }
    ctx.log_transition("acquire");
    return ctx;
  }

  void drop() {
    if (state_ != State::elevated || drops_ != 0)
      fail(Errc::contract_violation, "privilege drop out of order");
    if (kind_ == BackendKind::real) {
      // Group first: changing euid away from 0 would forbid the setegid.
      if (::setegid(unpriv_gid_) != 0 || ::seteuid(unpriv_uid_) != 0)
        fail(Errc::contract_violation, "privilege drop failed");
      if (::geteuid() == 0)
        fail(Errc::contract_violation, "privilege drop did not take effect");
    }
    state_ = State::dropped;
    ++drops_;
    log_transition("drop");
  }

  void regain(const ValidationToken&) {
    if (state_ != State::dropped || regains_ != 0)
      fail(Errc::contract_violation, "privilege regain out of order");
    if (kind_ == BackendKind::real) {
      if (::seteuid(0) != 0 || ::setegid(orig_gid_) != 0)
        fail(Errc::contract_violation, "privilege regain failed");
    }
    state_ = State::elevated;
    ++regains_;
    log_transition("regain");
  }

  bool is_elevated() const {
    if (kind_ == BackendKind::real) return ::geteuid() == 0;
    return state_ == State::elevated;
  }

  BackendKind kind() const { return kind_; }
  const std::vector<Transition>& transitions() const { return transitions_; }

  ::uid_t original_uid() const { return orig_uid_; }
  ::gid_t original_gid() const { return orig_gid_; }

 private:
  enum class State { elevated, dropped };

  explicit PrivilegeContext(BackendKind kind)
      : kind_(kind), orig_uid_(::getuid()), orig_gid_(::getgid()) {}

  void log_transition(const char* name) {
    transitions_.push_back({std::chrono::steady_clock::now(), name});
  }

  // The account to drop to: the invoking real uid when not root, otherwise
  // whatever sudo recorded, otherwise nobody.
  static ::uid_t target_uid() {
    if (::getuid() != 0) return ::getuid();
    if (const char* s = std::getenv("SUDO_UID"))
      return static_cast<::uid_t>(std::strtoul(s, nullptr, 10));
    return 65534;
  }

  static ::gid_t target_gid() {
    if (::getgid() != 0) return ::getgid();
    if (const char* s = std::getenv("SUDO_GID"))
      return static_cast<::gid_t>(std::strtoul(s, nullptr, 10));
    return 65534;
  }

  BackendKind kind_;
  State state_ = State::elevated;
  int drops_ = 0;
  int regains_ = 0;
  ::uid_t orig_uid_;
  ::gid_t orig_gid_;
  ::uid_t unpriv_uid_ = 0;
  ::gid_t unpriv_gid_ = 0;
  std::vector<Transition> transitions_;
};

}  // namespace promote
