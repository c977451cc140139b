// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "promotectl/errors.hpp"
#include "promotectl/manifest.hpp"
#include "promotectl/privilege.hpp"
#include "promotectl/shadow.hpp"

namespace promote {

struct FileAttrs {
  std::uint32_t owner = 0;
  std::uint32_t group = 0;
  std::uint32_t mode = 0;
  std::uint64_t size = 0;
  std::vector<std::string> capabilities;
};

// Every path-based open the process performs is recorded here, tagged with
// the engine phase that issued it. Tests assert, for example, that anchor
// paths are never opened again after setup.
struct OpenRecord {
  std::string phase;
  std::string path;
};

// Filesystem personality behind the handle layer.
//
// real: plain POSIX semantics; ownership and permission changes hit the
//       kernel and need actual privilege.
// sim:  files live under a sandbox root, manifest destinations map into it,
//       and ownership/mode/capability state lives in a ShadowStore keyed by
//       kernel object identity. Privilege is the broker's checked flag.
class Backend {
 public:
  static Backend make_real() { return Backend(BackendKind::real, {}); }

  static Backend make_sim(fs::path sandbox_root) {
    if (sandbox_root.empty() || !sandbox_root.is_absolute())
      fail(Errc::contract_violation, "sim backend needs an absolute sandbox");
    return Backend(BackendKind::sim, std::move(sandbox_root));
  }

  BackendKind kind() const { return kind_; }
  const fs::path& sandbox_root() const { return sandbox_root_; }

  ShadowStore& shadow() {
    if (kind_ != BackendKind::sim)
      fail(Errc::contract_violation, "shadow store is sim-only");
    return *shadow_;
  }

  void attach_privileges(PrivilegeContext* ctx) { priv_ = ctx; }

  bool is_elevated() const {
    if (priv_) return priv_->is_elevated();
    return kind_ == BackendKind::real && ::geteuid() == 0;
  }

  void require_elevated(const char* what) const {
    if (!is_elevated())
      fail(Errc::privilege_insufficient,
           std::string(what) + " requires elevated privileges");
  }

  // Manifest destinations are logical absolute paths; in the sandbox they
  // live under the sandbox root.
  fs::path map_destination(std::string_view logical) const {
    if (kind_ == BackendKind::real) return fs::path(logical);
    return sandbox_root_ / fs::path(logical).relative_path();
  }

  void set_phase(std::string phase) { phase_ = std::move(phase); }
  const std::string& phase() const { return phase_; }

  void record_open(const fs::path& p) {
    open_records_.push_back({phase_, p.string()});
  }

  const std::vector<OpenRecord>& open_records() const { return open_records_; }

  FileAttrs query_attrs(int fd) const {
    struct stat st {};
    if (::fstat(fd, &st) != 0)
      fail(Errc::contract_violation, "fstat on handle failed");
    FileAttrs a;
    a.size = static_cast<std::uint64_t>(st.st_size);
    if (kind_ == BackendKind::real) {
      a.owner = st.st_uid;
      a.group = st.st_gid;
      a.mode = st.st_mode & 07777;
    } else {
      ShadowAttrs sa = shadow_->lookup(identity_of_fd(fd));
      a.owner = sa.owner;
      a.group = sa.group;
      a.mode = sa.mode;
      a.capabilities = sa.capabilities;
    }
    return a;
  }

  // Applies ownership, mode and capabilities through the handle. Caller has
  // already checked elevation; this enforces it again.
  void apply_target(int fd, const fs::path& path_hint,
                    const TargetAttributes& target) {
    require_elevated("attribute application");
    if (kind_ == BackendKind::real) {
      if (!target.capabilities.empty())
        fail(Errc::promotion_failure,
             "capabilities are not supported by the real backend");
      if (::fchown(fd, target.owner_id, target.group_id) != 0)
        fail(Errc::promotion_failure,
             std::string("fchown failed: ") + std::strerror(errno));
      // fchown clears setuid/setgid, so the mode goes on afterwards.
      if (::fchmod(fd, target.mode) != 0)
        fail(Errc::promotion_failure,
             std::string("fchmod failed: ") + std::strerror(errno));
    } else {
      ShadowAttrs sa;
      sa.owner = target.owner_id;
      sa.group = target.group_id;
      sa.mode = target.mode;
      sa.capabilities = target.capabilities;
      shadow_->set(identity_of_fd(fd), path_hint, sa);
    }
  }

  void note_rename(int fd, const fs::path& to) {
    if (kind_ == BackendKind::sim) shadow_->rekey(identity_of_fd(fd), to);
  }

  void forget(int fd) {
    if (kind_ == BackendKind::sim) shadow_->erase(identity_of_fd(fd));
  }

 private:
  Backend(BackendKind kind, fs::path sandbox_root)
      : kind_(kind), sandbox_root_(std::move(sandbox_root)) {
    if (kind_ == BackendKind::sim)
      shadow_ = std::make_shared<ShadowStore>(
          sandbox_root_ / "shadow-attrs.json", sandbox_root_);
  }

  BackendKind kind_;
  fs::path sandbox_root_;
  std::shared_ptr<ShadowStore> shadow_;
  PrivilegeContext* priv_ = nullptr;
  std::string phase_ = "init";
  std::vector<OpenRecord> open_records_;
};

}  // namespace promote
