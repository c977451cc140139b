// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>

#include "promotectl/backend.hpp"
#include "promotectl/bytes.hpp"
#include "promotectl/errors.hpp"
#include "promotectl/sha256.hpp"

namespace promote {

inline constexpr std::size_t kAnchorSizeLimit = 1 << 20;       // 1 MiB
inline constexpr std::size_t kEnvelopeSizeLimit = 64 << 20;    // 64 MiB

// A descriptor bound to one kernel object. Content and identity reachable
// through it are unaffected by whatever happens to the pathname afterwards;
// that property is what every security decision below leans on.
class ObjectHandle {
 public:
  ObjectHandle() = default;

  ObjectHandle(ObjectHandle&& other) noexcept { *this = std::move(other); }
  ObjectHandle& operator=(ObjectHandle&& other) noexcept {
    if (this != &other) {
      close_fd();
      fd_ = std::exchange(other.fd_, -1);
      identity_ = other.identity_;
      attrs_ = other.attrs_;
      opened_path_ = std::move(other.opened_path_);
    }
    return *this;
  }
  ObjectHandle(const ObjectHandle&) = delete;
  ObjectHandle& operator=(const ObjectHandle&) = delete;
  ~ObjectHandle() { close_fd(); }

  // O_NOFOLLOW: symlinked candidates and anchors are rejected outright, and
  // only regular files are accepted. O_NONBLOCK keeps a planted FIFO from
  // wedging the open; it has no effect on regular-file reads.
  static ObjectHandle open_readonly(Backend& backend, const fs::path& path,
                                    Errc on_error) {
    backend.record_open(path);
    int fd = ::open(path.c_str(),
                    O_RDONLY | O_NOFOLLOW | O_CLOEXEC | O_NONBLOCK);
    if (fd < 0) {
      if (errno == ELOOP)
        fail(on_error, "refusing symbolic link at '" + path.string() + "'");
      if (errno == ENOENT)
        fail(on_error, "no such file: '" + path.string() + "'");
      fail(on_error, "cannot open '" + path.string() +
                         "': " + std::strerror(errno));
    }
    ObjectHandle h;
    h.fd_ = fd;
    struct stat st {};
    if (::fstat(fd, &st) != 0)
      fail(Errc::contract_violation, "fstat failed after open");
    if (!S_ISREG(st.st_mode))
      fail(on_error, "not a regular file: '" + path.string() + "'");
    h.identity_ = identity_of_fd(fd);
    h.attrs_ = backend.query_attrs(fd);
    h.opened_path_ = path;
    return h;
  }

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  const FileIdentity& identity() const { return identity_; }
  const FileAttrs& attrs_at_open() const { return attrs_; }
  const fs::path& opened_path() const { return opened_path_; }

  FileIdentity current_identity() const { return identity_of_fd(fd_); }

  // Sanity anchor for the promotion phase: the object behind the handle must
  // still be the one snapshotted at open.
  void require_same_object() const {
    if (current_identity() != identity_)
      fail(Errc::contract_violation, "handle identity changed");
  }

 private:
  void close_fd() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  int fd_ = -1;
  FileIdentity identity_{};
  FileAttrs attrs_{};
  fs::path opened_path_;
};

// Full-content SHA-256 streamed with pread, so concurrent renames of the
// original pathname cannot change what gets hashed.
inline Digest hash_of(const ObjectHandle& h) {
  Sha256 hasher;
  std::uint8_t buf[64 * 1024];
  off_t off = 0;
  for (;;) {
    ssize_t n = ::pread(h.fd(), buf, sizeof(buf), off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::candidate_invalid,
           std::string("read through handle failed: ") + std::strerror(errno));
    }
    if (n == 0) break;
    hasher.update(buf, static_cast<std::size_t>(n));
    off += n;
  }
  return hasher.finish();
}

inline Bytes read_all(const ObjectHandle& h,
                      std::size_t limit = kAnchorSizeLimit,
                      Errc on_error = Errc::corrupt_anchor) {
  Bytes out;
  std::uint8_t buf[64 * 1024];
  off_t off = 0;
  for (;;) {
    ssize_t n = ::pread(h.fd(), buf, sizeof(buf), off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(on_error,
           std::string("read through handle failed: ") + std::strerror(errno));
    }
    if (n == 0) break;
    if (out.size() + static_cast<std::size_t>(n) > limit)
      fail(on_error, "file exceeds size limit");
    out.insert(out.end(), buf, buf + n);
    off += n;
  }
  return out;
}

// A freshly created exclusive temporary in the destination directory. It is
// unlinked (and its shadow attributes dropped) unless commit() ran.
class StagedHandle {
 public:
  StagedHandle() = default;

  StagedHandle(StagedHandle&& other) noexcept { *this = std::move(other); }
  StagedHandle& operator=(StagedHandle&& other) noexcept {
    if (this != &other) {
      cleanup();
      fd_ = std::exchange(other.fd_, -1);
      dir_fd_ = std::exchange(other.dir_fd_, -1);
      path_ = std::move(other.path_);
      dir_ = std::move(other.dir_);
      backend_ = std::exchange(other.backend_, nullptr);
      committed_ = other.committed_;
    }
    return *this;
  }
  StagedHandle(const StagedHandle&) = delete;
  StagedHandle& operator=(const StagedHandle&) = delete;
  ~StagedHandle() { cleanup(); }

  static StagedHandle create(Backend& backend, const fs::path& dest_dir) {
    backend.require_elevated("staging");
    int dir_fd = ::open(dest_dir.c_str(), O_DIRECTORY | O_RDONLY | O_CLOEXEC);
    if (dir_fd < 0)
      fail(Errc::promotion_failure, "destination directory '" +
                                        dest_dir.string() + "' not usable: " +
                                        std::strerror(errno));
    StagedHandle s;
    s.dir_fd_ = dir_fd;
    s.dir_ = dest_dir;
    s.backend_ = &backend;
    for (int attempt = 0; attempt < 32; ++attempt) {
      std::string name = ".promote." + random_suffix() + ".tmp";
      int fd = ::openat(dir_fd, name.c_str(),
                        O_CREAT | O_EXCL | O_WRONLY | O_CLOEXEC, 0600);
      if (fd >= 0) {
        s.fd_ = fd;
        s.path_ = dest_dir / name;
        backend.record_open(s.path_);
        return s;
      }
      if (errno != EEXIST)
        fail(Errc::promotion_failure,
             std::string("cannot create staging file: ") +
                 std::strerror(errno));
    }
    fail(Errc::promotion_failure, "staging name collisions persist");
  }

  int fd() const { return fd_; }
  const fs::path& path() const { return path_; }
  const fs::path& dir() const { return dir_; }
  bool committed() const { return committed_; }

  void append(const void* data, std::size_t size) {
    const char* p = static_cast<const char*>(data);
    while (size > 0) {
      ssize_t n = ::write(fd_, p, size);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(Errc::promotion_failure,
             std::string("staging write failed: ") + std::strerror(errno));
      }
      p += n;
      size -= static_cast<std::size_t>(n);
    }
  }

  void flush() {
    if (::fsync(fd_) != 0)
      fail(Errc::promotion_failure,
           std::string("fsync of staging file failed: ") +
               std::strerror(errno));
  }

  // Removes the staging file immediately (error paths).
  void abort_cleanup() { cleanup(); }

  void mark_committed() { committed_ = true; }
  int dir_fd() const { return dir_fd_; }

 private:
  static std::string random_suffix() {
    std::uint8_t raw[8];
    int fd = ::open("/dev/urandom", O_RDONLY | O_CLOEXEC);
    if (fd < 0 || ::read(fd, raw, sizeof(raw)) != sizeof(raw))
      fail(Errc::promotion_failure, "cannot read /dev/urandom");
    ::close(fd);
    return hex_encode(raw, sizeof(raw));
  }

  void cleanup() {
    if (fd_ >= 0 && !committed_) {
      if (backend_) backend_->forget(fd_);
      ::unlinkat(dir_fd_, path_.filename().c_str(), 0);
    }
    if (fd_ >= 0) ::close(fd_);
    if (dir_fd_ >= 0) ::close(dir_fd_);
    fd_ = -1;
    dir_fd_ = -1;
  }

  int fd_ = -1;
  int dir_fd_ = -1;
  fs::path path_;
  fs::path dir_;
  Backend* backend_ = nullptr;
  bool committed_ = false;
};

// Copies the bytes readable through src right now into a fresh staging file
// in dest_dir, fsyncing before return. The digest of exactly what was copied
// is reported so the caller can re-check it against the validated digest.
inline StagedHandle copy_to_staged(Backend& backend, const ObjectHandle& src,
                                   const fs::path& dest_dir,
                                   Digest* copied_digest = nullptr) {
  backend.require_elevated("promotion copy");
  StagedHandle staged = StagedHandle::create(backend, dest_dir);
  Sha256 hasher;
  std::uint8_t buf[128 * 1024];
  off_t off = 0;
  for (;;) {
    ssize_t n = ::pread(src.fd(), buf, sizeof(buf), off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::promotion_failure,
           std::string("read from validated handle failed: ") +
               std::strerror(errno));
    }
    if (n == 0) break;
    staged.append(buf, static_cast<std::size_t>(n));
    hasher.update(buf, static_cast<std::size_t>(n));
    off += n;
  }
  staged.flush();
  if (copied_digest) *copied_digest = hasher.finish();
  return staged;
}

// Ownership, mode and capabilities via the staged handle, never its name.
// On a privilege failure the staging file is removed before the error
// propagates.
inline void apply_attributes(Backend& backend, StagedHandle& staged,
                             const TargetAttributes& target) {
  if (!backend.is_elevated()) {
    staged.abort_cleanup();
    fail(Errc::privilege_insufficient,
         "attribute application requires elevated privileges");
  }
  backend.apply_target(staged.fd(), staged.path(), target);
}

// rename() within the destination directory: all-or-nothing, and open
// handles on the previous object keep reading the previous bytes.
inline void atomic_replace(Backend& backend, StagedHandle&& staged,
                           const fs::path& destination) {
  backend.require_elevated("atomic replacement");
  if (staged.dir() != destination.parent_path())
    fail(Errc::staging_location,
         "staging and destination directories differ ('" +
             staged.dir().string() + "' vs '" +
             destination.parent_path().string() + "')");
  if (::renameat(staged.dir_fd(), staged.path().filename().c_str(),
                 staged.dir_fd(), destination.filename().c_str()) != 0)
    fail(Errc::promotion_failure,
         std::string("rename into place failed: ") + std::strerror(errno));
  staged.mark_committed();
  backend.note_rename(staged.fd(), destination);
  // Directory flush makes the rename durable before we report success.
  ::fsync(staged.dir_fd());
}

}  // namespace promote
