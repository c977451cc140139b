// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "promotectl/errors.hpp"

namespace promote {

namespace fs = std::filesystem;

// Simulated service account: files without a shadow entry belong to it.
inline constexpr std::uint32_t kSimUid = 1000;
inline constexpr std::uint32_t kSimGid = 1000;
inline constexpr std::uint32_t kSimDefaultMode = 0644;

// Kernel object identity. Birth time disambiguates recycled inode numbers;
// it stays zero on filesystems that do not report it.
struct FileIdentity {
  std::uint64_t dev = 0;
  std::uint64_t ino = 0;
  std::int64_t btime_ns = 0;

  bool operator==(const FileIdentity&) const = default;
  auto operator<=>(const FileIdentity&) const = default;
};

inline FileIdentity identity_of_fd(int fd) {
  struct statx sx {};
  if (::statx(fd, "", AT_EMPTY_PATH, STATX_INO | STATX_BTIME, &sx) != 0)
    fail(Errc::contract_violation, "statx on handle failed");
  FileIdentity id;
  id.dev = (static_cast<std::uint64_t>(sx.stx_dev_major) << 32) |
           sx.stx_dev_minor;
  id.ino = sx.stx_ino;
  if (sx.stx_mask & STATX_BTIME)
    id.btime_ns =
        sx.stx_btime.tv_sec * 1000000000ll + sx.stx_btime.tv_nsec;
  return id;
}

inline FileIdentity identity_of_path(const fs::path& p) {
  struct statx sx {};
  if (::statx(AT_FDCWD, p.c_str(), AT_SYMLINK_NOFOLLOW,
              STATX_INO | STATX_BTIME, &sx) != 0)
    fail(Errc::contract_violation, "statx on path failed");
  FileIdentity id;
  id.dev = (static_cast<std::uint64_t>(sx.stx_dev_major) << 32) |
           sx.stx_dev_minor;
  id.ino = sx.stx_ino;
  if (sx.stx_mask & STATX_BTIME)
    id.btime_ns =
        sx.stx_btime.tv_sec * 1000000000ll + sx.stx_btime.tv_nsec;
  return id;
}

struct ShadowAttrs {
  std::uint32_t owner = kSimUid;
  std::uint32_t group = kSimGid;
  std::uint32_t mode = kSimDefaultMode;
  std::vector<std::string> capabilities;

  bool operator==(const ShadowAttrs&) const = default;

  bool elevated() const {
    return owner == 0 || group == 0 || (mode & 07000) != 0 ||
           !capabilities.empty();
  }
};

// Ownership/permission metadata for the simulated backend, in memory keyed
// by kernel object identity (so it follows renames exactly like real inode
// attributes would) and persisted to shadow-attrs.json keyed by the last
// path each object was known at.
class ShadowStore {
 public:
  ShadowStore() = default;

  ShadowStore(fs::path file, fs::path sandbox_root)
      : file_(std::move(file)), sandbox_root_(std::move(sandbox_root)) {
    load();
  }

  const fs::path& file() const { return file_; }

  ShadowAttrs lookup(const FileIdentity& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) return ShadowAttrs{};
    return it->second.attrs;
  }

  bool has(const FileIdentity& id) const { return entries_.count(id) != 0; }

  void set(const FileIdentity& id, const fs::path& path_hint,
           const ShadowAttrs& attrs) {
    std::string key = display_key(path_hint);
    prune_path(key, id);
    entries_[id] = {attrs, key};
    save();
  }

  // Called after a rename commits an object at its final path. Any stale
  // entry recorded at that path belongs to the object the rename unlinked.
  void rekey(const FileIdentity& id, const fs::path& new_path) {
    std::string key = display_key(new_path);
    prune_path(key, id);
    auto it = entries_.find(id);
    if (it != entries_.end()) it->second.path = key;
    save();
  }

  void erase(const FileIdentity& id) {
    if (entries_.erase(id) != 0) save();
  }

  struct Entry {
    ShadowAttrs attrs;
    std::string path;
  };

  const std::map<FileIdentity, Entry>& entries() const { return entries_; }

  void load() {
    entries_.clear();
    std::ifstream in(file_, std::ios::binary);
    if (!in) return;  // absent file means no simulated attributes yet
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail(Errc::contract_violation, "shadow-attrs.json is corrupt");
    for (const auto& [path, e] : j.items()) {
      FileIdentity id{e.at("dev").get<std::uint64_t>(),
                      e.at("ino").get<std::uint64_t>(),
                      e.value("btime_ns", std::int64_t{0})};
      ShadowAttrs attrs;
      attrs.owner = e.at("owner").get<std::uint32_t>();
      attrs.group = e.at("group").get<std::uint32_t>();
      attrs.mode = e.at("mode").get<std::uint32_t>();
      for (const auto& c : e.at("capabilities"))
        attrs.capabilities.push_back(c.get<std::string>());
      entries_[id] = {std::move(attrs), path};
    }
  }

  void save() const {
    if (file_.empty()) return;
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, e] : entries_) {
      nlohmann::json caps = nlohmann::json::array();
      for (const auto& c : e.attrs.capabilities) caps.push_back(c);
      j[e.path] = {{"owner", e.attrs.owner},   {"group", e.attrs.group},
                   {"mode", e.attrs.mode},     {"capabilities", caps},
                   {"dev", id.dev},            {"ino", id.ino},
                   {"btime_ns", id.btime_ns}};
    }
    // Atomic rewrite so a killed run never leaves a torn map behind.
    fs::path tmp = file_;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << j.dump(1);
      out.flush();
      if (!out)
        fail(Errc::contract_violation, "cannot write shadow attribute map");
    }
    std::error_code ec;
    fs::rename(tmp, file_, ec);
    if (ec) fail(Errc::contract_violation, "cannot replace shadow map");
  }

 private:
  void prune_path(const std::string& key, const FileIdentity& keep) {
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->second.path == key && !(it->first == keep))
        it = entries_.erase(it);
      else
        ++it;
    }
  }

  std::string display_key(const fs::path& p) const {
    std::error_code ec;
    fs::path rel = fs::relative(p, sandbox_root_, ec);
    if (ec || rel.empty() || *rel.begin() == "..") return p.string();
    return rel.string();
  }

  fs::path file_;
  fs::path sandbox_root_;
  std::map<FileIdentity, Entry> entries_;
};

}  // namespace promote
