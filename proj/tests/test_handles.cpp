// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <atomic>
#include <random>
#include <thread>

#include "promotectl/handles.hpp"
#include "promotectl/privilege.hpp"
#include "promotectl/vendor.hpp"
#include "support/ref_sha256.hpp"
#include "support/test_util.hpp"

using namespace promote;
using testsupport::TempDir;

namespace {

struct SimFixture {
  TempDir dir{"handles"};
  Backend backend = Backend::make_sim(dir.path());
  std::optional<PrivilegeContext> priv;

  SimFixture() {
    priv = PrivilegeContext::acquire(BackendKind::sim);
    backend.attach_privileges(&*priv);
  }

  fs::path file(const std::string& name, const std::string& content) {
    fs::path p = dir.path() / name;
    testsupport::write_text(p, content);
    return p;
  }
};

}  // namespace

TEST_CASE("open_readonly snapshots a stable identity", "[handles]") {
  SimFixture fx;
  fs::path p = fx.file("victim", "original");
  ObjectHandle h = ObjectHandle::open_readonly(fx.backend, p,
                                               Errc::candidate_invalid);
  CHECK(h.current_identity() == h.identity());
  CHECK(h.attrs_at_open().size == 8);

  // Replace the path: the handle must still see the original object.
  fs::rename(p, fx.dir.path() / "moved-away");
  fx.file("victim", "imposter!");
  CHECK(h.current_identity() == h.identity());
  CHECK(to_string(read_all(h)) == "original");
}

TEST_CASE("open_readonly refuses symlinks and non-files", "[handles]") {
  SimFixture fx;
  fs::path target = fx.file("real", "x");
  fs::path link = fx.dir.path() / "link";
  fs::create_symlink(target, link);
  CHECK_THROWS_AS(
      ObjectHandle::open_readonly(fx.backend, link, Errc::candidate_invalid),
      Error);
  CHECK_THROWS_AS(ObjectHandle::open_readonly(fx.backend, fx.dir.path(),
                                              Errc::candidate_invalid),
                  Error);
  CHECK_THROWS_AS(ObjectHandle::open_readonly(fx.backend,
                                              fx.dir.path() / "absent",
                                              Errc::candidate_invalid),
                  Error);
  // A planted FIFO must be rejected promptly, not hang the open.
  fs::path fifo = fx.dir.path() / "fifo";
  REQUIRE(::mkfifo(fifo.c_str(), 0644) == 0);
  CHECK_THROWS_AS(
      ObjectHandle::open_readonly(fx.backend, fifo, Errc::candidate_invalid),
      Error);
}

TEST_CASE("hash_of matches known values and the oracle", "[handles]") {
  SimFixture fx;
  ObjectHandle empty = ObjectHandle::open_readonly(
      fx.backend, fx.file("empty", ""), Errc::candidate_invalid);
  CHECK(digest_hex(hash_of(empty)) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  ObjectHandle abc = ObjectHandle::open_readonly(
      fx.backend, fx.file("abc", "abc"), Errc::candidate_invalid);
  CHECK(digest_hex(hash_of(abc)) == testsupport::ref_sha256_hex("abc"));

  // Rename the path away mid-stream: same digest either way.
  std::mt19937_64 rng(3);
  Bytes big = testsupport::random_bytes(rng, 1 << 20);
  fs::path big_path = fx.dir.path() / "big";
  vendor::write_file(big_path, big);
  ObjectHandle big_h =
      ObjectHandle::open_readonly(fx.backend, big_path, Errc::candidate_invalid);
  fs::rename(big_path, fx.dir.path() / "big-elsewhere");
  CHECK(digest_hex(hash_of(big_h)) ==
        testsupport::ref_sha256_hex(big));
}

TEST_CASE("read_all enforces the size limit", "[handles]") {
  SimFixture fx;
  ObjectHandle small = ObjectHandle::open_readonly(
      fx.backend, fx.file("small", "content"), Errc::candidate_invalid);
  CHECK(to_string(read_all(small)) == "content");

  Bytes big(kAnchorSizeLimit + 1, 0x41);
  fs::path big_path = fx.dir.path() / "oversize";
  vendor::write_file(big_path, big);
  ObjectHandle big_h = ObjectHandle::open_readonly(fx.backend, big_path,
                                                   Errc::candidate_invalid);
  try {
    read_all(big_h);
    FAIL("expected oversize rejection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::corrupt_anchor);
  }
}

TEST_CASE("copy_to_staged copies exactly the handle's bytes", "[handles]") {
  SimFixture fx;
  std::mt19937_64 rng(17);
  Bytes content = testsupport::random_bytes(rng, 1 << 20);
  fs::path src_path = fx.dir.path() / "src";
  vendor::write_file(src_path, content);
  ObjectHandle src =
      ObjectHandle::open_readonly(fx.backend, src_path, Errc::candidate_invalid);

  SECTION("large file, digest equal on both sides") {
    Digest copied{};
    StagedHandle staged =
        copy_to_staged(fx.backend, src, fx.dir.path(), &copied);
    CHECK(copied == sha256(content));
    CHECK(digest_hex(copied) == testsupport::ref_sha256_hex(content));
    std::string staged_bytes = testsupport::read_text(staged.path());
    CHECK(sha256(to_bytes(staged_bytes)) == copied);
  }
  SECTION("source unlinked before the copy still succeeds") {
    fs::remove(src_path);
    Digest copied{};
    StagedHandle staged =
        copy_to_staged(fx.backend, src, fx.dir.path(), &copied);
    CHECK(copied == sha256(content));
  }
  SECTION("zero-byte source") {
    fs::path z = fx.file("zero", "");
    ObjectHandle zh =
        ObjectHandle::open_readonly(fx.backend, z, Errc::candidate_invalid);
    Digest copied{};
    StagedHandle staged = copy_to_staged(fx.backend, zh, fx.dir.path(), &copied);
    CHECK(fs::file_size(staged.path()) == 0);
  }
  SECTION("staging requires elevation") {
    fx.priv->drop();
    CHECK_THROWS_AS(copy_to_staged(fx.backend, src, fx.dir.path(), nullptr),
                    Error);
  }
  SECTION("staged files vanish if not committed") {
    fs::path staged_path;
    {
      StagedHandle staged =
          copy_to_staged(fx.backend, src, fx.dir.path(), nullptr);
      staged_path = staged.path();
      CHECK(fs::exists(staged_path));
    }
    CHECK_FALSE(fs::exists(staged_path));
  }
}

TEST_CASE("apply_attributes goes through the handle", "[handles]") {
  SimFixture fx;
  fs::path src_path = fx.file("src", "payload");
  ObjectHandle src =
      ObjectHandle::open_readonly(fx.backend, src_path, Errc::candidate_invalid);
  StagedHandle staged = copy_to_staged(fx.backend, src, fx.dir.path(), nullptr);

  TargetAttributes target;
  target.owner_id = 0;
  target.group_id = 0;
  target.mode = 04755;
  target.capabilities = {"cap_net_raw"};
  apply_attributes(fx.backend, staged, target);

  FileAttrs a = fx.backend.query_attrs(staged.fd());
  CHECK(a.owner == 0);
  CHECK(a.group == 0);
  CHECK(a.mode == 04755u);
  CHECK(a.capabilities == std::vector<std::string>{"cap_net_raw"});
}

TEST_CASE("apply without elevation removes the staged file", "[handles]") {
  SimFixture fx;
  fs::path src_path = fx.file("src", "payload");
  ObjectHandle src =
      ObjectHandle::open_readonly(fx.backend, src_path, Errc::candidate_invalid);
  StagedHandle staged = copy_to_staged(fx.backend, src, fx.dir.path(), nullptr);
  fs::path staged_path = staged.path();

  fx.priv->drop();
  TargetAttributes target;
  target.owner_id = 0;
  try {
    apply_attributes(fx.backend, staged, target);
    FAIL("expected privilege error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::privilege_insufficient);
  }
  CHECK_FALSE(fs::exists(staged_path));
}

TEST_CASE("atomic_replace leaves old handles on old bytes", "[handles]") {
  SimFixture fx;
  fs::path dest = fx.file("helper", "old version");
  ObjectHandle running = ObjectHandle::open_readonly(fx.backend, dest,
                                                     Errc::candidate_invalid);

  fs::path src_path = fx.file("src", "new version");
  ObjectHandle src =
      ObjectHandle::open_readonly(fx.backend, src_path, Errc::candidate_invalid);
  StagedHandle staged = copy_to_staged(fx.backend, src, fx.dir.path(), nullptr);
  atomic_replace(fx.backend, std::move(staged), dest);

  // Already-open handle: unaffected. New opens: the new content.
  CHECK(to_string(read_all(running)) == "old version");
  CHECK(testsupport::read_text(dest) == "new version");
}

TEST_CASE("atomic_replace creates missing destinations", "[handles]") {
  SimFixture fx;
  fs::path src_path = fx.file("src", "fresh");
  ObjectHandle src =
      ObjectHandle::open_readonly(fx.backend, src_path, Errc::candidate_invalid);
  StagedHandle staged = copy_to_staged(fx.backend, src, fx.dir.path(), nullptr);
  fs::path dest = fx.dir.path() / "brand-new";
  atomic_replace(fx.backend, std::move(staged), dest);
  CHECK(testsupport::read_text(dest) == "fresh");
}

TEST_CASE("staging must happen in the destination directory", "[handles]") {
  SimFixture fx;
  fs::create_directories(fx.dir.path() / "elsewhere");
  fs::path src_path = fx.file("src", "x");
  ObjectHandle src =
      ObjectHandle::open_readonly(fx.backend, src_path, Errc::candidate_invalid);
  StagedHandle staged = copy_to_staged(fx.backend, src, fx.dir.path(), nullptr);
  try {
    atomic_replace(fx.backend, std::move(staged),
                   fx.dir.path() / "elsewhere" / "dest");
    FAIL("expected staging-location error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::staging_location);
  }
}

// The handle-stability property: with an adversary renaming, replacing and
// unlinking the path in a tight loop, whatever object a handle bound at open
// stays byte-identical through that handle.
TEST_CASE("handles are stable under path churn", "[handles][property]") {
  SimFixture fx;
  fs::path victim = fx.dir.path() / "victim";
  testsupport::write_text(victim, "seed");

  std::atomic<bool> stop{false};
  std::thread adversary([&] {
    std::mt19937_64 rng(99);
    int i = 0;
    while (!stop.load()) {
      // Mostly atomic replace-over, so the path usually exists; sometimes a
      // rename-away or unlink+recreate to exercise the missing-file window.
      switch (rng() % 8) {
        case 0: {
          std::error_code ec;
          fs::rename(victim, fx.dir.path() / "renamed-away", ec);
          fs::path tmp = fx.dir.path() / ("back" + std::to_string(i));
          testsupport::write_text(tmp, "returned-" + std::to_string(i));
          fs::rename(tmp, victim, ec);
          break;
        }
        case 1: {
          std::error_code ec;
          fs::remove(victim, ec);
          testsupport::write_text(victim, "recreated-" + std::to_string(i));
          break;
        }
        default: {
          fs::path tmp = fx.dir.path() / ("adv" + std::to_string(i));
          testsupport::write_text(tmp, "adv-content-" + std::to_string(i));
          std::error_code ec;
          fs::rename(tmp, victim, ec);
        }
      }
      std::this_thread::sleep_for(std::chrono::microseconds(rng() % 50));
      ++i;
    }
  });

  int checked = 0;
  int consistent = 0;
  std::mt19937_64 rng(100);
  for (int attempt = 0; checked < 1000 && attempt < 200000; ++attempt) {
    ObjectHandle h;
    try {
      h = ObjectHandle::open_readonly(fx.backend, victim,
                                      Errc::candidate_invalid);
    } catch (const Error&) {
      continue;  // adversary had the path missing right then
    }
    Bytes bound = read_all(h);
    if (rng() % 4 == 0)
      std::this_thread::sleep_for(std::chrono::microseconds(rng() % 120));
    // Re-read through the handle: must match what the handle bound, no
    // matter what happened to the pathname since.
    if (hash_of(h) == sha256(bound) && h.current_identity() == h.identity())
      ++consistent;
    ++checked;
  }
  stop.store(true);
  adversary.join();
  CHECK(checked == 1000);  // the adversary cannot starve the opener
  CHECK(consistent == checked);
}
