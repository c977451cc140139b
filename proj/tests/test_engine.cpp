// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <sys/file.h>

#include <random>

#include "promotectl/engine.hpp"
#include "promotectl/harness.hpp"
#include "support/test_util.hpp"

using namespace promote;
using harness::ScenarioBuilder;
using harness::Scenario;
using testsupport::TempDir;

namespace {

TargetAttributes root_exec(std::uint32_t mode = 0755) {
  TargetAttributes t;
  t.owner_id = 0;
  t.group_id = 0;
  t.mode = mode;
  return t;
}

std::string sandbox_file(const Scenario& sc, const std::string& logical) {
  return testsupport::read_text(sc.root / fs::path(logical).relative_path());
}

ShadowAttrs shadow_of(const Scenario& sc, const std::string& logical) {
  ShadowStore shadow(sc.root / "shadow-attrs.json", sc.root);
  return shadow.lookup(
      identity_of_path(sc.root / fs::path(logical).relative_path()));
}

int count_events(const RunReport& r, const std::string& stage,
                 const std::string& event) {
  int n = 0;
  for (const auto& ev : r.audit)
    if (ev.stage == stage && ev.event == event) ++n;
  return n;
}

}  // namespace

TEST_CASE("two-entry package promotes end to end", "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path())
                    .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                           root_exec(04755))
                    .entry("bin/b", "/opt/app/lib/b", to_bytes("beta"),
                           root_exec(0750))
                    .build();
  Backend backend = Backend::make_sim(sc.root);
  RunReport r = run_engine(sc.config, backend);

  REQUIRE(r.outcome == "success");
  CHECK(r.exit_code == 0);
  CHECK(sandbox_file(sc, "/opt/app/bin/a") == "alpha");
  CHECK(sandbox_file(sc, "/opt/app/lib/b") == "beta");
  CHECK(shadow_of(sc, "/opt/app/bin/a") == ShadowAttrs{0, 0, 04755, {}});
  CHECK(shadow_of(sc, "/opt/app/lib/b") == ShadowAttrs{0, 0, 0750, {}});
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].action == "promoted");
  CHECK(r.entries[1].action == "promoted");

  SECTION("phase/privilege coupling holds in the audit trail") {
    for (const auto& ev : r.audit) {
      if (ev.stage == "validate") CHECK(ev.detail["elevated"] == false);
      // privileges_dropped itself records the post-transition state.
      if ((ev.stage == "promote" || ev.stage == "trust" ||
           ev.stage == "setup") &&
          ev.event != "privileges_dropped")
        CHECK(ev.detail["elevated"] == true);
    }
    CHECK(count_events(r, "setup", "privileges_dropped") == 1);
  }

  SECTION("anchors and candidates are never reopened by path later") {
    std::string key_path = (sc.anchors_dir / "pubkey.doc").string();
    for (const auto& rec : backend.open_records()) {
      if (rec.path == key_path) CHECK(rec.phase == "setup");
      if (rec.path.find("/pkg/bin/") != std::string::npos)
        CHECK(rec.phase == "validate");
    }
    // Promotion opens destination probes and staging temps only.
    for (const auto& rec : backend.open_records()) {
      if (rec.phase == "promote" || rec.phase == "selfupdate") {
        CHECK(rec.path.find("/pkg/") == std::string::npos);
        CHECK(rec.path != key_path);
      }
    }
  }

  SECTION("re-running the same package is idempotent") {
    Backend backend2 = Backend::make_sim(sc.root);
    RunReport r2 = run_engine(sc.config, backend2);
    REQUIRE(r2.outcome == "success");
    CHECK(r2.entries[0].action == "skipped-idempotent");
    CHECK(r2.entries[1].action == "skipped-idempotent");
    CHECK(sandbox_file(sc, "/opt/app/bin/a") == "alpha");
  }
}

TEST_CASE("empty manifest succeeds without touching anything", "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path()).build();
  harness::TreeSnapshot before = harness::snapshot_tree(sc.root);
  RunReport r = run_engine(sc.config);
  CHECK(r.outcome == "success");
  CHECK(r.entries.empty());
  CHECK(harness::snapshot_tree(sc.root) == before);
}

TEST_CASE("one bad digest aborts with no destinations modified", "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path())
                    .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                           root_exec())
                    .entry("bin/b", "/opt/app/bin/b", to_bytes("beta"),
                           root_exec())
                    .build();
  // Corrupt the second candidate after signing.
  testsupport::write_text(sc.package_dir / "bin/b", "tampered");
  RunReport r = run_engine(sc.config);
  CHECK(r.outcome == "aborted");
  CHECK(r.stage == "validate");
  CHECK(r.error == "digest-mismatch");
  CHECK(r.exit_code == 13);
  CHECK_FALSE(fs::exists(sc.root / "opt/app/bin/a"));
  CHECK_FALSE(fs::exists(sc.root / "opt/app/bin/b"));
}

TEST_CASE("verify-only leaves the sandbox byte-identical", "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path())
                    .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                           root_exec())
                    .build();
  auto full_listing = [&] {
    std::map<std::string, std::string> all;
    for (auto& p : fs::recursive_directory_iterator(sc.root))
      if (p.is_regular_file())
        all[p.path().string()] =
            digest_hex(sha256(to_bytes(testsupport::read_text(p.path()))));
    return all;
  };
  auto before = full_listing();
  EngineConfig cfg = sc.config;
  cfg.verify_only = true;
  RunReport r = run_engine(cfg);
  CHECK(r.outcome == "success");
  CHECK(full_listing() == before);  // no lock, no audit, no promotion

  SECTION("verify-only still reports tampering") {
    testsupport::write_text(sc.package_dir / "bin/a", "tampered");
    RunReport r2 = run_engine(cfg);
    CHECK(r2.exit_code == 13);
    CHECK(full_listing() != before);  // only because the test tampered
  }
}

TEST_CASE("allowlist prefix policy", "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path())
                    .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                           root_exec())
                    .entry("bin/b", "/usr/lib/evil", to_bytes("beta"),
                           root_exec())
                    .allow_prefix("/opt/app")
                    .build();
  RunReport r = run_engine(sc.config);
  CHECK(r.exit_code == 14);
  CHECK(r.error == "policy-violation");
  CHECK_FALSE(fs::exists(sc.root / "opt/app/bin/a"));
}

TEST_CASE("anchor failures", "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path())
                    .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                           root_exec())
                    .build();

  SECTION("missing key file") {
    fs::remove(sc.anchors_dir / "pubkey.doc");
    RunReport r = run_engine(sc.config);
    CHECK(r.exit_code == 10);
    CHECK(r.stage == "setup");
  }
  SECTION("world-writable key file") {
    ShadowStore shadow(sc.root / "shadow-attrs.json", sc.root);
    shadow.set(identity_of_path(sc.anchors_dir / "pubkey.doc"),
               sc.anchors_dir / "pubkey.doc", {0, 0, 0666, {}});
    RunReport r = run_engine(sc.config);
    CHECK(r.exit_code == 10);
    CHECK(r.error == "untrusted-anchor");
  }
  SECTION("missing krl file means sequence zero") {
    RunReport r = run_engine(sc.config);
    CHECK(r.outcome == "success");
    CHECK(r.trust.krl_sequence == 0);
    CHECK(r.trust.revoked_count == 0);
  }
}

TEST_CASE("revoked signer aborts before the payload is parsed", "[engine]") {
  TempDir dir("engine");
  ScenarioBuilder builder(dir.path());
  KeyMaterial key = generate_key(kAlgEd25519);
  KrlDocument krl;
  krl.sequence_number = 1;
  krl.revoked.push_back(fingerprint_of(key.public_doc()));
  Scenario sc = builder.key(key)
                    .anchors_krl(krl)
                    .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                           root_exec())
                    .build();
  RunReport r = run_engine(sc.config);
  CHECK(r.exit_code == 11);
  CHECK(r.error == "revoked-signer");
  // The run stopped before any manifest content was examined.
  CHECK(count_events(r, "validate", "manifest_parsed") == 0);
  CHECK(count_events(r, "setup", "anchors_loaded") == 1);
}

TEST_CASE("krl update merges and installs atomically", "[engine]") {
  TempDir dir("engine");
  auto fp = [](char c) { return *Fingerprint::from_hex(std::string(64, c)); };
  KrlDocument current;
  current.sequence_number = 3;
  current.revoked = {fp('a')};
  KrlDocument update;
  update.sequence_number = 4;
  update.revoked = {fp('b')};
  Scenario sc = ScenarioBuilder(dir.path())
                    .anchors_krl(current)
                    .krl_update(update)
                    .build();
  RunReport r = run_engine(sc.config);
  REQUIRE(r.outcome == "success");
  CHECK(r.trust.krl_applied);
  CHECK(r.trust.krl_sequence == 4);

  KrlDocument merged;
  merged.sequence_number = 4;
  merged.revoked = {fp('a'), fp('b')};
  merged.normalize();
  CHECK(testsupport::read_text(sc.anchors_dir / "krl.json") ==
        to_string(encode_krl(merged)));
  CHECK(shadow_of(sc, "/" + fs::relative(sc.anchors_dir / "krl.json", sc.root)
                            .string()) == ShadowAttrs{0, 0, 0644, {}});

  SECTION("a stale replay aborts pre-promotion") {
    Scenario sc2 = ScenarioBuilder(dir.path() / "second")
                       .key(sc.vendor_key)
                       .anchors_krl(merged)
                       .krl_update(update)  // same sequence, same content
                       .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                              root_exec())
                       .build();
    // Identical content at the same sequence is the resume case: accepted
    // as a no-op.
    RunReport r2 = run_engine(sc2.config);
    CHECK(r2.outcome == "success");

    KrlDocument regress;
    regress.sequence_number = 4;
    regress.revoked = {};  // strictly weaker at the same sequence: stale
    Scenario sc3 = ScenarioBuilder(dir.path() / "third")
                       .key(sc.vendor_key)
                       .anchors_krl(merged)
                       .krl_update(regress)
                       .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                              root_exec())
                       .build();
    RunReport r3 = run_engine(sc3.config);
    CHECK(r3.outcome == "success");  // empty update is a subset: no-op

    KrlDocument older;
    older.sequence_number = 3;
    older.revoked = {fp('c')};
    Scenario sc4 = ScenarioBuilder(dir.path() / "fourth")
                       .key(sc.vendor_key)
                       .anchors_krl(merged)
                       .krl_update(older)
                       .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                              root_exec())
                       .build();
    RunReport r4 = run_engine(sc4.config);
    CHECK(r4.exit_code == 15);
    CHECK(r4.error == "stale-krl");
    CHECK_FALSE(fs::exists(sc4.root / "opt/app/bin/a"));
  }
}

TEST_CASE("rotation installs the new key atomically", "[engine]") {
  TempDir dir("engine");
  KeyMaterial k1 = generate_key(kAlgEd25519);
  KeyMaterial k2 = generate_key(kAlgEd25519);
  Scenario sc = ScenarioBuilder(dir.path())
                    .key(k1)
                    .rotation(vendor::make_rotation(k1, k2.public_doc()))
                    .build();
  RunReport r = run_engine(sc.config);
  REQUIRE(r.outcome == "success");
  CHECK(r.trust.rotation_applied);
  CHECK(r.trust.key_fingerprint == fingerprint_of(k2.public_doc()).hex());
  CHECK(testsupport::read_text(sc.anchors_dir / "pubkey.doc") ==
        to_string(canonical_key_bytes(k2.public_doc())));

  SECTION("packages signed by the old key are now refused") {
    Scenario sc2 = ScenarioBuilder(dir.path() / "old-signed")
                       .key(k1)
                       .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                              root_exec())
                       .build();
    // Reuse the rotated anchors, not the fresh ones the builder wrote.
    EngineConfig cfg = sc2.config;
    cfg.anchors_dir = sc.anchors_dir;
    cfg.sandbox_root = sc.root;
    RunReport r2 = run_engine(cfg);
    CHECK(r2.exit_code == 12);
    CHECK(r2.error == "fingerprint-mismatch");
  }
}

TEST_CASE("self-update performs a handoff then promotes helpers", "[engine]") {
  TempDir dir("engine");
  Scenario sc =
      ScenarioBuilder(dir.path())
          .entry("bin/enabler", "/opt/enabler/bin/promotectl",
                 to_bytes("new enabler v2"), root_exec(0755), true)
          .entry("bin/h1", "/opt/app/bin/h1", to_bytes("helper one"),
                 root_exec())
          .entry("bin/h2", "/opt/app/bin/h2", to_bytes("helper two"),
                 root_exec())
          .provision("/opt/enabler/bin/promotectl", to_bytes("old enabler v1"),
                     {0, 0, 0755, {}})
          .build();
  RunReport r = run_engine(sc.config);
  REQUIRE(r.outcome == "success");
  CHECK(r.self_update_performed);
  CHECK(sandbox_file(sc, "/opt/enabler/bin/promotectl") == "new enabler v2");
  CHECK(sandbox_file(sc, "/opt/app/bin/h1") == "helper one");

  // The exec handoff appears in the audit trail before any helper promotion.
  int exec_at = -1, first_helper = -1;
  for (int i = 0; i < static_cast<int>(r.audit.size()); ++i) {
    const auto& ev = r.audit[i];
    if (ev.stage == "selfupdate" && ev.event == "exec") exec_at = i;
    if (ev.stage == "promote" && ev.event == "entry_replaced" &&
        first_helper < 0)
      first_helper = i;
  }
  REQUIRE(exec_at >= 0);
  REQUIRE(first_helper >= 0);
  CHECK(exec_at < first_helper);

  // The resumed run re-validated everything: two envelope parses.
  CHECK(count_events(r, "validate", "envelope_parsed") == 2);
  // And the enabler entry is reported as current after the handoff.
  bool enabler_skipped = false;
  for (const auto& e : r.entries)
    if (e.destination == "/opt/enabler/bin/promotectl")
      enabler_skipped = e.action == "skipped-idempotent";
  CHECK(enabler_skipped);

  SECTION("re-running reports everything idempotent with no second exec") {
    RunReport r2 = run_engine(sc.config);
    REQUIRE(r2.outcome == "success");
    CHECK_FALSE(r2.self_update_performed);
    CHECK(count_events(r2, "selfupdate", "exec") == 0);
    for (const auto& e : r2.entries) CHECK(e.action == "skipped-idempotent");
  }
}

TEST_CASE("resume marker without an enabler entry is a contract violation",
          "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path())
                    .entry("bin/a", "/opt/app/bin/a", to_bytes("alpha"),
                           root_exec())
                    .build();
  EngineConfig cfg = sc.config;
  cfg.resume_marker = true;
  RunReport r = run_engine(cfg);
  CHECK(r.exit_code == 18);
}

TEST_CASE("rotation combined with self-update is refused", "[engine]") {
  TempDir dir("engine");
  KeyMaterial k1 = generate_key(kAlgEd25519);
  KeyMaterial k2 = generate_key(kAlgEd25519);
  Scenario sc =
      ScenarioBuilder(dir.path())
          .key(k1)
          .rotation(vendor::make_rotation(k1, k2.public_doc()))
          .entry("bin/enabler", "/opt/enabler/bin/promotectl",
                 to_bytes("new enabler"), root_exec(0755), true)
          .build();
  RunReport r = run_engine(sc.config);
  CHECK(r.exit_code == 15);
  // Nothing installed: neither the rotation nor the enabler.
  CHECK(testsupport::read_text(sc.anchors_dir / "pubkey.doc") ==
        to_string(canonical_key_bytes(k1.public_doc())));
  CHECK_FALSE(fs::exists(sc.root / "opt/enabler/bin/promotectl"));
}

TEST_CASE("lock contention exits 17", "[engine]") {
  TempDir dir("engine");
  Scenario sc = ScenarioBuilder(dir.path()).build();
  fs::path lock_path = sc.anchors_dir / ".promotectl.lock";
  int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT, 0644);
  REQUIRE(fd >= 0);
  REQUIRE(::flock(fd, LOCK_EX | LOCK_NB) == 0);
  RunReport r = run_engine(sc.config);
  CHECK(r.exit_code == 17);
  CHECK(r.error == "lock-contention");
  ::close(fd);
  RunReport r2 = run_engine(sc.config);
  CHECK(r2.outcome == "success");
}

TEST_CASE("promotion failure mid-plan keeps the completed prefix", "[engine]") {
  TempDir dir("engine");
  ScenarioBuilder builder(dir.path());
  for (int i = 0; i < 6; ++i)
    builder.entry("bin/c" + std::to_string(i),
                  "/opt/app/bin/c" + std::to_string(i),
                  to_bytes("payload " + std::to_string(i)), root_exec());
  Scenario sc = builder.build();

  EngineConfig cfg = sc.config;
  cfg.hooks.on_point = [&](const std::string& point) {
    // Fault injection: make entry 3's destination directory unusable after
    // entry 2 lands.
    if (point == "promote:entry:2:replaced")
      fs::remove_all(sc.root / "opt/app/bin");
  };
  RunReport r = run_engine(cfg);
  CHECK(r.outcome == "aborted");
  CHECK(r.stage == "promote");
  CHECK(r.exit_code == 16);
  // Entries 0..2 were individually promoted before the failure; the
  // injected fault removed them along with the directory, so judge by the
  // report, then confirm 3.. were never written anywhere.
  CHECK(r.entries[0].action == "promoted");
  CHECK(r.entries[1].action == "promoted");
  CHECK(r.entries[2].action == "promoted");
  CHECK(r.entries[3].action == "failed");
  CHECK(r.entries[4].action == "not-reached");
  CHECK(r.entries[5].action == "not-reached");
}
