// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "promotectl/audit.hpp"
#include "promotectl/backend.hpp"
#include "promotectl/handles.hpp"
#include "promotectl/manifest.hpp"
#include "promotectl/privilege.hpp"
#include "promotectl/trust.hpp"

// Instrumentation points between workflow steps. They are compiled into test
// builds only; release tools carry no hook calls.
#if defined(PROMOTECTL_TESTING)
#define PROMOTE_HOOK(cfg, name)                          \
  do {                                                   \
    if ((cfg).hooks.on_point) (cfg).hooks.on_point(name); \
  } while (0)
#else
#define PROMOTE_HOOK(cfg, name) \
  do {                          \
  } while (0)
#endif

namespace promote {

struct EngineHooks {
  std::function<void(const std::string&)> on_point;
};

struct EngineConfig {
  fs::path package_root;  // absolute
  fs::path anchors_dir;   // absolute
  BackendKind backend = BackendKind::sim;
  fs::path sandbox_root;  // sim backend only
  std::optional<std::string> allow_prefix;
  bool verify_only = false;
  bool resume_marker = false;
  std::vector<std::string> exec_argv;  // original argv, for real self-update
  std::optional<fs::path> audit_log_path;
  std::optional<fs::path> report_path;
  EngineHooks hooks;

  fs::path effective_audit_path() const {
    if (audit_log_path) return *audit_log_path;
    if (backend == BackendKind::sim) return sandbox_root / "audit.log";
    return anchors_dir / "audit.log";
  }
};

struct EntryResult {
  std::string destination;
  std::string action;  // promoted | skipped-idempotent | not-reached | failed
  std::string digest;
};

struct TrustStateReport {
  std::string key_fingerprint;
  std::uint64_t krl_sequence = 0;
  std::size_t revoked_count = 0;
  bool krl_applied = false;
  bool rotation_applied = false;
};

struct PhaseTimings {
  double setup = 0;
  double validate = 0;
  double trust = 0;
  double self_update = 0;
  double promote = 0;
  double total = 0;
};

struct RunReport {
  std::string outcome;  // "success" | "aborted"
  std::string stage;
  std::string error;
  std::string error_detail;
  int exit_code = 0;
  std::vector<EntryResult> entries;
  TrustStateReport trust;
  bool self_update_performed = false;
  PhaseTimings timings_ms;
  std::string backend;
  std::string audit_log;
  std::vector<AuditEvent> audit;

  nlohmann::json to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const auto& e : entries)
      entries_json.push_back({{"destination", e.destination},
                              {"action", e.action},
                              {"digest", e.digest}});
    return {{"outcome", outcome},
            {"stage", stage},
            {"error", error},
            {"error_detail", error_detail},
            {"exit_code", exit_code},
            {"entries", std::move(entries_json)},
            {"trust",
             {{"key_fingerprint", trust.key_fingerprint},
              {"krl_sequence", trust.krl_sequence},
              {"revoked_count", trust.revoked_count},
              {"krl_applied", trust.krl_applied},
              {"rotation_applied", trust.rotation_applied}}},
            {"self_update_performed", self_update_performed},
            {"timings_ms",
             {{"setup", timings_ms.setup},
              {"validate", timings_ms.validate},
              {"trust", timings_ms.trust},
              {"self_update", timings_ms.self_update},
              {"promote", timings_ms.promote},
              {"total", timings_ms.total}}},
            {"backend", backend},
            {"audit_log", audit_log}};
  }
};

namespace detail {

// flock-based single-instance guard; the lock dies with the descriptor, so
// a killed run never wedges later ones.
class RunLock {
 public:
  RunLock() = default;

  void acquire(const fs::path& dir) {
    fs::path p = dir / ".promotectl.lock";
    fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0)
      fail(Errc::lock_contention,
           "cannot open lock file '" + p.string() + "'");
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      fail(Errc::lock_contention, "another run holds the lock");
    }
  }

  void release() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  ~RunLock() { release(); }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  int fd_ = -1;
};

struct PlannedEntry {
  ManifestEntry entry;
  ObjectHandle handle;
  Digest digest{};
};

struct PromotionPlan {
  std::vector<PlannedEntry> items;
  std::optional<std::size_t> enabler_index;
};

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

RunReport run_engine(const EngineConfig& config);

// The three-phase, all-or-nothing workflow: privileged setup, unprivileged
// validation, privileged promotion (with trust updates and optional
// self-update in between). Any failure before promotion leaves the system
// untouched; promotion itself replaces each component atomically.
class Engine {
 public:
  Engine(const EngineConfig& config, Backend& backend)
      : cfg_(config), backend_(backend) {}

  RunReport run() {
    auto run_start = std::chrono::steady_clock::now();
    report_.backend = backend_name(cfg_.backend);
    try {
      check_config();
      audit_.emplace(cfg_.verify_only
                         ? std::optional<fs::path>{}
                         : std::optional<fs::path>{cfg_.effective_audit_path()});
      report_.audit_log =
          cfg_.verify_only ? "" : cfg_.effective_audit_path().string();

      priv_ = PrivilegeContext::acquire(cfg_.backend);
      backend_.attach_privileges(&*priv_);
      log("run", "start",
          {{"package", cfg_.package_root.string()},
           {"anchors", cfg_.anchors_dir.string()},
           {"verify_only", cfg_.verify_only},
           {"resume", cfg_.resume_marker}});

      auto t0 = std::chrono::steady_clock::now();
      phase_setup();
      report_.timings_ms.setup = detail::ms_since(t0);

      t0 = std::chrono::steady_clock::now();
      detail::PromotionPlan plan = phase_validate();
      report_.timings_ms.validate = detail::ms_since(t0);

      if (cfg_.verify_only) {
        for (auto& e : report_.entries) e.action = "validated";
        log("validate", "verify_only_complete",
            {{"entries", plan.items.size()}});
        finish_success(run_start);
        return report_;
      }

      ValidationToken token(plan.items.size());
      priv_->regain(token);
      log("privileges", "regained", {});
      PROMOTE_HOOK(cfg_, "regained");

      t0 = std::chrono::steady_clock::now();
      apply_trust_updates();
      report_.timings_ms.trust = detail::ms_since(t0);
      PROMOTE_HOOK(cfg_, "trust:done");

      t0 = std::chrono::steady_clock::now();
      std::optional<RunReport> handoff = self_update(plan);
      if (handoff) {
        // Simulated exec: the resumed run's report stands in for ours.
        handoff->self_update_performed = true;
        handoff->audit.insert(handoff->audit.begin(),
                              audit_->events().begin(),
                              audit_->events().end());
        write_report_file(*handoff);
        return *handoff;
      }
      report_.timings_ms.self_update = detail::ms_since(t0);

      t0 = std::chrono::steady_clock::now();
      phase_promote(plan);
      report_.timings_ms.promote = detail::ms_since(t0);
      PROMOTE_HOOK(cfg_, "promote:done");

      finish_success(run_start);
    } catch (const Error& e) {
      abort_report(run_start, e.code(), std::string(e.code_name()), e.what());
    } catch (const std::exception& e) {
      abort_report(run_start, Errc::contract_violation, "contract-violation",
                   e.what());
    }
    write_report_file(report_);
    return report_;
  }

 private:
  void check_config() {
    if (!cfg_.package_root.is_absolute() || !cfg_.anchors_dir.is_absolute())
      fail(Errc::contract_violation,
           "package and anchors paths must be absolute");
    if (cfg_.backend == BackendKind::sim && cfg_.sandbox_root.empty())
      fail(Errc::contract_violation, "sim backend needs a sandbox root");
  }

  // -- phase 1: privileged setup ------------------------------------------

  void phase_setup() {
    stage_ = "setup";
    backend_.set_phase(stage_);
    if (!priv_->is_elevated())
      fail(Errc::contract_violation, "setup must run elevated");

    if (!cfg_.verify_only) {
      lock_.acquire(cfg_.anchors_dir);
      log(stage_, "lock_acquired", {});
      PROMOTE_HOOK(cfg_, "setup:locked");
    }

    fs::path key_path = cfg_.anchors_dir / kPubkeyFileName;
    fs::path krl_path = cfg_.anchors_dir / kKrlFileName;

    ObjectHandle key_h =
        ObjectHandle::open_readonly(backend_, key_path, Errc::missing_anchor);
    std::optional<ObjectHandle> krl_h;
    if (fs::exists(fs::symlink_status(krl_path)))
      krl_h = ObjectHandle::open_readonly(backend_, krl_path,
                                          Errc::missing_anchor);
    anchors_ = load_anchors(backend_, key_h, krl_h ? &*krl_h : nullptr);
    report_.trust.key_fingerprint = anchors_.key_fp.hex();
    report_.trust.krl_sequence = anchors_.krl.sequence_number;
    report_.trust.revoked_count = anchors_.krl.revoked.size();
    log(stage_, "anchors_loaded",
        {{"key_fingerprint", anchors_.key_fp.hex()},
         {"krl_sequence", anchors_.krl.sequence_number},
         {"revoked_count", anchors_.krl.revoked.size()},
         {"krl_present", krl_h.has_value()}});
    PROMOTE_HOOK(cfg_, "setup:anchors_loaded");

    // A revoked trust anchor is unusable: stop before looking at any input.
    if (check_revocation(anchors_.key_fp, anchors_) ==
        RevocationStatus::revoked)
      fail(Errc::revoked_signer, "the trusted key itself is revoked");
    log(stage_, "trusted_key_revocation_checked", {});

    priv_->drop();
    log(stage_, "privileges_dropped", {});
    PROMOTE_HOOK(cfg_, "setup:done");
  }

  // -- phase 2: unprivileged validation -----------------------------------

  detail::PromotionPlan phase_validate() {
    stage_ = "validate";
    backend_.set_phase(stage_);
    if (priv_->is_elevated())
      fail(Errc::contract_violation, "validation must run unprivileged");
    PROMOTE_HOOK(cfg_, "validate:begin");

    fs::path env_path = cfg_.package_root / kEnvelopeFileName;
    ObjectHandle env_h = ObjectHandle::open_readonly(
        backend_, env_path, Errc::malformed_envelope);
    Bytes env_bytes =
        read_all(env_h, kEnvelopeSizeLimit, Errc::malformed_envelope);
    SignedEnvelope env = parse_envelope(env_bytes);
    log(stage_, "envelope_parsed",
        {{"signer_fingerprint", env.signer_fingerprint.hex()},
         {"algorithm_id", env.algorithm_id},
         {"payload_bytes", env.payload.size()}});

    // Revocation comes before any authentication of the package.
    if (check_revocation(env.signer_fingerprint, anchors_) ==
        RevocationStatus::revoked)
      fail(Errc::revoked_signer,
           "signer " + env.signer_fingerprint.hex() + " is revoked");
    log(stage_, "signer_revocation_checked", {{"status", "accept"}});

    Manifest manifest = verify_envelope(env, anchors_);
    log(stage_, "signature_verified", {});
    log(stage_, "manifest_parsed",
        {{"entries", manifest.entries.size()},
         {"has_rotation", manifest.rotation.has_value()},
         {"has_krl_update", manifest.krl_update.has_value()}});
    PROMOTE_HOOK(cfg_, "validate:envelope_verified");

    if (manifest.rotation && manifest.enabler_index())
      fail(Errc::rotation_rejected,
           "a package may not combine key rotation with an enabler update");

    if (cfg_.allow_prefix) {
      for (const auto& e : manifest.entries)
        if (!prefix_allows(*cfg_.allow_prefix, e.destination_path))
          fail(Errc::policy_violation,
               "destination '" + e.destination_path +
                   "' falls outside the allowed prefix");
      log(stage_, "policy_checked", {{"prefix", *cfg_.allow_prefix}});
    }

    detail::PromotionPlan plan;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const ManifestEntry& e = manifest.entries[i];
      detail::PlannedEntry pe;
      pe.entry = e;
      pe.handle = ObjectHandle::open_readonly(
          backend_, cfg_.package_root / e.candidate_path,
          Errc::candidate_invalid);
      PROMOTE_HOOK(cfg_, "validate:entry:" + std::to_string(i) + ":opened");
      pe.digest = hash_of(pe.handle);
      PROMOTE_HOOK(cfg_, "validate:entry:" + std::to_string(i) + ":hashed");
      if (digest_hex(pe.digest) != e.content_digest)
        fail(Errc::digest_mismatch,
             "candidate '" + e.candidate_path + "' hashes to " +
                 digest_hex(pe.digest) + ", manifest says " +
                 e.content_digest);
      log(stage_, "entry_validated",
          {{"index", i},
           {"destination", e.destination_path},
           {"digest", e.content_digest}});
      if (e.is_enabler) plan.enabler_index = i;
      plan.items.push_back(std::move(pe));
      report_.entries.push_back(
          {e.destination_path, "not-reached", e.content_digest});
    }
    manifest_ = std::move(manifest);
    log(stage_, "plan_ready", {{"entries", plan.items.size()}});
    PROMOTE_HOOK(cfg_, "validate:done");
    return plan;
  }

  // -- trust updates (privileged, pre-promotion) --------------------------

  void apply_trust_updates() {
    stage_ = "trust";
    backend_.set_phase(stage_);
    if (!manifest_.krl_update && !manifest_.rotation) return;

    // Verify everything first, then install; a rejected rotation must not
    // leave a half-applied KRL behind.
    std::optional<KrlDocument> merged;
    if (manifest_.krl_update) {
      const KrlDocument& update = *manifest_.krl_update;
      if (update.sequence_number == anchors_.krl.sequence_number &&
          std::includes(anchors_.krl.revoked.begin(),
                        anchors_.krl.revoked.end(), update.revoked.begin(),
                        update.revoked.end())) {
        // Already applied (a resumed run re-plays its own package).
        log(stage_, "krl_skipped_idempotent",
            {{"sequence", update.sequence_number}});
      } else {
        merged = merge_krl(anchors_.krl, update);
        log(stage_, "krl_merged",
            {{"from_sequence", anchors_.krl.sequence_number},
             {"to_sequence", merged->sequence_number},
             {"revoked_count", merged->revoked.size()}});
      }
    }
    std::optional<PublicKeyDoc> new_key;
    if (manifest_.rotation) {
      PublicKeyDoc candidate = verify_rotation(*manifest_.rotation, anchors_);
      if (fingerprint_of(candidate) == anchors_.key_fp) {
        log(stage_, "rotation_noop", {{"fingerprint", anchors_.key_fp.hex()}});
      } else {
        new_key = std::move(candidate);
        log(stage_, "rotation_verified",
            {{"new_fingerprint", fingerprint_of(*new_key).hex()}});
      }
    }

    if (merged) {
      install_anchor_file(cfg_.anchors_dir / kKrlFileName, encode_krl(*merged));
      anchors_.krl = *merged;
      report_.trust.krl_applied = true;
      report_.trust.krl_sequence = merged->sequence_number;
      report_.trust.revoked_count = merged->revoked.size();
      log(stage_, "krl_installed", {{"sequence", merged->sequence_number}});
      PROMOTE_HOOK(cfg_, "trust:krl_installed");
    }
    if (new_key) {
      install_anchor_file(cfg_.anchors_dir / kPubkeyFileName,
                          canonical_key_bytes(*new_key));
      anchors_.key = *new_key;
      anchors_.key_fp = fingerprint_of(*new_key);
      report_.trust.rotation_applied = true;
      report_.trust.key_fingerprint = anchors_.key_fp.hex();
      log(stage_, "rotation_installed",
          {{"new_fingerprint", anchors_.key_fp.hex()}});
      PROMOTE_HOOK(cfg_, "trust:rotation_installed");
    }
  }

  // Anchor files are replaced exactly like promoted components: staged in
  // their own directory, attributed, then renamed into place.
  void install_anchor_file(const fs::path& dest, const Bytes& content) {
    StagedHandle staged = StagedHandle::create(backend_, dest.parent_path());
    staged.append(content.data(), content.size());
    staged.flush();
    TargetAttributes root_file;
    root_file.owner_id = 0;
    root_file.group_id = 0;
    root_file.mode = 0644;
    apply_attributes(backend_, staged, root_file);
    atomic_replace(backend_, std::move(staged), dest);
  }

  // -- self-update with exec handoff --------------------------------------

  std::optional<RunReport> self_update(detail::PromotionPlan& plan) {
    stage_ = "selfupdate";
    backend_.set_phase(stage_);
    if (!plan.enabler_index) {
      if (cfg_.resume_marker)
        fail(Errc::contract_violation,
             "resume marker set but the manifest has no enabler entry");
      return std::nullopt;
    }
    detail::PlannedEntry& pe = plan.items[*plan.enabler_index];
    fs::path dest = backend_.map_destination(pe.entry.destination_path);
    if (destination_current(pe.entry, dest)) {
      log(stage_, "skipped_idempotent",
          {{"destination", pe.entry.destination_path}});
      set_entry_result(pe.entry.destination_path, "skipped-idempotent");
      return std::nullopt;
    }
    if (cfg_.resume_marker)
      fail(Errc::promotion_failure,
           "enabler entry still not current after self-update handoff");

    promote_one(pe, *plan.enabler_index);
    report_.self_update_performed = true;
    log(stage_, "exec",
        {{"destination", pe.entry.destination_path},
         {"resume_argv_flag", "--self-updated"}});
    PROMOTE_HOOK(cfg_, "selfupdate:exec");

    if (cfg_.backend == BackendKind::real) {
      audit_->close_for_exec();
      std::vector<std::string> argv = cfg_.exec_argv;
      if (argv.empty()) argv.push_back(dest.string());
      argv.push_back("--self-updated");
      std::vector<char*> cargv;
      for (auto& a : argv) cargv.push_back(a.data());
      cargv.push_back(nullptr);
      ::execv(dest.c_str(), cargv.data());
      fail(Errc::promotion_failure,
           std::string("execve into updated enabler failed: ") +
               std::strerror(errno));
    }

    // Simulated backend: model the handoff as a fresh run of the whole
    // workflow under the resume marker, as the new process would perform.
    lock_.release();
    EngineConfig resumed = cfg_;
    resumed.resume_marker = true;
    return run_engine(resumed);
  }

  // -- phase 3: privileged promotion --------------------------------------

  void phase_promote(detail::PromotionPlan& plan) {
    stage_ = "promote";
    backend_.set_phase(stage_);
    if (!priv_->is_elevated())
      fail(Errc::contract_violation, "promotion must run elevated");
    PROMOTE_HOOK(cfg_, "promote:begin");
    for (std::size_t i = 0; i < plan.items.size(); ++i) {
      if (plan.enabler_index && i == *plan.enabler_index)
        continue;  // handled by self_update, always first
      detail::PlannedEntry& pe = plan.items[i];
      fs::path dest = backend_.map_destination(pe.entry.destination_path);
      if (destination_current(pe.entry, dest)) {
        log(stage_, "entry_skipped_idempotent",
            {{"index", i}, {"destination", pe.entry.destination_path}});
        set_entry_result(pe.entry.destination_path, "skipped-idempotent");
        continue;
      }
      try {
        promote_one(pe, i);
      } catch (...) {
        set_entry_result(pe.entry.destination_path, "failed");
        throw;
      }
    }
  }

  void promote_one(detail::PlannedEntry& pe, std::size_t index) {
    fs::path dest = backend_.map_destination(pe.entry.destination_path);
    std::string idx = std::to_string(index);

    // The handle must still name the object validated in phase 2.
    pe.handle.require_same_object();

    Digest copied{};
    StagedHandle staged =
        copy_to_staged(backend_, pe.handle, dest.parent_path(), &copied);
    if (copied != pe.digest)
      fail(Errc::promotion_failure,
           "bytes read during promotion differ from the validated content");
    log(stage_, "entry_staged",
        {{"index", index}, {"destination", pe.entry.destination_path}});
    PROMOTE_HOOK(cfg_, "promote:entry:" + idx + ":staged");

    apply_attributes(backend_, staged, pe.entry.target);
    log(stage_, "entry_attributes_applied",
        {{"index", index},
         {"owner", pe.entry.target.owner_id},
         {"group", pe.entry.target.group_id},
         {"mode", pe.entry.target.mode}});
    PROMOTE_HOOK(cfg_, "promote:entry:" + idx + ":attrs");

    atomic_replace(backend_, std::move(staged), dest);
    set_entry_result(pe.entry.destination_path, "promoted");
    log(stage_, "entry_replaced",
        {{"index", index},
         {"destination", pe.entry.destination_path},
         {"digest", pe.entry.content_digest}});
    PROMOTE_HOOK(cfg_, "promote:entry:" + idx + ":replaced");
  }

  // True when the destination already holds exactly the authorized bytes
  // and attributes. Checked through a fresh handle, not trusted paths.
  bool destination_current(const ManifestEntry& entry, const fs::path& dest) {
    try {
      ObjectHandle h = ObjectHandle::open_readonly(backend_, dest,
                                                   Errc::promotion_failure);
      if (digest_hex(hash_of(h)) != entry.content_digest) return false;
      FileAttrs a = backend_.query_attrs(h.fd());
      if (a.owner != entry.target.owner_id ||
          a.group != entry.target.group_id || a.mode != entry.target.mode)
        return false;
      if (cfg_.backend == BackendKind::real)
        return entry.target.capabilities.empty();
      return a.capabilities == entry.target.capabilities;
    } catch (const Error&) {
      return false;
    }
  }

  // -- plumbing ------------------------------------------------------------

  static bool prefix_allows(const std::string& prefix,
                            const std::string& dest) {
    if (prefix.empty() || prefix.front() != '/') return false;
    std::string p = prefix;
    while (p.size() > 1 && p.back() == '/') p.pop_back();
    if (p == "/") return true;
    if (dest == p) return true;
    return dest.size() > p.size() && dest.compare(0, p.size(), p) == 0 &&
           dest[p.size()] == '/';
  }

  void set_entry_result(const std::string& destination,
                        const std::string& action) {
    for (auto& e : report_.entries)
      if (e.destination == destination) {
        e.action = action;
        return;
      }
  }

  void log(const std::string& stage, const std::string& event,
           nlohmann::json detail) {
    detail["elevated"] = priv_ ? priv_->is_elevated() : false;
    audit_->emit(stage, event, std::move(detail));
  }

  void finish_success(std::chrono::steady_clock::time_point run_start) {
    report_.outcome = "success";
    report_.exit_code = 0;
    report_.timings_ms.total = detail::ms_since(run_start);
    log("run", "success",
        {{"entries", report_.entries.size()},
         {"total_ms", report_.timings_ms.total}});
    report_.audit = audit_->events();
  }

  void abort_report(std::chrono::steady_clock::time_point run_start, Errc code,
                    std::string name, std::string detail) {
    report_.outcome = "aborted";
    report_.stage = stage_;
    report_.error = std::move(name);
    report_.error_detail = std::move(detail);
    report_.exit_code = exit_code_for(code);
    report_.timings_ms.total = detail::ms_since(run_start);
    if (audit_) {
      log("run", "aborted",
          {{"stage", stage_},
           {"error", report_.error},
           {"detail", report_.error_detail},
           {"exit_code", report_.exit_code}});
      report_.audit = audit_->events();
    }
  }

  void write_report_file(const RunReport& r) {
    if (!cfg_.report_path || cfg_.verify_only) return;
    std::ofstream out(*cfg_.report_path, std::ios::binary | std::ios::trunc);
    out << r.to_json().dump(2) << "\n";
  }

  const EngineConfig& cfg_;
  Backend& backend_;
  std::optional<PrivilegeContext> priv_;
  std::optional<AuditLog> audit_;
  detail::RunLock lock_;
  TrustAnchors anchors_;
  Manifest manifest_;
  RunReport report_;
  std::string stage_ = "init";
};

inline RunReport run_engine(const EngineConfig& config, Backend& backend) {
  return Engine(config, backend).run();
}

inline RunReport run_engine(const EngineConfig& config) {
  Backend backend = config.backend == BackendKind::real
                        ? Backend::make_real()
                        : Backend::make_sim(config.sandbox_root);
  return run_engine(config, backend);
}

}  // namespace promote
