// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "promotectl/engine.hpp"
#include "promotectl/vendor.hpp"

// Adversarial test rig for the promotion engine. It plays the threat model's
// unprivileged attacker: a concurrent agent that renames, replaces, unlinks
// and symlinks files in the attacker-writable parts of a sandbox while the
// engine runs, optionally killing the engine at precise points via the
// instrumentation hooks. After every run it checks the core invariant: no
// content ever reaches a privileged destination (or elevated attributes)
// unless a verified manifest authorized exactly those bytes.

namespace promote::harness {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Attack scripts

struct AttackAction {
  std::string kind;  // replace_path | symlink_swap | unlink |
                     // replace_anchor_path | kill_engine | tight_loop_replace
  std::string path;  // sandbox-relative
  Bytes payload;
  std::string symlink_target;
  std::string at_hook;  // run when this hook fires (gated, deterministic)
  int occurrence = 1;   // which firing of the hook
  int after_ms = -1;    // or run this long after engine start
  int duration_ms = 0;  // tight_loop_replace only
};

struct AttackScript {
  std::vector<AttackAction> actions;
};

inline nlohmann::json script_to_json(const AttackScript& s) {
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : s.actions) {
    nlohmann::json j = {{"kind", a.kind}};
    if (!a.path.empty()) j["path"] = a.path;
    if (!a.payload.empty()) j["payload_b64"] = base64_encode(a.payload);
    if (!a.symlink_target.empty()) j["symlink_target"] = a.symlink_target;
    if (!a.at_hook.empty()) j["at_hook"] = a.at_hook;
    if (a.occurrence != 1) j["occurrence"] = a.occurrence;
    if (a.after_ms >= 0) j["after_ms"] = a.after_ms;
    if (a.duration_ms > 0) j["duration_ms"] = a.duration_ms;
    actions.push_back(std::move(j));
  }
  return {{"actions", std::move(actions)}};
}

inline AttackScript script_from_json(const nlohmann::json& j) {
  AttackScript s;
  if (!j.is_object() || !j.contains("actions") || !j["actions"].is_array())
    throw std::runtime_error("attack script: actions array required");
  for (const auto& a : j["actions"]) {
    AttackAction act;
    act.kind = a.at("kind").get<std::string>();
    act.path = a.value("path", "");
    if (a.contains("payload_b64")) {
      auto p = base64_decode(a["payload_b64"].get<std::string>());
      if (!p) throw std::runtime_error("attack script: bad payload_b64");
      act.payload = std::move(*p);
    }
    act.symlink_target = a.value("symlink_target", "");
    act.at_hook = a.value("at_hook", "");
    act.occurrence = a.value("occurrence", 1);
    act.after_ms = a.value("after_ms", -1);
    act.duration_ms = a.value("duration_ms", 0);
    s.actions.push_back(std::move(act));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scenario: a provisioned sandbox plus the package under test

struct Scenario {
  fs::path root;
  fs::path anchors_dir;
  fs::path package_dir;
  KeyMaterial vendor_key;
  Manifest manifest;
  EngineConfig config;
};

// Lays out a sandbox: anchors with root-owned shadow attributes, the package
// with signed envelope, destination parent directories, and any pre-existing
// privileged files.
class ScenarioBuilder {
 public:
  explicit ScenarioBuilder(fs::path root) : root_(std::move(root)) {}

  ScenarioBuilder& key(KeyMaterial k) {
    key_ = std::move(k);
    return *this;
  }

  ScenarioBuilder& sign_with(KeyMaterial k) {
    signer_ = std::move(k);
    return *this;
  }

  ScenarioBuilder& entry(std::string candidate, std::string destination,
                         Bytes payload, TargetAttributes target,
                         bool is_enabler = false) {
    entries_.push_back({std::move(candidate), std::move(destination),
                        std::move(payload), target, is_enabler});
    return *this;
  }

  ScenarioBuilder& rotation(RotationRequest r) {
    rotation_ = std::move(r);
    return *this;
  }

  ScenarioBuilder& krl_update(KrlDocument k) {
    krl_update_ = std::move(k);
    return *this;
  }

  ScenarioBuilder& anchors_krl(KrlDocument k) {
    anchors_krl_ = std::move(k);
    return *this;
  }

  // A privileged file that already exists before the run.
  ScenarioBuilder& provision(std::string logical_dest, Bytes content,
                             ShadowAttrs attrs) {
    provisioned_.push_back({std::move(logical_dest), std::move(content),
                            std::move(attrs)});
    return *this;
  }

  ScenarioBuilder& allow_prefix(std::string p) {
    allow_prefix_ = std::move(p);
    return *this;
  }

  Scenario build() {
    Scenario sc;
    sc.root = root_;
    sc.anchors_dir = root_ / "anchors";
    sc.package_dir = root_ / "pkg";
    fs::create_directories(sc.anchors_dir);
    fs::create_directories(sc.package_dir);

    if (!key_) key_ = generate_key(kAlgEd25519);
    sc.vendor_key = *key_;

    ShadowStore shadow(root_ / "shadow-attrs.json", root_);
    ShadowAttrs root_file{0, 0, 0644, {}};

    fs::path key_path = sc.anchors_dir / kPubkeyFileName;
    vendor::write_key_doc(key_path, key_->public_doc());
    shadow.set(identity_of_path(key_path), key_path, root_file);
    if (anchors_krl_) {
      fs::path krl_path = sc.anchors_dir / kKrlFileName;
      vendor::write_file(krl_path, encode_krl(*anchors_krl_));
      shadow.set(identity_of_path(krl_path), krl_path, root_file);
    }

    vendor::ManifestSource src;
    for (const auto& e : entries_) {
      fs::path candidate = sc.package_dir / e.candidate;
      fs::create_directories(candidate.parent_path());
      vendor::write_file(candidate, e.payload);
      src.entries.push_back({e.candidate, e.destination, e.target,
                             e.is_enabler});
      fs::path dest = root_ / fs::path(e.destination).relative_path();
      fs::create_directories(dest.parent_path());
    }
    sc.manifest = vendor::build_manifest(sc.package_dir, src, rotation_,
                                         krl_update_);
    const KeyMaterial& signer = signer_ ? *signer_ : *key_;
    vendor::write_envelope(sc.package_dir / kEnvelopeFileName,
                           vendor::sign_manifest(sc.manifest, signer));

    for (const auto& p : provisioned_) {
      fs::path dest = root_ / fs::path(p.logical).relative_path();
      fs::create_directories(dest.parent_path());
      vendor::write_file(dest, p.content);
      shadow.set(identity_of_path(dest), dest, p.attrs);
    }

    sc.config.package_root = sc.package_dir;
    sc.config.anchors_dir = sc.anchors_dir;
    sc.config.backend = BackendKind::sim;
    sc.config.sandbox_root = root_;
    sc.config.allow_prefix = allow_prefix_;
    return sc;
  }

 private:
  struct EntrySpec {
    std::string candidate;
    std::string destination;
    Bytes payload;
    TargetAttributes target;
    bool is_enabler;
  };
  struct ProvisionSpec {
    std::string logical;
    Bytes content;
    ShadowAttrs attrs;
  };

  fs::path root_;
  std::optional<KeyMaterial> key_;
  std::optional<KeyMaterial> signer_;
  std::vector<EntrySpec> entries_;
  std::optional<RotationRequest> rotation_;
  std::optional<KrlDocument> krl_update_;
  std::optional<KrlDocument> anchors_krl_;
  std::vector<ProvisionSpec> provisioned_;
  std::optional<std::string> allow_prefix_;
};

// ---------------------------------------------------------------------------
// Sandbox snapshots and the authorized view

struct TreeEntry {
  std::string digest;
  ShadowAttrs attrs;

  bool operator==(const TreeEntry&) const = default;
};

using TreeSnapshot = std::map<std::string, TreeEntry>;

inline bool snapshot_excluded(const std::string& rel) {
  return rel == "shadow-attrs.json" || rel == "shadow-attrs.json.tmp" ||
         rel == "audit.log" || rel == "run-report.json" ||
         rel.find(".promotectl.lock") != std::string::npos;
}

inline TreeSnapshot snapshot_tree(const fs::path& root) {
  TreeSnapshot snap;
  if (!fs::exists(root)) return snap;
  ShadowStore shadow(root / "shadow-attrs.json", root);
  for (auto it = fs::recursive_directory_iterator(
           root, fs::directory_options::skip_permission_denied);
       it != fs::recursive_directory_iterator(); ++it) {
    std::error_code ec;
    if (it->is_symlink(ec) || ec) continue;
    if (!it->is_regular_file(ec) || ec) continue;
    std::string rel = fs::relative(it->path(), root).generic_string();
    if (snapshot_excluded(rel)) continue;
    TreeEntry e;
    Bytes content = vendor::read_file(it->path(), Errc::contract_violation);
    e.digest = digest_hex(sha256(content));
    e.attrs = shadow.lookup(identity_of_path(it->path()));
    snap[rel] = std::move(e);
  }
  return snap;
}

// What the package would legitimately change, judged against the trust state
// before the run. An untrusted package authorizes nothing.
struct AuthorizedView {
  bool package_trusted = false;
  std::map<std::string, TreeEntry> destinations;  // sandbox-relative
  std::set<std::string> authorized_digests;
  std::string pre_key_digest;
  std::string expected_key_digest;  // after rotation, else pre
  std::string pre_krl_digest;
  std::string expected_krl_digest;  // after merge, else pre
};

inline AuthorizedView compute_authorized(const Scenario& sc) {
  AuthorizedView view;
  try {
    Bytes key_raw = vendor::read_file(sc.anchors_dir / kPubkeyFileName,
                                      Errc::missing_anchor);
    PublicKeyDoc key = parse_key_doc(to_string(key_raw), Errc::corrupt_anchor);
    view.pre_key_digest = digest_hex(sha256(key_raw));
    view.expected_key_digest = view.pre_key_digest;
    KrlDocument krl;
    fs::path krl_path = sc.anchors_dir / kKrlFileName;
    if (fs::exists(krl_path)) {
      Bytes krl_raw = vendor::read_file(krl_path, Errc::missing_anchor);
      krl = parse_krl(to_string(krl_raw), true, Errc::corrupt_anchor);
      view.pre_krl_digest = digest_hex(sha256(krl_raw));
    }
    view.expected_krl_digest = view.pre_krl_digest;

    Bytes env_raw = vendor::read_file(sc.package_dir / kEnvelopeFileName,
                                      Errc::malformed_envelope);
    SignedEnvelope env = parse_envelope(env_raw);
    if (krl.contains(env.signer_fingerprint)) return view;
    if (krl.contains(fingerprint_of(key))) return view;
    if (env.signer_fingerprint != fingerprint_of(key)) return view;
    if (!verify_signature(env.algorithm_id, key.key_bytes, env.payload,
                          env.signature))
      return view;
    Manifest m = parse_manifest(env.payload);

    view.package_trusted = true;
    for (const auto& e : m.entries) {
      std::string rel = fs::path(e.destination_path)
                            .relative_path()
                            .generic_string();
      ShadowAttrs attrs{e.target.owner_id, e.target.group_id, e.target.mode,
                        e.target.capabilities};
      view.destinations[rel] = TreeEntry{e.content_digest, attrs};
      view.authorized_digests.insert(e.content_digest);
    }
    if (m.krl_update && m.krl_update->sequence_number > krl.sequence_number) {
      KrlDocument merged = merge_krl(krl, *m.krl_update);
      Bytes bytes = encode_krl(merged);
      view.expected_krl_digest = digest_hex(sha256(bytes));
      view.authorized_digests.insert(view.expected_krl_digest);
    }
    if (m.rotation) {
      Bytes bytes = canonical_key_bytes(m.rotation->new_key);
      view.expected_key_digest = digest_hex(sha256(bytes));
      view.authorized_digests.insert(view.expected_key_digest);
    }
  } catch (const Error&) {
    view.package_trusted = false;
    view.destinations.clear();
    view.authorized_digests.clear();
  }
  return view;
}

// ---------------------------------------------------------------------------
// Attack reports and the invariant verdict

struct AttackReport {
  std::uint64_t seed = 0;
  int engine_exit = -1;
  bool engine_killed = false;
  std::string verdict;  // HELD | VIOLATED
  std::vector<std::string> violations;
  std::map<std::string, std::string> destination_digests;
  std::vector<std::string> adversary_log;
  nlohmann::json engine_report;

  bool held() const { return verdict == "HELD"; }

  nlohmann::json to_json() const {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& s : violations) v.push_back(s);
    nlohmann::json log = nlohmann::json::array();
    for (const auto& s : adversary_log) log.push_back(s);
    nlohmann::json dests = nlohmann::json::object();
    for (const auto& [k, d] : destination_digests) dests[k] = d;
    return {{"seed", seed},
            {"engine_exit", engine_exit},
            {"engine_killed", engine_killed},
            {"verdict", verdict},
            {"violations", std::move(v)},
            {"destination_digests", std::move(dests)},
            {"adversary_log", std::move(log)},
            {"engine_report", engine_report}};
  }
};

namespace detail {

// The adversary holds only unprivileged powers: plain file operations inside
// the attacker-writable areas of the sandbox (the package and the anchor
// directory namespace, per the threat model). Scripts that reach anywhere
// else are harness usage errors.
inline void check_containment(const Scenario& sc, const AttackScript& script) {
  auto inside = [&](const fs::path& p, const fs::path& base) {
    auto rel = fs::relative(sc.root / p, base);
    return !rel.empty() && rel.native().rfind("..", 0) != 0;
  };
  for (const auto& a : script.actions) {
    if (a.kind == "kill_engine") continue;
    if (a.path.empty() || fs::path(a.path).is_absolute())
      throw std::runtime_error("attack action path must be sandbox-relative");
    if (!inside(a.path, sc.package_dir) && !inside(a.path, sc.anchors_dir))
      throw std::runtime_error(
          "attack action path '" + a.path +
          "' is outside the attacker-writable namespace");
  }
}

class AdversaryLog {
 public:
  void add(std::string line) {
    std::lock_guard<std::mutex> g(mu_);
    lines_.push_back(std::move(line));
  }
  std::vector<std::string> take() {
    std::lock_guard<std::mutex> g(mu_);
    return std::move(lines_);
  }

 private:
  std::mutex mu_;
  std::vector<std::string> lines_;
};

// Replace-by-rename with an adversary-owned temp file, the way a real
// attacker swaps content without ever holding the target open.
inline void adversary_replace(const fs::path& target, const Bytes& payload) {
  fs::path tmp = target;
  tmp += ".adv";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  out.close();
  std::error_code ec;
  fs::rename(tmp, target, ec);
}

inline void perform_action(const Scenario& sc, const AttackAction& a,
                           AdversaryLog& log) {
  fs::path target = sc.root / a.path;
  if (a.kind == "replace_path" || a.kind == "replace_anchor_path") {
    adversary_replace(target, a.payload);
    log.add(a.kind + " " + a.path);
  } else if (a.kind == "unlink") {
    std::error_code ec;
    fs::remove(target, ec);
    log.add("unlink " + a.path);
  } else if (a.kind == "symlink_swap") {
    std::error_code ec;
    fs::remove(target, ec);
    fs::create_symlink(sc.root / a.symlink_target, target, ec);
    log.add("symlink_swap " + a.path + " -> " + a.symlink_target);
  } else {
    throw std::runtime_error("unknown attack action kind '" + a.kind + "'");
  }
}

}  // namespace detail

void check_invariants(const Scenario& sc, const AuthorizedView& auth,
                      const TreeSnapshot& pre, const TreeSnapshot& post,
                      AttackReport& report);

// Runs the engine in a forked child against the adversary described by the
// script, then checks the invariant over the resulting sandbox state.
inline AttackReport run_attack(const Scenario& sc, const AttackScript& script,
                               std::uint64_t seed) {
  detail::check_containment(sc, script);

  TreeSnapshot pre = snapshot_tree(sc.root);
  AuthorizedView auth = compute_authorized(sc);

  EngineConfig cfg = sc.config;
  cfg.report_path = sc.root / "run-report.json";

  int hook_pipe[2], go_pipe[2];
  if (::pipe2(hook_pipe, O_CLOEXEC) != 0 || ::pipe2(go_pipe, O_CLOEXEC) != 0)
    throw std::runtime_error("pipe failed");

  pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::close(hook_pipe[0]);
    ::close(go_pipe[1]);
    int hook_w = hook_pipe[1];
    int go_r = go_pipe[0];
    cfg.hooks.on_point = [hook_w, go_r](const std::string& name) {
      std::string line = name + "\n";
      if (::write(hook_w, line.data(), line.size()) !=
          static_cast<ssize_t>(line.size()))
        return;
      char buf[3];
      std::size_t off = 0;
      while (off < sizeof(buf)) {
        ssize_t n = ::read(go_r, buf + off, sizeof(buf) - off);
        if (n <= 0) return;  // orchestrator gone; keep running
        off += static_cast<std::size_t>(n);
      }
    };
    int code = 90;
    try {
      RunReport r = run_engine(cfg);
      code = r.exit_code;
    } catch (...) {
      code = 90;  // harness infrastructure failure, not an engine verdict
    }
    ::_exit(code);
  }

  ::close(hook_pipe[1]);
  ::close(go_pipe[0]);

  detail::AdversaryLog adv_log;
  std::atomic<bool> stop{false};
  std::atomic<bool> killed{false};
  auto start = std::chrono::steady_clock::now();

  // Timed and looping actions run free of the hook gates.
  std::vector<std::thread> agents;
  for (const auto& a : script.actions) {
    if (a.kind == "tight_loop_replace") {
      agents.emplace_back([&, a, seed]() {
        std::mt19937_64 rng(seed ^ std::hash<std::string>{}(a.path));
        std::uniform_int_distribution<int> jitter_us(0, 200);
        auto deadline = start + std::chrono::milliseconds(
                                    a.duration_ms > 0 ? a.duration_ms : 1000);
        int swaps = 0;
        while (!stop.load() && std::chrono::steady_clock::now() < deadline) {
          detail::adversary_replace(sc.root / a.path, a.payload);
          ++swaps;
          std::this_thread::sleep_for(
              std::chrono::microseconds(jitter_us(rng)));
        }
        adv_log.add("tight_loop_replace " + a.path + " x" +
                    std::to_string(swaps));
      });
    } else if (a.after_ms >= 0 && a.at_hook.empty()) {
      agents.emplace_back([&, a]() {
        auto when = start + std::chrono::milliseconds(a.after_ms);
        while (!stop.load() && std::chrono::steady_clock::now() < when)
          std::this_thread::sleep_for(std::chrono::microseconds(200));
        if (!stop.load()) detail::perform_action(sc, a, adv_log);
      });
    }
  }

  // Hook gate: execute scripted actions at their exact windows.
  std::map<std::string, int> occurrences;
  std::vector<bool> done(script.actions.size(), false);
  std::string acc;
  char buf[512];
  for (;;) {
    ssize_t n = ::read(hook_pipe[0], buf, sizeof(buf));
    if (n <= 0) break;
    acc.append(buf, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = acc.find('\n')) != std::string::npos) {
      std::string hook = acc.substr(0, pos);
      acc.erase(0, pos + 1);
      int occ = ++occurrences[hook];
      bool kill_now = false;
      for (std::size_t i = 0; i < script.actions.size(); ++i) {
        const AttackAction& a = script.actions[i];
        if (done[i] || a.at_hook != hook || a.occurrence != occ) continue;
        done[i] = true;
        if (a.kind == "kill_engine") {
          kill_now = true;
          adv_log.add("kill_engine at " + hook);
        } else {
          detail::perform_action(sc, a, adv_log);
        }
      }
      if (kill_now) {
        ::kill(pid, SIGKILL);
        killed.store(true);
      } else {
        [[maybe_unused]] ssize_t w = ::write(go_pipe[1], "GO\n", 3);
      }
    }
  }
  ::close(hook_pipe[0]);
  ::close(go_pipe[1]);

  int status = 0;
  ::waitpid(pid, &status, 0);
  stop.store(true);
  for (auto& t : agents) t.join();

  AttackReport report;
  report.seed = seed;
  report.adversary_log = adv_log.take();
  if (WIFSIGNALED(status)) {
    report.engine_killed = true;
    report.engine_exit = -WTERMSIG(status);
  } else {
    report.engine_exit = WEXITSTATUS(status);
  }
  {
    std::ifstream in(sc.root / "run-report.json", std::ios::binary);
    if (in) {
      nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
      if (!j.is_discarded()) report.engine_report = std::move(j);
    }
  }

  TreeSnapshot post = snapshot_tree(sc.root);
  check_invariants(sc, auth, pre, post, report);
  report.verdict = report.violations.empty() ? "HELD" : "VIOLATED";
  return report;
}

// The testable form of the security invariant, evaluated over sandbox state:
//  1. every authorized destination is either untouched or holds exactly the
//     authorized bytes with exactly the authorized attributes;
//  2. nothing anywhere carries elevated attributes unless its content was
//     authorized (or it was already elevated before the run);
//  3. the trust anchors, where still root-owned, hold either their prior
//     content or the exact authorized update.
inline void check_invariants(const Scenario& sc, const AuthorizedView& auth,
                             const TreeSnapshot& pre, const TreeSnapshot& post,
                             AttackReport& report) {
  std::string anchors_rel =
      fs::relative(sc.anchors_dir, sc.root).generic_string();
  std::string key_rel = anchors_rel + "/" + std::string(kPubkeyFileName);
  std::string krl_rel = anchors_rel + "/" + std::string(kKrlFileName);

  std::set<std::string> pre_elevated_digests;
  for (const auto& [rel, e] : pre)
    if (e.attrs.elevated()) pre_elevated_digests.insert(e.digest);

  for (const auto& [rel, want] : auth.destinations) {
    auto pre_it = pre.find(rel);
    auto post_it = post.find(rel);
    std::string observed = post_it == post.end() ? "absent"
                                                 : post_it->second.digest;
    report.destination_digests[rel] = observed;
    bool unchanged =
        (pre_it == pre.end() && post_it == post.end()) ||
        (pre_it != pre.end() && post_it != post.end() &&
         pre_it->second == post_it->second);
    bool promoted = post_it != post.end() && post_it->second == want;
    if (!unchanged && !promoted)
      report.violations.push_back(
          "destination '" + rel +
          "' is neither its prior state nor the authorized promotion");
  }

  for (const auto& [rel, e] : post) {
    if (!e.attrs.elevated()) continue;
    if (pre_elevated_digests.count(e.digest)) continue;
    if (auth.authorized_digests.count(e.digest)) continue;
    report.violations.push_back("unauthorized elevated content at '" + rel +
                                "' (digest " + e.digest + ")");
  }

  auto check_anchor = [&](const std::string& rel, const std::string& pre_d,
                          const std::string& expected_d, const char* what) {
    auto it = post.find(rel);
    if (it == post.end() || !it->second.attrs.elevated())
      return;  // adversary litter or removal: a denial of service, not an
               // escalation; the next run refuses non-root anchors
    const std::string& d = it->second.digest;
    if (d != pre_d && d != expected_d)
      report.violations.push_back(std::string(what) +
                                  " holds unauthorized content");
  };
  check_anchor(key_rel, auth.pre_key_digest, auth.expected_key_digest,
               "trusted key file");
  check_anchor(krl_rel, auth.pre_krl_digest, auth.expected_krl_digest,
               "krl file");
}

// ---------------------------------------------------------------------------
// Randomized campaigns

struct FuzzConfig {
  int min_entries = 1;
  int max_entries = 3;
  std::size_t max_payload = 2048;
  bool payload_swaps = true;
  bool anchor_swaps = true;
  std::optional<KeyMaterial> vendor_key;    // generated once if absent
  std::optional<KeyMaterial> attacker_key;  // likewise
};

struct FuzzTrial {
  std::uint64_t seed = 0;
  std::string family;
  std::string verdict;
  int engine_exit = 0;
};

struct FuzzSummary {
  int trials = 0;
  int held = 0;
  int violated = 0;
  int engine_accepts = 0;
  int engine_rejects = 0;
  std::vector<FuzzTrial> failures;

  nlohmann::json to_json() const {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& t : failures)
      f.push_back({{"seed", t.seed},
                   {"family", t.family},
                   {"verdict", t.verdict},
                   {"engine_exit", t.engine_exit}});
    return {{"trials", trials},
            {"held", held},
            {"violated", violated},
            {"engine_accepts", engine_accepts},
            {"engine_rejects", engine_rejects},
            {"failures", std::move(f)}};
  }
};

namespace detail {

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::size_t len = len_dist(rng);
  Bytes out(len);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

}  // namespace detail

// One randomized trial: a generated package in a fresh sandbox, one attack
// family drawn from the enabled set, one run, one verdict.
inline FuzzTrial fuzz_trial(const fs::path& work_dir, const FuzzConfig& fc,
                            const KeyMaterial& vendor_key,
                            const KeyMaterial& attacker_key,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  fs::remove_all(work_dir);
  fs::create_directories(work_dir);

  std::uniform_int_distribution<int> entry_count(fc.min_entries,
                                                 fc.max_entries);
  int n_entries = entry_count(rng);

  std::vector<std::string> families{"tampered_envelope"};
  if (fc.payload_swaps) {
    families.insert(families.end(),
                    {"payload_tight_loop", "payload_swap_validated",
                     "payload_swap_after_open", "candidate_symlink",
                     "candidate_unlink"});
  }
  if (fc.anchor_swaps) {
    families.insert(families.end(),
                    {"anchor_swap_setup", "anchor_swap_validate",
                     "forged_package_anchor_swap"});
  }
  std::string family = families[rng() % families.size()];

  bool forged = family == "forged_package_anchor_swap";

  ScenarioBuilder builder(work_dir);
  builder.key(vendor_key);
  if (forged) builder.sign_with(attacker_key);
  std::vector<std::string> candidates;
  for (int i = 0; i < n_entries; ++i) {
    std::string cand = "bin/component" + std::to_string(i);
    std::string dest = "/opt/app/lib/component" + std::to_string(i);
    TargetAttributes target;
    target.owner_id = 0;
    target.group_id = 0;
    target.mode = (rng() % 2) ? 04755 : 0755;
    if (rng() % 4 == 0) target.capabilities = {"cap_net_raw"};
    builder.entry(cand, dest, detail::random_bytes(rng, fc.max_payload),
                  target);
    candidates.push_back("pkg/" + cand);
  }
  Scenario sc = builder.build();

  const std::string& victim = candidates[rng() % candidates.size()];
  Bytes evil = detail::random_bytes(rng, fc.max_payload);
  if (evil.empty()) evil = to_bytes("evil");
  Bytes attacker_doc = canonical_key_bytes(attacker_key.public_doc());

  AttackScript script;
  if (family == "tampered_envelope") {
    // A static flip somewhere in the signed envelope; no race needed.
    fs::path env_path = sc.package_dir / kEnvelopeFileName;
    Bytes raw = vendor::read_file(env_path, Errc::malformed_envelope);
    raw[rng() % raw.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    vendor::write_file(env_path, raw);
  } else if (family == "payload_tight_loop") {
    script.actions.push_back({"tight_loop_replace", victim, evil, "", "", 1,
                              -1, 400});
  } else if (family == "payload_swap_validated") {
    script.actions.push_back(
        {"replace_path", victim, evil, "", "validate:done", 1, -1, 0});
  } else if (family == "payload_swap_after_open") {
    int k = static_cast<int>(rng() % candidates.size());
    script.actions.push_back({"replace_path", candidates[k], evil, "",
                              "validate:entry:" + std::to_string(k) +
                                  ":opened",
                              1, -1, 0});
  } else if (family == "candidate_symlink") {
    script.actions.push_back({"symlink_swap", victim, {},
                              "anchors/" + std::string(kPubkeyFileName),
                              "validate:begin", 1, -1, 0});
  } else if (family == "candidate_unlink") {
    script.actions.push_back(
        {"unlink", victim, {}, "", "validate:done", 1, -1, 0});
  } else if (family == "anchor_swap_setup" || forged) {
    script.actions.push_back({"replace_anchor_path",
                              "anchors/" + std::string(kPubkeyFileName),
                              attacker_doc, "", "setup:anchors_loaded", 1, -1,
                              0});
  } else {  // anchor_swap_validate
    script.actions.push_back({"replace_anchor_path",
                              "anchors/" + std::string(kPubkeyFileName),
                              attacker_doc, "", "validate:begin", 1, -1, 0});
  }

  AttackReport report = run_attack(sc, script, seed);
  FuzzTrial trial;
  trial.seed = seed;
  trial.family = family;
  trial.verdict = report.verdict;
  trial.engine_exit = report.engine_exit;
  return trial;
}

inline FuzzSummary fuzz_campaign(int n_trials, const FuzzConfig& fc,
                                 std::uint64_t base_seed,
                                 const fs::path& work_root) {
  FuzzSummary summary;
  KeyMaterial vendor_key =
      fc.vendor_key ? *fc.vendor_key : generate_key(kAlgEd25519);
  KeyMaterial attacker_key =
      fc.attacker_key ? *fc.attacker_key : generate_key(kAlgEd25519);
  fs::create_directories(work_root);
  fs::path trial_dir = work_root / "trial";
  for (int i = 0; i < n_trials; ++i) {
    FuzzTrial trial = fuzz_trial(trial_dir, fc, vendor_key, attacker_key,
                                 base_seed + static_cast<std::uint64_t>(i));
    ++summary.trials;
    if (trial.verdict == "HELD")
      ++summary.held;
    else {
      ++summary.violated;
      summary.failures.push_back(trial);
    }
    if (trial.engine_exit == 0)
      ++summary.engine_accepts;
    else
      ++summary.engine_rejects;
  }
  fs::remove_all(trial_dir);
  return summary;
}

}  // namespace promote::harness
