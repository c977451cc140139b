// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Host-side enabler: validates a signed patch package and promotes its
// components to privileged status. See README.md for the workflow.

#include <linux/close_range.h>
#include <unistd.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promotectl/engine.hpp"
#include "promotectl/trust.hpp"
#include "promotectl/vendor.hpp"

namespace {

using namespace promote;

// Hardening at process entry: drop inherited descriptors beyond the standard
// three and reduce the environment to a small allowlist.
void sanitize_process() {
#ifdef CLOSE_RANGE_UNSHARE
  ::close_range(3, ~0u, 0);
#endif
  static const char* keep[] = {"PATH", "TZ", "PROMOTECTL_BACKEND",
                               "PROMOTECTL_SANDBOX"};
  std::vector<std::pair<std::string, std::string>> saved;
  for (const char* name : keep)
    if (const char* v = std::getenv(name)) saved.emplace_back(name, v);
  if (::clearenv() != 0) return;
  for (const auto& [name, value] : saved)
    ::setenv(name.c_str(), value.c_str(), 1);
}

BackendKind backend_from(const std::string& flag) {
  std::string value = flag;
  if (value.empty()) {
    if (const char* env = std::getenv("PROMOTECTL_BACKEND")) value = env;
  }
  if (value.empty() || value == "sim") return BackendKind::sim;
  if (value == "real") return BackendKind::real;
  throw CLI::ValidationError("--backend", "must be 'real' or 'sim'");
}

fs::path sandbox_from(const std::string& flag) {
  if (!flag.empty()) return fs::absolute(flag);
  if (const char* env = std::getenv("PROMOTECTL_SANDBOX"))
    return fs::absolute(env);
  return {};
}

void print_human_summary(const RunReport& r) {
  std::cerr << "outcome: " << r.outcome;
  if (r.outcome == "aborted")
    std::cerr << " (stage " << r.stage << ", " << r.error << ": "
              << r.error_detail << ")";
  std::cerr << "\n";
  for (const auto& e : r.entries)
    std::cerr << "  " << e.destination << ": " << e.action << "\n";
  if (r.trust.krl_applied)
    std::cerr << "  krl advanced to sequence " << r.trust.krl_sequence << "\n";
  if (r.trust.rotation_applied)
    std::cerr << "  trusted key rotated to " << r.trust.key_fingerprint
              << "\n";
  if (r.self_update_performed) std::cerr << "  self-update handoff performed\n";
  std::cerr << "  total " << r.timings_ms.total << " ms\n";
}

int run_command(const std::string& package, const std::string& anchors,
                const std::string& backend_flag, const std::string& sandbox,
                const std::string& allow_prefix, bool json_only,
                bool self_updated, bool verify_only,
                const std::vector<std::string>& argv) {
  EngineConfig cfg;
  cfg.package_root = fs::absolute(package);
  cfg.anchors_dir = fs::absolute(anchors);
  cfg.backend = backend_from(backend_flag);
  cfg.sandbox_root = sandbox_from(sandbox);
  if (!allow_prefix.empty()) cfg.allow_prefix = allow_prefix;
  cfg.verify_only = verify_only;
  cfg.resume_marker = self_updated;
  cfg.exec_argv = argv;
  if (cfg.backend == BackendKind::sim && cfg.sandbox_root.empty()) {
    std::cerr << "error: the sim backend needs --sandbox or "
                 "PROMOTECTL_SANDBOX\n";
    return 2;
  }

  RunReport report = run_engine(cfg);
  std::cout << report.to_json().dump(2) << "\n";
  if (!json_only) print_human_summary(report);
  return report.exit_code;
}

int show_trust(const std::string& anchors, bool json_only) {
  fs::path dir = fs::absolute(anchors);
  try {
    Bytes key_raw = vendor::read_file(dir / kPubkeyFileName,
                                      Errc::missing_anchor, "trusted key");
    PublicKeyDoc key = parse_key_doc(to_string(key_raw), Errc::corrupt_anchor);
    KrlDocument krl;
    if (fs::exists(dir / kKrlFileName))
      krl = parse_krl(
          to_string(vendor::read_file(dir / kKrlFileName, Errc::missing_anchor)),
          /*lenient=*/true, Errc::corrupt_anchor);
    nlohmann::json j = {{"key_fingerprint", fingerprint_of(key).hex()},
                        {"algorithm_id", key.algorithm_id},
                        {"krl_sequence", krl.sequence_number},
                        {"revoked_count", krl.revoked.size()}};
    std::cout << j.dump(2) << "\n";
    if (!json_only)
      std::cerr << "trusted key " << fingerprint_of(key).hex() << " ("
                << key.algorithm_id << "), krl sequence "
                << krl.sequence_number << ", " << krl.revoked.size()
                << " revoked\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
}

}  // namespace

int main(int argc, char** argv) {
  sanitize_process();
  std::vector<std::string> original_argv(argv, argv + argc);

  CLI::App app{"promotectl: delegated promotion of privileged components"};
  app.require_subcommand(1);

  std::string package, anchors, backend, sandbox, allow_prefix;
  bool json_only = false;
  bool self_updated = false;

  auto add_common = [&](CLI::App* cmd, bool needs_package) {
    if (needs_package)
      cmd->add_option("--package", package, "patch package directory")
          ->required();
    cmd->add_option("--anchors", anchors, "trust anchor directory")
        ->required();
    cmd->add_option("--backend", backend, "real|sim (default from env, sim)");
    cmd->add_option("--sandbox", sandbox, "sandbox root for the sim backend");
    cmd->add_flag("--json", json_only, "machine output only");
  };

  CLI::App* promote_cmd =
      app.add_subcommand("promote", "validate and promote a package");
  add_common(promote_cmd, true);
  promote_cmd->add_option("--allow-prefix", allow_prefix,
                          "optional destination allowlist prefix");
  promote_cmd->add_flag("--self-updated", self_updated,
                        "internal: resume after self-update handoff");

  CLI::App* verify_cmd = app.add_subcommand(
      "verify-only", "validate a package without touching anything");
  add_common(verify_cmd, true);
  verify_cmd->add_option("--allow-prefix", allow_prefix,
                         "optional destination allowlist prefix");

  CLI::App* trust_cmd =
      app.add_subcommand("show-trust", "print the current trust state");
  trust_cmd->add_option("--anchors", anchors, "trust anchor directory")
      ->required();
  trust_cmd->add_flag("--json", json_only, "machine output only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(trust_cmd)) return show_trust(anchors, json_only);
    bool verify_only = app.got_subcommand(verify_cmd);
    return run_command(package, anchors, backend, sandbox, allow_prefix,
                       json_only, self_updated, verify_only, original_argv);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(Errc::contract_violation);
  }
}
