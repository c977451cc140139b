// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Adversarial race harness CLI. `run` replays one scripted attack against a
// prepared sandbox; `fuzz` drives randomized campaigns; `make-scenario`
// provisions a demo sandbox to attack.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "promotectl/harness.hpp"

namespace {

using namespace promote;

harness::Scenario scenario_from_dirs(const fs::path& sandbox) {
  harness::Scenario sc;
  sc.root = fs::absolute(sandbox);
  sc.anchors_dir = sc.root / "anchors";
  sc.package_dir = sc.root / "pkg";
  sc.config.package_root = sc.package_dir;
  sc.config.anchors_dir = sc.anchors_dir;
  sc.config.backend = BackendKind::sim;
  sc.config.sandbox_root = sc.root;
  return sc;
}

int cmd_run(const std::string& sandbox, const std::string& script_path,
            std::uint64_t seed) {
  harness::Scenario sc = scenario_from_dirs(sandbox);
  Bytes raw = vendor::read_file(fs::absolute(script_path),
                                Errc::contract_violation, "script");
  harness::AttackScript script = harness::script_from_json(
      parse_json(to_string(raw), Errc::contract_violation, "script"));
  harness::AttackReport report = harness::run_attack(sc, script, seed);
  std::cout << report.to_json().dump(2) << "\n";
  return report.held() ? 0 : 1;
}

int cmd_fuzz(int trials, std::uint64_t seed, const std::string& work,
             bool no_payload, bool no_anchor) {
  harness::FuzzConfig fc;
  fc.payload_swaps = !no_payload;
  fc.anchor_swaps = !no_anchor;
  harness::FuzzSummary summary =
      harness::fuzz_campaign(trials, fc, seed, fs::absolute(work));
  std::cout << summary.to_json().dump(2) << "\n";
  return summary.violated == 0 ? 0 : 1;
}

int cmd_make_scenario(const std::string& dir, int entries) {
  fs::path root = fs::absolute(dir);
  fs::create_directories(root);
  harness::ScenarioBuilder builder(root);
  for (int i = 0; i < entries; ++i) {
    TargetAttributes target;
    target.owner_id = 0;
    target.group_id = 0;
    target.mode = i == 0 ? 04755 : 0755;
    builder.entry("bin/helper" + std::to_string(i),
                  "/opt/app/bin/helper" + std::to_string(i),
                  to_bytes("helper payload " + std::to_string(i) + "\n"),
                  target);
  }
  harness::Scenario sc = builder.build();

  harness::AttackScript script;
  script.actions.push_back({"replace_path", "pkg/bin/helper0",
                            to_bytes("attacker payload\n"), "",
                            "validate:done", 1, -1, 0});
  vendor::write_file(root / "attack.json",
                     to_bytes(harness::script_to_json(script).dump(2)));

  std::cout << "sandbox:  " << sc.root.string() << "\n"
            << "package:  " << sc.package_dir.string() << "\n"
            << "anchors:  " << sc.anchors_dir.string() << "\n"
            << "script:   " << (root / "attack.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harness: adversarial race testing for the promotion engine"};
  app.require_subcommand(1);

  std::string sandbox, script, work = "/tmp/promote-fuzz", dir;
  std::uint64_t seed = 1;
  int trials = 100, entries = 2;
  bool no_payload = false, no_anchor = false;

  CLI::App* run = app.add_subcommand("run", "replay one attack script");
  run->add_option("--sandbox", sandbox, "prepared sandbox root")->required();
  run->add_option("--script", script, "attack script JSON")->required();
  run->add_option("--seed", seed, "adversary timing seed");

  CLI::App* fuzz = app.add_subcommand("fuzz", "randomized attack campaign");
  fuzz->add_option("--trials", trials, "number of trials (default 100)");
  fuzz->add_option("--seed", seed, "base seed");
  fuzz->add_option("--work", work, "working directory");
  fuzz->add_flag("--no-payload-swaps", no_payload, "disable payload attacks");
  fuzz->add_flag("--no-anchor-swaps", no_anchor, "disable anchor attacks");

  CLI::App* make =
      app.add_subcommand("make-scenario", "provision a demo sandbox");
  make->add_option("--dir", dir, "sandbox directory to create")->required();
  make->add_option("--entries", entries, "number of components");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(run)) return cmd_run(sandbox, script, seed);
    if (app.got_subcommand(fuzz))
      return cmd_fuzz(trials, seed, work, no_payload, no_anchor);
    if (app.got_subcommand(make)) return cmd_make_scenario(dir, entries);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
