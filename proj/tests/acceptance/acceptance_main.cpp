// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite runner: prints one PASS/FAIL line per criterion.

#define CATCH_CONFIG_MAIN
#include <catch2/catch.hpp>

#include <cstdio>

namespace {

struct CriterionReporter : Catch::TestEventListenerBase {
  using TestEventListenerBase::TestEventListenerBase;

  void testCaseEnded(const Catch::TestCaseStats& stats) override {
    const bool ok = stats.totals.assertions.allOk();
    std::printf("[acceptance] %-60s %s\n",
                stats.testInfo.name.c_str(), ok ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
};

}  // namespace

CATCH_REGISTER_LISTENER(CriterionReporter)
