// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "promotectl/canonical_json.hpp"
#include "support/oracle_json.hpp"

using namespace promote;
using testsupport::OVal;

TEST_CASE("canonical dump sorts keys and strips whitespace", "[canonical]") {
  nlohmann::json j = nlohmann::json::parse(
      R"({ "zeta": 1, "alpha": { "b": [1, 2], "a": true }, "mid": "x" })");
  CHECK(canonical_dump(j) ==
        R"({"alpha":{"a":true,"b":[1,2]},"mid":"x","zeta":1})");
}

TEST_CASE("canonical dump agrees with the independent serializer",
          "[canonical]") {
  OVal oracle = OVal::obj({
      {"zeta", OVal::u(42)},
      {"alpha", OVal::obj({{"list", OVal::arr({OVal::s("x"), OVal::u(0)})},
                           {"flag", OVal::b(false)}})},
      {"text", OVal::s("path/with \"quotes\" and \\ and \ttab")},
  });
  nlohmann::json j = {
      {"zeta", 42},
      {"alpha",
       {{"list", nlohmann::json::array({"x", 0})}, {"flag", false}}},
      {"text", "path/with \"quotes\" and \\ and \ttab"},
  };
  CHECK(canonical_dump(j) == testsupport::oracle_dump(oracle));
}

TEST_CASE("control characters escape to lowercase \\u00xx", "[canonical]") {
  nlohmann::json j = {{"k", std::string("a\x01" "b\x1f") + "\n"}};
  CHECK(canonical_dump(j) == "{\"k\":\"a\\u0001b\\u001f\\n\"}");
}

TEST_CASE("utf-8 passes through unescaped", "[canonical]") {
  nlohmann::json j = {{"k", "Grüße/安全"}};
  CHECK(canonical_dump(j) == "{\"k\":\"Grüße/安全\"}");
}

TEST_CASE("values without a canonical form are rejected", "[canonical]") {
  CHECK_THROWS_AS(canonical_dump(nlohmann::json(1.5)), Error);
  CHECK_THROWS_AS(canonical_dump(nlohmann::json(nullptr)), Error);
}

TEST_CASE("negative integers keep base-10 form", "[canonical]") {
  nlohmann::json j = nlohmann::json::parse("{\"n\":-12}");
  CHECK(canonical_dump(j) == "{\"n\":-12}");
}
