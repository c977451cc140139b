// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdio>
#include <string>

#include "promotectl/errors.hpp"

namespace promote {

// Canonical JSON: UTF-8, object keys sorted lexicographically (byte order),
// no insignificant whitespace, integers in base 10, strings with the minimal
// escape set below. Each logical document has exactly one encoding, which is
// what makes signed payloads byte-comparable.
//
// Parsing is delegated to nlohmann::json; emission is deliberately a separate
// hand-written walker so that accepted input can be checked byte-for-byte
// against a re-emission of its parsed form.

namespace detail {

inline void canonical_escape(const std::string& s, std::string& out) {
  out.push_back('"');
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
}

inline void canonical_write(const nlohmann::json& j, std::string& out) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      out.push_back('{');
      bool first = true;
      // nlohmann::json objects iterate in sorted key order already.
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        canonical_escape(it.key(), out);
        out.push_back(':');
        canonical_write(it.value(), out);
      }
      out.push_back('}');
      break;
    }
    case nlohmann::json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& v : j) {
        if (!first) out.push_back(',');
        first = false;
        canonical_write(v, out);
      }
      out.push_back(']');
      break;
    }
    case nlohmann::json::value_t::string:
      canonical_escape(j.get_ref<const std::string&>(), out);
      break;
    case nlohmann::json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case nlohmann::json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case nlohmann::json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    default:
      // Floats, nulls and binary values have no canonical form here and
      // never appear in the documents this project signs.
      fail(Errc::encoding_error, "value has no canonical encoding");
  }
}

}  // namespace detail

inline std::string canonical_dump(const nlohmann::json& j) {
  std::string out;
  detail::canonical_write(j, out);
  return out;
}

// Parse helper used by the strict document parsers. Wraps nlohmann's throw
// into a domain error.
inline nlohmann::json parse_json(std::string_view text, Errc on_error,
                                 const char* what) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(on_error, std::string(what) + ": invalid JSON");
  return j;
}

}  // namespace promote
