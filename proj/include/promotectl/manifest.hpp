// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "promotectl/bytes.hpp"
#include "promotectl/canonical_json.hpp"
#include "promotectl/errors.hpp"
#include "promotectl/keys.hpp"

namespace promote {

inline constexpr std::uint32_t kManifestFormatVersion = 1;
inline constexpr std::string_view kEnvelopeFileName = "manifest.sig.json";

// Ownership, permission bits and capability names a promoted file receives.
struct TargetAttributes {
  std::uint32_t owner_id = 0;
  std::uint32_t group_id = 0;
  std::uint32_t mode = 0;  // 12 bits: setuid/setgid/sticky + rwxrwxrwx
  std::vector<std::string> capabilities;

  bool operator==(const TargetAttributes&) const = default;

  // An entry must grant something the unprivileged account could not set up
  // itself: root ownership or group, a setuid/setgid/sticky bit, or at least
  // one capability.
  bool grants_privilege() const {
    return owner_id == 0 || group_id == 0 || (mode & 07000) != 0 ||
           !capabilities.empty();
  }
};

struct ManifestEntry {
  std::string candidate_path;    // relative to the package root
  std::string destination_path;  // absolute, normalized
  TargetAttributes target;
  std::string content_digest;  // 64 lowercase hex chars (SHA-256)
  bool is_enabler = false;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::uint32_t format_version = kManifestFormatVersion;
  std::vector<ManifestEntry> entries;
  std::optional<RotationRequest> rotation;
  std::optional<KrlDocument> krl_update;

  bool operator==(const Manifest&) const = default;

  std::optional<std::size_t> enabler_index() const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].is_enabler) return i;
    return std::nullopt;
  }
};

// Canonical payload bytes + signature + signer identity. The payload is not
// parsed until after the signature over it has been verified.
struct SignedEnvelope {
  Bytes payload;
  Bytes signature;
  Fingerprint signer_fingerprint;
  std::string algorithm_id;

  bool operator==(const SignedEnvelope&) const = default;
};

namespace detail {

// Candidate paths are package-relative: no leading '/', no empty or '.'
// segments, and '..' is rejected as traversal.
inline void check_candidate_path(const std::string& p) {
  if (p.empty() || p.front() == '/')
    fail(Errc::manifest_schema, "candidate_path must be relative: '" + p + "'");
  std::size_t start = 0;
  while (start <= p.size()) {
    std::size_t end = p.find('/', start);
    if (end == std::string::npos) end = p.size();
    std::string_view seg(p.data() + start, end - start);
    if (seg == "..")
      fail(Errc::path_traversal, "candidate_path escapes package: '" + p + "'");
    if (seg.empty() || seg == ".")
      fail(Errc::manifest_schema, "candidate_path not normalized: '" + p + "'");
    start = end + 1;
  }
}

// Destinations are absolute and normalized: '/a/b', no '//', no '.' or '..'
// segments, no trailing slash.
inline void check_destination_path(const std::string& p) {
  if (p.size() < 2 || p.front() != '/')
    fail(Errc::manifest_schema,
         "destination_path must be absolute: '" + p + "'");
  std::size_t start = 1;
  while (start <= p.size()) {
    std::size_t end = p.find('/', start);
    if (end == std::string::npos) end = p.size();
    std::string_view seg(p.data() + start, end - start);
    if (seg == "..")
      fail(Errc::path_traversal, "destination_path has '..': '" + p + "'");
    if (seg.empty() || seg == ".")
      fail(Errc::manifest_schema,
           "destination_path not normalized: '" + p + "'");
    start = end + 1;
  }
}

inline void check_capability_token(const std::string& cap) {
  if (cap.empty())
    fail(Errc::manifest_schema, "capability name must be non-empty");
  for (char c : cap)
    if (c <= 0x20 || c >= 0x7f)
      fail(Errc::manifest_schema, "capability name must be an ASCII token");
}

}  // namespace detail

inline void validate_entry(const ManifestEntry& e) {
  detail::check_candidate_path(e.candidate_path);
  detail::check_destination_path(e.destination_path);
  if (!is_hex_digest64(e.content_digest))
    fail(Errc::manifest_schema,
         "content_digest must be 64 lowercase hex chars");
  if (e.target.mode > 07777)
    fail(Errc::manifest_schema, "mode does not fit in 12 bits");
  for (const auto& cap : e.target.capabilities)
    detail::check_capability_token(cap);
  if (!e.target.grants_privilege())
    fail(Errc::no_privilege_grant,
         "entry for '" + e.destination_path + "' grants no privilege");
}

inline void validate_manifest(const Manifest& m) {
  if (m.format_version != kManifestFormatVersion)
    fail(Errc::manifest_schema, "unsupported format_version");
  std::set<std::string> destinations;
  bool enabler_seen = false;
  for (const auto& e : m.entries) {
    validate_entry(e);
    if (!destinations.insert(e.destination_path).second)
      fail(Errc::duplicate_destination,
           "duplicate destination '" + e.destination_path + "'");
    if (e.is_enabler) {
      if (enabler_seen)
        fail(Errc::multiple_enabler, "more than one enabler entry");
      enabler_seen = true;
    }
  }
  if (m.rotation) {
    if (!algorithm_supported(m.rotation->new_key.algorithm_id))
      fail(Errc::unsupported_algorithm, "rotation: unsupported algorithm");
    if (m.rotation->new_key.key_bytes.empty())
      fail(Errc::manifest_schema, "rotation: empty key");
    if (m.rotation->authorization.empty())
      fail(Errc::manifest_schema, "rotation: empty authorization");
  }
  if (m.krl_update) {
    // Canonical form inside a signed payload: sorted and unique.
    const auto& r = m.krl_update->revoked;
    if (!std::is_sorted(r.begin(), r.end()) ||
        std::adjacent_find(r.begin(), r.end()) != r.end())
      fail(Errc::manifest_schema, "krl_update: fingerprints not canonical");
  }
}

namespace detail {

inline nlohmann::json entry_to_json(const ManifestEntry& e) {
  nlohmann::json caps = nlohmann::json::array();
  for (const auto& c : e.target.capabilities) caps.push_back(c);
  return {{"candidate_path", e.candidate_path},
          {"content_digest", e.content_digest},
          {"destination_path", e.destination_path},
          {"is_enabler", e.is_enabler},
          {"target",
           {{"capabilities", std::move(caps)},
            {"group_id", e.target.group_id},
            {"mode", e.target.mode},
            {"owner_id", e.target.owner_id}}}};
}

inline nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) entries.push_back(entry_to_json(e));
  nlohmann::json j = {{"entries", std::move(entries)},
                      {"format_version", m.format_version}};
  if (m.krl_update) j["krl_update"] = krl_to_json(*m.krl_update);
  if (m.rotation)
    j["rotation"] = {
        {"authorization", base64_encode(m.rotation->authorization)},
        {"new_key", key_doc_to_json(m.rotation->new_key)}};
  return j;
}

inline std::uint32_t get_u32(const nlohmann::json& j, const char* key,
                             std::uint32_t max) {
  if (!j.contains(key) || !j[key].is_number_unsigned())
    fail(Errc::manifest_schema,
         std::string("field '") + key + "' must be a non-negative integer");
  std::uint64_t v = j[key].get<std::uint64_t>();
  if (v > max)
    fail(Errc::manifest_schema, std::string("field '") + key + "' too large");
  return static_cast<std::uint32_t>(v);
}

inline std::string get_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    fail(Errc::manifest_schema,
         std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

inline void require_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> keys,
                         const char* what) {
  if (!j.is_object() || j.size() != keys.size())
    fail(Errc::manifest_schema, std::string(what) + ": unexpected fields");
  for (const char* k : keys)
    if (!j.contains(k))
      fail(Errc::manifest_schema,
           std::string(what) + ": missing field '" + k + "'");
}

inline ManifestEntry entry_from_json(const nlohmann::json& j) {
  require_keys(j,
               {"candidate_path", "content_digest", "destination_path",
                "is_enabler", "target"},
               "entry");
  ManifestEntry e;
  e.candidate_path = get_string(j, "candidate_path");
  e.content_digest = get_string(j, "content_digest");
  e.destination_path = get_string(j, "destination_path");
  if (!j["is_enabler"].is_boolean())
    fail(Errc::manifest_schema, "is_enabler must be a boolean");
  e.is_enabler = j["is_enabler"].get<bool>();
  const auto& t = j["target"];
  require_keys(t, {"capabilities", "group_id", "mode", "owner_id"}, "target");
  e.target.owner_id = get_u32(t, "owner_id", 0xffffffffu);
  e.target.group_id = get_u32(t, "group_id", 0xffffffffu);
  e.target.mode = get_u32(t, "mode", 07777);
  if (!t["capabilities"].is_array())
    fail(Errc::manifest_schema, "capabilities must be an array");
  for (const auto& c : t["capabilities"]) {
    if (!c.is_string())
      fail(Errc::manifest_schema, "capability must be a string");
    e.target.capabilities.push_back(c.get<std::string>());
  }
  return e;
}

}  // namespace detail

// Deterministic, injective encoding of a valid manifest.
inline Bytes canonicalize(const Manifest& m) {
  validate_manifest(m);
  return to_bytes(canonical_dump(detail::manifest_to_json(m)));
}

// Parses payload bytes that have already passed signature verification.
// Non-canonical input is treated as forgery: the parsed result must re-encode
// to exactly the input bytes.
inline Manifest parse_manifest(const Bytes& payload) {
  nlohmann::json j =
      parse_json(to_string(payload), Errc::manifest_schema, "manifest");
  if (!j.is_object() || !j.contains("entries") ||
      !j.contains("format_version"))
    fail(Errc::manifest_schema, "manifest: missing required fields");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "entries" && key != "format_version" && key != "rotation" &&
        key != "krl_update")
      fail(Errc::manifest_schema, "manifest: unknown field '" + key + "'");
  }
  Manifest m;
  m.format_version = detail::get_u32(j, "format_version", 0xffffffffu);
  if (!j["entries"].is_array())
    fail(Errc::manifest_schema, "manifest: entries must be an array");
  for (const auto& e : j["entries"])
    m.entries.push_back(detail::entry_from_json(e));
  if (j.contains("rotation")) {
    const auto& r = j["rotation"];
    detail::require_keys(r, {"authorization", "new_key"}, "rotation");
    RotationRequest req;
    auto auth = base64_decode(detail::get_string(r, "authorization"));
    if (!auth) fail(Errc::manifest_schema, "rotation: bad authorization");
    req.authorization = std::move(*auth);
    req.new_key =
        parse_key_doc(canonical_dump(r["new_key"]), Errc::manifest_schema);
    m.rotation = std::move(req);
  }
  if (j.contains("krl_update"))
    m.krl_update = parse_krl(canonical_dump(j["krl_update"]),
                             /*lenient=*/false, Errc::manifest_schema);
  validate_manifest(m);
  if (canonicalize(m) != payload)
    fail(Errc::non_canonical, "manifest payload is not in canonical form");
  return m;
}

// Envelope container: the on-disk manifest.sig.json format.
inline Bytes encode_envelope(const SignedEnvelope& env) {
  nlohmann::json j = {{"algorithm_id", env.algorithm_id},
                      {"payload", base64_encode(env.payload)},
                      {"signature", base64_encode(env.signature)},
                      {"signer_fingerprint", env.signer_fingerprint.hex()}};
  return to_bytes(canonical_dump(j));
}

// Structural parse only; the payload is left opaque so the caller can check
// revocation and the signature before trusting any of it.
inline SignedEnvelope parse_envelope(const Bytes& raw) {
  nlohmann::json j =
      parse_json(to_string(raw), Errc::malformed_envelope, "envelope");
  if (!j.is_object() || j.size() != 4)
    fail(Errc::malformed_envelope, "envelope: unexpected fields");
  for (const char* k :
       {"algorithm_id", "payload", "signature", "signer_fingerprint"})
    if (!j.contains(k) || !j[k].is_string())
      fail(Errc::malformed_envelope,
           std::string("envelope: missing or bad field '") + k + "'");
  SignedEnvelope env;
  env.algorithm_id = j["algorithm_id"].get<std::string>();
  if (!algorithm_supported(env.algorithm_id))
    fail(Errc::unsupported_algorithm,
         "envelope: unsupported algorithm '" + env.algorithm_id + "'");
  auto payload = base64_decode(j["payload"].get<std::string>());
  auto signature = base64_decode(j["signature"].get<std::string>());
  auto fp = Fingerprint::from_hex(j["signer_fingerprint"].get<std::string>());
  if (!payload || !signature || signature->empty() || !fp)
    fail(Errc::malformed_envelope, "envelope: bad field encoding");
  env.payload = std::move(*payload);
  env.signature = std::move(*signature);
  env.signer_fingerprint = *fp;
  return env;
}

}  // namespace promote
