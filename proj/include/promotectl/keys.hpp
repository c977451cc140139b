// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promotectl/bytes.hpp"
#include "promotectl/canonical_json.hpp"
#include "promotectl/errors.hpp"
#include "promotectl/sha256.hpp"

namespace promote {

inline constexpr std::string_view kAlgEd25519 = "ed25519";
inline constexpr std::string_view kAlgRsa2048 = "rsa-2048-sha256";

inline bool algorithm_supported(std::string_view id) {
  return id == kAlgEd25519 || id == kAlgRsa2048;
}

// SHA-256 of the canonical public key document.
struct Fingerprint {
  Digest digest{};

  bool operator==(const Fingerprint&) const = default;
  auto operator<=>(const Fingerprint&) const = default;

  std::string hex() const { return digest_hex(digest); }

  static std::optional<Fingerprint> from_hex(std::string_view s) {
    auto d = digest_from_hex(s);
    if (!d) return std::nullopt;
    return Fingerprint{*d};
  }
};

// A public key plus the algorithm it belongs to. key_bytes is the DER
// SubjectPublicKeyInfo encoding, which is unique for a given key.
struct PublicKeyDoc {
  std::string algorithm_id;
  Bytes key_bytes;

  bool operator==(const PublicKeyDoc&) const = default;
};

inline nlohmann::json key_doc_to_json(const PublicKeyDoc& doc) {
  return {{"algorithm_id", doc.algorithm_id},
          {"key_bytes", base64_encode(doc.key_bytes)}};
}

inline Bytes canonical_key_bytes(const PublicKeyDoc& doc) {
  return to_bytes(canonical_dump(key_doc_to_json(doc)));
}

inline Fingerprint fingerprint_of(const PublicKeyDoc& doc) {
  return Fingerprint{sha256(canonical_key_bytes(doc))};
}

// Strict parse of a pubkey.doc style JSON object.
inline PublicKeyDoc parse_key_doc(std::string_view text, Errc on_error) {
  nlohmann::json j = parse_json(text, on_error, "key document");
  if (!j.is_object() || j.size() != 2 || !j.contains("algorithm_id") ||
      !j.contains("key_bytes") || !j["algorithm_id"].is_string() ||
      !j["key_bytes"].is_string())
    fail(on_error, "key document: bad schema");
  PublicKeyDoc doc;
  doc.algorithm_id = j["algorithm_id"].get<std::string>();
  if (!algorithm_supported(doc.algorithm_id))
    fail(Errc::unsupported_algorithm,
         "key document: unsupported algorithm '" + doc.algorithm_id + "'");
  auto raw = base64_decode(j["key_bytes"].get<std::string>());
  if (!raw || raw->empty()) fail(on_error, "key document: bad key_bytes");
  doc.key_bytes = std::move(*raw);
  return doc;
}

// Key Revocation List: a monotone set of revoked key fingerprints plus a
// sequence number that must strictly increase across applied updates.
struct KrlDocument {
  std::uint64_t sequence_number = 0;
  std::vector<Fingerprint> revoked;  // sorted, unique

  bool operator==(const KrlDocument&) const = default;

  bool contains(const Fingerprint& fp) const {
    return std::binary_search(revoked.begin(), revoked.end(), fp);
  }

  void normalize() {
    std::sort(revoked.begin(), revoked.end());
    revoked.erase(std::unique(revoked.begin(), revoked.end()), revoked.end());
  }
};

inline nlohmann::json krl_to_json(const KrlDocument& krl) {
  nlohmann::json revoked = nlohmann::json::array();
  for (const auto& fp : krl.revoked) revoked.push_back(fp.hex());
  return {{"revoked", std::move(revoked)},
          {"sequence_number", krl.sequence_number}};
}

inline Bytes encode_krl(const KrlDocument& krl) {
  return to_bytes(canonical_dump(krl_to_json(krl)));
}

// lenient=true tolerates duplicate or unsorted fingerprints (trusted anchor
// file on disk); strict mode demands the canonical sorted unique form used
// inside signed manifests.
inline KrlDocument parse_krl(std::string_view text, bool lenient,
                             Errc on_error) {
  nlohmann::json j = parse_json(text, on_error, "krl");
  if (!j.is_object() || j.size() != 2 || !j.contains("sequence_number") ||
      !j.contains("revoked") || !j["sequence_number"].is_number_unsigned() ||
      !j["revoked"].is_array())
    fail(on_error, "krl: bad schema");
  KrlDocument krl;
  krl.sequence_number = j["sequence_number"].get<std::uint64_t>();
  for (const auto& item : j["revoked"]) {
    if (!item.is_string()) fail(on_error, "krl: fingerprint must be a string");
    auto fp = Fingerprint::from_hex(item.get<std::string>());
    if (!fp) fail(on_error, "krl: malformed fingerprint");
    krl.revoked.push_back(*fp);
  }
  if (lenient) {
    krl.normalize();
  } else {
    if (!std::is_sorted(krl.revoked.begin(), krl.revoked.end()) ||
        std::adjacent_find(krl.revoked.begin(), krl.revoked.end()) !=
            krl.revoked.end())
      fail(on_error, "krl: fingerprints must be sorted and unique");
  }
  return krl;
}

// Domain separation prefix for rotation authorizations, so a rotation
// signature can never double as a manifest signature or vice versa.
inline constexpr std::string_view kRotationContext = "key-rotation:v1";

struct RotationRequest {
  PublicKeyDoc new_key;
  Bytes authorization;  // signature by the currently trusted key

  bool operator==(const RotationRequest&) const = default;
};

inline Bytes rotation_message(const PublicKeyDoc& new_key) {
  Bytes msg = to_bytes(kRotationContext);
  Bytes doc = canonical_key_bytes(new_key);
  msg.insert(msg.end(), doc.begin(), doc.end());
  return msg;
}

}  // namespace promote
