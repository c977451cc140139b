// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "promotectl/crypto.hpp"
#include "promotectl/manifest.hpp"
#include "promotectl/sha256.hpp"

namespace promote::vendor {

namespace fs = std::filesystem;

inline Bytes read_file(const fs::path& p, Errc on_error,
                       const char* what = "file") {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(on_error, std::string(what) + " '" + p.string() + "' missing");
  Bytes out{std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
  return out;
}

inline void write_file(const fs::path& p, const Bytes& content,
                       mode_t mode = 0644) {
  int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, mode);
  if (fd < 0)
    fail(Errc::contract_violation, "cannot write '" + p.string() + "'");
  std::size_t off = 0;
  while (off < content.size()) {
    ssize_t n = ::write(fd, content.data() + off, content.size() - off);
    if (n < 0) {
      ::close(fd);
      fail(Errc::contract_violation, "write to '" + p.string() + "' failed");
    }
    off += static_cast<std::size_t>(n);
  }
  ::fchmod(fd, mode);  // O_CREAT honors umask; make the mode explicit
  ::close(fd);
}

// Private key file: JSON with the PKCS#8 private key and its public half,
// written owner-read/write only.
inline void write_private_key(const fs::path& p, const KeyMaterial& key) {
  nlohmann::json j = {{"algorithm_id", key.algorithm_id},
                      {"private_key", base64_encode(key.private_der)},
                      {"public_key", base64_encode(key.public_der)}};
  write_file(p, to_bytes(canonical_dump(j)), 0600);
}

inline KeyMaterial load_private_key(const fs::path& p) {
  Bytes raw = read_file(p, Errc::contract_violation, "private key");
  nlohmann::json j =
      parse_json(to_string(raw), Errc::contract_violation, "private key");
  if (!j.is_object() || !j.contains("algorithm_id") ||
      !j.contains("private_key") || !j.contains("public_key"))
    fail(Errc::contract_violation, "private key file: bad schema");
  KeyMaterial key;
  key.algorithm_id = j["algorithm_id"].get<std::string>();
  if (!algorithm_supported(key.algorithm_id))
    fail(Errc::unsupported_algorithm, "private key: unsupported algorithm");
  auto priv = base64_decode(j["private_key"].get<std::string>());
  auto pub = base64_decode(j["public_key"].get<std::string>());
  if (!priv || !pub)
    fail(Errc::contract_violation, "private key file: bad encoding");
  key.private_der = std::move(*priv);
  key.public_der = std::move(*pub);
  return key;
}

inline void write_key_doc(const fs::path& p, const PublicKeyDoc& doc) {
  write_file(p, canonical_key_bytes(doc));
}

inline PublicKeyDoc load_key_doc(const fs::path& p) {
  Bytes raw = read_file(p, Errc::contract_violation, "public key doc");
  return parse_key_doc(to_string(raw), Errc::contract_violation);
}

// Manifest source: what a vendor author writes by hand. Digests are never
// taken from the author; they are recomputed from the package contents at
// signing time. Mode accepts an octal string ("4755") or a raw integer.
struct SourceEntry {
  std::string candidate_path;
  std::string destination_path;
  TargetAttributes target;
  bool is_enabler = false;
};

struct ManifestSource {
  std::vector<SourceEntry> entries;
};

inline std::uint32_t parse_mode_field(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint32_t>();
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    if (s.empty()) fail(Errc::manifest_schema, "empty mode string");
    std::uint32_t mode = 0;
    for (char c : s) {
      if (c < '0' || c > '7')
        fail(Errc::manifest_schema, "mode string must be octal: '" + s + "'");
      mode = mode * 8 + static_cast<std::uint32_t>(c - '0');
    }
    return mode;
  }
  fail(Errc::manifest_schema, "mode must be an octal string or integer");
}

inline ManifestSource parse_manifest_source(const Bytes& raw) {
  nlohmann::json j =
      parse_json(to_string(raw), Errc::manifest_schema, "manifest source");
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
    fail(Errc::manifest_schema, "manifest source: entries array required");
  ManifestSource src;
  for (const auto& e : j["entries"]) {
    SourceEntry se;
    se.candidate_path = e.at("candidate_path").get<std::string>();
    se.destination_path = e.at("destination_path").get<std::string>();
    se.target.owner_id = e.value("owner_id", 0u);
    se.target.group_id = e.value("group_id", 0u);
    se.target.mode = e.contains("mode") ? parse_mode_field(e["mode"]) : 0u;
    if (e.contains("capabilities"))
      for (const auto& c : e["capabilities"])
        se.target.capabilities.push_back(c.get<std::string>());
    se.is_enabler = e.value("is_enabler", false);
    src.entries.push_back(std::move(se));
  }
  return src;
}

// Builds the signable manifest: resolves each candidate inside the package,
// hashes it, and carries over any rotation or KRL update documents.
inline Manifest build_manifest(const fs::path& package_dir,
                               const ManifestSource& src,
                               std::optional<RotationRequest> rotation,
                               std::optional<KrlDocument> krl_update) {
  Manifest m;
  for (const auto& se : src.entries) {
    ManifestEntry e;
    e.candidate_path = se.candidate_path;
    e.destination_path = se.destination_path;
    e.target = se.target;
    e.is_enabler = se.is_enabler;
    fs::path candidate = package_dir / se.candidate_path;
    Bytes content =
        read_file(candidate, Errc::candidate_invalid, "candidate");
    e.content_digest = digest_hex(sha256(content));
    m.entries.push_back(std::move(e));
  }
  m.rotation = std::move(rotation);
  m.krl_update = std::move(krl_update);
  validate_manifest(m);
  return m;
}

inline SignedEnvelope sign_manifest(const Manifest& m,
                                    const KeyMaterial& key) {
  SignedEnvelope env;
  env.payload = canonicalize(m);
  env.signature = sign_message(key, env.payload);
  env.signer_fingerprint = fingerprint_of(key.public_doc());
  env.algorithm_id = key.algorithm_id;
  return env;
}

inline void write_envelope(const fs::path& p, const SignedEnvelope& env) {
  write_file(p, encode_envelope(env));
}

inline RotationRequest make_rotation(const KeyMaterial& current_key,
                                     const PublicKeyDoc& new_key) {
  if (!algorithm_supported(new_key.algorithm_id) ||
      !public_key_parses(new_key))
    fail(Errc::rotation_rejected, "rotation target key is unusable");
  RotationRequest req;
  req.new_key = new_key;
  req.authorization = sign_message(current_key, rotation_message(new_key));
  return req;
}

inline KrlDocument make_krl(std::uint64_t sequence_number,
                            const std::vector<std::string>& fingerprints) {
  KrlDocument krl;
  krl.sequence_number = sequence_number;
  for (const auto& hex : fingerprints) {
    auto fp = Fingerprint::from_hex(hex);
    if (!fp)
      fail(Errc::manifest_schema, "malformed fingerprint '" + hex + "'");
    krl.revoked.push_back(*fp);
  }
  krl.normalize();
  return krl;
}

// Offline self-check of an assembled package against a given public key:
// verifies the envelope and re-hashes every candidate. Vendor-side only;
// the host-side engine never trusts this.
struct PackageCheck {
  bool ok = true;
  std::vector<std::string> problems;

  void problem(std::string p) {
    ok = false;
    problems.push_back(std::move(p));
  }
};

inline PackageCheck verify_package(const fs::path& package_dir,
                                   const PublicKeyDoc& pub,
                                   const KrlDocument* krl = nullptr) {
  PackageCheck check;
  Manifest m;
  try {
    Bytes raw = read_file(package_dir / kEnvelopeFileName,
                          Errc::malformed_envelope, "envelope");
    SignedEnvelope env = parse_envelope(raw);
    if (krl && krl->contains(env.signer_fingerprint))
      check.problem("signing key is revoked");
    if (env.signer_fingerprint != fingerprint_of(pub))
      check.problem("envelope is not signed by the given key");
    else if (!verify_signature(env.algorithm_id, pub.key_bytes, env.payload,
                               env.signature))
      check.problem("signature does not verify");
    m = parse_manifest(env.payload);
  } catch (const Error& e) {
    check.problem(e.what());
    return check;
  }
  for (const auto& e : m.entries) {
    try {
      Bytes content = read_file(package_dir / e.candidate_path,
                                Errc::candidate_invalid, "candidate");
      if (digest_hex(sha256(content)) != e.content_digest)
        check.problem("digest mismatch for '" + e.candidate_path + "'");
    } catch (const Error& err) {
      check.problem(err.what());
    }
  }
  return check;
}

}  // namespace promote::vendor
