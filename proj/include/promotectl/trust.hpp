// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "promotectl/backend.hpp"
#include "promotectl/crypto.hpp"
#include "promotectl/handles.hpp"
#include "promotectl/keys.hpp"
#include "promotectl/manifest.hpp"

namespace promote {

inline constexpr std::string_view kPubkeyFileName = "pubkey.doc";
inline constexpr std::string_view kKrlFileName = "krl.json";

struct AnchorProof {
  std::uint32_t owner = 0;
  std::uint32_t group = 0;
  std::uint32_t mode = 0;
};

// The in-memory trust state. Loaded exactly once per run through handles
// opened while still privileged; never re-read from paths afterwards, so
// whatever happens to the anchor pathnames later is irrelevant.
struct TrustAnchors {
  PublicKeyDoc key;
  Fingerprint key_fp;
  KrlDocument krl;
  AnchorProof key_proof;
  std::optional<AnchorProof> krl_proof;
};

enum class RevocationStatus { accept, revoked };

namespace detail {

inline AnchorProof check_anchor_attrs(Backend& backend, const ObjectHandle& h,
                                      std::string_view what) {
  const FileAttrs& a = h.attrs_at_open();
  if (a.owner != 0)
    fail(Errc::untrusted_anchor,
         std::string(what) + " is not owned by the superuser");
  if ((a.mode & 0022) != 0)
    fail(Errc::untrusted_anchor,
         std::string(what) + " is writable by group or others");
  (void)backend;
  return AnchorProof{a.owner, a.group, a.mode};
}

}  // namespace detail

// Reads the trusted public key and KRL exclusively through the supplied
// handles. A missing KRL handle stands for the documented default: an empty
// list at sequence zero.
inline TrustAnchors load_anchors(Backend& backend, const ObjectHandle& key_h,
                                 const ObjectHandle* krl_h) {
  TrustAnchors anchors;
  anchors.key_proof = detail::check_anchor_attrs(backend, key_h, "public key");
  Bytes key_bytes = read_all(key_h, kAnchorSizeLimit);
  anchors.key = parse_key_doc(to_string(key_bytes), Errc::corrupt_anchor);
  if (!public_key_parses(anchors.key))
    fail(Errc::corrupt_anchor, "trusted key does not parse");
  anchors.key_fp = fingerprint_of(anchors.key);
  if (krl_h) {
    anchors.krl_proof = detail::check_anchor_attrs(backend, *krl_h, "krl");
    Bytes krl_bytes = read_all(*krl_h, kAnchorSizeLimit);
    anchors.krl = parse_krl(to_string(krl_bytes), /*lenient=*/true,
                            Errc::corrupt_anchor);
  }
  return anchors;
}

inline RevocationStatus check_revocation(const Fingerprint& fp,
                                         const TrustAnchors& anchors) {
  return anchors.krl.contains(fp) ? RevocationStatus::revoked
                                  : RevocationStatus::accept;
}

// Revocation, signer identity, signature, then payload parse — in that
// order. Non-canonical payloads are rejected by parse_manifest.
inline Manifest verify_envelope(const SignedEnvelope& env,
                                const TrustAnchors& anchors) {
  if (check_revocation(env.signer_fingerprint, anchors) ==
      RevocationStatus::revoked)
    fail(Errc::revoked_signer,
         "signer " + env.signer_fingerprint.hex() + " is revoked");
  if (env.signer_fingerprint != anchors.key_fp)
    fail(Errc::fingerprint_mismatch,
         "envelope signer " + env.signer_fingerprint.hex() +
             " is not the trusted key " + anchors.key_fp.hex());
  if (env.algorithm_id != anchors.key.algorithm_id)
    fail(Errc::fingerprint_mismatch,
         "envelope algorithm does not match the trusted key");
  if (!verify_signature(env.algorithm_id, anchors.key.key_bytes, env.payload,
                        env.signature))
    fail(Errc::bad_signature, "manifest signature does not verify");
  return parse_manifest(env.payload);
}

// A rotation must be authorized by the currently trusted key. Rotating to
// the already-trusted key is an accepted no-op.
inline PublicKeyDoc verify_rotation(const RotationRequest& req,
                                    const TrustAnchors& anchors) {
  if (fingerprint_of(req.new_key) == anchors.key_fp) return req.new_key;
  if (!public_key_parses(req.new_key))
    fail(Errc::rotation_rejected, "rotation target key does not parse");
  if (!verify_signature(anchors.key.algorithm_id, anchors.key.key_bytes,
                        rotation_message(req.new_key), req.authorization))
    fail(Errc::rotation_rejected,
         "rotation authorization does not verify under the trusted key");
  return req.new_key;
}

// Union of revocations plus a strictly advancing sequence number. Nothing a
// later update says can remove an already revoked fingerprint.
inline KrlDocument merge_krl(const KrlDocument& current,
                             const KrlDocument& update) {
  if (update.sequence_number <= current.sequence_number)
    fail(Errc::stale_krl,
         "krl update sequence " + std::to_string(update.sequence_number) +
             " is not newer than " +
             std::to_string(current.sequence_number));
  KrlDocument merged;
  merged.sequence_number = update.sequence_number;
  merged.revoked.reserve(current.revoked.size() + update.revoked.size());
  std::set_union(current.revoked.begin(), current.revoked.end(),
                 update.revoked.begin(), update.revoked.end(),
                 std::back_inserter(merged.revoked));
  return merged;
}

}  // namespace promote
