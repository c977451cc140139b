// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace promote {

// One code per auditable failure class. Process exit codes are coarser;
// see exit_code_for().
enum class Errc {
  untrusted_anchor,
  corrupt_anchor,
  missing_anchor,
  revoked_signer,
  malformed_envelope,
  unsupported_algorithm,
  fingerprint_mismatch,
  bad_signature,
  manifest_schema,
  non_canonical,
  duplicate_destination,
  multiple_enabler,
  path_traversal,
  no_privilege_grant,
  encoding_error,
  candidate_invalid,
  digest_mismatch,
  policy_violation,
  stale_krl,
  rotation_rejected,
  promotion_failure,
  staging_location,
  lock_contention,
  contract_violation,
  privilege_insufficient,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::untrusted_anchor: return "untrusted-anchor";
    case Errc::corrupt_anchor: return "corrupt-anchor";
    case Errc::missing_anchor: return "missing-anchor";
    case Errc::revoked_signer: return "revoked-signer";
    case Errc::malformed_envelope: return "malformed-envelope";
    case Errc::unsupported_algorithm: return "unsupported-algorithm";
    case Errc::fingerprint_mismatch: return "fingerprint-mismatch";
    case Errc::bad_signature: return "bad-signature";
    case Errc::manifest_schema: return "manifest-schema";
    case Errc::non_canonical: return "non-canonical";
    case Errc::duplicate_destination: return "duplicate-destination";
    case Errc::multiple_enabler: return "multiple-enabler";
    case Errc::path_traversal: return "path-traversal";
    case Errc::no_privilege_grant: return "no-privilege-grant";
    case Errc::encoding_error: return "encoding-error";
    case Errc::candidate_invalid: return "candidate-invalid";
    case Errc::digest_mismatch: return "digest-mismatch";
    case Errc::policy_violation: return "policy-violation";
    case Errc::stale_krl: return "stale-krl";
    case Errc::rotation_rejected: return "rotation-rejected";
    case Errc::promotion_failure: return "promotion-failure";
    case Errc::staging_location: return "staging-location";
    case Errc::lock_contention: return "lock-contention";
    case Errc::contract_violation: return "contract-violation";
    case Errc::privilege_insufficient: return "privilege-insufficient";
  }
  return "unknown";
}

// Exit code table, also documented in the README:
//   0 success, 2 usage, 10 anchor failure, 11 revoked signer,
//   12 signature/manifest failure, 13 candidate digest failure,
//   14 policy violation, 15 trust-update failure, 16 promotion failure,
//   17 lock contention, 18 contract violation.
constexpr int exit_code_for(Errc c) {
  switch (c) {
    case Errc::untrusted_anchor:
    case Errc::corrupt_anchor:
    case Errc::missing_anchor:
      return 10;
    case Errc::revoked_signer:
      return 11;
    case Errc::malformed_envelope:
    case Errc::unsupported_algorithm:
    case Errc::fingerprint_mismatch:
    case Errc::bad_signature:
    case Errc::manifest_schema:
    case Errc::non_canonical:
    case Errc::duplicate_destination:
    case Errc::multiple_enabler:
    case Errc::path_traversal:
    case Errc::no_privilege_grant:
    case Errc::encoding_error:
      return 12;
    case Errc::candidate_invalid:
    case Errc::digest_mismatch:
      return 13;
    case Errc::policy_violation:
      return 14;
    case Errc::stale_krl:
    case Errc::rotation_rejected:
      return 15;
    case Errc::promotion_failure:
    case Errc::staging_location:
      return 16;
    case Errc::lock_contention:
      return 17;
    case Errc::contract_violation:
    case Errc::privilege_insufficient:
      return 18;
  }
  return 18;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }
  int exit_code() const noexcept { return exit_code_for(code_); }
  std::string_view code_name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace promote
