// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "promotectl/bytes.hpp"
#include "promotectl/errors.hpp"

namespace promote {

using Digest = std::array<std::uint8_t, 32>;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      fail(Errc::contract_violation, "sha256 context init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_, data, size) != 1)
      fail(Errc::contract_violation, "sha256 update failed");
  }

  Digest finish() {
    Digest out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, out.data(), &len) != 1 || len != out.size())
      fail(Errc::contract_violation, "sha256 final failed");
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline Digest sha256(const void* data, std::size_t size) {
  Sha256 h;
  h.update(data, size);
  return h.finish();
}

inline Digest sha256(const Bytes& b) { return sha256(b.data(), b.size()); }
inline Digest sha256(std::string_view s) { return sha256(s.data(), s.size()); }

inline std::string digest_hex(const Digest& d) {
  return hex_encode(d.data(), d.size());
}

inline std::optional<Digest> digest_from_hex(std::string_view s) {
  if (!is_hex_digest64(s)) return std::nullopt;
  auto raw = hex_decode(s);
  Digest d{};
  std::copy(raw->begin(), raw->end(), d.begin());
  return d;
}

}  // namespace promote
