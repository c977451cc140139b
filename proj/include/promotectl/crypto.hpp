// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include <memory>
#include <string>
#include <string_view>

#include "promotectl/bytes.hpp"
#include "promotectl/errors.hpp"
#include "promotectl/keys.hpp"

namespace promote {

namespace detail {

struct EvpPkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpPkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct EvpMdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};

using EvpPkey = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using EvpPkeyCtx = std::unique_ptr<EVP_PKEY_CTX, EvpPkeyCtxDeleter>;
using EvpMdCtx = std::unique_ptr<EVP_MD_CTX, EvpMdCtxDeleter>;

inline int evp_id_for(std::string_view algorithm_id) {
  if (algorithm_id == kAlgEd25519) return EVP_PKEY_ED25519;
  if (algorithm_id == kAlgRsa2048) return EVP_PKEY_RSA;
  fail(Errc::unsupported_algorithm,
       "unsupported algorithm '" + std::string(algorithm_id) + "'");
}

inline EvpPkey load_public(std::string_view algorithm_id, const Bytes& spki,
                           Errc on_error) {
  const unsigned char* p = spki.data();
  EvpPkey key(d2i_PUBKEY(nullptr, &p, static_cast<long>(spki.size())));
  if (!key) fail(on_error, "public key does not parse");
  if (EVP_PKEY_base_id(key.get()) != evp_id_for(algorithm_id))
    fail(on_error, "public key does not match its algorithm_id");
  if (algorithm_id == kAlgRsa2048 && EVP_PKEY_bits(key.get()) != 2048)
    fail(on_error, "rsa key must be 2048 bits");
  return key;
}

inline EvpPkey load_private(std::string_view algorithm_id, const Bytes& pkcs8,
                            Errc on_error) {
  const unsigned char* p = pkcs8.data();
  std::unique_ptr<PKCS8_PRIV_KEY_INFO,
                  decltype([](PKCS8_PRIV_KEY_INFO* i) {
                    PKCS8_PRIV_KEY_INFO_free(i);
                  })>
      info(d2i_PKCS8_PRIV_KEY_INFO(nullptr, &p,
                                   static_cast<long>(pkcs8.size())));
  if (!info) fail(on_error, "private key does not parse");
  EvpPkey key(EVP_PKCS82PKEY(info.get()));
  if (!key) fail(on_error, "private key does not parse");
  if (EVP_PKEY_base_id(key.get()) != evp_id_for(algorithm_id))
    fail(on_error, "private key does not match its algorithm_id");
  return key;
}

inline Bytes export_spki(EVP_PKEY* key) {
  int len = i2d_PUBKEY(key, nullptr);
  if (len <= 0) fail(Errc::contract_violation, "key export failed");
  Bytes out(static_cast<std::size_t>(len));
  unsigned char* p = out.data();
  i2d_PUBKEY(key, &p);
  return out;
}

inline Bytes export_pkcs8(EVP_PKEY* key) {
  std::unique_ptr<PKCS8_PRIV_KEY_INFO,
                  decltype([](PKCS8_PRIV_KEY_INFO* i) {
                    PKCS8_PRIV_KEY_INFO_free(i);
                  })>
      info(EVP_PKEY2PKCS8(key));
  if (!info) fail(Errc::contract_violation, "key export failed");
  int len = i2d_PKCS8_PRIV_KEY_INFO(info.get(), nullptr);
  if (len <= 0) fail(Errc::contract_violation, "key export failed");
  Bytes out(static_cast<std::size_t>(len));
  unsigned char* p = out.data();
  i2d_PKCS8_PRIV_KEY_INFO(info.get(), &p);
  return out;
}

}  // namespace detail

// Vendor-side signing key pair. public_der is the SubjectPublicKeyInfo
// encoding (same bytes as PublicKeyDoc::key_bytes); private_der is PKCS#8.
struct KeyMaterial {
  std::string algorithm_id;
  Bytes public_der;
  Bytes private_der;

  PublicKeyDoc public_doc() const { return {algorithm_id, public_der}; }
};

inline KeyMaterial generate_key(std::string_view algorithm_id) {
  detail::EvpPkeyCtx ctx(
      EVP_PKEY_CTX_new_id(detail::evp_id_for(algorithm_id), nullptr));
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1)
    fail(Errc::contract_violation, "keygen init failed");
  if (algorithm_id == kAlgRsa2048 &&
      EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), 2048) != 1)
    fail(Errc::contract_violation, "keygen rsa bits failed");
  EVP_PKEY* raw = nullptr;
  if (EVP_PKEY_keygen(ctx.get(), &raw) != 1)
    fail(Errc::contract_violation, "keygen failed");
  detail::EvpPkey key(raw);
  KeyMaterial out;
  out.algorithm_id = std::string(algorithm_id);
  out.public_der = detail::export_spki(key.get());
  out.private_der = detail::export_pkcs8(key.get());
  return out;
}

inline Bytes sign_message(const KeyMaterial& key, const Bytes& message) {
  detail::EvpPkey pkey = detail::load_private(key.algorithm_id,
                                              key.private_der,
                                              Errc::contract_violation);
  detail::EvpMdCtx ctx(EVP_MD_CTX_new());
  const EVP_MD* md =
      key.algorithm_id == kAlgEd25519 ? nullptr : EVP_sha256();
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, md, nullptr,
                                 pkey.get()) != 1)
    fail(Errc::contract_violation, "sign init failed");
  std::size_t sig_len = 0;
  if (EVP_DigestSign(ctx.get(), nullptr, &sig_len, message.data(),
                     message.size()) != 1)
    fail(Errc::contract_violation, "sign sizing failed");
  Bytes sig(sig_len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(),
                     message.size()) != 1)
    fail(Errc::contract_violation, "sign failed");
  sig.resize(sig_len);
  return sig;
}

inline bool verify_signature(std::string_view algorithm_id,
                             const Bytes& public_spki, const Bytes& message,
                             const Bytes& signature) {
  detail::EvpPkey pkey =
      detail::load_public(algorithm_id, public_spki, Errc::bad_signature);
  detail::EvpMdCtx ctx(EVP_MD_CTX_new());
  const EVP_MD* md = algorithm_id == kAlgEd25519 ? nullptr : EVP_sha256();
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, md, nullptr,
                                   pkey.get()) != 1)
    fail(Errc::contract_violation, "verify init failed");
  int rc = EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                            message.data(), message.size());
  ERR_clear_error();
  return rc == 1;
}

// True if key_bytes parse as a usable public key for the declared algorithm.
inline bool public_key_parses(const PublicKeyDoc& doc) {
  try {
    detail::load_public(doc.algorithm_id, doc.key_bytes,
                        Errc::unsupported_algorithm);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace promote
