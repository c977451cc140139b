// Copyright 2026 The promotectl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Vendor-side toolchain: key generation, manifest signing, rotation
// authorizations, KRL issuance and offline package checks.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promotectl/crypto.hpp"
#include "promotectl/vendor.hpp"

namespace {

using namespace promote;
namespace fs = std::filesystem;

int cmd_keygen(const std::string& algorithm, const std::string& priv,
               const std::string& pub) {
  KeyMaterial key = generate_key(algorithm);
  vendor::write_private_key(fs::absolute(priv), key);
  vendor::write_key_doc(fs::absolute(pub), key.public_doc());
  std::cout << fingerprint_of(key.public_doc()).hex() << "\n";
  std::cerr << "wrote " << priv << " (0600) and " << pub << "\n";
  return 0;
}

int cmd_sign(const std::string& package, const std::string& manifest_src,
             const std::string& key_path, const std::string& rotation_path,
             const std::string& krl_path, std::string out) {
  fs::path package_dir = fs::absolute(package);
  KeyMaterial key = vendor::load_private_key(fs::absolute(key_path));
  vendor::ManifestSource src = vendor::parse_manifest_source(
      vendor::read_file(fs::absolute(manifest_src), Errc::manifest_schema,
                        "manifest source"));
  std::optional<RotationRequest> rotation;
  if (!rotation_path.empty()) {
    Bytes raw = vendor::read_file(fs::absolute(rotation_path),
                                  Errc::manifest_schema, "rotation");
    nlohmann::json j =
        parse_json(to_string(raw), Errc::manifest_schema, "rotation");
    RotationRequest req;
    auto auth = base64_decode(j.at("authorization").get<std::string>());
    if (!auth) fail(Errc::manifest_schema, "rotation: bad authorization");
    req.authorization = std::move(*auth);
    req.new_key =
        parse_key_doc(canonical_dump(j.at("new_key")), Errc::manifest_schema);
    rotation = std::move(req);
  }
  std::optional<KrlDocument> krl;
  if (!krl_path.empty())
    krl = parse_krl(to_string(vendor::read_file(fs::absolute(krl_path),
                                                Errc::manifest_schema, "krl")),
                    /*lenient=*/true, Errc::manifest_schema);

  Manifest m = vendor::build_manifest(package_dir, src, rotation, krl);
  SignedEnvelope env = vendor::sign_manifest(m, key);
  if (out.empty()) out = (package_dir / kEnvelopeFileName).string();
  vendor::write_envelope(fs::absolute(out), env);
  std::cout << env.signer_fingerprint.hex() << "\n";
  std::cerr << "signed " << m.entries.size() << " entries into " << out
            << "\n";
  return 0;
}

int cmd_rotate(const std::string& key_path, const std::string& new_pub,
               const std::string& out) {
  KeyMaterial current = vendor::load_private_key(fs::absolute(key_path));
  PublicKeyDoc next = vendor::load_key_doc(fs::absolute(new_pub));
  RotationRequest req = vendor::make_rotation(current, next);
  nlohmann::json j = {{"authorization", base64_encode(req.authorization)},
                      {"new_key", key_doc_to_json(req.new_key)}};
  vendor::write_file(fs::absolute(out), to_bytes(canonical_dump(j)));
  std::cout << fingerprint_of(next).hex() << "\n";
  std::cerr << "rotation authorization written to " << out << "\n";
  return 0;
}

int cmd_krl(std::uint64_t sequence, const std::vector<std::string>& revoke,
            const std::vector<std::string>& revoke_keys,
            const std::string& out) {
  std::vector<std::string> fingerprints = revoke;
  for (const auto& doc_path : revoke_keys)
    fingerprints.push_back(
        fingerprint_of(vendor::load_key_doc(fs::absolute(doc_path))).hex());
  KrlDocument krl = vendor::make_krl(sequence, fingerprints);
  vendor::write_file(fs::absolute(out), encode_krl(krl));
  std::cerr << "krl sequence " << sequence << " with " << krl.revoked.size()
            << " revocations written to " << out << "\n";
  return 0;
}

int cmd_package_verify(const std::string& package, const std::string& pub,
                       const std::string& krl_path) {
  PublicKeyDoc key = vendor::load_key_doc(fs::absolute(pub));
  std::optional<KrlDocument> krl;
  if (!krl_path.empty())
    krl = parse_krl(to_string(vendor::read_file(fs::absolute(krl_path),
                                                Errc::manifest_schema, "krl")),
                    /*lenient=*/true, Errc::manifest_schema);
  vendor::PackageCheck check = vendor::verify_package(
      fs::absolute(package), key, krl ? &*krl : nullptr);
  if (check.ok) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& p : check.problems) std::cerr << "problem: " << p << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vendorctl: vendor-side signing toolchain"};
  app.require_subcommand(1);

  std::string algorithm{kAlgEd25519}, priv, pub, package, manifest_src;
  std::string rotation_path, krl_path, out, new_pub;
  std::uint64_t sequence = 0;
  std::vector<std::string> revoke, revoke_keys;

  CLI::App* keygen = app.add_subcommand("keygen", "generate a signing key");
  keygen->add_option("--algorithm", algorithm,
                     "ed25519 (default) or rsa-2048-sha256");
  keygen->add_option("--priv", priv, "private key output path")->required();
  keygen->add_option("--pub", pub, "public key doc output path")->required();

  CLI::App* sign = app.add_subcommand("sign", "sign a package manifest");
  sign->add_option("--package", package, "package directory")->required();
  sign->add_option("--manifest", manifest_src, "manifest source JSON")
      ->required();
  sign->add_option("--key", priv, "private key file")->required();
  sign->add_option("--rotation", rotation_path,
                   "embed a rotation request file");
  sign->add_option("--krl", krl_path, "embed a krl update file");
  sign->add_option("--out", out, "envelope output (default: package dir)");

  CLI::App* rotate =
      app.add_subcommand("rotate", "authorize a key rotation");
  rotate->add_option("--key", priv, "currently trusted private key")
      ->required();
  rotate->add_option("--new-pub", new_pub, "public key doc to rotate to")
      ->required();
  rotate->add_option("--out", out, "rotation request output")->required();

  CLI::App* krl = app.add_subcommand("krl", "issue a key revocation list");
  krl->add_option("--sequence", sequence, "sequence number")->required();
  krl->add_option("--revoke", revoke, "fingerprint (64 hex) to revoke");
  krl->add_option("--revoke-key", revoke_keys,
                  "public key doc whose fingerprint to revoke");
  krl->add_option("--out", out, "krl output path")->required();

  CLI::App* package_cmd = app.add_subcommand("package", "package utilities");
  package_cmd->require_subcommand(1);
  CLI::App* verify =
      package_cmd->add_subcommand("verify", "offline package self-check");
  verify->add_option("--package", package, "package directory")->required();
  verify->add_option("--pub", pub, "public key doc to verify against")
      ->required();
  verify->add_option("--krl", krl_path, "krl to consult");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(keygen)) return cmd_keygen(algorithm, priv, pub);
    if (app.got_subcommand(sign))
      return cmd_sign(package, manifest_src, priv, rotation_path, krl_path,
                      out);
    if (app.got_subcommand(rotate)) return cmd_rotate(priv, new_pub, out);
    if (app.got_subcommand(krl))
      return cmd_krl(sequence, revoke, revoke_keys, out);
    if (app.got_subcommand(package_cmd))
      return cmd_package_verify(package, pub, krl_path);
  } catch (const Error& e) {
    std::cerr << "error (" << e.code_name() << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
