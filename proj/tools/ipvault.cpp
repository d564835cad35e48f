// ipvault - keystore, envelope and white-box workbench CLI.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ipvault/ipvault.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDuplicateKey = 2;
constexpr int kExitDigestMismatch = 3;
constexpr int kExitNoToolBlock = 4;
constexpr int kExitAttackFailed = 5;
constexpr int kExitUsage = 64;
constexpr int kExitDataError = 65;
constexpr int kExitIoError = 66;

using ipvault::Bytes;
using ipvault::Nat;
using ipvault::Rng;

std::uint64_t seed_or_random(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string fingerprint(const Nat& n) {
    return ipvault::to_hex(ipvault::nat_from_bytes(ipvault::sha256(ipvault::to_hex(n)))).substr(0, 16);
}

Bytes read_binary(const std::filesystem::path& p) {
    std::string s = ipvault::read_file(p);
    return Bytes(s.begin(), s.end());
}

struct KeygenArgs {
    std::size_t bits = 0;
    std::uint64_t e = 65537;
    std::string keyname;
    std::optional<std::uint64_t> seed;
    bool strict = false;
};

int run_keygen(const KeygenArgs& args) {
    if (args.strict && args.bits < 2048) {
        std::cerr << "error: --strict requires at least 2048-bit keys\n";
        return kExitUsage;
    }
    auto store = ipvault::Keystore::from_env();
    if (store.has(args.keyname)) {
        std::cerr << "error: keyname '" << args.keyname << "' already exists\n";
        return kExitDuplicateKey;
    }
    Rng rng(seed_or_random(args.seed));
    auto key = ipvault::gen_rsa_keypair(args.bits, Nat(args.e), rng);
    store.save_keypair(args.keyname, key);
    std::cout << "keyname=" << args.keyname << "\n";
    std::cout << "fingerprint=" << fingerprint(key.n) << "\n";
    return kExitOk;
}

struct WbgenArgs {
    std::string scheme;
    std::string keyname;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool emit_secrets = false;
    bool emit_decoy = false;
};

int run_wbgen(const WbgenArgs& args) {
    auto store = ipvault::Keystore::from_env();
    auto key = store.load_private(args.keyname);
    Rng rng(seed_or_random(args.seed));
    if (args.scheme == "splitkey") {
        auto wb = ipvault::gen_splitkey(key, rng, args.keyname);
        ipvault::write_file(args.out, ipvault::serialize_splitkey(wb));
        if (args.emit_decoy) {
            // A plausible but unrelated key, same shape as the real one.
            auto decoy = ipvault::gen_rsa_keypair(ipvault::bit_length(key.n), key.e, rng);
            ipvault::write_file(args.out + ".decoy",
                                ipvault::serialize_private_key(args.keyname + "-decoy", decoy));
        }
    } else if (args.scheme == "obfcrt") {
        auto wb = ipvault::gen_obfcrt(key, rng, args.keyname);
        ipvault::write_file(args.out, ipvault::serialize_obfcrt(wb));
    } else if (args.scheme == "window") {
        auto [wb, secrets] = ipvault::gen_window(key, rng, args.keyname);
        ipvault::write_file(args.out, ipvault::serialize_window(wb));
        if (args.emit_secrets)
            ipvault::write_file(args.out + ".secrets",
                                ipvault::serialize_window_secrets(args.keyname, secrets));
    } else {
        std::cerr << "error: unknown scheme '" << args.scheme << "'\n";
        return kExitUsage;
    }
    std::cout << "scheme=" << args.scheme << "\n";
    std::cout << "out=" << args.out << "\n";
    return kExitOk;
}

struct EncryptArgs {
    std::string in, out;
    std::vector<std::string> to;
    std::string data_method = "aes128-cbc";
    std::vector<std::string> rights;
    std::vector<std::string> tool_rights;
    std::optional<std::uint64_t> seed;
    bool strict = false;
};

ipvault::Right parse_right(const std::string& s) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ipvault::DomainError("expected name=value: " + s);
    return {s.substr(0, eq), s.substr(eq + 1)};
}

int run_encrypt(const EncryptArgs& args) {
    auto store = ipvault::Keystore::from_env();
    ipvault::CommonBlock common;
    for (const auto& r : args.rights) common.rights.push_back(parse_right(r));
    std::vector<ipvault::Recipient> recipients;
    for (const auto& name : args.to) {
        ipvault::Recipient rec;
        rec.pub = store.load_public(name);
        rec.keyowner = name;
        rec.keyname = name;
        recipients.push_back(std::move(rec));
    }
    for (const auto& tr : args.tool_rights) {
        auto colon = tr.find(':');
        if (colon == std::string::npos) {
            std::cerr << "error: --tool-right wants keyname:name=value\n";
            return kExitUsage;
        }
        std::string name = tr.substr(0, colon);
        bool found = false;
        for (auto& rec : recipients)
            if (rec.keyname == name) {
                rec.tool_rights.push_back(parse_right(tr.substr(colon + 1)));
                found = true;
            }
        if (!found) {
            std::cerr << "error: --tool-right names unknown recipient '" << name << "'\n";
            return kExitUsage;
        }
    }
    if (args.strict)
        for (const auto& rec : recipients)
            if (ipvault::bit_length(rec.pub.n) < 2048) {
                std::cerr << "error: --strict requires 2048-bit recipient keys\n";
                return kExitUsage;
            }
    Rng rng(seed_or_random(args.seed));
    auto env = ipvault::encrypt_ip(read_binary(args.in), common, recipients, args.data_method, rng);
    ipvault::write_file(args.out, ipvault::serialize(env));
    return kExitOk;
}

ipvault::RsaEvaluator evaluator_from_flags(const std::string& keyname, const std::string& wb_path) {
    if (!wb_path.empty()) {
        auto wb = ipvault::parse_whitebox(ipvault::read_file(wb_path));
        return ipvault::whitebox_evaluator(wb);
    }
    auto store = ipvault::Keystore::from_env();
    return ipvault::evaluator(store.load_private(keyname));
}

std::string keyname_from_flags(const std::string& keyname, const std::string& wb_path) {
    if (!wb_path.empty()) return ipvault::whitebox_keyname(ipvault::parse_whitebox(ipvault::read_file(wb_path)));
    return keyname;
}

struct DecryptArgs {
    std::string in, out;
    std::string keyname;
    std::string wb;
};

int run_decrypt(const DecryptArgs& args) {
    auto env = ipvault::parse(ipvault::read_file(args.in));
    auto eval = evaluator_from_flags(args.keyname, args.wb);
    std::string keyname = keyname_from_flags(args.keyname, args.wb);
    auto result = ipvault::decrypt_ip(env, eval, keyname);
    ipvault::write_file(args.out, std::string(result.plaintext.begin(), result.plaintext.end()));
    std::cout << "keyname=" << keyname << "\n";
    for (const auto& r : result.common.rights) std::cout << "common." << r.name << "=\"" << r.value << "\"\n";
    for (const auto& r : result.tool_rights) std::cout << "tool." << r.name << "=\"" << r.value << "\"\n";
    return kExitOk;
}

struct VerifyArgs {
    std::string in;
    std::string keyname;
    std::string wb;
};

int run_verify(const VerifyArgs& args) {
    auto env = ipvault::parse(ipvault::read_file(args.in));
    auto eval = evaluator_from_flags(args.keyname, args.wb);
    std::string keyname = keyname_from_flags(args.keyname, args.wb);
    const ipvault::ToolBlock* own = nullptr;
    for (const auto& t : env.tools)
        if (t.keyname == keyname) own = &t;
    if (!own) {
        std::cerr << "error: no tool block for keyname '" << keyname << "'\n";
        return kExitNoToolBlock;
    }
    auto session = ipvault::unwrap_session_key(*own, eval);
    // One session key serves every tool block, so holding one private key
    // checks them all.
    std::string failed;
    for (const auto& t : env.tools) {
        bool ok = ipvault::verify_digest(session, env.common, t);
        std::cout << "digest." << t.keyname << "=" << (ok ? "ok" : "mismatch") << "\n";
        if (!ok && failed.empty()) failed = t.keyname;
    }
    if (!failed.empty()) {
        std::cerr << "error: digest mismatch for keyname '" << failed << "'\n";
        return kExitDigestMismatch;
    }
    return kExitOk;
}

struct AttackArgs {
    std::string wb;
    std::string scheme;
    std::optional<std::uint64_t> e;
    std::string pub;
    std::string method = "auto";
    std::string report;
    std::optional<std::uint64_t> seed;
    bool verify_only = false;
};

int run_attack(const AttackArgs& args) {
    auto wb = ipvault::parse_whitebox(ipvault::read_file(args.wb));
    std::string scheme = std::holds_alternative<ipvault::SplitKeyWhiteBox>(wb) ? "splitkey"
                         : std::holds_alternative<ipvault::ObfCrtWhiteBox>(wb) ? "obfcrt"
                                                                               : "window";
    if (!args.scheme.empty() && args.scheme != scheme) {
        std::cerr << "error: --scheme " << args.scheme << " does not match '" << scheme << "' file\n";
        return kExitUsage;
    }
    std::string method = args.method;
    if (method == "auto") method = scheme == "splitkey" ? "miller" : scheme == "obfcrt" ? "gcd" : "matrix";
    bool method_ok = (scheme == "splitkey" && method == "miller") ||
                     (scheme == "obfcrt" && method == "gcd") ||
                     (scheme == "window" && (method == "matrix" || method == "chosen-ciphertext"));
    if (!method_ok) {
        std::cerr << "error: method '" << method << "' is not valid for scheme '" << scheme << "'\n";
        return kExitUsage;
    }

    if (args.verify_only) {
        if (method != "matrix") {
            std::cerr << "error: --verify-only requires --method matrix\n";
            return kExitUsage;
        }
        ipvault::check_window_structure(std::get<ipvault::WindowWhiteBox>(wb));
        std::cout << "structure=ok\n";
        return kExitOk;
    }

    Nat e;
    if (args.e && args.pub.empty()) {
        e = Nat(*args.e);
    } else if (!args.pub.empty() && !args.e) {
        auto [pub_name, pub] = ipvault::parse_public_key(ipvault::read_file(args.pub));
        if (pub.n != ipvault::whitebox_modulus(wb)) {
            std::cerr << "error: public key modulus does not match the white-box\n";
            return kExitDataError;
        }
        e = pub.e;
    } else {
        std::cerr << "error: exactly one of --e or --pub is required\n";
        return kExitUsage;
    }

    Rng rng(seed_or_random(args.seed));
    ipvault::AttackReport report;
    report.scheme = scheme;
    report.keyname = ipvault::whitebox_keyname(wb);
    report.method = method;

    auto start = std::chrono::steady_clock::now();
    ipvault::RecoveredKey rec;
    if (scheme == "splitkey") {
        rec = ipvault::splitkey_attack(std::get<ipvault::SplitKeyWhiteBox>(wb), e, rng);
        report.verdicts = {};
    } else if (scheme == "obfcrt") {
        rec = ipvault::obfcrt_attack(std::get<ipvault::ObfCrtWhiteBox>(wb), e, rng);
        report.verdicts = {{"gamma_gcd_p", true}, {"gamma_gcd_q", true}, {"ptilde_gcd", true},
                           {"qtilde_gcd", true},  {"cdp_gcd", true},     {"cdq_gcd", true}};
    } else if (method == "matrix") {
        rec = ipvault::attack_matrix(std::get<ipvault::WindowWhiteBox>(wb), e, rng);
        report.verdicts = {{"am_structure", true}, {"tprime_match", true}, {"pi_permutation", true}};
    } else {
        rec = ipvault::attack_chosen_ciphertext(std::get<ipvault::WindowWhiteBox>(wb), e, rng);
        report.verdicts = {{"rvec_unit", true}, {"power_of_two", true}, {"pi_permutation", true}};
    }
    auto elapsed = std::chrono::steady_clock::now() - start;
    report.time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();

    bool pq_ok = rec.factors.p * rec.factors.q == ipvault::whitebox_modulus(wb);
    bool ed_ok = (e * rec.d) % rec.phi == 1;
    report.verdicts.emplace_back("pq_eq_n", pq_ok);
    report.verdicts.emplace_back("ed_mod_phi", ed_ok);
    report.d = rec.d;
    report.factors = rec.factors;
    if (!pq_ok || !ed_ok) {
        std::cerr << "error: verdict failed: " << (!pq_ok ? "pq_eq_n" : "ed_mod_phi") << "\n";
        return kExitAttackFailed;
    }

    std::string text = ipvault::serialize_report(report);
    if (!args.report.empty()) ipvault::write_file(args.report, text);
    std::cout << text;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"digital envelope and white-box RSA workbench"};
    app.require_subcommand(1);

    KeygenArgs keygen;
    auto* cmd_keygen = app.add_subcommand("keygen", "generate an RSA keypair into the keystore");
    cmd_keygen->add_option("--bits", keygen.bits, "modulus size in bits")->required();
    cmd_keygen->add_option("--e", keygen.e, "public exponent (decimal)");
    cmd_keygen->add_option("--keyname", keygen.keyname, "unique key identifier")->required();
    cmd_keygen->add_option("--seed", keygen.seed, "RNG seed for reproducible output");
    cmd_keygen->add_flag("--strict", keygen.strict, "enforce the 2048-bit key floor");

    WbgenArgs wbgen;
    auto* cmd_wbgen = app.add_subcommand("wbgen", "derive a white-box decryption bundle from a stored key");
    cmd_wbgen->add_option("--scheme", wbgen.scheme, "splitkey, obfcrt or window")->required();
    cmd_wbgen->add_option("--keyname", wbgen.keyname, "stored private key to protect")->required();
    cmd_wbgen->add_option("--out", wbgen.out, "output white-box file")->required();
    cmd_wbgen->add_option("--seed", wbgen.seed, "RNG seed for reproducible output");
    cmd_wbgen->add_flag("--emit-secrets", wbgen.emit_secrets, "also write <out>.secrets (window only)");
    cmd_wbgen->add_flag("--emit-decoy", wbgen.emit_decoy, "also write a decoy key file (splitkey only)");

    EncryptArgs encrypt;
    auto* cmd_encrypt = app.add_subcommand("encrypt", "wrap an IP file in a digital envelope");
    cmd_encrypt->add_option("--in", encrypt.in, "plaintext IP file")->required();
    cmd_encrypt->add_option("--out", encrypt.out, "envelope output file")->required();
    cmd_encrypt->add_option("--to", encrypt.to, "recipient keyname (repeatable)")->required();
    cmd_encrypt->add_option("--data-method", encrypt.data_method, "aes128-cbc or aes256-cbc");
    cmd_encrypt->add_option("--right", encrypt.rights, "common right name=value (repeatable)");
    cmd_encrypt->add_option("--tool-right", encrypt.tool_rights, "tool right keyname:name=value (repeatable)");
    cmd_encrypt->add_option("--seed", encrypt.seed, "RNG seed for reproducible output");
    cmd_encrypt->add_flag("--strict", encrypt.strict, "enforce 2048-bit recipient keys");

    DecryptArgs decrypt;
    auto* cmd_decrypt = app.add_subcommand("decrypt", "open an envelope and print the verified rights");
    cmd_decrypt->add_option("--in", decrypt.in, "envelope file")->required();
    cmd_decrypt->add_option("--out", decrypt.out, "plaintext output file")->required();
    cmd_decrypt->add_option("--keyname", decrypt.keyname, "stored private key");
    cmd_decrypt->add_option("--wb", decrypt.wb, "white-box file used in place of the key");

    VerifyArgs verify;
    auto* cmd_verify = app.add_subcommand("verify", "check every tool digest without touching the data block");
    cmd_verify->add_option("--in", verify.in, "envelope file")->required();
    cmd_verify->add_option("--keyname", verify.keyname, "stored private key");
    cmd_verify->add_option("--wb", verify.wb, "white-box file used in place of the key");

    AttackArgs attack;
    auto* cmd_attack = app.add_subcommand("attack", "extract the private key from a white-box file");
    cmd_attack->add_option("--wb", attack.wb, "white-box file")->required();
    cmd_attack->add_option("--scheme", attack.scheme, "expected scheme (checked against the file)");
    cmd_attack->add_option("--e", attack.e, "public exponent (decimal)");
    cmd_attack->add_option("--pub", attack.pub, "public key file providing e");
    cmd_attack->add_option("--method", attack.method, "auto, miller, gcd, matrix or chosen-ciphertext");
    cmd_attack->add_option("--report", attack.report, "write the attack report here");
    cmd_attack->add_option("--seed", attack.seed, "RNG seed for reproducible output");
    cmd_attack->add_flag("--verify-only", attack.verify_only, "only check the white-box structure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (cmd_keygen->parsed()) return run_keygen(keygen);
        if (cmd_wbgen->parsed()) return run_wbgen(wbgen);
        if (cmd_encrypt->parsed()) return run_encrypt(encrypt);
        if (cmd_decrypt->parsed()) return run_decrypt(decrypt);
        if (cmd_verify->parsed()) return run_verify(verify);
        if (cmd_attack->parsed()) return run_attack(attack);
    } catch (const ipvault::DigestMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDigestMismatch;
    } catch (const ipvault::NoSuchToolBlock& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoToolBlock;
    } catch (const ipvault::AttackInconsistent& e) {
        std::cerr << "error: verdict failed: " << e.verdict() << " (" << e.what() << ")\n";
        return kExitAttackFailed;
    } catch (const ipvault::FactorFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAttackFailed;
    } catch (const ipvault::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const ipvault::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}
