#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ipvault/errors.hpp"
#include "ipvault/kvfile.hpp"
#include "ipvault/numtheory.hpp"

namespace ipvault {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

inline std::string serialize_private_key(const std::string& keyname, const RsaPrivateKey& key) {
    KvLines lines = {{"keyname", keyname}, {"n", to_hex(key.n)}, {"e", to_hex(key.e)},
                     {"d", to_hex(key.d)}, {"p", to_hex(key.p)}, {"q", to_hex(key.q)}};
    return kv_serialize(lines);
}

inline std::string serialize_public_key(const std::string& keyname, const RsaPublicKey& key) {
    return kv_serialize({{"keyname", keyname}, {"n", to_hex(key.n)}, {"e", to_hex(key.e)}});
}

inline std::pair<std::string, RsaPrivateKey> parse_private_key(std::string_view text) {
    KvReader r(text);
    std::string keyname = r.expect("keyname");
    RsaPrivateKey key;
    key.n = nat_from_hex(r.expect("n"));
    key.e = nat_from_hex(r.expect("e"));
    key.d = nat_from_hex(r.expect("d"));
    key.p = nat_from_hex(r.expect("p"));
    key.q = nat_from_hex(r.expect("q"));
    r.expect_end();
    key.phi = (key.p - 1) * (key.q - 1);
    if (!key_consistent(key)) throw ParseError("private key fields are inconsistent", 1);
    return {std::move(keyname), std::move(key)};
}

inline std::pair<std::string, RsaPublicKey> parse_public_key(std::string_view text) {
    KvReader r(text);
    std::string keyname = r.expect("keyname");
    RsaPublicKey key;
    key.n = nat_from_hex(r.expect("n"));
    key.e = nat_from_hex(r.expect("e"));
    r.expect_end();
    if (key.n < 4 || key.n % 2 == 0 || key.e < 2 || key.e >= key.n)
        throw ParseError("public key fields are inconsistent", 1);
    return {std::move(keyname), std::move(key)};
}

/// Keynames double as file names, so keep them to a tame charset.
inline bool valid_keyname(std::string_view name) {
    if (name.empty() || name.size() > 128) return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '-' || c == '_' || c == '.';
        if (!ok) return false;
    }
    return name[0] != '.';
}

/// One directory of key files: <keyname>.prv and <keyname>.pub.
class Keystore {
public:
    explicit Keystore(std::filesystem::path root) : root_(std::move(root)) {}

    /// IPVAULT_STORE overrides the default ./keystore root.
    static Keystore from_env() {
        if (const char* env = std::getenv("IPVAULT_STORE")) return Keystore(env);
        return Keystore("keystore");
    }

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path private_path(const std::string& keyname) const { return root_ / (keyname + ".prv"); }
    std::filesystem::path public_path(const std::string& keyname) const { return root_ / (keyname + ".pub"); }

    bool has(const std::string& keyname) const {
        return std::filesystem::exists(private_path(keyname)) || std::filesystem::exists(public_path(keyname));
    }

    void save_keypair(const std::string& keyname, const RsaPrivateKey& key) {
        if (has(keyname)) throw IoError("keystore: keyname '" + keyname + "' already exists");
        std::filesystem::create_directories(root_);
        write_file(private_path(keyname), serialize_private_key(keyname, key));
        write_file(public_path(keyname), serialize_public_key(keyname, {key.n, key.e}));
    }

    RsaPrivateKey load_private(const std::string& keyname) const {
        auto [name, key] = parse_private_key(read_file(private_path(keyname)));
        if (name != keyname) throw ParseError("keystore: keyname mismatch in " + keyname + ".prv", 1);
        return key;
    }

    RsaPublicKey load_public(const std::string& keyname) const {
        auto [name, key] = parse_public_key(read_file(public_path(keyname)));
        if (name != keyname) throw ParseError("keystore: keyname mismatch in " + keyname + ".pub", 1);
        return key;
    }

private:
    std::filesystem::path root_;
};

}  // namespace ipvault
