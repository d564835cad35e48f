#pragma once

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "ipvault/errors.hpp"
#include "ipvault/nat.hpp"
#include "ipvault/rng.hpp"

namespace ipvault {

inline Bytes sha256(const std::uint8_t* data, std::size_t len) {
    Bytes out(32);
    unsigned n = 0;
    if (EVP_Digest(data, len, out.data(), &n, EVP_sha256(), nullptr) != 1 || n != 32)
        throw Error("sha256 failed");
    return out;
}

inline Bytes sha256(const Bytes& data) { return sha256(data.data(), data.size()); }
inline Bytes sha256(const std::string& data) {
    return sha256(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

inline Bytes hmac_sha256(const Bytes& key, const std::uint8_t* msg, std::size_t len) {
    struct MacDeleter {
        void operator()(EVP_MAC* m) const { EVP_MAC_free(m); }
        void operator()(EVP_MAC_CTX* c) const { EVP_MAC_CTX_free(c); }
    };
    std::unique_ptr<EVP_MAC, MacDeleter> mac(EVP_MAC_fetch(nullptr, "HMAC", nullptr));
    if (!mac) throw Error("hmac: fetch failed");
    std::unique_ptr<EVP_MAC_CTX, MacDeleter> ctx(EVP_MAC_CTX_new(mac.get()));
    if (!ctx) throw Error("hmac: ctx failed");
    char digest[] = "SHA256";
    OSSL_PARAM params[] = {OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest, 0),
                           OSSL_PARAM_construct_end()};
    Bytes out(32);
    std::size_t outl = 0;
    if (EVP_MAC_init(ctx.get(), key.data(), key.size(), params) != 1 ||
        EVP_MAC_update(ctx.get(), msg, len) != 1 ||
        EVP_MAC_final(ctx.get(), out.data(), &outl, out.size()) != 1 || outl != 32)
        throw Error("hmac failed");
    return out;
}

inline Bytes hmac_sha256(const Bytes& key, const Bytes& msg) {
    return hmac_sha256(key, msg.data(), msg.size());
}
inline Bytes hmac_sha256(const Bytes& key, const std::string& msg) {
    return hmac_sha256(key, reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size());
}

namespace detail {

inline Bytes aes_cbc(const Bytes& key, const Bytes& iv, const Bytes& in, bool encrypt) {
    if (key.size() != 16 && key.size() != 32) throw DomainError("aes-cbc: key must be 16 or 32 bytes");
    if (iv.size() != 16) throw DomainError("aes-cbc: IV must be 16 bytes");
    if (in.empty() || in.size() % 16 != 0) throw DomainError("aes-cbc: input not a positive multiple of 16");
    const EVP_CIPHER* cipher = key.size() == 16 ? EVP_aes_128_cbc() : EVP_aes_256_cbc();
    struct CtxDeleter {
        void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
    };
    std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw Error("aes-cbc: ctx failed");
    if (EVP_CipherInit_ex(ctx.get(), cipher, nullptr, key.data(), iv.data(), encrypt ? 1 : 0) != 1)
        throw Error("aes-cbc: init failed");
    EVP_CIPHER_CTX_set_padding(ctx.get(), 0);  // padding handled by the caller
    Bytes out(in.size() + 16);
    int len1 = 0, len2 = 0;
    if (EVP_CipherUpdate(ctx.get(), out.data(), &len1, in.data(), static_cast<int>(in.size())) != 1 ||
        EVP_CipherFinal_ex(ctx.get(), out.data() + len1, &len2) != 1)
        throw Error("aes-cbc: cipher failed");
    out.resize(static_cast<std::size_t>(len1) + static_cast<std::size_t>(len2));
    return out;
}

}  // namespace detail

/// Raw AES-CBC over block-aligned input (PKCS#7 is applied separately).
inline Bytes aes_cbc_encrypt(const Bytes& key, const Bytes& iv, const Bytes& plain) {
    return detail::aes_cbc(key, iv, plain, true);
}

inline Bytes aes_cbc_decrypt(const Bytes& key, const Bytes& iv, const Bytes& ct) {
    return detail::aes_cbc(key, iv, ct, false);
}

inline Bytes pkcs7_pad(const Bytes& data, std::size_t block = 16) {
    std::size_t pad = block - data.size() % block;
    Bytes out = data;
    out.insert(out.end(), pad, static_cast<std::uint8_t>(pad));
    return out;
}

inline Bytes pkcs7_unpad(const Bytes& data, std::size_t block = 16) {
    if (data.empty() || data.size() % block != 0) throw PaddingError("pkcs7: bad length");
    std::uint8_t pad = data.back();
    if (pad == 0 || pad > block) throw PaddingError("pkcs7: bad pad byte");
    for (std::size_t i = data.size() - pad; i < data.size(); ++i)
        if (data[i] != pad) throw PaddingError("pkcs7: inconsistent padding");
    return Bytes(data.begin(), data.end() - pad);
}

/// PKCS#1 v1.5 type-2 encryption block: 00 02 <nonzero PS> 00 <msg>.
inline Bytes pkcs1v15_wrap(const Bytes& msg, std::size_t mod_bytes, Rng& rng) {
    if (msg.size() + 11 > mod_bytes) throw KeyTooSmall("pkcs1: modulus too small for message");
    Bytes eb(mod_bytes);
    eb[0] = 0x00;
    eb[1] = 0x02;
    std::size_t ps_len = mod_bytes - 3 - msg.size();
    for (std::size_t i = 0; i < ps_len; ++i) eb[2 + i] = rng.nonzero_byte();
    eb[2 + ps_len] = 0x00;
    std::copy(msg.begin(), msg.end(), eb.begin() + 2 + ps_len + 1);
    return eb;
}

inline Bytes pkcs1v15_unwrap(const Bytes& eb) {
    if (eb.size() < 11 || eb[0] != 0x00 || eb[1] != 0x02) throw UnwrapError("pkcs1: bad block header");
    std::size_t sep = 2;
    while (sep < eb.size() && eb[sep] != 0x00) ++sep;
    if (sep == eb.size()) throw UnwrapError("pkcs1: missing separator");
    if (sep < 10) throw UnwrapError("pkcs1: padding string too short");
    return Bytes(eb.begin() + sep + 1, eb.end());
}

}  // namespace ipvault
