#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ipvault/errors.hpp"

namespace ipvault {

/// Nonnegative arbitrary-precision integer. All scalars (moduli, exponents,
/// ciphertexts, key shares) live here.
using Nat = boost::multiprecision::mpz_int;

using Bytes = std::vector<std::uint8_t>;

inline std::size_t bit_length(const Nat& v) {
    if (v == 0) return 0;
    return boost::multiprecision::msb(v) + 1;
}

/// Canonical textual form: lowercase hex, no leading zeros, "0" for zero.
inline std::string to_hex(const Nat& v) {
    if (v < 0) throw DomainError("to_hex: negative value");
    return v.str(0, std::ios_base::hex);
}

/// Strict inverse of to_hex. Rejects uppercase, empty input and
/// non-canonical leading zeros.
inline Nat nat_from_hex(std::string_view s) {
    if (s.empty()) throw DomainError("hex: empty");
    if (s.size() > 1 && s[0] == '0') throw DomainError("hex: leading zero");
    for (char ch : s) {
        bool ok = (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f');
        if (!ok) throw DomainError(std::string("hex: bad character '") + ch + "'");
    }
    Nat v;
    // mpz_set_str accepts the validated charset directly.
    if (mpz_set_str(v.backend().data(), std::string(s).c_str(), 16) != 0)
        throw DomainError("hex: unparseable");
    return v;
}

/// Big-endian, fixed-width byte encoding.
inline Bytes to_bytes(const Nat& v, std::size_t width) {
    if (v < 0) throw DomainError("to_bytes: negative value");
    std::size_t need = (bit_length(v) + 7) / 8;
    if (need > width) throw DomainError("to_bytes: value too wide");
    Bytes out(width, 0);
    if (v != 0) {
        std::size_t count = 0;
        mpz_export(out.data() + (width - need), &count, 1, 1, 1, 0, v.backend().data());
    }
    return out;
}

inline Nat nat_from_bytes(const std::uint8_t* data, std::size_t len) {
    Nat v = 0;
    if (len != 0) mpz_import(v.backend().data(), len, 1, 1, 1, 0, data);
    return v;
}

inline Nat nat_from_bytes(const Bytes& b) { return nat_from_bytes(b.data(), b.size()); }

/// Byte length of a modulus (minimum bytes that hold it).
inline std::size_t byte_length(const Nat& v) { return (bit_length(v) + 7) / 8; }

}  // namespace ipvault
