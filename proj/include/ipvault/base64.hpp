#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ipvault/errors.hpp"
#include "ipvault/nat.hpp"

namespace ipvault {

namespace detail {
inline constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace detail

inline std::string base64_encode(const Bytes& data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out += detail::kB64Alphabet[(v >> 18) & 63];
        out += detail::kB64Alphabet[(v >> 12) & 63];
        out += detail::kB64Alphabet[(v >> 6) & 63];
        out += detail::kB64Alphabet[v & 63];
    }
    std::size_t rem = data.size() - i;
    if (rem == 1) {
        std::uint32_t v = data[i] << 16;
        out += detail::kB64Alphabet[(v >> 18) & 63];
        out += detail::kB64Alphabet[(v >> 12) & 63];
        out += "==";
    } else if (rem == 2) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out += detail::kB64Alphabet[(v >> 18) & 63];
        out += detail::kB64Alphabet[(v >> 12) & 63];
        out += detail::kB64Alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

/// Strict decoder: canonical alphabet, '=' only as trailing padding, length
/// a multiple of 4, and zero bits hidden under the padding.
inline Bytes base64_decode(std::string_view s) {
    if (s.size() % 4 != 0) throw DomainError("base64: length not a multiple of 4");
    Bytes out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        bool last = i + 4 == s.size();
        int pad = 0;
        if (last && s[i + 3] == '=') pad = s[i + 2] == '=' ? 2 : 1;
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) {
            char c = s[i + k];
            if (k >= 4 - pad) {
                if (c != '=') throw DomainError("base64: bad padding");
                v <<= 6;
                continue;
            }
            int x = detail::b64_value(c);
            if (x < 0) throw DomainError(std::string("base64: bad character '") + c + "'");
            v = (v << 6) | static_cast<std::uint32_t>(x);
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
        if (pad == 2 && (v & 0xffff) != 0) throw DomainError("base64: non-canonical padding bits");
        if (pad == 1 && (v & 0xff) != 0) throw DomainError("base64: non-canonical padding bits");
    }
    return out;
}

/// Splits an encoding into lines of exactly 64 columns (last line may be
/// shorter but never empty).
inline std::vector<std::string> base64_wrap64(const std::string& encoded) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < encoded.size(); i += 64) lines.push_back(encoded.substr(i, 64));
    return lines;
}

}  // namespace ipvault
