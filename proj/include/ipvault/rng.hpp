#pragma once

#include <cstdint>
#include <random>

#include "ipvault/errors.hpp"
#include "ipvault/nat.hpp"

namespace ipvault {

/// The single source of randomness. Seeded mt19937_64, so every derived
/// value is identical across runs and platforms for a given seed. No
/// ambient RNG anywhere else in the library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// n bytes, least-significant byte of each 64-bit word first.
    Bytes bytes(std::size_t n) {
        Bytes out(n);
        std::size_t i = 0;
        while (i < n) {
            std::uint64_t w = next_u64();
            for (int k = 0; k < 8 && i < n; ++k, ++i) out[i] = static_cast<std::uint8_t>(w >> (8 * k));
        }
        return out;
    }

    std::uint8_t nonzero_byte() {
        for (;;) {
            std::uint64_t w = next_u64();
            for (int k = 0; k < 8; ++k) {
                auto b = static_cast<std::uint8_t>(w >> (8 * k));
                if (b != 0) return b;
            }
        }
    }

    /// Uniform in [0, 2^nbits). Words are consumed most-significant first.
    Nat bits(std::size_t nbits) {
        Nat r = 0;
        std::size_t words = (nbits + 63) / 64;
        for (std::size_t i = 0; i < words; ++i) {
            r <<= 64;
            r |= Nat(next_u64());
        }
        r &= (Nat(1) << nbits) - 1;
        return r;
    }

    /// Uniform in [2^(nbits-1), 2^nbits): exactly nbits bits.
    Nat exact_bits(std::size_t nbits) {
        if (nbits == 0) throw DomainError("exact_bits: zero width");
        return (Nat(1) << (nbits - 1)) | bits(nbits - 1);
    }

    /// Uniform in [0, bound) by rejection sampling.
    Nat below(const Nat& bound) {
        if (bound <= 0) throw DomainError("below: empty range");
        std::size_t k = bit_length(bound);
        for (;;) {
            Nat v = bits(k);
            if (v < bound) return v;
        }
    }

    /// Uniform over the units of Z_n.
    Nat unit_mod(const Nat& n) {
        if (n < 2) throw DomainError("unit_mod: modulus < 2");
        for (;;) {
            Nat v = below(n);
            if (v != 0 && boost::multiprecision::gcd(v, n) == 1) return v;
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace ipvault
