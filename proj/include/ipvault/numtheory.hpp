#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "ipvault/errors.hpp"
#include "ipvault/nat.hpp"
#include "ipvault/rng.hpp"

namespace ipvault {

struct RsaPublicKey {
    Nat n;
    Nat e;
};

struct RsaPrivateKey {
    Nat n;
    Nat e;
    Nat d;
    Nat p;  // p < q
    Nat q;
    Nat phi;
};

/// Recovered factorization of some modulus; normalized p < q.
struct FactorPair {
    Nat p;
    Nat q;
};

/// base^exp mod modulus.
inline Nat mod_pow(const Nat& base, const Nat& exp, const Nat& modulus) {
    if (modulus < 2) throw DomainError("mod_pow: modulus < 2");
    Nat b = base % modulus;
    return boost::multiprecision::powm(b, exp, modulus);
}

struct EgcdResult {
    Nat g;  // gcd(a, b)
    Nat x;  // a*x + b*y = g; x, y may be negative
    Nat y;
};

inline EgcdResult egcd(Nat a, Nat b) {
    Nat x0 = 1, y0 = 0, x1 = 0, y1 = 1;
    while (b != 0) {
        Nat q = a / b;
        Nat t = a - q * b;
        a = std::move(b);
        b = std::move(t);
        t = x0 - q * x1;
        x0 = std::move(x1);
        x1 = std::move(t);
        t = y0 - q * y1;
        y0 = std::move(y1);
        y1 = std::move(t);
    }
    return {std::move(a), std::move(x0), std::move(y0)};
}

/// x with a*x = 1 (mod m), 0 < x < m. Throws NotInvertible carrying the gcd.
inline Nat mod_inv(const Nat& a, const Nat& m) {
    if (m < 2) throw DomainError("mod_inv: modulus < 2");
    auto r = egcd(a % m, m);
    if (r.g != 1) throw NotInvertible("mod_inv: not coprime", to_hex(r.g));
    Nat x = r.x % m;
    if (x < 0) x += m;
    return x;
}

namespace detail {

// Trial-division sieve ahead of Miller-Rabin.
inline const std::uint32_t* small_primes(std::size_t& count) {
    static const std::uint32_t table[] = {
        3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,  61,  67,
        71,  73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157,
        163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257,
        263, 269, 271, 277, 281, 283, 293, 307, 311, 313, 317, 331, 337, 347, 349, 353, 359, 367,
        373, 379, 383, 389, 397, 401, 409, 419, 421, 431, 433, 439, 443, 449, 457, 461, 463, 467,
        479, 487, 491, 499, 503, 509, 521, 523, 541, 547, 557, 563, 569, 571, 577, 587, 593, 599,
        601, 607, 613, 617, 619, 631, 641, 643, 647, 653, 659, 661, 673, 677, 683, 691, 701, 709,
        719, 727, 733, 739, 743, 751, 757, 761, 769, 773, 787, 797, 809, 811, 821, 823, 827, 829,
        839, 853, 857, 859, 863, 877, 881, 883, 887, 907, 911, 919, 929, 937, 941, 947, 953, 967,
        971, 977, 983, 991, 997};
    count = sizeof(table) / sizeof(table[0]);
    return table;
}

}  // namespace detail

/// Miller-Rabin with random bases drawn from rng.
inline bool is_probable_prime(const Nat& n, Rng& rng, unsigned rounds = 64) {
    if (n < 2) return false;
    if (n == 2) return true;
    if (n % 2 == 0) return false;
    std::size_t count = 0;
    const std::uint32_t* primes = detail::small_primes(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (n == primes[i]) return true;
        if (n % primes[i] == 0) return false;
    }
    Nat d = n - 1;
    unsigned s = 0;
    while (d % 2 == 0) {
        d >>= 1;
        ++s;
    }
    for (unsigned r = 0; r < rounds; ++r) {
        Nat a = 2 + rng.below(n - 3);  // [2, n-2]
        Nat x = mod_pow(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (unsigned i = 1; i < s; ++i) {
            x = (x * x) % n;
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

/// Random prime with exactly `bits` bits and the top two bits set, so a
/// product of two such primes has exactly the sum of their widths.
inline Nat gen_prime(std::size_t bits, Rng& rng) {
    if (bits < 8) throw DomainError("gen_prime: fewer than 8 bits");
    for (;;) {
        Nat cand = (Nat(3) << (bits - 2)) | rng.bits(bits - 2) | 1;
        std::size_t count = 0;
        const std::uint32_t* primes = detail::small_primes(count);
        bool composite = false;
        for (std::size_t i = 0; i < count && !composite; ++i)
            composite = cand % primes[i] == 0 && cand != primes[i];
        if (composite) continue;
        if (is_probable_prime(cand, rng)) return cand;
    }
}

/// Fresh RSA key. N has exactly `bits` bits; primes pass 64 Miller-Rabin
/// rounds; resamples until gcd(e, phi) = 1. Deterministic for a fixed seed.
inline RsaPrivateKey gen_rsa_keypair(std::size_t bits, const Nat& e, Rng& rng) {
    if (bits < 32) throw DomainError("gen_rsa_keypair: fewer than 32 bits");
    if (e < 3 || e % 2 == 0) throw DomainError("gen_rsa_keypair: e must be odd and >= 3");
    std::size_t pbits = (bits + 1) / 2;
    std::size_t qbits = bits - pbits;
    Nat p, q;
    for (;;) {
        p = gen_prime(pbits, rng);
        if (boost::multiprecision::gcd(e, p - 1) == 1) break;
    }
    for (;;) {
        q = gen_prime(qbits, rng);
        if (q != p && boost::multiprecision::gcd(e, q - 1) == 1) break;
    }
    if (p > q) std::swap(p, q);
    Nat phi = (p - 1) * (q - 1);
    RsaPrivateKey key;
    key.n = p * q;
    key.e = e;
    key.d = mod_inv(e, phi);
    key.p = std::move(p);
    key.q = std::move(q);
    key.phi = std::move(phi);
    return key;
}

/// Cheap structural check (no primality test).
inline bool key_consistent(const RsaPrivateKey& k) {
    return k.p > 1 && k.q > 1 && k.p * k.q == k.n && k.phi == (k.p - 1) * (k.q - 1) &&
           k.d > 0 && k.d < k.phi && (k.e * k.d) % k.phi == 1;
}

/// Factors N given e and any exponent d_mult with e*d_mult = 1 (mod phi(N)).
/// Each random base succeeds with probability at least 1/2; `max_trials`
/// failures raise FactorFailure.
inline FactorPair miller_factor(const Nat& n, const Nat& e, const Nat& d_mult, Rng& rng,
                                unsigned max_trials = 128) {
    if (n < 4 || n % 2 == 0) throw DomainError("miller_factor: bad modulus");
    Nat ed1 = e * d_mult - 1;
    if (ed1 <= 0) throw DomainError("miller_factor: e*d <= 1");
    Nat t = ed1;
    std::size_t k = 0;
    while (t % 2 == 0) {
        t >>= 1;
        ++k;
    }
    auto split = [&](const Nat& f) -> FactorPair {
        Nat other = n / f;
        return f < other ? FactorPair{f, other} : FactorPair{other, f};
    };
    for (unsigned trial = 0; trial < max_trials; ++trial) {
        Nat g = 2 + rng.below(n - 3);
        Nat shared = boost::multiprecision::gcd(g, n);
        if (shared != 1) return split(shared);  // lucky base is already a factor
        Nat x = mod_pow(g, t, n);
        if (x == 1) continue;
        // Square until 1 appears; the preceding value is a square root of 1.
        bool done = false;
        for (std::size_t i = 0; i < k && !done; ++i) {
            Nat next = (x * x) % n;
            if (next == 1) {
                if (x != n - 1) {
                    Nat f = boost::multiprecision::gcd(x - 1, n);
                    if (f > 1 && f < n) return split(f);
                    f = boost::multiprecision::gcd(x + 1, n);
                    if (f > 1 && f < n) return split(f);
                }
                done = true;
            }
            x = std::move(next);
        }
        // x never reached 1: e*d_mult was not 1 mod phi for this base.
    }
    throw FactorFailure("miller_factor: no factor after max trials");
}

/// CRT recombination parameter: 1 mod p, 0 mod q, in [0, pq).
inline Nat crt_param(const Nat& p, const Nat& q) {
    if (p < 1 || q < 1 || boost::multiprecision::gcd(p, q) != 1)
        throw DomainError("crt_param: p, q not coprime");
    return (q * mod_inv(q % p, p)) % (p * q);
}

/// Two half-size exponentiations recombined via gamma. Subtraction wraps
/// in Z_N, so any representatives of m_p, m_q give the same result.
inline Nat crt_exp(const Nat& c, const Nat& dp, const Nat& dq, const Nat& p, const Nat& q,
                   const Nat& gamma, const Nat& n) {
    if (n < 2) throw DomainError("crt_exp: modulus < 2");
    Nat mp = mod_pow(c, dp, p);
    Nat mq = mod_pow(c, dq, q);
    Nat diff = (mp + n - mq) % n;
    return (diff * gamma + mq) % n;
}

/// Anything that can run the RSA secret map c -> c^d mod n: a plain key or
/// any of the white-box bundles.
struct RsaEvaluator {
    Nat n;
    std::function<Nat(const Nat&)> apply;
};

inline RsaEvaluator evaluator(const RsaPrivateKey& key) {
    return {key.n, [key](const Nat& c) { return mod_pow(c, key.d, key.n); }};
}

}  // namespace ipvault
