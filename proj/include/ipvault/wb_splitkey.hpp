#pragma once

#include <string>
#include <utility>

#include "ipvault/errors.hpp"
#include "ipvault/kvfile.hpp"
#include "ipvault/numtheory.hpp"
#include "ipvault/recovered_key.hpp"
#include "ipvault/rng.hpp"

namespace ipvault {

/// Private exponent hidden as four hard-coded shares. The extended exponent
/// d1*d2 + d3*2^32 + d4 equals d + k*phi(N) for a nonnegative integer k, so
/// it decrypts exactly like d.
struct SplitKeyWhiteBox {
    std::string keyname;
    Nat n;
    Nat d1;
    Nat d2;
    Nat d3;  // < 2^32
    Nat d4;  // < 2^32
};

inline Nat splitkey_exponent(const SplitKeyWhiteBox& wb) {
    return wb.d1 * wb.d2 + (wb.d3 << 32) + wb.d4;
}

/// d3, d4 uniform 32-bit; d1 uniform at the full modulus width and coprime
/// to phi; d2 solves the share equation mod phi. Resamples the rare draws
/// whose extended exponent would undershoot d.
inline SplitKeyWhiteBox gen_splitkey(const RsaPrivateKey& key, Rng& rng, std::string keyname = {}) {
    SplitKeyWhiteBox wb;
    wb.keyname = std::move(keyname);
    wb.n = key.n;
    for (;;) {
        wb.d3 = rng.bits(32);
        wb.d4 = rng.bits(32);
        wb.d1 = rng.exact_bits(bit_length(key.n));
        if (boost::multiprecision::gcd(wb.d1, key.phi) != 1) continue;
        Nat rem = (key.d - (wb.d3 << 32) - wb.d4) % key.phi;
        if (rem < 0) rem += key.phi;
        wb.d2 = (rem * mod_inv(wb.d1, key.phi)) % key.phi;
        if (splitkey_exponent(wb) >= key.d) return wb;
    }
}

inline Nat splitkey_decrypt(const SplitKeyWhiteBox& wb, const Nat& c) {
    if (c < 0 || c >= wb.n) throw DomainError("splitkey_decrypt: ciphertext out of range");
    return mod_pow(c, splitkey_exponent(wb), wb.n);
}

/// The extended exponent is a valid factoring witness, so the shares alone
/// give up the factorization and the original d.
inline RecoveredKey splitkey_attack(const SplitKeyWhiteBox& wb, const Nat& e, Rng& rng,
                                    unsigned max_trials = 128) {
    Nat d_ext = splitkey_exponent(wb);
    RecoveredKey rec;
    rec.factors = miller_factor(wb.n, e, d_ext, rng, max_trials);
    rec.phi = (rec.factors.p - 1) * (rec.factors.q - 1);
    rec.d = d_ext % rec.phi;
    return rec;
}

inline RsaEvaluator evaluator(const SplitKeyWhiteBox& wb) {
    return {wb.n, [wb](const Nat& c) { return splitkey_decrypt(wb, c); }};
}

inline std::string serialize_splitkey(const SplitKeyWhiteBox& wb) {
    return kv_serialize({{"scheme", "splitkey"},
                         {"keyname", wb.keyname},
                         {"n", to_hex(wb.n)},
                         {"d1", to_hex(wb.d1)},
                         {"d2", to_hex(wb.d2)},
                         {"d3", to_hex(wb.d3)},
                         {"d4", to_hex(wb.d4)}});
}

inline SplitKeyWhiteBox parse_splitkey(std::string_view text) {
    KvReader r(text);
    if (r.expect("scheme") != "splitkey") throw ParseError("not a splitkey file", 1);
    SplitKeyWhiteBox wb;
    wb.keyname = r.expect("keyname");
    wb.n = nat_from_hex(r.expect("n"));
    wb.d1 = nat_from_hex(r.expect("d1"));
    wb.d2 = nat_from_hex(r.expect("d2"));
    wb.d3 = nat_from_hex(r.expect("d3"));
    wb.d4 = nat_from_hex(r.expect("d4"));
    r.expect_end();
    if (wb.d3 >= (Nat(1) << 32) || wb.d4 >= (Nat(1) << 32))
        throw ParseError("d3/d4 must fit in 32 bits", 1);
    return wb;
}

}  // namespace ipvault
