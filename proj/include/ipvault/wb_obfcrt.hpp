#pragma once

#include <string>
#include <utility>

#include "ipvault/errors.hpp"
#include "ipvault/kvfile.hpp"
#include "ipvault/numtheory.hpp"
#include "ipvault/recovered_key.hpp"
#include "ipvault/rng.hpp"

namespace ipvault {

/// CRT-RSA with every security-critical value split: the half exponents
/// additively over the integers, the prime moduli as p1 - p2 = k*p with the
/// small multiplier hidden by a 256-bit offset, and the CRT parameter as
/// g1*(g2 + g3) mod N.
struct ObfCrtWhiteBox {
    std::string keyname;
    Nat n;
    Nat dp1, dp2;  // dp1 + dp2 = d mod (p-1)
    Nat dq1, dq2;  // dq1 + dq2 = d mod (q-1)
    Nat p1, p2;    // p1 - p2 = k*p, 8-bit k
    Nat q1, q2;    // q1 - q2 = l*q, 8-bit l
    Nat g1, g2, g3;
};

/// Reduction by the hidden multiple ptilde = p1 - p2 computed from the two
/// shares only: a - floor(a/p1)*ptilde. Not a Euclidean reduction, but since
/// p2 << p1 the result shrinks to roughly p1 and stays congruent to a
/// modulo ptilde (and hence modulo the prime dividing it).
inline Nat obf_mod(const Nat& a, const Nat& p1, const Nat& p2) {
    if (p1 == 0) throw DomainError("obf_mod: p1 = 0");
    return (a / p1) * p2 + a % p1;
}

inline ObfCrtWhiteBox gen_obfcrt(const RsaPrivateKey& key, Rng& rng, std::string keyname = {}) {
    if (bit_length(key.p) < 256 || bit_length(key.q) < 256)
        throw DomainError("gen_obfcrt: factors too small (need 256-bit primes)");
    ObfCrtWhiteBox wb;
    wb.keyname = std::move(keyname);
    wb.n = key.n;
    Nat dp = key.d % (key.p - 1);
    Nat dq = key.d % (key.q - 1);
    wb.dp1 = rng.below(dp + 1);  // integer split: both halves nonnegative
    wb.dp2 = dp - wb.dp1;
    wb.dq1 = rng.below(dq + 1);
    wb.dq2 = dq - wb.dq1;
    // Odd multipliers in [3, 255]; k = 1 would expose a factor directly.
    Nat k = 3 + 2 * rng.below(127);
    Nat l = 3 + 2 * rng.below(127);
    wb.p2 = rng.bits(256);  // < 2^256 < 3*2^255 <= k*p
    wb.p1 = k * key.p + wb.p2;
    wb.q2 = rng.bits(256);
    wb.q1 = l * key.q + wb.q2;
    Nat gamma = crt_param(key.p, key.q);
    wb.g1 = rng.unit_mod(key.n);
    wb.g2 = rng.below(key.n);
    wb.g3 = (gamma * mod_inv(wb.g1, key.n) % key.n + key.n - wb.g2) % key.n;
    return wb;
}

inline Nat obf_crt_exp(const ObfCrtWhiteBox& wb, const Nat& c) {
    if (c < 0 || c >= wb.n) throw DomainError("obf_crt_exp: ciphertext out of range");
    Nat mp = obf_mod(mod_pow(c, wb.dp1, wb.n) * mod_pow(c, wb.dp2, wb.n) % wb.n, wb.p1, wb.p2) % wb.n;
    Nat mq = obf_mod(mod_pow(c, wb.dq1, wb.n) * mod_pow(c, wb.dq2, wb.n) % wb.n, wb.q1, wb.q2) % wb.n;
    Nat gamma = wb.g1 * (wb.g2 + wb.g3) % wb.n;
    return ((mp + wb.n - mq) * gamma + mq) % wb.n;
}

/// Key recovery: gcd(gamma - 1, N) and gcd(gamma, N) give the factors, then
/// every redundant share is cross-checked before d = e^-1 mod phi.
inline RecoveredKey obfcrt_attack(const ObfCrtWhiteBox& wb, const Nat& e, Rng& rng) {
    Nat gamma = wb.g1 * (wb.g2 + wb.g3) % wb.n;
    if (gamma == 0) throw AttackInconsistent("gamma is zero", "gamma_gcd_p");
    Nat p = boost::multiprecision::gcd(gamma - 1, wb.n);
    Nat q = boost::multiprecision::gcd(gamma, wb.n);
    if (p <= 1 || p >= wb.n) throw AttackInconsistent("gcd(gamma-1, N) is not a factor", "gamma_gcd_p");
    if (q <= 1 || q >= wb.n) throw AttackInconsistent("gcd(gamma, N) is not a factor", "gamma_gcd_q");
    if (p * q != wb.n) throw AttackInconsistent("recovered factors do not multiply to N", "pq_eq_n");
    if (wb.p1 < wb.p2 || boost::multiprecision::gcd(wb.p1 - wb.p2, wb.n) != p)
        throw AttackInconsistent("gcd(N, p1-p2) != p", "ptilde_gcd");
    if (wb.q1 < wb.q2 || boost::multiprecision::gcd(wb.q1 - wb.q2, wb.n) != q)
        throw AttackInconsistent("gcd(N, q1-q2) != q", "qtilde_gcd");
    // c^(e*dp) = c (mod p) for every c, so the gcd isolates p; same for q.
    // A probe whose gcd collapses to N is degenerate (c ended up a fixed
    // point mod the other prime as well) and is redrawn.
    auto gcd_check = [&](const Nat& half_exp, const Nat& want, const char* verdict) {
        for (int tries = 0; tries < 4; ++tries) {
            Nat c = 2 + rng.below(wb.n - 2);
            Nat x = mod_pow(mod_pow(c, half_exp, wb.n), e, wb.n);
            Nat g = boost::multiprecision::gcd((x + wb.n - c) % wb.n, wb.n);
            if (g == want) return;
            if (g != wb.n) throw AttackInconsistent(std::string("half-exponent gcd check failed: ") + verdict,
                                                    verdict);
        }
        throw AttackInconsistent(std::string("half-exponent gcd check degenerate: ") + verdict, verdict);
    };
    gcd_check(wb.dp1 + wb.dp2, p, "cdp_gcd");
    gcd_check(wb.dq1 + wb.dq2, q, "cdq_gcd");
    RecoveredKey rec;
    rec.factors = p < q ? FactorPair{p, q} : FactorPair{q, p};
    rec.phi = (p - 1) * (q - 1);
    try {
        rec.d = mod_inv(e, rec.phi);
    } catch (const NotInvertible&) {
        throw AttackInconsistent("e not invertible mod phi", "ed_mod_phi");
    }
    return rec;
}

inline RsaEvaluator evaluator(const ObfCrtWhiteBox& wb) {
    return {wb.n, [wb](const Nat& c) { return obf_crt_exp(wb, c); }};
}

inline std::string serialize_obfcrt(const ObfCrtWhiteBox& wb) {
    return kv_serialize({{"scheme", "obfcrt"},
                         {"keyname", wb.keyname},
                         {"n", to_hex(wb.n)},
                         {"dp1", to_hex(wb.dp1)},
                         {"dp2", to_hex(wb.dp2)},
                         {"dq1", to_hex(wb.dq1)},
                         {"dq2", to_hex(wb.dq2)},
                         {"p1", to_hex(wb.p1)},
                         {"p2", to_hex(wb.p2)},
                         {"q1", to_hex(wb.q1)},
                         {"q2", to_hex(wb.q2)},
                         {"g1", to_hex(wb.g1)},
                         {"g2", to_hex(wb.g2)},
                         {"g3", to_hex(wb.g3)}});
}

inline ObfCrtWhiteBox parse_obfcrt(std::string_view text) {
    KvReader r(text);
    if (r.expect("scheme") != "obfcrt") throw ParseError("not an obfcrt file", 1);
    ObfCrtWhiteBox wb;
    wb.keyname = r.expect("keyname");
    wb.n = nat_from_hex(r.expect("n"));
    wb.dp1 = nat_from_hex(r.expect("dp1"));
    wb.dp2 = nat_from_hex(r.expect("dp2"));
    wb.dq1 = nat_from_hex(r.expect("dq1"));
    wb.dq2 = nat_from_hex(r.expect("dq2"));
    wb.p1 = nat_from_hex(r.expect("p1"));
    wb.p2 = nat_from_hex(r.expect("p2"));
    wb.q1 = nat_from_hex(r.expect("q1"));
    wb.q2 = nat_from_hex(r.expect("q2"));
    wb.g1 = nat_from_hex(r.expect("g1"));
    wb.g2 = nat_from_hex(r.expect("g2"));
    wb.g3 = nat_from_hex(r.expect("g3"));
    r.expect_end();
    return wb;
}

}  // namespace ipvault
