#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ipvault/numtheory.hpp"

namespace ipvault {

/// Output of a key-extraction attack: the reconstructed private exponent and
/// the factorization, plus the permutation and randomizers for schemes that
/// hide them.
struct RecoveredKey {
    Nat d;
    FactorPair factors;
    Nat phi;
    std::optional<std::vector<std::uint8_t>> pi;
    std::optional<std::vector<Nat>> rvec;
};

/// Rebuilds a usable private key from an attack result.
inline RsaPrivateKey to_private_key(const RecoveredKey& rec, const Nat& e) {
    RsaPrivateKey key;
    key.n = rec.factors.p * rec.factors.q;
    key.e = e;
    key.d = rec.d;
    key.p = rec.factors.p;
    key.q = rec.factors.q;
    key.phi = rec.phi;
    return key;
}

}  // namespace ipvault
