#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ipvault/kvfile.hpp"
#include "ipvault/nat.hpp"
#include "ipvault/recovered_key.hpp"

namespace ipvault {

/// Machine-readable outcome of a key-extraction run. Every verdict must be
/// true for the report to exist; time_ms is the only field exempt from
/// byte-stability across runs.
struct AttackReport {
    std::string scheme;
    std::string keyname;
    std::string method;
    Nat d;
    FactorPair factors;
    std::int64_t time_ms = 0;
    std::vector<std::pair<std::string, bool>> verdicts;
};

inline std::string serialize_report(const AttackReport& r) {
    KvLines lines = {{"scheme", r.scheme},       {"keyname", r.keyname},
                     {"method", r.method},       {"d", to_hex(r.d)},
                     {"p", to_hex(r.factors.p)}, {"q", to_hex(r.factors.q)},
                     {"time_ms", std::to_string(r.time_ms)}};
    for (const auto& [name, ok] : r.verdicts) lines.emplace_back("verdict_" + name, ok ? "true" : "false");
    return kv_serialize(lines);
}

}  // namespace ipvault
