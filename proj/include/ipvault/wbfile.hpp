#pragma once

#include <string_view>
#include <variant>

#include "ipvault/kvfile.hpp"
#include "ipvault/wb_obfcrt.hpp"
#include "ipvault/wb_splitkey.hpp"
#include "ipvault/wb_window.hpp"

namespace ipvault {

using AnyWhiteBox = std::variant<SplitKeyWhiteBox, ObfCrtWhiteBox, WindowWhiteBox>;

inline std::string whitebox_scheme(std::string_view text) {
    KvLines lines = kv_parse(text);
    if (lines.empty() || lines[0].first != "scheme") throw ParseError("missing scheme field", 1);
    return lines[0].second;
}

inline AnyWhiteBox parse_whitebox(std::string_view text) {
    std::string scheme = whitebox_scheme(text);
    if (scheme == "splitkey") return parse_splitkey(text);
    if (scheme == "obfcrt") return parse_obfcrt(text);
    if (scheme == "window") return parse_window(text);
    throw ParseError("unknown scheme '" + scheme + "'", 1);
}

inline const Nat& whitebox_modulus(const AnyWhiteBox& wb) {
    return std::visit([](const auto& w) -> const Nat& { return w.n; }, wb);
}

inline const std::string& whitebox_keyname(const AnyWhiteBox& wb) {
    return std::visit([](const auto& w) -> const std::string& { return w.keyname; }, wb);
}

inline RsaEvaluator whitebox_evaluator(const AnyWhiteBox& wb) {
    return std::visit([](const auto& w) { return evaluator(w); }, wb);
}

}  // namespace ipvault
