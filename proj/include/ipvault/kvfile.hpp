#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ipvault/errors.hpp"

namespace ipvault {

/// name=value lines, LF endings, order preserved. Shared by the keystore,
/// the white-box key files and attack reports.
using KvLines = std::vector<std::pair<std::string, std::string>>;

inline KvLines kv_parse(std::string_view text) {
    KvLines out;
    std::size_t line_no = 1;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) throw ParseError("kv: missing trailing newline", line_no);
        std::string_view line = text.substr(pos, nl - pos);
        if (line.find('\r') != std::string_view::npos) throw ParseError("kv: CR not allowed", line_no);
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos || eq == 0) throw ParseError("kv: expected name=value", line_no);
        out.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
        pos = nl + 1;
        ++line_no;
    }
    return out;
}

inline std::string kv_serialize(const KvLines& lines) {
    std::string out;
    for (const auto& [k, v] : lines) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

/// Fetches fields in the fixed order the formats declare; any deviation is
/// a parse error.
class KvReader {
public:
    explicit KvReader(std::string_view text) : lines_(kv_parse(text)) {}
    explicit KvReader(KvLines lines) : lines_(std::move(lines)) {}

    const std::string& expect(std::string_view name) {
        if (next_ >= lines_.size()) throw ParseError("kv: missing field '" + std::string(name) + "'", next_ + 1);
        if (lines_[next_].first != name)
            throw ParseError("kv: expected field '" + std::string(name) + "', got '" + lines_[next_].first + "'",
                             next_ + 1);
        return lines_[next_++].second;
    }

    bool at_end() const { return next_ == lines_.size(); }

    void expect_end() const {
        if (!at_end()) throw ParseError("kv: unexpected field '" + lines_[next_].first + "'", next_ + 1);
    }

    const KvLines& lines() const { return lines_; }

private:
    KvLines lines_;
    std::size_t next_ = 0;
};

}  // namespace ipvault
