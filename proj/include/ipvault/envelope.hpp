#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipvault/base64.hpp"
#include "ipvault/crypto.hpp"
#include "ipvault/errors.hpp"
#include "ipvault/numtheory.hpp"

namespace ipvault {

struct Right {
    std::string name;
    std::string value;
    friend bool operator==(const Right&, const Right&) = default;
};

struct CommonBlock {
    std::vector<Right> rights;
    friend bool operator==(const CommonBlock&, const CommonBlock&) = default;
};

struct ToolBlock {
    std::string keyowner;
    std::string keyname;
    std::string key_method = "rsa";
    Bytes wrapped_session_key;
    std::vector<Right> tool_rights;
    std::string digest_method = "hmac-sha256";
    Bytes digest;  // 32 bytes
    friend bool operator==(const ToolBlock&, const ToolBlock&) = default;
};

struct DataBlock {
    std::string data_method;  // "aes128-cbc" or "aes256-cbc"
    Bytes payload;            // IV(16) || ciphertext
    friend bool operator==(const DataBlock&, const DataBlock&) = default;
};

struct DigitalEnvelope {
    long version = 1;
    std::string encrypt_agent;
    CommonBlock common;
    std::vector<ToolBlock> tools;
    DataBlock data;
    friend bool operator==(const DigitalEnvelope&, const DigitalEnvelope&) = default;
};

struct SessionKey {
    Bytes bytes;  // 16 or 32
    friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

struct Recipient {
    RsaPublicKey pub;
    std::string keyowner;
    std::string keyname;
    std::vector<Right> tool_rights;
};

struct DecryptResult {
    Bytes plaintext;
    CommonBlock common;
    std::vector<Right> tool_rights;
};

inline std::size_t session_key_bytes(std::string_view data_method) {
    if (data_method == "aes128-cbc") return 16;
    if (data_method == "aes256-cbc") return 32;
    throw DomainError("unknown data method '" + std::string(data_method) + "'");
}

namespace detail {

inline constexpr std::string_view kDirective = "`pragma protect ";

inline bool valid_right_name(std::string_view s) {
    if (s.empty()) return false;
    if (!((s[0] >= 'a' && s[0] <= 'z') || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

inline bool valid_string_value(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= 0x20 && c <= 0x7e && c != '"'; });
}

inline std::string quoted_line(std::string_view directive, std::string_view value) {
    std::string line(kDirective);
    line += directive;
    line += "=\"";
    line += value;
    line += "\"\n";
    return line;
}

inline std::string control_line(const Right& r) {
    std::string line(kDirective);
    line += "control ";
    line += r.name;
    line += "=\"";
    line += r.value;
    line += "\"\n";
    return line;
}

inline void append_block(std::string& out, std::string_view name, const Bytes& data) {
    out += kDirective;
    out += name;
    out += '\n';
    for (const auto& line : base64_wrap64(base64_encode(data))) {
        out += line;
        out += '\n';
    }
}

}  // namespace detail

/// The exact bytes the per-tool HMAC covers: every common control line
/// followed by the tool block's header lines, key_keyowner through its last
/// control line. Digest and key blocks are excluded.
inline std::string canonical_digest_input(const CommonBlock& common, const ToolBlock& tool) {
    std::string out;
    for (const auto& r : common.rights) out += detail::control_line(r);
    out += detail::quoted_line("key_keyowner", tool.keyowner);
    out += detail::quoted_line("key_keyname", tool.keyname);
    out += detail::quoted_line("key_method", tool.key_method);
    for (const auto& r : tool.tool_rights) out += detail::control_line(r);
    return out;
}

inline std::string serialize(const DigitalEnvelope& env) {
    std::string out;
    out += detail::kDirective;
    out += "begin_protected\n";
    out += detail::kDirective;
    out += "version=";
    out += std::to_string(env.version);
    out += '\n';
    out += detail::quoted_line("encrypt_agent", env.encrypt_agent);
    for (const auto& r : env.common.rights) out += detail::control_line(r);
    for (const auto& tool : env.tools) {
        out += detail::quoted_line("key_keyowner", tool.keyowner);
        out += detail::quoted_line("key_keyname", tool.keyname);
        out += detail::quoted_line("key_method", tool.key_method);
        for (const auto& r : tool.tool_rights) out += detail::control_line(r);
        out += detail::quoted_line("digest_method", tool.digest_method);
        detail::append_block(out, "digest_block", tool.digest);
        detail::append_block(out, "key_block", tool.wrapped_session_key);
    }
    out += detail::quoted_line("data_method", env.data.data_method);
    detail::append_block(out, "data_block", env.data.payload);
    out += detail::kDirective;
    out += "end_protected\n";
    return out;
}

namespace detail {

class EnvelopeParser {
public:
    explicit EnvelopeParser(std::string_view text) {
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string_view::npos) throw ParseError("missing trailing newline", count_ + 1);
            lines_.push_back(text.substr(pos, nl - pos));
            pos = nl + 1;
            ++count_;
        }
    }

    DigitalEnvelope parse() {
        DigitalEnvelope env;
        expect_directive("begin_protected");
        env.version = parse_version();
        env.encrypt_agent = expect_quoted("encrypt_agent");
        // Common control lines run until the first tool block.
        while (peek_is_control()) env.common.rights.push_back(take_control());
        while (peek_directive() == "key_keyowner") env.tools.push_back(parse_tool());
        if (env.tools.empty()) throw ParseError("envelope has no tool block", line_no());
        for (std::size_t i = 0; i < env.tools.size(); ++i)
            for (std::size_t j = i + 1; j < env.tools.size(); ++j)
                if (env.tools[i].keyname == env.tools[j].keyname)
                    throw ParseError("duplicate keyname '" + env.tools[i].keyname + "'", line_no());
        env.data.data_method = expect_quoted("data_method");
        session_key_bytes(env.data.data_method);  // validates the token
        env.data.payload = parse_block("data_block");
        if (env.data.payload.size() < 32 || (env.data.payload.size() - 16) % 16 != 0)
            throw ParseError("data block is not IV plus whole ciphertext blocks", line_no());
        expect_directive("end_protected");
        if (next_ != lines_.size()) throw ParseError("content after end_protected", line_no() + 1);
        return env;
    }

private:
    std::vector<std::string_view> lines_;
    std::size_t next_ = 0;
    std::size_t count_ = 0;

    std::size_t line_no() const { return next_; }  // 1-based number of the last consumed line

    std::string_view take_line() {
        if (next_ >= lines_.size()) throw ParseError("unexpected end of file", lines_.size() + 1);
        std::string_view line = lines_[next_++];
        if (line.find('\r') != std::string_view::npos) throw ParseError("CR line ending", line_no());
        return line;
    }

    std::string_view peek_line() const {
        if (next_ >= lines_.size()) return {};
        return lines_[next_];
    }

    // Directive word of the upcoming line, or empty if it is not a directive.
    std::string_view peek_directive() const {
        std::string_view line = peek_line();
        if (!line.starts_with(kDirective)) return {};
        std::string_view rest = line.substr(kDirective.size());
        std::size_t end = rest.find_first_of(" =");
        return rest.substr(0, end);
    }

    bool peek_is_control() const { return peek_directive() == "control"; }

    void expect_directive(std::string_view word) {
        std::string_view line = take_line();
        std::string want = std::string(kDirective) + std::string(word);
        if (line != want) throw ParseError("expected `pragma protect " + std::string(word) + "`", line_no());
    }

    long parse_version() {
        std::string_view line = take_line();
        std::string prefix = std::string(kDirective) + "version=";
        if (!line.starts_with(prefix)) throw ParseError("expected version directive", line_no());
        std::string_view num = line.substr(prefix.size());
        if (num.empty() || (num.size() > 1 && num[0] == '0') ||
            !std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
            num.size() > 9)
            throw ParseError("bad version number", line_no());
        return std::stol(std::string(num));
    }

    std::string expect_quoted(std::string_view directive) {
        std::string_view line = take_line();
        std::string prefix = std::string(kDirective) + std::string(directive) + "=\"";
        if (!line.starts_with(prefix) || !line.ends_with('"') || line.size() < prefix.size() + 1)
            throw ParseError("expected " + std::string(directive) + "=\"...\"", line_no());
        std::string_view value = line.substr(prefix.size(), line.size() - prefix.size() - 1);
        if (!valid_string_value(value)) throw ParseError("bad characters in string value", line_no());
        return std::string(value);
    }

    Right take_control() {
        std::string_view line = take_line();
        std::string prefix = std::string(kDirective) + "control ";
        if (!line.starts_with(prefix)) throw ParseError("expected control line", line_no());
        std::string_view rest = line.substr(prefix.size());
        std::size_t eq = rest.find("=\"");
        if (eq == std::string_view::npos || !rest.ends_with('"') || rest.size() < eq + 3)
            throw ParseError("expected control name=\"value\"", line_no());
        std::string_view name = rest.substr(0, eq);
        std::string_view value = rest.substr(eq + 2, rest.size() - eq - 3);
        if (!valid_right_name(name)) throw ParseError("bad right name", line_no());
        if (!valid_string_value(value)) throw ParseError("bad right value", line_no());
        return {std::string(name), std::string(value)};
    }

    Bytes parse_block(std::string_view name) {
        expect_directive(name);
        std::string b64;
        std::size_t lines_read = 0;
        std::size_t last_len = 0;
        while (next_ < lines_.size() && !peek_line().starts_with("`")) {
            std::string_view line = take_line();
            if (lines_read > 0 && last_len != 64)
                throw ParseError("base64 must wrap at exactly 64 columns", line_no() - 1);
            if (line.empty() || line.size() > 64) throw ParseError("bad base64 line length", line_no());
            last_len = line.size();
            b64 += line;
            ++lines_read;
        }
        if (lines_read == 0) throw ParseError("empty " + std::string(name), line_no() + 1);
        try {
            return base64_decode(b64);
        } catch (const DomainError& e) {
            throw ParseError(e.what(), line_no());
        }
    }

    ToolBlock parse_tool() {
        ToolBlock tool;
        tool.keyowner = expect_quoted("key_keyowner");
        tool.keyname = expect_quoted("key_keyname");
        tool.key_method = expect_quoted("key_method");
        if (tool.key_method != "rsa") throw ParseError("unsupported key method", line_no());
        while (peek_is_control()) tool.tool_rights.push_back(take_control());
        tool.digest_method = expect_quoted("digest_method");
        if (tool.digest_method != "hmac-sha256") throw ParseError("unsupported digest method", line_no());
        tool.digest = parse_block("digest_block");
        if (tool.digest.size() != 32) throw ParseError("digest must be 32 bytes", line_no());
        tool.wrapped_session_key = parse_block("key_block");
        return tool;
    }
};

}  // namespace detail

inline DigitalEnvelope parse(std::string_view text) { return detail::EnvelopeParser(text).parse(); }

/// Hybrid encryption: one fresh session key wrapped for every recipient,
/// HMAC digests over the rights, AES-CBC over the padded IP. RNG draw order
/// is fixed (session key, per-recipient padding, IV) so a seed pins the
/// output bytes.
inline DigitalEnvelope encrypt_ip(const Bytes& plaintext, const CommonBlock& common,
                                  const std::vector<Recipient>& recipients,
                                  const std::string& data_method, Rng& rng,
                                  const std::string& encrypt_agent = "ipvault 1.0",
                                  long version = 1) {
    if (plaintext.empty()) throw DomainError("encrypt_ip: empty IP data");
    if (recipients.empty()) throw DomainError("encrypt_ip: no recipients");
    std::size_t key_bytes = session_key_bytes(data_method);
    for (const auto& r : common.rights)
        if (!detail::valid_right_name(r.name) || !detail::valid_string_value(r.value))
            throw DomainError("encrypt_ip: bad common right '" + r.name + "'");
    for (std::size_t i = 0; i < recipients.size(); ++i) {
        const auto& rec = recipients[i];
        if (!detail::valid_string_value(rec.keyname) || rec.keyname.empty() ||
            !detail::valid_string_value(rec.keyowner))
            throw DomainError("encrypt_ip: bad recipient strings");
        for (const auto& r : rec.tool_rights)
            if (!detail::valid_right_name(r.name) || !detail::valid_string_value(r.value))
                throw DomainError("encrypt_ip: bad tool right '" + r.name + "'");
        if (byte_length(rec.pub.n) < key_bytes + 11)
            throw KeyTooSmall("encrypt_ip: modulus of '" + rec.keyname + "' too small");
        for (std::size_t j = i + 1; j < recipients.size(); ++j)
            if (rec.keyname == recipients[j].keyname)
                throw DomainError("encrypt_ip: duplicate keyname '" + rec.keyname + "'");
    }

    DigitalEnvelope env;
    env.version = version;
    env.encrypt_agent = encrypt_agent;
    env.common = common;
    env.data.data_method = data_method;

    Bytes session = rng.bytes(key_bytes);
    for (const auto& rec : recipients) {
        ToolBlock tool;
        tool.keyowner = rec.keyowner;
        tool.keyname = rec.keyname;
        tool.tool_rights = rec.tool_rights;
        std::size_t mod_bytes = byte_length(rec.pub.n);
        Bytes eb = pkcs1v15_wrap(session, mod_bytes, rng);
        Nat c = mod_pow(nat_from_bytes(eb), rec.pub.e, rec.pub.n);
        tool.wrapped_session_key = to_bytes(c, mod_bytes);
        tool.digest = hmac_sha256(session, canonical_digest_input(common, tool));
        env.tools.push_back(std::move(tool));
    }

    Bytes iv = rng.bytes(16);
    Bytes ct = aes_cbc_encrypt(session, iv, pkcs7_pad(plaintext));
    env.data.payload = iv;
    env.data.payload.insert(env.data.payload.end(), ct.begin(), ct.end());
    return env;
}

inline SessionKey unwrap_session_key(const ToolBlock& tool, const RsaEvaluator& eval) {
    std::size_t mod_bytes = byte_length(eval.n);
    if (tool.wrapped_session_key.size() != mod_bytes)
        throw UnwrapError("unwrap: wrapped key length does not match modulus");
    Nat c = nat_from_bytes(tool.wrapped_session_key);
    if (c >= eval.n) throw UnwrapError("unwrap: ciphertext out of range");
    Bytes eb = to_bytes(eval.apply(c), mod_bytes);
    Bytes msg = pkcs1v15_unwrap(eb);
    if (msg.size() != 16 && msg.size() != 32) throw UnwrapError("unwrap: session key must be 16 or 32 bytes");
    return {std::move(msg)};
}

inline SessionKey unwrap_session_key(const ToolBlock& tool, const RsaPrivateKey& key) {
    return unwrap_session_key(tool, evaluator(key));
}

inline bool verify_digest(const SessionKey& session, const CommonBlock& common, const ToolBlock& tool) {
    return tool.digest == hmac_sha256(session.bytes, canonical_digest_input(common, tool));
}

inline DecryptResult decrypt_ip(const DigitalEnvelope& env, const RsaEvaluator& eval,
                                std::string_view keyname) {
    const ToolBlock* tool = nullptr;
    for (const auto& t : env.tools)
        if (t.keyname == keyname) {
            tool = &t;
            break;
        }
    if (!tool) throw NoSuchToolBlock("no tool block for keyname '" + std::string(keyname) + "'");
    SessionKey session = unwrap_session_key(*tool, eval);
    if (!verify_digest(session, env.common, *tool))
        throw DigestMismatch("digest mismatch for keyname '" + std::string(keyname) + "'");
    if (session.bytes.size() != session_key_bytes(env.data.data_method))
        throw UnwrapError("session key size does not match data method");
    Bytes iv(env.data.payload.begin(), env.data.payload.begin() + 16);
    Bytes ct(env.data.payload.begin() + 16, env.data.payload.end());
    Bytes padded = aes_cbc_decrypt(session.bytes, iv, ct);
    return {pkcs7_unpad(padded), env.common, tool->tool_rights};
}

inline DecryptResult decrypt_ip(const DigitalEnvelope& env, const RsaPrivateKey& key,
                                std::string_view keyname) {
    return decrypt_ip(env, evaluator(key), keyname);
}

}  // namespace ipvault
