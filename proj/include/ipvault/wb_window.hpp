#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ipvault/errors.hpp"
#include "ipvault/kvfile.hpp"
#include "ipvault/numtheory.hpp"
#include "ipvault/recovered_key.hpp"
#include "ipvault/rng.hpp"

namespace ipvault {

/// Dense matrix over Z_N, row-major, dimensions fixed at construction.
class ModMatrix {
public:
    ModMatrix(std::size_t rows, std::size_t cols, Nat modulus)
        : rows_(rows), cols_(cols), mod_(std::move(modulus)), entries_(rows * cols) {
        if (rows_ == 0 || cols_ == 0) throw DomainError("ModMatrix: empty dimensions");
        if (mod_ < 2) throw DomainError("ModMatrix: modulus < 2");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const Nat& modulus() const { return mod_; }

    const Nat& at(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

    void set(std::size_t i, std::size_t j, const Nat& v) {
        Nat r = v % mod_;
        if (r < 0) r += mod_;
        entries_[i * cols_ + j] = std::move(r);
    }

    ModMatrix mul(const ModMatrix& rhs) const {
        if (cols_ != rhs.rows_ || mod_ != rhs.mod_) throw DomainError("ModMatrix: shape mismatch");
        ModMatrix out(rows_, rhs.cols_, mod_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < rhs.cols_; ++j) {
                Nat acc = 0;
                for (std::size_t k = 0; k < cols_; ++k) acc += at(i, k) * rhs.at(k, j);
                out.entries_[i * out.cols_ + j] = acc % mod_;
            }
        return out;
    }

    std::vector<Nat> mul_vec(const std::vector<Nat>& v) const {
        if (v.size() != cols_) throw DomainError("ModMatrix: vector length mismatch");
        std::vector<Nat> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            Nat acc = 0;
            for (std::size_t k = 0; k < cols_; ++k) acc += at(i, k) * v[k];
            out[i] = acc % mod_;
        }
        return out;
    }

    /// Inverse of a lower-triangular matrix by forward substitution; the
    /// diagonal must consist of units of Z_N.
    ModMatrix inverse_lower_triangular() const {
        if (rows_ != cols_) throw DomainError("ModMatrix: not square");
        ModMatrix x(rows_, cols_, mod_);
        std::vector<Nat> diag_inv(rows_);
        for (std::size_t i = 0; i < rows_; ++i) diag_inv[i] = mod_inv(at(i, i), mod_);
        for (std::size_t j = 0; j < cols_; ++j) {
            x.set(j, j, diag_inv[j]);
            for (std::size_t i = j + 1; i < rows_; ++i) {
                Nat acc = 0;
                for (std::size_t t = j; t < i; ++t) acc += at(i, t) * x.at(t, j);
                x.set(i, j, mod_ - (acc % mod_) * diag_inv[i] % mod_);
            }
        }
        return x;
    }

    friend bool operator==(const ModMatrix&, const ModMatrix&) = default;

private:
    std::size_t rows_, cols_;
    Nat mod_;
    std::vector<Nat> entries_;
};

inline constexpr unsigned kWindowWidth = 5;
inline constexpr std::size_t kWindowTable = 1u << kWindowWidth;  // 32

/// Little-endian base-2^width digits of d, fixed length. Leading zero
/// chunks keep the count independent of d itself.
inline std::vector<std::uint8_t> chunk_key(const Nat& d, std::size_t count,
                                           unsigned width = kWindowWidth) {
    if (d < 0 || bit_length(d) > width * count) throw DomainError("chunk_key: value too large");
    std::vector<std::uint8_t> chunks(count);
    Nat rest = d;
    const Nat mask = (Nat(1) << width) - 1;
    for (std::size_t i = 0; i < count; ++i) {
        chunks[i] = static_cast<std::uint8_t>(rest & mask);
        rest >>= width;
    }
    return chunks;
}

inline Nat assemble_chunks(const std::vector<std::uint8_t>& chunks, unsigned width = kWindowWidth) {
    Nat d = 0;
    for (std::size_t i = chunks.size(); i-- > 0;) d = (d << width) | Nat(chunks[i]);
    return d;
}

/// Windowed exponentiation over a precomputed table: the chunks select table
/// entries, interleaved with raisings to the table size.
inline Nat window_exp(const std::vector<Nat>& table, const std::vector<std::uint8_t>& chunks,
                      const Nat& n) {
    if (n < 2) throw DomainError("window_exp: modulus < 2");
    if (table.empty() || chunks.empty()) throw DomainError("window_exp: empty input");
    const Nat table_size = static_cast<unsigned>(table.size());
    for (auto c : chunks)
        if (c >= table.size()) throw DomainError("window_exp: chunk out of range");
    Nat m = table[chunks.back()] % n;
    for (std::size_t i = chunks.size() - 1; i-- > 0;) {
        m = mod_pow(m, table_size, n) * (table[chunks[i]] % n) % n;
    }
    return m;
}

/// Lower-triangular change-of-basis matrix with M[i][j] = C(i,j) a^j b^(i-j),
/// so M * (1, c, ..., c^(size-1))^T = ((a c + b)^0, ..., (a c + b)^(size-1))^T.
inline ModMatrix build_m(const Nat& alpha, const Nat& beta, const Nat& n,
                         std::size_t size = kWindowTable + 1) {
    if (size < 1 || size > 64) throw DomainError("build_m: unsupported size");
    ModMatrix m(size, size, n);
    std::vector<Nat> apow(size), bpow(size);
    apow[0] = 1 % n;
    bpow[0] = 1 % n;
    for (std::size_t i = 1; i < size; ++i) {
        apow[i] = apow[i - 1] * (alpha % n) % n;
        bpow[i] = bpow[i - 1] * (beta % n) % n;
    }
    std::vector<std::uint64_t> binom(size, 0);  // row i of Pascal's triangle, in place
    binom[0] = 1;
    for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = i; j-- > 1;) binom[j] += binom[j - 1];
        if (i > 0) binom[i] = 1;
        for (std::size_t j = 0; j <= i; ++j) m.set(i, j, Nat(binom[j]) * apow[j] % n * bpow[i - j]);
    }
    return m;
}

/// Generator/test-side secrets; never part of a shipped white-box.
struct WindowSecrets {
    std::vector<std::uint8_t> pi;  // permutation of the table indices
    std::vector<Nat> rvec;         // units of Z_N
    Nat d;
};

/// The shipped bundle: an affine map (A, t', alpha, beta) that expands a
/// ciphertext into a permuted, randomized power table, the permuted chunk
/// vector dhat, and the unmasking constant.
struct WindowWhiteBox {
    std::string keyname;
    Nat n;
    ModMatrix a;  // table_size x (table_size + 1)
    std::vector<Nat> tprime;
    Nat alpha, beta;
    std::vector<std::uint8_t> dhat;
    Nat r_const;

    std::size_t table_size() const { return a.rows(); }
};

namespace detail {

inline bool is_permutation(const std::vector<std::uint8_t>& pi) {
    std::vector<bool> seen(pi.size(), false);
    for (auto v : pi) {
        if (v >= pi.size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

inline unsigned width_of(std::size_t table_size) {
    unsigned w = 0;
    while ((std::size_t{1} << w) < table_size) ++w;
    if ((std::size_t{1} << w) != table_size) throw DomainError("table size must be a power of two");
    return w;
}

}  // namespace detail

/// Deterministic construction from explicit secrets. A is the unique matrix
/// with A*M equal to the permuted unit rows extended by t', obtained as
/// T * M^-1.
inline WindowWhiteBox build_window_whitebox(const Nat& n, const Nat& d, const WindowSecrets& secrets,
                                            const std::vector<Nat>& tprime, const Nat& alpha,
                                            const Nat& beta, std::string keyname = {}) {
    std::size_t s = secrets.pi.size();
    unsigned width = detail::width_of(s);
    if (secrets.rvec.size() != s || tprime.size() != s) throw DomainError("window: size mismatch");
    if (!detail::is_permutation(secrets.pi)) throw DomainError("window: pi is not a permutation");
    ModMatrix m = build_m(alpha, beta, n, s + 1);
    ModMatrix t(s, s + 1, n);
    for (std::size_t i = 0; i < s; ++i) {
        t.set(i, secrets.pi[i], secrets.rvec[secrets.pi[i]]);
        t.set(i, s, tprime[i]);
    }
    WindowWhiteBox wb{std::move(keyname), n, t.mul(m.inverse_lower_triangular()), {}, alpha, beta, {}, 0};
    for (const auto& v : tprime) wb.tprime.push_back(v % n);

    std::size_t chunk_count = (bit_length(n) + width - 1) / width;
    auto dchunks = chunk_key(d, chunk_count, width);
    std::vector<std::uint8_t> pi_inv(s);
    for (std::size_t i = 0; i < s; ++i) pi_inv[secrets.pi[i]] = static_cast<std::uint8_t>(i);
    wb.dhat.resize(chunk_count);
    for (std::size_t i = 0; i < chunk_count; ++i) wb.dhat[i] = pi_inv[dchunks[i]];
    // The execution mask picked up by Exp is prod r_{d_i}^(32^i); its inverse
    // restores the plaintext.
    wb.r_const = mod_inv(window_exp(secrets.rvec, dchunks, n), n);
    return wb;
}

/// Fresh white-box: uniform permutation, randomizers, affine constants.
inline std::pair<WindowWhiteBox, WindowSecrets> gen_window(const RsaPrivateKey& key, Rng& rng,
                                                           std::string keyname = {}) {
    if (bit_length(key.n) < 37) throw DomainError("gen_window: modulus must have at least 37 bits");
    WindowSecrets secrets;
    secrets.d = key.d;
    secrets.pi.resize(kWindowTable);
    for (std::size_t i = 0; i < kWindowTable; ++i) secrets.pi[i] = static_cast<std::uint8_t>(i);
    for (std::size_t i = kWindowTable - 1; i > 0; --i) {
        auto j = static_cast<std::size_t>(rng.below(Nat(i + 1)));
        std::swap(secrets.pi[i], secrets.pi[j]);
    }
    for (std::size_t i = 0; i < kWindowTable; ++i) secrets.rvec.push_back(rng.unit_mod(key.n));
    std::vector<Nat> tprime;
    for (std::size_t i = 0; i < kWindowTable; ++i) tprime.push_back(rng.below(key.n));
    Nat alpha = rng.unit_mod(key.n);
    Nat beta = rng.below(key.n);
    WindowWhiteBox wb =
        build_window_whitebox(key.n, key.d, secrets, tprime, alpha, beta, std::move(keyname));
    return {std::move(wb), std::move(secrets)};
}

/// Expands c into the randomized permuted power table A*s + t with
/// s_i = (alpha c + beta)^i and t = -c^32 * t'.
inline std::vector<Nat> obfusc_precomp(const WindowWhiteBox& wb, const Nat& c) {
    if (c < 0 || c >= wb.n) throw DomainError("obfusc_precomp: ciphertext out of range");
    std::size_t s_len = wb.table_size() + 1;
    std::vector<Nat> s(s_len);
    s[0] = 1 % wb.n;  // 0^0 = 1 so the expansion is defined at alpha*c + beta = 0
    Nat x = (wb.alpha * c + wb.beta) % wb.n;
    for (std::size_t i = 1; i < s_len; ++i) s[i] = s[i - 1] * x % wb.n;
    std::vector<Nat> out = wb.a.mul_vec(s);
    Nat chi = mod_pow(c, Nat(static_cast<unsigned>(wb.table_size())), wb.n);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (out[i] + wb.n - chi * wb.tprime[i] % wb.n) % wb.n;
    return out;
}

inline Nat window_decrypt(const WindowWhiteBox& wb, const Nat& c) {
    return wb.r_const * window_exp(obfusc_precomp(wb, c), wb.dhat, wb.n) % wb.n;
}

inline RsaEvaluator evaluator(const WindowWhiteBox& wb) {
    return {wb.n, [wb](const Nat& c) { return window_decrypt(wb, c); }};
}

namespace detail {

/// Common tail of both attacks: permute dhat back to the key chunks, factor,
/// and sanity-check the result.
inline RecoveredKey finish_window_attack(const WindowWhiteBox& wb, std::vector<std::uint8_t> pi,
                                         std::vector<Nat> rvec, const Nat& e, Rng& rng,
                                         unsigned width) {
    std::vector<std::uint8_t> dchunks(wb.dhat.size());
    for (std::size_t i = 0; i < wb.dhat.size(); ++i) {
        if (wb.dhat[i] >= pi.size()) throw AttackInconsistent("dhat entry out of range", "dhat_range");
        dchunks[i] = pi[wb.dhat[i]];
    }
    RecoveredKey rec;
    rec.d = assemble_chunks(dchunks, width);
    rec.factors = miller_factor(wb.n, e, rec.d, rng);
    rec.phi = (rec.factors.p - 1) * (rec.factors.q - 1);
    if ((e * rec.d) % rec.phi != 1) throw AttackInconsistent("e*d != 1 mod phi", "ed_mod_phi");
    rec.pi = std::move(pi);
    rec.rvec = std::move(rvec);
    return rec;
}

}  // namespace detail

/// Reads the permutation and randomizers straight out of A*M: each row must
/// be a single scaled unit vector extended by the matching t' entry.
inline std::pair<std::vector<std::uint8_t>, std::vector<Nat>> extract_window_secrets(
    const WindowWhiteBox& wb) {
    std::size_t s = wb.table_size();
    ModMatrix am = wb.a.mul(build_m(wb.alpha, wb.beta, wb.n, s + 1));
    std::vector<std::uint8_t> pi(s);
    std::vector<Nat> rvec(s);
    for (std::size_t i = 0; i < s; ++i) {
        std::size_t nonzero = 0, col = 0;
        for (std::size_t j = 0; j < s; ++j)
            if (am.at(i, j) != 0) {
                ++nonzero;
                col = j;
            }
        if (nonzero != 1)
            throw AttackInconsistent("A*M row is not a scaled unit vector", "am_structure");
        if (am.at(i, s) != wb.tprime[i])
            throw AttackInconsistent("A*M last column does not match t'", "tprime_match");
        pi[i] = static_cast<std::uint8_t>(col);
        rvec[col] = am.at(i, col);
    }
    if (!detail::is_permutation(pi))
        throw AttackInconsistent("extracted indices are not a permutation", "pi_permutation");
    return {std::move(pi), std::move(rvec)};
}

/// Structure validation only (the Theorem check): throws AttackInconsistent
/// if A*M does not have the permuted unit-row shape.
inline void check_window_structure(const WindowWhiteBox& wb) { extract_window_secrets(wb); }

/// Key extraction from the hard-coded values alone.
inline RecoveredKey attack_matrix(const WindowWhiteBox& wb, const Nat& e, Rng& rng) {
    auto [pi, rvec] = extract_window_secrets(wb);
    return detail::finish_window_attack(wb, std::move(pi), std::move(rvec), e, rng,
                                        detail::width_of(wb.table_size()));
}

/// Key extraction from two oracle runs: precomp(1) yields the permuted
/// randomizers, precomp(2) adds exact powers of two whose logs spell out pi.
inline RecoveredKey attack_chosen_ciphertext(const WindowWhiteBox& wb, const Nat& e, Rng& rng) {
    std::size_t s = wb.table_size();
    if ((Nat(1) << (s - 1)) >= wb.n)
        throw DomainError("attack_chosen_ciphertext: modulus too small for unreduced powers of two");
    std::vector<Nat> v1 = obfusc_precomp(wb, 1);
    std::vector<Nat> v2 = obfusc_precomp(wb, 2);
    std::vector<std::uint8_t> pi(s);
    std::vector<Nat> rvec(s);
    for (std::size_t i = 0; i < s; ++i) {
        Nat inv;
        try {
            inv = mod_inv(v1[i], wb.n);
        } catch (const NotInvertible&) {
            throw AttackInconsistent("randomizer is not invertible", "rvec_unit");
        }
        Nat w = v2[i] * inv % wb.n;
        std::size_t lg = w == 0 ? 0 : bit_length(w) - 1;
        if (w == 0 || lg >= s || (Nat(1) << lg) != w)
            throw AttackInconsistent("quotient is not a small power of two", "power_of_two");
        pi[i] = static_cast<std::uint8_t>(lg);
        rvec[lg] = v1[i];
    }
    if (!detail::is_permutation(pi))
        throw AttackInconsistent("extracted logs are not a permutation", "pi_permutation");
    return detail::finish_window_attack(wb, std::move(pi), std::move(rvec), e, rng,
                                        detail::width_of(s));
}

namespace detail {

inline std::string join_csv_hex(const std::vector<Nat>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += to_hex(v[i]);
    }
    return out;
}

inline std::vector<Nat> split_csv_hex(std::string_view s, std::size_t expect) {
    std::vector<Nat> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string_view item = s.substr(pos, comma == std::string_view::npos ? comma : comma - pos);
        out.push_back(nat_from_hex(item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (out.size() != expect) throw ParseError("wrong number of csv values", 1);
    return out;
}

inline std::string join_csv_dec(const std::vector<std::uint8_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(static_cast<unsigned>(v[i]));
    }
    return out;
}

inline std::vector<std::uint8_t> split_csv_dec(std::string_view s, unsigned max_value) {
    std::vector<std::uint8_t> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string_view item = s.substr(pos, comma == std::string_view::npos ? comma : comma - pos);
        if (item.empty() || item.size() > 3) throw ParseError("bad decimal chunk", 1);
        unsigned v = 0;
        for (char c : item) {
            if (c < '0' || c > '9') throw ParseError("bad decimal chunk", 1);
            v = v * 10 + static_cast<unsigned>(c - '0');
        }
        if (item.size() > 1 && item[0] == '0') throw ParseError("bad decimal chunk", 1);
        if (v >= max_value) throw ParseError("chunk out of range", 1);
        out.push_back(static_cast<std::uint8_t>(v));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace detail

inline std::string serialize_window(const WindowWhiteBox& wb) {
    if (wb.table_size() != kWindowTable) throw DomainError("window file format is fixed to 32 rows");
    KvLines lines = {{"scheme", "window"},      {"keyname", wb.keyname},
                     {"n", to_hex(wb.n)},       {"alpha", to_hex(wb.alpha)},
                     {"beta", to_hex(wb.beta)}, {"rconst", to_hex(wb.r_const)},
                     {"dhat", detail::join_csv_dec(wb.dhat)},
                     {"tprime", detail::join_csv_hex(wb.tprime)}};
    for (std::size_t i = 0; i < kWindowTable; ++i) {
        std::vector<Nat> row;
        for (std::size_t j = 0; j < kWindowTable + 1; ++j) row.push_back(wb.a.at(i, j));
        lines.emplace_back("a" + std::to_string(i), detail::join_csv_hex(row));
    }
    return kv_serialize(lines);
}

inline WindowWhiteBox parse_window(std::string_view text) {
    KvReader r(text);
    if (r.expect("scheme") != "window") throw ParseError("not a window file", 1);
    std::string keyname = r.expect("keyname");
    Nat n = nat_from_hex(r.expect("n"));
    if (n < 2) throw ParseError("bad modulus", 1);
    Nat alpha = nat_from_hex(r.expect("alpha"));
    Nat beta = nat_from_hex(r.expect("beta"));
    Nat rconst = nat_from_hex(r.expect("rconst"));
    auto dhat = detail::split_csv_dec(r.expect("dhat"), kWindowTable);
    if (dhat.size() != (bit_length(n) + kWindowWidth - 1) / kWindowWidth)
        throw ParseError("dhat length does not match the modulus width", 1);
    auto tprime = detail::split_csv_hex(r.expect("tprime"), kWindowTable);
    ModMatrix a(kWindowTable, kWindowTable + 1, n);
    for (std::size_t i = 0; i < kWindowTable; ++i) {
        auto row = detail::split_csv_hex(r.expect("a" + std::to_string(i)), kWindowTable + 1);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] >= n) throw ParseError("matrix entry not reduced", 1);
            a.set(i, j, row[j]);
        }
    }
    r.expect_end();
    for (const auto& v : tprime)
        if (v >= n) throw ParseError("tprime entry not reduced", 1);
    if (alpha >= n || beta >= n || rconst >= n) throw ParseError("constant not reduced", 1);
    return {std::move(keyname), std::move(n), std::move(a), std::move(tprime),
            std::move(alpha),   std::move(beta), std::move(dhat), std::move(rconst)};
}

inline std::string serialize_window_secrets(const std::string& keyname, const WindowSecrets& sec) {
    return kv_serialize({{"scheme", "window-secrets"},
                         {"keyname", keyname},
                         {"pi", detail::join_csv_dec(sec.pi)},
                         {"rvec", detail::join_csv_hex(sec.rvec)},
                         {"d", to_hex(sec.d)}});
}

inline WindowSecrets parse_window_secrets(std::string_view text) {
    KvReader r(text);
    if (r.expect("scheme") != "window-secrets") throw ParseError("not a window secrets file", 1);
    r.expect("keyname");
    WindowSecrets sec;
    sec.pi = detail::split_csv_dec(r.expect("pi"), kWindowTable);
    sec.rvec = detail::split_csv_hex(r.expect("rvec"), kWindowTable);
    sec.d = nat_from_hex(r.expect("d"));
    r.expect_end();
    if (sec.pi.size() != kWindowTable || !detail::is_permutation(sec.pi))
        throw ParseError("pi is not a permutation of 0..31", 1);
    return sec;
}

}  // namespace ipvault
