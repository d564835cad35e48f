#include <catch2/catch_amalgamated.hpp>

#include <chrono>

#include "ipvault/wb_obfcrt.hpp"

using namespace ipvault;

namespace {

const RsaPrivateKey& key512() {
    static auto key = [] {
        Rng r(501);
        return gen_rsa_keypair(512, 65537, r);
    }();
    return key;
}

// Hand-built instance over N = 77 to pin the attack arithmetic on paper-sized
// numbers; the generator itself refuses factors this small.
ObfCrtWhiteBox toy77_whitebox() {
    ObfCrtWhiteBox wb;
    wb.keyname = "toy";
    wb.n = 77;
    wb.dp1 = 0;  // dp = 43 mod 6 = 1
    wb.dp2 = 1;
    wb.dq1 = 1;  // dq = 43 mod 10 = 3
    wb.dq2 = 2;
    wb.p1 = 26;  // 3*7 + 5
    wb.p2 = 5;
    wb.q1 = 37;  // 3*11 + 4
    wb.q2 = 4;
    wb.g1 = 2;  // gamma = 22 = 2 * (5 + 6) mod 77
    wb.g2 = 5;
    wb.g3 = 6;
    return wb;
}

}  // namespace

TEST_CASE("obf_mod") {
    SECTION("hand arithmetic") {
        CHECK(obf_mod(100, 30, 2) == 16);
        CHECK(Nat(100 - 16) % 28 == 0);
    }

    SECTION("inputs below p1 pass through") {
        CHECK(obf_mod(29, 30, 2) == 29);
        CHECK(obf_mod(0, 30, 2) == 0);
    }

    SECTION("p1 = 0 is rejected") { CHECK_THROWS_AS(obf_mod(5, 0, 0), DomainError); }

    SECTION("congruence property for inputs up to N^2") {
        Rng rng(502);
        const auto& key = key512();
        auto wb = gen_obfcrt(key, rng, "k");
        Nat ptilde = wb.p1 - wb.p2;
        Nat n2 = key.n * key.n;
        for (int i = 0; i < 1000; ++i) {
            Nat a = rng.below(n2);
            CHECK(obf_mod(a, wb.p1, wb.p2) % ptilde == a % ptilde);
        }
    }
}

TEST_CASE("gen_obfcrt structure") {
    Rng rng(503);
    const auto& key = key512();
    auto wb = gen_obfcrt(key, rng, "k");

    CHECK(wb.dp1 + wb.dp2 == key.d % (key.p - 1));
    CHECK(wb.dq1 + wb.dq2 == key.d % (key.q - 1));
    CHECK(boost::multiprecision::gcd(wb.p1 - wb.p2, key.n) == key.p);
    CHECK(boost::multiprecision::gcd(wb.q1 - wb.q2, key.n) == key.q);
    CHECK(wb.g1 * (wb.g2 + wb.g3) % key.n == crt_param(key.p, key.q));
    CHECK(bit_length(wb.p2) <= 256);
    CHECK(bit_length(wb.q2) <= 256);
    CHECK(wb.p1 > wb.p2);
    CHECK(wb.q1 > wb.q2);

    SECTION("multipliers are odd 8-bit values of at least 3") {
        Nat k = (wb.p1 - wb.p2) / key.p;
        Nat l = (wb.q1 - wb.q2) / key.q;
        CHECK(k >= 3);
        CHECK(k <= 255);
        CHECK(k % 2 == 1);
        CHECK(l >= 3);
        CHECK(l <= 255);
        CHECK(l % 2 == 1);
    }

    SECTION("small factors are rejected") {
        Rng r2(504);
        auto small = gen_rsa_keypair(64, 65537, r2);
        CHECK_THROWS_AS(gen_obfcrt(small, r2, "k"), DomainError);
        auto borderline = gen_rsa_keypair(510, 65537, r2);  // 255-bit factors
        CHECK_THROWS_AS(gen_obfcrt(borderline, r2, "k"), DomainError);
    }

    SECTION("deterministic for a fixed seed") {
        Rng a(6), b(6);
        auto w1 = gen_obfcrt(key, a, "k");
        auto w2 = gen_obfcrt(key, b, "k");
        CHECK(serialize_obfcrt(w1) == serialize_obfcrt(w2));
    }
}

TEST_CASE("obf_crt_exp") {
    Rng rng(505);
    const auto& key = key512();
    auto wb = gen_obfcrt(key, rng, "k");

    CHECK(obf_crt_exp(wb, 1) == 1);
    CHECK_THROWS_AS(obf_crt_exp(wb, key.n), DomainError);

    SECTION("oracle equivalence against plain and CRT exponentiation") {
        Nat gamma = crt_param(key.p, key.q);
        Nat dp = key.d % (key.p - 1);
        Nat dq = key.d % (key.q - 1);
        for (int i = 0; i < 100; ++i) {
            Nat c = rng.below(key.n);
            Nat expect = mod_pow(c, key.d, key.n);
            CHECK(obf_crt_exp(wb, c) == expect);
            CHECK(crt_exp(c, dp, dq, key.p, key.q, gamma, key.n) == expect);
        }
    }

    SECTION("toy instance agrees with the toy key") {
        auto toy = toy77_whitebox();
        for (unsigned c = 0; c < 77; ++c) CHECK(obf_crt_exp(toy, c) == mod_pow(c, 43, 77));
    }
}

TEST_CASE("obfcrt_attack") {
    Rng rng(506);

    SECTION("toy instance recovery") {
        auto rec = obfcrt_attack(toy77_whitebox(), 7, rng);
        CHECK(rec.factors.p == 7);
        CHECK(rec.factors.q == 11);
        CHECK(rec.d == 43);
    }

    SECTION("512-bit recovery") {
        const auto& key = key512();
        auto wb = gen_obfcrt(key, rng, "k");
        auto rec = obfcrt_attack(wb, key.e, rng);
        CHECK(rec.factors.p == key.p);
        CHECK(rec.factors.q == key.q);
        CHECK(rec.d == key.d);
        CHECK(rec.phi == key.phi);
    }

    SECTION("1024-bit recovery") {
        Rng r2(507);
        auto key = gen_rsa_keypair(1024, 65537, r2);
        auto wb = gen_obfcrt(key, r2, "k");
        auto rec = obfcrt_attack(wb, key.e, r2);
        CHECK(rec.d == key.d);
    }

    SECTION("full pipeline on 100 seeded instances at 512/1024 bits, under 1 s each") {
        for (int i = 0; i < 100; ++i) {
            Rng r(800 + i);
            auto key = gen_rsa_keypair(i % 2 ? 1024 : 512, 65537, r);
            auto wb = gen_obfcrt(key, r, "k");
            auto start = std::chrono::steady_clock::now();
            auto rec = obfcrt_attack(wb, key.e, r);
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            CHECK(rec.factors.p == key.p);
            CHECK(rec.factors.q == key.q);
            CHECK(rec.d == key.d);
            CHECK(secs < 1.0);
        }
    }

    SECTION("corrupted g3 is flagged") {
        const auto& key = key512();
        auto wb = gen_obfcrt(key, rng, "k");
        wb.g3 = (wb.g3 + 1) % wb.n;
        CHECK_THROWS_AS(obfcrt_attack(wb, key.e, rng), AttackInconsistent);
    }

    SECTION("corrupted p1 is flagged with the right verdict") {
        const auto& key = key512();
        auto wb = gen_obfcrt(key, rng, "k");
        wb.p1 += 1;
        try {
            obfcrt_attack(wb, key.e, rng);
            FAIL("expected AttackInconsistent");
        } catch (const AttackInconsistent& e) {
            CHECK(e.verdict() == "ptilde_gcd");
        }
    }

    SECTION("corrupted exponent share is flagged") {
        const auto& key = key512();
        auto wb = gen_obfcrt(key, rng, "k");
        wb.dp1 += 2;
        try {
            obfcrt_attack(wb, key.e, rng);
            FAIL("expected AttackInconsistent");
        } catch (const AttackInconsistent& e) {
            CHECK(e.verdict() == "cdp_gcd");
        }
    }
}

TEST_CASE("obfcrt file format") {
    Rng rng(508);
    auto wb = gen_obfcrt(key512(), rng, "acme");
    auto text = serialize_obfcrt(wb);
    CHECK(text.starts_with("scheme=obfcrt\nkeyname=acme\n"));
    auto back = parse_obfcrt(text);
    CHECK(serialize_obfcrt(back) == text);
    CHECK(back.g3 == wb.g3);
    CHECK_THROWS_AS(parse_obfcrt("scheme=window\n"), ParseError);
}
