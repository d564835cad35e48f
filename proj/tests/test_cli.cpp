#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>

#include "ipvault/ipvault.hpp"

namespace fs = std::filesystem;
using namespace ipvault;

namespace {

struct RunResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

RunResult run(const std::string& store, const std::string& args) {
    std::string cmd = "IPVAULT_STORE='" + store + "' '" + IPVAULT_BIN + "' " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char chunk[512];
    while (std::size_t n = std::fread(chunk, 1, sizeof chunk, pipe)) out.append(chunk, n);
    int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, std::move(out)};
}

struct Workspace {
    fs::path dir;
    std::string store;
    Workspace() {
        dir = fs::temp_directory_path() / ("ipvault-cli-" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
        store = (dir / "store").string();
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

// Drop the wall-time line so reports can be compared byte for byte.
std::string without_time(const std::string& report) {
    std::string out;
    for (const auto& [k, v] : kv_parse(report))
        if (k != "time_ms") out += k + "=" + v + "\n";
    return out;
}

}  // namespace

TEST_CASE("cli keygen") {
    Workspace ws;

    SECTION("creates key files and prints the fingerprint") {
        auto r = run(ws.store, "keygen --bits 512 --keyname acme --seed 7");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("keyname=acme\n") != std::string::npos);
        CHECK(r.output.find("fingerprint=") != std::string::npos);
        CHECK(fs::exists(fs::path(ws.store) / "acme.prv"));
        CHECK(fs::exists(fs::path(ws.store) / "acme.pub"));

        auto again = run(ws.store, "keygen --bits 512 --keyname acme --seed 7");
        CHECK(again.exit_code == 2);
    }

    SECTION("strict mode rejects sub-2048-bit keys") {
        auto r = run(ws.store, "keygen --strict --bits 1024 --keyname big --seed 1");
        CHECK(r.exit_code == 64);
        CHECK_FALSE(fs::exists(fs::path(ws.store) / "big.prv"));
    }

    SECTION("bad flags exit 64") {
        CHECK(run(ws.store, "keygen --bits 512").exit_code == 64);
        CHECK(run(ws.store, "nonsense").exit_code == 64);
    }

    SECTION("same seed gives byte-identical key files") {
        Workspace other;
        REQUIRE(run(ws.store, "keygen --bits 512 --keyname acme --seed 9").exit_code == 0);
        REQUIRE(run(other.store, "keygen --bits 512 --keyname acme --seed 9").exit_code == 0);
        CHECK(read_file(fs::path(ws.store) / "acme.prv") ==
              read_file(fs::path(other.store) / "acme.prv"));
        CHECK(read_file(fs::path(ws.store) / "acme.pub") ==
              read_file(fs::path(other.store) / "acme.pub"));
    }
}

TEST_CASE("cli wbgen") {
    Workspace ws;
    REQUIRE(run(ws.store, "keygen --bits 512 --keyname acme --seed 11").exit_code == 0);

    SECTION("splitkey file reconstructs a working exponent") {
        auto r = run(ws.store, "wbgen --scheme splitkey --keyname acme --out " + ws.path("acme.wb") +
                                   " --seed 3");
        REQUIRE(r.exit_code == 0);
        auto wb = parse_splitkey(read_file(ws.path("acme.wb")));
        auto key = Keystore(ws.store).load_private("acme");
        CHECK(splitkey_exponent(wb) % key.phi == key.d % key.phi);
    }

    SECTION("unknown scheme exits 64") {
        CHECK(run(ws.store, "wbgen --scheme bogus --keyname acme --out " + ws.path("x")).exit_code ==
              64);
    }

    SECTION("obfcrt on a small key exits 65") {
        REQUIRE(run(ws.store, "keygen --bits 64 --keyname tiny --seed 1").exit_code == 0);
        auto r = run(ws.store, "wbgen --scheme obfcrt --keyname tiny --out " + ws.path("tiny.wb"));
        CHECK(r.exit_code == 65);
        CHECK(r.output.find("factors too small") != std::string::npos);
    }

    SECTION("window emits secrets only when asked") {
        REQUIRE(run(ws.store, "wbgen --scheme window --keyname acme --out " + ws.path("w.wb") +
                                  " --seed 5")
                    .exit_code == 0);
        CHECK_FALSE(fs::exists(ws.path("w.wb.secrets")));
        REQUIRE(run(ws.store, "wbgen --scheme window --keyname acme --out " + ws.path("w2.wb") +
                                  " --seed 5 --emit-secrets")
                    .exit_code == 0);
        REQUIRE(fs::exists(ws.path("w2.wb.secrets")));
        auto sec = parse_window_secrets(read_file(ws.path("w2.wb.secrets")));
        auto key = Keystore(ws.store).load_private("acme");
        CHECK(sec.d == key.d);

        SECTION("and the emitted file passes the structure check") {
            auto r = run(ws.store, "attack --wb " + ws.path("w2.wb") + " --method matrix --verify-only");
            CHECK(r.exit_code == 0);
            CHECK(r.output.find("structure=ok") != std::string::npos);
        }
    }

    SECTION("splitkey decoy sidecar") {
        REQUIRE(run(ws.store, "wbgen --scheme splitkey --keyname acme --out " + ws.path("d.wb") +
                                  " --seed 4 --emit-decoy")
                    .exit_code == 0);
        auto [name, decoy] = parse_private_key(read_file(ws.path("d.wb.decoy")));
        CHECK(name == "acme-decoy");
        auto key = Keystore(ws.store).load_private("acme");
        CHECK(decoy.n != key.n);  // plausible but unrelated
        CHECK(bit_length(decoy.n) == 512);
    }
}

TEST_CASE("cli envelope workflows") {
    Workspace ws;
    for (int i = 0; i < 3; ++i)
        REQUIRE(run(ws.store, "keygen --bits 512 --keyname tool" + std::to_string(i) + " --seed " +
                                  std::to_string(20 + i))
                    .exit_code == 0);
    write_file(ws.path("ip.v"), "module secret_adder(input a, b, output y); endmodule\n");

    std::string encrypt_cmd = "encrypt --in " + ws.path("ip.v") + " --out " + ws.path("ip.env") +
                              " --to tool0 --to tool1 --to tool2 --right license=commercial"
                              " --tool-right tool1:simulation=yes --seed 31";
    REQUIRE(run(ws.store, encrypt_cmd).exit_code == 0);

    SECTION("encrypt is deterministic under a seed") {
        std::string again = "encrypt --in " + ws.path("ip.v") + " --out " + ws.path("ip2.env") +
                            " --to tool0 --to tool1 --to tool2 --right license=commercial"
                            " --tool-right tool1:simulation=yes --seed 31";
        REQUIRE(run(ws.store, again).exit_code == 0);
        CHECK(read_file(ws.path("ip.env")) == read_file(ws.path("ip2.env")));
    }

    SECTION("decrypt with a stored key prints rights") {
        auto r = run(ws.store, "decrypt --in " + ws.path("ip.env") + " --out " + ws.path("out.v") +
                                   " --keyname tool1");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("common.license=\"commercial\"") != std::string::npos);
        CHECK(r.output.find("tool.simulation=\"yes\"") != std::string::npos);
        CHECK(read_file(ws.path("out.v")) == read_file(ws.path("ip.v")));
    }

    SECTION("decrypt with recipient 1's white-box gives the same plaintext") {
        REQUIRE(run(ws.store, "wbgen --scheme obfcrt --keyname tool1 --out " + ws.path("t1.wb") +
                                  " --seed 6")
                    .exit_code == 0);
        auto r = run(ws.store, "decrypt --in " + ws.path("ip.env") + " --out " + ws.path("wb.v") +
                                   " --wb " + ws.path("t1.wb"));
        CHECK(r.exit_code == 0);
        CHECK(read_file(ws.path("wb.v")) == read_file(ws.path("ip.v")));
    }

    SECTION("decrypt under an unknown keyname exits 4") {
        REQUIRE(run(ws.store, "keygen --bits 512 --keyname other --seed 29").exit_code == 0);
        auto r = run(ws.store, "decrypt --in " + ws.path("ip.env") + " --out " + ws.path("x.v") +
                                   " --keyname other");
        CHECK(r.exit_code == 4);
    }

    SECTION("verify passes on the fresh envelope") {
        auto r = run(ws.store, "verify --in " + ws.path("ip.env") + " --keyname tool0");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("digest.tool0=ok") != std::string::npos);
        CHECK(r.output.find("digest.tool1=ok") != std::string::npos);
        CHECK(r.output.find("digest.tool2=ok") != std::string::npos);
    }

    SECTION("a tampered rights line names the failing tool and exits 3") {
        auto text = read_file(ws.path("ip.env"));
        auto pos = text.find("simulation=\"yes\"");
        REQUIRE(pos != std::string::npos);
        text.replace(pos + 12, 3, "YES");
        write_file(ws.path("tampered.env"), text);
        auto r = run(ws.store, "verify --in " + ws.path("tampered.env") + " --keyname tool0");
        CHECK(r.exit_code == 3);
        CHECK(r.output.find("digest.tool1=mismatch") != std::string::npos);
        CHECK(r.output.find("tool1") != std::string::npos);

        auto d = run(ws.store, "decrypt --in " + ws.path("tampered.env") + " --out " +
                                   ws.path("no.v") + " --keyname tool1");
        CHECK(d.exit_code == 3);
    }

    SECTION("a tampered data block still verifies (no data integrity)") {
        auto text = read_file(ws.path("ip.env"));
        auto pos = text.find("`pragma protect data_block\n");
        REQUIRE(pos != std::string::npos);
        pos += std::string("`pragma protect data_block\n").size();
        text[pos] = text[pos] == 'A' ? 'B' : 'A';
        write_file(ws.path("databent.env"), text);
        auto r = run(ws.store, "verify --in " + ws.path("databent.env") + " --keyname tool0");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("digest.tool0=ok") != std::string::npos);
    }

    SECTION("garbage envelope exits 65") {
        write_file(ws.path("bad.env"), "`pragma protect begin_protected\njunk\n");
        auto r = run(ws.store, "verify --in " + ws.path("bad.env") + " --keyname tool0");
        CHECK(r.exit_code == 65);
    }
}

TEST_CASE("cli attack") {
    Workspace ws;
    REQUIRE(run(ws.store, "keygen --bits 512 --keyname acme --seed 41").exit_code == 0);
    auto key = Keystore(ws.store).load_private("acme");

    SECTION("splitkey report has all verdicts true") {
        REQUIRE(run(ws.store, "wbgen --scheme splitkey --keyname acme --out " + ws.path("s.wb") +
                                  " --seed 42")
                    .exit_code == 0);
        auto r = run(ws.store, "attack --wb " + ws.path("s.wb") + " --e 65537 --report " +
                                   ws.path("s.report") + " --seed 43");
        REQUIRE(r.exit_code == 0);
        auto report = read_file(ws.path("s.report"));
        CHECK(report.find("scheme=splitkey\n") != std::string::npos);
        CHECK(report.find("method=miller\n") != std::string::npos);
        CHECK(report.find("verdict_pq_eq_n=true\n") != std::string::npos);
        CHECK(report.find("verdict_ed_mod_phi=true\n") != std::string::npos);
        CHECK(report.find("d=" + to_hex(key.d) + "\n") != std::string::npos);
        CHECK(report.find("p=" + to_hex(key.p) + "\n") != std::string::npos);
    }

    SECTION("window methods agree and reports are stable modulo time") {
        REQUIRE(run(ws.store, "wbgen --scheme window --keyname acme --out " + ws.path("w.wb") +
                                  " --seed 44")
                    .exit_code == 0);
        auto pub = (fs::path(ws.store) / "acme.pub").string();
        auto m = run(ws.store, "attack --wb " + ws.path("w.wb") + " --pub " + pub +
                                   " --method matrix --report " + ws.path("m.report") + " --seed 45");
        auto c = run(ws.store, "attack --wb " + ws.path("w.wb") + " --pub " + pub +
                                   " --method chosen-ciphertext --report " + ws.path("c.report") +
                                   " --seed 45");
        REQUIRE(m.exit_code == 0);
        REQUIRE(c.exit_code == 0);
        auto mrep = kv_parse(read_file(ws.path("m.report")));
        auto crep = kv_parse(read_file(ws.path("c.report")));
        auto field = [](const KvLines& kv, const std::string& name) {
            for (const auto& [k, v] : kv)
                if (k == name) return v;
            return std::string();
        };
        CHECK(field(mrep, "d") == field(crep, "d"));
        CHECK(field(mrep, "d") == to_hex(key.d));
        CHECK(field(mrep, "p") == to_hex(key.p));

        auto m2 = run(ws.store, "attack --wb " + ws.path("w.wb") + " --pub " + pub +
                                    " --method matrix --report " + ws.path("m2.report") + " --seed 45");
        REQUIRE(m2.exit_code == 0);
        CHECK(without_time(read_file(ws.path("m.report"))) ==
              without_time(read_file(ws.path("m2.report"))));
    }

    SECTION("method/scheme mismatch exits 64") {
        REQUIRE(run(ws.store, "wbgen --scheme obfcrt --keyname acme --out " + ws.path("o.wb") +
                                  " --seed 46")
                    .exit_code == 0);
        CHECK(run(ws.store, "attack --wb " + ws.path("o.wb") + " --e 65537 --method matrix").exit_code ==
              64);
        CHECK(run(ws.store, "attack --wb " + ws.path("o.wb") + " --e 65537 --scheme window").exit_code ==
              64);
    }

    SECTION("corrupted white-box exits 5 and names the verdict") {
        REQUIRE(run(ws.store, "wbgen --scheme obfcrt --keyname acme --out " + ws.path("o.wb") +
                                  " --seed 47")
                    .exit_code == 0);
        auto wb = parse_obfcrt(read_file(ws.path("o.wb")));
        wb.g3 = (wb.g3 + 1) % wb.n;
        write_file(ws.path("bad.wb"), serialize_obfcrt(wb));
        auto r = run(ws.store, "attack --wb " + ws.path("bad.wb") + " --e 65537");
        CHECK(r.exit_code == 5);
        CHECK(r.output.find("verdict failed: gamma_gcd_p") != std::string::npos);
    }

    SECTION("wrong exponent exits 5") {
        REQUIRE(run(ws.store, "wbgen --scheme splitkey --keyname acme --out " + ws.path("s.wb") +
                                  " --seed 48")
                    .exit_code == 0);
        auto r = run(ws.store, "attack --wb " + ws.path("s.wb") + " --e 65539");
        CHECK(r.exit_code == 5);
    }

    SECTION("end-to-end adversary workflow per scheme") {
        write_file(ws.path("ip.v"), "module payload(); endmodule\n");
        REQUIRE(run(ws.store, "encrypt --in " + ws.path("ip.v") + " --out " + ws.path("ip.env") +
                                  " --to acme --seed 51")
                    .exit_code == 0);
        int seed = 52;
        for (std::string scheme : {"splitkey", "obfcrt", "window"}) {
            REQUIRE(run(ws.store, "wbgen --scheme " + scheme + " --keyname acme --out " +
                                      ws.path(scheme + ".wb") + " --seed " + std::to_string(seed))
                        .exit_code == 0);
            REQUIRE(run(ws.store, "attack --wb " + ws.path(scheme + ".wb") + " --e 65537 --report " +
                                      ws.path(scheme + ".report") + " --seed " + std::to_string(seed + 1))
                        .exit_code == 0);
            // Rebuild a key file from the report alone and decrypt with it
            // in a fresh store.
            auto rep = kv_parse(read_file(ws.path(scheme + ".report")));
            auto field = [&](const std::string& name) {
                for (const auto& [k, v] : rep)
                    if (k == name) return v;
                return std::string();
            };
            RsaPrivateKey stolen;
            stolen.p = nat_from_hex(field("p"));
            stolen.q = nat_from_hex(field("q"));
            stolen.n = stolen.p * stolen.q;
            stolen.e = 65537;
            stolen.d = nat_from_hex(field("d"));
            stolen.phi = (stolen.p - 1) * (stolen.q - 1);
            Workspace thief;
            Keystore(thief.store).save_keypair("acme", stolen);
            auto r = run(thief.store, "decrypt --in " + ws.path("ip.env") + " --out " +
                                          thief.path("loot.v") + " --keyname acme");
            CHECK(r.exit_code == 0);
            CHECK(read_file(thief.path("loot.v")) == read_file(ws.path("ip.v")));
            seed += 2;
        }
    }

    SECTION("missing exponent source exits 64") {
        REQUIRE(run(ws.store, "wbgen --scheme splitkey --keyname acme --out " + ws.path("s.wb") +
                                  " --seed 49")
                    .exit_code == 0);
        CHECK(run(ws.store, "attack --wb " + ws.path("s.wb")).exit_code == 64);
    }
}
