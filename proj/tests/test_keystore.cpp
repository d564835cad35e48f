#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ipvault/keystore.hpp"

using namespace ipvault;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("ipvault-test-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("key file round trip") {
    Rng rng(301);
    auto key = gen_rsa_keypair(256, 65537, rng);

    std::string prv = serialize_private_key("acme", key);
    auto [name, loaded] = parse_private_key(prv);
    CHECK(name == "acme");
    CHECK(loaded.n == key.n);
    CHECK(loaded.d == key.d);
    CHECK(loaded.phi == key.phi);
    CHECK(serialize_private_key(name, loaded) == prv);

    std::string pub = serialize_public_key("acme", {key.n, key.e});
    auto [pname, ploaded] = parse_public_key(pub);
    CHECK(pname == "acme");
    CHECK(ploaded.n == key.n);
    CHECK(ploaded.e == key.e);
}

TEST_CASE("key file strictness") {
    CHECK_THROWS_AS(parse_private_key("keyname=a\nn=11\n"), ParseError);      // missing fields
    CHECK_THROWS_AS(parse_private_key("n=11\nkeyname=a\n"), ParseError);      // wrong order
    CHECK_THROWS_AS(parse_public_key("keyname=a\nn=25\ne=3\nx=1\n"), ParseError);  // extra field
    CHECK_THROWS_AS(parse_public_key("keyname=a\nn=25\ne=3"), ParseError);    // no trailing newline
    CHECK_THROWS_AS(parse_public_key("keyname=a\nn=24\ne=3\n"), ParseError);  // even modulus

    // Inconsistent numbers: d not inverse of e.
    Rng rng(302);
    auto key = gen_rsa_keypair(128, 65537, rng);
    auto text = serialize_private_key("k", key);
    auto pos = text.find("d=") + 2;
    text[pos] = text[pos] == '1' ? '2' : '1';
    CHECK_THROWS_AS(parse_private_key(text), ParseError);
}

TEST_CASE("keystore save and load") {
    TempDir tmp;
    Keystore store(tmp.path / "store");
    Rng rng(303);
    auto key = gen_rsa_keypair(256, 65537, rng);

    CHECK_FALSE(store.has("acme"));
    store.save_keypair("acme", key);
    CHECK(store.has("acme"));
    CHECK(store.load_private("acme").d == key.d);
    CHECK(store.load_public("acme").n == key.n);
    CHECK_THROWS_AS(store.save_keypair("acme", key), IoError);
    CHECK_THROWS_AS(store.load_private("ghost"), IoError);
}

TEST_CASE("kv reader") {
    KvReader r("a=1\nb=two\n");
    CHECK(r.expect("a") == "1");
    CHECK_THROWS_AS(r.expect("c"), ParseError);
}
