#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "infotrade/random_oracle.hpp"

using namespace infotrade;
using namespace infotrade::crypto;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

Bytes random_block(std::mt19937_64& rng, size_t n = 32) { return sample_bytes(rng, n); }

}  // namespace

TEST_CASE("query is deterministic per point") {
    OracleTable oracle(7);
    Bytes q = bytes_of("point");
    Bytes d1 = oracle.query(q, "s");
    Bytes d2 = oracle.query(q, "s");
    CHECK(d1 == d2);
    CHECK(d1.size() == 32);
}

TEST_CASE("cross-session queries are answered and logged") {
    OracleTable oracle(7);
    Bytes q = bytes_of("foreign point");
    CHECK(oracle.observe().empty());
    Bytes d = oracle.query(q, "victim", "snoop");
    REQUIRE(oracle.observe().size() == 1);
    CHECK(oracle.observe()[0].first == q);
    CHECK(oracle.observe()[0].second == d);
}

TEST_CASE("observe preserves insertion order") {
    OracleTable oracle(7);
    Bytes q1 = bytes_of("a");
    Bytes q2 = bytes_of("b");
    Bytes q3 = bytes_of("c");
    oracle.query(q1, "s", "adv");
    oracle.query(q2, "s", "adv");
    oracle.query(q3, "s", "adv");
    REQUIRE(oracle.observe().size() == 3);
    CHECK(oracle.observe()[0].first == q1);
    CHECK(oracle.observe()[1].first == q2);
    CHECK(oracle.observe()[2].first == q3);
}

TEST_CASE("equal seeds and query sequences replay identically") {
    OracleTable a(99);
    OracleTable b(99);
    for (int i = 0; i < 50; ++i) {
        Bytes q = bytes_of("q" + std::to_string(i % 7));
        CHECK(a.query(q, "s") == b.query(q, "s"));
    }
}

TEST_CASE("programming a fresh point fixes its digest") {
    OracleTable oracle(3);
    Bytes q = bytes_of("programmable");
    Bytes d(32, 0xab);
    REQUIRE(oracle.program(q, d, "s") == OracleTable::ProgramResult::Ok);
    CHECK(oracle.query(q, "s") == d);
    CHECK(oracle.is_programmed(q, "s"));
}

TEST_CASE("programming an existing point aborts") {
    OracleTable oracle(3);
    Bytes q = bytes_of("taken");
    oracle.query(q, "s");
    Bytes d(32, 0x01);
    CHECK(oracle.program(q, d, "s") == OracleTable::ProgramResult::Aborted);
    CHECK_FALSE(oracle.is_programmed(q, "s"));

    Bytes q2 = bytes_of("taken twice");
    REQUIRE(oracle.program(q2, d, "s") == OracleTable::ProgramResult::Ok);
    CHECK(oracle.program(q2, d, "s") == OracleTable::ProgramResult::Aborted);
}

TEST_CASE("is_programmed is scoped to the session and to programmed points") {
    OracleTable oracle(3);
    Bytes q = bytes_of("scoped");
    CHECK_FALSE(oracle.is_programmed(q, "s"));  // empty oracle
    oracle.query(q, "s");
    CHECK_FALSE(oracle.is_programmed(q, "s"));  // plain query only
    Bytes q2 = bytes_of("planted");
    oracle.program(q2, Bytes(32, 0x77), "sim");
    CHECK(oracle.is_programmed(q2, "sim"));
    CHECK_FALSE(oracle.is_programmed(q2, "s"));
}

TEST_CASE("keygen avoids programmed keystream points") {
    // predict the first two candidate keys from the shared sampling scheme
    std::mt19937_64 mirror(42);
    Bytes first = sample_bytes(mirror, kKeyBytes);
    Bytes second = sample_bytes(mirror, kKeyBytes);

    OracleTable clean(42);
    CHECK(keygen(clean, 4, "s").bytes == first);

    OracleTable tainted(42);
    tainted.program(keystream_query(first, 1), Bytes(32, 0x00), "s");
    CHECK(keygen(tainted, 4, "s").bytes == second);
}

TEST_CASE("keygen exhausts its resample budget on a saturated oracle") {
    std::mt19937_64 mirror(5);
    OracleTable oracle(5);
    for (int i = 0; i < kResampleBudget; ++i) {
        Bytes candidate = sample_bytes(mirror, kKeyBytes);
        oracle.program(keystream_query(candidate, 1), Bytes(32, 0x00), "s");
    }
    CHECK_THROWS_AS(keygen(oracle, 1, "s"), std::runtime_error);
}

TEST_CASE("keys are distinct across draws") {
    OracleTable oracle(11);
    std::set<Bytes> keys;
    for (int i = 0; i < 1000; ++i) {
        keys.insert(keygen(oracle, 2, "s").bytes);
    }
    CHECK(keys.size() == 1000);
}

TEST_CASE("single block ciphertext is the keystream xor") {
    OracleTable oracle(13);
    std::mt19937_64 rng(1);
    Bytes m = random_block(rng);
    SecretKey key = keygen(oracle, 1, "s");
    Ciphertext c = encrypt(oracle, key, {m}, "s");
    REQUIRE(c.blocks.size() == 1);
    Bytes pad = oracle.query(keystream_query(key.bytes, 1), "s");
    for (size_t i = 0; i < 32; ++i) {
        CHECK(c.blocks[0][i] == (pad[i] ^ m[i]));
    }
}

TEST_CASE("empty message encrypts to empty ciphertext") {
    OracleTable oracle(13);
    SecretKey key = keygen(oracle, 1, "s");
    Ciphertext c = encrypt(oracle, key, {}, "s");
    CHECK(c.blocks.empty());
    auto back = decrypt(oracle, key, c, "s");
    REQUIRE(back.has_value());
    CHECK(back->empty());
}

TEST_CASE("decrypt returns bottom when a keystream point is programmed") {
    OracleTable oracle(17);
    std::mt19937_64 rng(2);
    std::vector<Bytes> m = {random_block(rng), random_block(rng), random_block(rng)};
    SecretKey key = keygen(oracle, 3, "s");
    Ciphertext c = encrypt(oracle, key, m, "s");

    // plant a mark on the second keystream point in this session
    OracleTable fresh(17);
    SecretKey key2 = keygen(fresh, 3, "s");
    REQUIRE(key2.bytes == key.bytes);
    fresh.program(keystream_query(key2.bytes, 2), Bytes(32, 0x5a), "s");
    Ciphertext c2 = encrypt(fresh, key2, m, "s");  // uses points 1..3; 2 is programmed
    CHECK(decrypt(fresh, key2, c2, "s") == std::nullopt);
}

TEST_CASE("wrong key yields garbage, not bottom") {
    OracleTable oracle(19);
    std::mt19937_64 rng(3);
    std::vector<Bytes> m = {random_block(rng), random_block(rng)};
    SecretKey k1 = keygen(oracle, 2, "s");
    SecretKey k2 = keygen(oracle, 2, "s");
    REQUIRE(k1.bytes != k2.bytes);
    Ciphertext c = encrypt(oracle, k1, m, "s");
    auto garbage = decrypt(oracle, k2, c, "s");
    REQUIRE(garbage.has_value());
    CHECK(*garbage != m);
}

TEST_CASE("xor roundtrip over random sizes") {
    OracleTable oracle(23);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10000; ++trial) {
        size_t n = 1 + rng() % 64;
        std::vector<Bytes> m;
        m.reserve(n);
        for (size_t i = 0; i < n; ++i) {
            m.push_back(random_block(rng));
        }
        SecretKey key = keygen(oracle, n, "s");
        auto back = decrypt(oracle, key, encrypt(oracle, key, m, "s"), "s");
        REQUIRE(back.has_value());
        REQUIRE(*back == m);
    }
}

TEST_CASE("block size mismatch is rejected") {
    OracleTable oracle(29);
    SecretKey key = keygen(oracle, 1, "s");
    CHECK_THROWS_AS(encrypt(oracle, key, {Bytes(31, 0)}, "s"), std::invalid_argument);
}

TEST_CASE("commitment opens honestly and matches the direct query") {
    OracleTable oracle(31);
    Bytes m = bytes_of("message under commitment");
    auto [com, op] = commit(oracle, m, "s");
    CHECK(com.digest.size() == 32);
    CHECK(op.randomness.size() == kKeyBytes);
    CHECK(open_commitment(oracle, com, op, m, "s"));
    CHECK(oracle.query(commitment_query(m, op.randomness), "s") == com.digest);
}

TEST_CASE("fresh openings give distinct digests for a fixed message") {
    OracleTable oracle(37);
    Bytes m = bytes_of("fixed");
    std::set<Bytes> digests;
    for (int i = 0; i < 1000; ++i) {
        digests.insert(commit(oracle, m, "s").first.digest);
    }
    CHECK(digests.size() == 1000);
}

TEST_CASE("any flipped message byte breaks the opening") {
    OracleTable oracle(41);
    std::mt19937_64 rng(6);
    Bytes m = sample_bytes(rng, 32);
    auto [com, op] = commit(oracle, m, "s");
    for (size_t i = 0; i < m.size(); ++i) {
        Bytes altered = m;
        altered[i] ^= 0x01;
        CHECK_FALSE(open_commitment(oracle, com, op, altered, "s"));
    }
}

TEST_CASE("binding holds at desk scale") {
    OracleTable oracle(43);
    std::mt19937_64 rng(8);
    for (int pair = 0; pair < 10000; ++pair) {
        Bytes m = sample_bytes(rng, 16);
        auto [com, op] = commit(oracle, m, "s");
        for (int alt = 0; alt < 100; ++alt) {
            Bytes other = sample_bytes(rng, 16);
            if (other == m) continue;
            REQUIRE_FALSE(open_commitment(oracle, com, op, other, "s"));
        }
    }
}

TEST_CASE("a programmed point in the verifier session defeats the opening") {
    OracleTable oracle(47);
    std::mt19937_64 rng(9);
    Bytes m = bytes_of("planted");
    Bytes op_bytes = sample_bytes(rng, kKeyBytes);
    Bytes d = sample_bytes(rng, 32);
    REQUIRE(oracle.program(commitment_query(m, op_bytes), d, "run") ==
            OracleTable::ProgramResult::Ok);
    // digest matches but the point is marked in this session
    CHECK_FALSE(open_commitment(oracle, Commitment{d}, Opening{op_bytes}, m, "run"));
}

TEST_CASE("a garbage commitment can be explained from another session") {
    OracleTable oracle(53);
    std::mt19937_64 rng(10);
    Bytes m = bytes_of("retroactive message");
    Bytes op_bytes = sample_bytes(rng, kKeyBytes);
    Bytes garbage_digest = sample_bytes(rng, 32);
    REQUIRE(oracle.program(commitment_query(m, op_bytes), garbage_digest, "simulator") ==
            OracleTable::ProgramResult::Ok);
    CHECK(open_commitment(oracle, Commitment{garbage_digest}, Opening{op_bytes}, m, "run"));
}

TEST_CASE("commit exhausts its resample budget on a saturated oracle") {
    Bytes m = bytes_of("no clean opening");
    std::mt19937_64 mirror(61);
    OracleTable oracle(61);
    for (int i = 0; i < kResampleBudget; ++i) {
        Bytes op_bytes = sample_bytes(mirror, kKeyBytes);
        oracle.program(commitment_query(m, op_bytes), Bytes(32, 0x00), "s");
    }
    CHECK_THROWS_AS(commit(oracle, m, "s"), std::runtime_error);
}

TEST_CASE("hex serialization is lowercase and invertible") {
    Bytes data = {0x00, 0x1f, 0xab, 0xff};
    CHECK(to_hex(data) == "001fabff");
    CHECK(from_hex("001fabff") == data);
}
