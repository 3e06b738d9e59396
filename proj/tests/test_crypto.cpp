#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "srps/crypto.hpp"

using namespace srps::crypto;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace

// Reference values from an external SHA-256 (first 8 bytes per step).
TEST_CASE("hash chain matches frozen SHA-256 truncation") {
    const char* expect[] = {"66840dda154e8a11", "81e35fc0047487fe", "9c8fcdd4456e64e5", "b0f3e909898e7804",
                            "7e59881595d654cd"};
    HashValue x = hash_from_hex("0102030405060708");
    for (int i = 0; i < 5; ++i) {
        x = hash_f(x);
        CHECK(to_hex(x) == expect[i]);
    }
    CHECK(to_hex(hash_f_n(hash_from_hex("0102030405060708"), 5)) == expect[4]);
}

TEST_CASE("MAC and stream cipher match frozen vectors") {
    const SymKey k = hash_from_hex("0102030405060708");
    CHECK(to_hex(mac(k, bytes_of("route request"))) == "1a2cc9135ed140b48b26");
    Bytes pt(40);
    for (int i = 0; i < 40; ++i) pt[i] = static_cast<std::uint8_t>(i);
    CHECK(to_hex(encrypt(k, pt)) ==
          "c2ef2a47ed343708eeb0e6058509de759ab6395565e2f9900be78ac88486d3095b8713875988068e");
    CHECK(decrypt(k, encrypt(k, pt)) == pt);
}

TEST_CASE("key chain discloses toward the seed") {
    const SymKey seed = hash_from_hex("a1a2a3a4a5a6a7a8");
    auto chain = derive_commitment(seed, 10);
    CHECK(chain.current_commitment == hash_f_n(seed, 10));
    HashValue anchor = chain.current_commitment;
    int n = 0;
    while (auto k = next_auth_key(chain)) {
        CHECK(hash_f(*k) == anchor);
        anchor = *k;
        ++n;
    }
    CHECK(n == 10);
    CHECK(anchor == seed);
    CHECK(chain.exhausted());
    CHECK_THROWS(derive_commitment(seed, 1));
}

TEST_CASE("memoized and recomputed chains agree") {
    const SymKey seed = hash_from_hex("0011223344556677");
    auto a = derive_commitment(seed, 50, true);
    auto b = derive_commitment(seed, 50, false);
    CHECK(a.current_commitment == b.current_commitment);
    for (std::uint32_t p = 0; p <= 50; p += 7) CHECK(chain_value(a, p) == chain_value(b, p));
}

TEST_CASE("bounded gap verification") {
    const SymKey seed = hash_from_hex("0102030405060708");
    const HashValue stored = hash_f_n(seed, 20);
    for (std::uint32_t gap = 0; gap <= 6; ++gap) {
        auto r = verify_and_advance(stored, hash_f_n(seed, 20 - gap), 4);
        CHECK(r.accepted == (gap >= 1 && gap <= 4));
        if (r.accepted) CHECK(r.gap == gap);
    }
    CHECK_FALSE(verify_and_advance(stored, hash_from_hex("ffffffffffffffff"), 64).accepted);
}

TEST_CASE("sequence-number chain indices") {
    auto s = snv_indices(1, 10);
    CHECK(s.req_idx == 10);
    CHECK(s.rep_idx == 9);
    CHECK_FALSE(s.exhausted);
    s = snv_indices(5, 10);
    CHECK(s.req_idx == 2);
    CHECK(s.rep_idx == 1);
    CHECK_FALSE(s.exhausted);
    CHECK(snv_indices(6, 10).exhausted);
    CHECK(snv_indices(6, 11).req_idx == 1);
    CHECK(snv_indices(6, 11).exhausted);
    CHECK_THROWS(snv_indices(0, 10));
}

TEST_CASE("sequence-number chain values") {
    const HashValue v0 = hash_from_hex("0102030405060708");
    auto c = build_snv_chain_from_seed(v0, 3, 6);
    REQUIRE(c.values.size() == 7);
    for (std::uint32_t i = 0; i <= 6; ++i) CHECK(c.at(i) == hash_f_n(v0, i));
}

TEST_CASE("MAC rejects single-bit tampering") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
        SymKey k;
        for (auto& b : k) b = static_cast<std::uint8_t>(rng());
        Bytes m(16);
        for (auto& b : m) b = static_cast<std::uint8_t>(rng());
        auto t = mac(k, m);
        CHECK(mac_verify(k, m, t));
        m[rng() % m.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        CHECK_FALSE(mac_verify(k, m, t));
    }
}

TEST_CASE("pairwise keys are symmetric and distinct") {
    KeyOracle o;
    CHECK(o.pair_key(3, 9) == o.pair_key(9, 3));
    CHECK(o.pair_key(3, 9) != o.pair_key(3, 10));
    CHECK(o.chain_seed(1, 0) != o.chain_seed(1, 1));
}
