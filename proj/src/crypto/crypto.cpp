#include "srps/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace srps::crypto {
namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

// One reusable digest context per thread.
EVP_MD_CTX* md_ctx() {
    thread_local std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    return ctx.get();
}

using Sha = std::array<std::uint8_t, 32>;

Sha sha256(std::initializer_list<std::span<const std::uint8_t>> parts) {
    EVP_MD_CTX* c = md_ctx();
    if (EVP_DigestInit_ex(c, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
    for (auto p : parts) EVP_DigestUpdate(c, p.data(), p.size());
    Sha out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(c, out.data(), &len);
    return out;
}

template <std::size_t N>
std::array<std::uint8_t, N> truncate(const Sha& s) {
    std::array<std::uint8_t, N> out{};
    std::copy_n(s.begin(), N, out.begin());
    return out;
}

constexpr std::uint8_t kTagMac = 'M';
constexpr std::uint8_t kTagStream = 'E';

}  // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

HashValue hash_from_hex(const std::string& hex) {
    if (hex.size() != 2 * kHashBytes) throw std::invalid_argument("hash hex must be 16 digits");
    HashValue h{};
    for (std::size_t i = 0; i < kHashBytes; ++i) h[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
    return h;
}

HashValue hash_f(const HashValue& x) { return truncate<kHashBytes>(sha256({x})); }

HashValue hash_f_n(HashValue x, std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) x = hash_f(x);
    return x;
}

ChainState derive_commitment(const SymKey& seed, std::uint32_t t, bool memoize) {
    if (t < 2) throw std::invalid_argument("invalid-parameter: chain length t must be >= 2");
    ChainState c;
    c.seed = seed;
    c.length_t = t;
    if (memoize) {
        c.memo.resize(std::size_t(t) + 1);
        c.memo[0] = seed;
        for (std::uint32_t i = 1; i <= t; ++i) c.memo[i] = hash_f(c.memo[i - 1]);
        c.current_commitment = c.memo[t];
    } else {
        c.current_commitment = hash_f_n(seed, t);
    }
    return c;
}

SymKey chain_value(const ChainState& chain, std::uint32_t position) {
    if (position > chain.length_t) throw std::out_of_range("chain position beyond length");
    if (!chain.memo.empty()) return chain.memo[position];
    return hash_f_n(chain.seed, position);
}

std::optional<SymKey> next_auth_key(ChainState& chain) {
    if (chain.exhausted()) return std::nullopt;
    SymKey key = chain_value(chain, chain.next_position());
    ++chain.disclosed_count;
    chain.current_commitment = key;
    return key;
}

GapResult verify_and_advance(const HashValue& stored, const HashValue& candidate, std::uint32_t max_gap) {
    HashValue x = candidate;
    for (std::uint32_t k = 1; k <= max_gap; ++k) {
        x = hash_f(x);
        if (x == stored) return {true, k};
    }
    return {false, 0};
}

MacTag mac(const SymKey& key, std::span<const std::uint8_t> payload) {
    const std::uint8_t tag = kTagMac;
    return truncate<kMacBytes>(sha256({std::span(&tag, 1), key, payload}));
}

bool mac_verify(const SymKey& key, std::span<const std::uint8_t> payload, const MacTag& tag) {
    return mac(key, payload) == tag;
}

Bytes encrypt(const SymKey& key, std::span<const std::uint8_t> plaintext) {
    Bytes out(plaintext.begin(), plaintext.end());
    const std::uint8_t tag = kTagStream;
    for (std::size_t off = 0, block = 0; off < out.size(); off += 32, ++block) {
        std::array<std::uint8_t, 4> ctr{static_cast<std::uint8_t>(block >> 24), static_cast<std::uint8_t>(block >> 16),
                                        static_cast<std::uint8_t>(block >> 8), static_cast<std::uint8_t>(block)};
        Sha ks = sha256({std::span(&tag, 1), key, ctr});
        for (std::size_t j = 0; j < 32 && off + j < out.size(); ++j) out[off + j] ^= ks[j];
    }
    return out;
}

Bytes decrypt(const SymKey& key, std::span<const std::uint8_t> ciphertext) { return encrypt(key, ciphertext); }

HashValue encrypt_block(const SymKey& key, const HashValue& block) {
    Bytes c = encrypt(key, block);
    HashValue out{};
    std::copy(c.begin(), c.end(), out.begin());
    return out;
}

HashValue sn_block(std::uint32_t sn) {
    HashValue b{};
    for (int i = 0; i < 4; ++i) b[4 + i] = static_cast<std::uint8_t>(sn >> (24 - 8 * i));
    return b;
}

HashValue snv_seed(const SymKey& k_sd, std::uint32_t sn) { return encrypt_block(k_sd, sn_block(sn)); }

SnvIndices snv_indices(std::int64_t i, std::int64_t n) {
    if (i < 1 || n < 2) throw std::invalid_argument("snv_indices requires i >= 1 and n >= 2");
    SnvIndices r;
    r.req_idx = n - 2 * (i - 1);
    r.rep_idx = r.req_idx - 1;
    r.exhausted = r.rep_idx < 1;
    return r;
}

SnvChain build_snv_chain_from_seed(const HashValue& v0, std::uint32_t sn, std::uint32_t n) {
    SnvChain c;
    c.sn = sn;
    c.v0 = v0;
    c.length_n = n;
    c.values.resize(std::size_t(n) + 1);
    c.values[0] = v0;
    for (std::uint32_t i = 1; i <= n; ++i) c.values[i] = hash_f(c.values[i - 1]);
    return c;
}

SnvChain build_snv_chain(const SymKey& k_sd, std::uint32_t sn, std::uint32_t n) {
    return build_snv_chain_from_seed(snv_seed(k_sd, sn), sn, n);
}

SymKey KeyOracle::pair_key(std::uint32_t a, std::uint32_t b) const {
    if (a > b) std::swap(a, b);
    ByteWriter w;
    w.u8('P').u64(master_).u32(a).u32(b);
    return truncate<kKeyBytes>(sha256({w.bytes()}));
}

SymKey KeyOracle::chain_seed(std::uint32_t node, std::uint32_t epoch) const {
    ByteWriter w;
    w.u8('C').u64(master_).u32(node).u32(epoch);
    return truncate<kKeyBytes>(sha256({w.bytes()}));
}

std::uint32_t KeyOracle::hw_id(std::uint64_t hw_address) {
    ByteWriter w;
    w.u64(hw_address);
    HashValue h{};
    std::copy_n(w.bytes().begin(), kHashBytes, h.begin());
    HashValue f = hash_f(h);
    return (std::uint32_t(f[0]) << 24) | (std::uint32_t(f[1]) << 16) | (std::uint32_t(f[2]) << 8) | f[3];
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
    return *this;
}

ByteWriter& ByteWriter::raw(std::span<const std::uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
    return *this;
}

HashValue digest(std::span<const std::uint8_t> payload) {
    const std::uint8_t tag = 'D';
    return truncate<kHashBytes>(sha256({std::span(&tag, 1), payload}));
}

}  // namespace srps::crypto
