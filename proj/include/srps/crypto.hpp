#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace srps::crypto {

// Wire widths in bytes.
inline constexpr std::size_t kIdBytes = 4;
inline constexpr std::size_t kKeyBytes = 8;
inline constexpr std::size_t kMacBytes = 10;
inline constexpr std::size_t kSnBytes = 4;
inline constexpr std::size_t kSnvBytes = 10;
inline constexpr std::size_t kHashBytes = 8;

using HashValue = std::array<std::uint8_t, kHashBytes>;
// Keys and chain values share one width, so a disclosed key is also a chain element.
using SymKey = HashValue;
using MacTag = std::array<std::uint8_t, kMacBytes>;
using Bytes = std::vector<std::uint8_t>;

std::string to_hex(std::span<const std::uint8_t> bytes);
HashValue hash_from_hex(const std::string& hex);

// F: SHA-256 truncated to kHashBytes.
HashValue hash_f(const HashValue& x);
// F applied n times; n = 0 returns x.
HashValue hash_f_n(HashValue x, std::uint64_t n);

struct ChainState {
    SymKey seed{};
    std::uint32_t length_t = 0;
    std::uint32_t disclosed_count = 0;
    HashValue current_commitment{};
    // Optional memo of F^0..F^t; empty means keys are recomputed from the seed.
    std::vector<HashValue> memo;

    // Chain position of the next key to be disclosed: key = F^position(seed).
    std::uint32_t next_position() const { return length_t - disclosed_count - 1; }
    bool exhausted() const { return disclosed_count >= length_t; }
};

ChainState derive_commitment(const SymKey& seed, std::uint32_t t, bool memoize = false);
// Key at an arbitrary chain position, using the memo when present.
SymKey chain_value(const ChainState& chain, std::uint32_t position);
// Returns F^(t - disclosed - 1)(seed) and advances, or nullopt once exhausted.
std::optional<SymKey> next_auth_key(ChainState& chain);

struct GapResult {
    bool accepted = false;
    std::uint32_t gap = 0;
};

// Accepts iff F^k(candidate) = stored for some k in [1, max_gap].
GapResult verify_and_advance(const HashValue& stored, const HashValue& candidate,
                             std::uint32_t max_gap);

MacTag mac(const SymKey& key, std::span<const std::uint8_t> payload);
bool mac_verify(const SymKey& key, std::span<const std::uint8_t> payload, const MacTag& tag);

// Deterministic keyed stream cipher; decrypt is the same transform.
Bytes encrypt(const SymKey& key, std::span<const std::uint8_t> plaintext);
Bytes decrypt(const SymKey& key, std::span<const std::uint8_t> ciphertext);
// E_K[x] for a single 8-byte block, e.g. v0 = E_KSD[SN].
HashValue encrypt_block(const SymKey& key, const HashValue& block);
HashValue sn_block(std::uint32_t sn);
HashValue snv_seed(const SymKey& k_sd, std::uint32_t sn);

struct SnvIndices {
    bool exhausted = false;
    std::int64_t req_idx = 0;
    std::int64_t rep_idx = 0;
};

// i-th request on a chain of length n: (n - 2(i-1), n - 2(i-1) - 1).
SnvIndices snv_indices(std::int64_t i, std::int64_t n);

struct SnvChain {
    std::uint32_t sn = 0;
    HashValue v0{};
    std::uint32_t length_n = 0;
    std::vector<HashValue> values;  // values[i] = F^i(v0)
    std::uint32_t request_counter_i = 1;

    const HashValue& at(std::uint32_t i) const { return values.at(i); }
};

SnvChain build_snv_chain(const SymKey& k_sd, std::uint32_t sn, std::uint32_t n);
SnvChain build_snv_chain_from_seed(const HashValue& v0, std::uint32_t sn, std::uint32_t n);

// Trusted pairwise key oracle standing in for the key-management layer.
class KeyOracle {
public:
    explicit KeyOracle(std::uint64_t master = 0x5eed5eedULL) : master_(master) {}
    SymKey pair_key(std::uint32_t a, std::uint32_t b) const;
    SymKey chain_seed(std::uint32_t node, std::uint32_t epoch) const;
    // Hardware-address-derived identity: ID = F(hw) truncated to 4 bytes.
    static std::uint32_t hw_id(std::uint64_t hw_address);

private:
    std::uint64_t master_;
};

// Appends fields big-endian; used for MAC payloads and digests.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v);
    ByteWriter& u32(std::uint32_t v);
    ByteWriter& u64(std::uint64_t v);
    ByteWriter& raw(std::span<const std::uint8_t> b);
    const Bytes& bytes() const { return buf_; }

private:
    Bytes buf_;
};

HashValue digest(std::span<const std::uint8_t> payload);

}  // namespace srps::crypto
