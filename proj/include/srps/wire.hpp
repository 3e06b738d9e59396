#pragma once

#include <cstdint>

#include "srps/crypto.hpp"

// Byte layouts of the frames the engine transmits.
namespace srps::wire {

using crypto::kIdBytes;
using crypto::kKeyBytes;
using crypto::kMacBytes;
using crypto::kSnBytes;
using crypto::kSnvBytes;

inline constexpr std::uint32_t kFlagBytes = 1;
inline constexpr std::uint32_t kKeyIndexBytes = 4;

// Cost-model layouts.
inline constexpr std::uint32_t kModelRdp =
    3 * kIdBytes + kFlagBytes + kSnBytes + kSnvBytes + 2 * kMacBytes;  // 47
inline constexpr std::uint32_t kModelKeyDisclosure = kIdBytes + kKeyBytes;  // 12
inline constexpr std::uint32_t kModelRrp = 2 * kIdBytes + kSnvBytes;      // 18

// Engine layouts: the RDP also names its forwarder and the chain position of its
// neighbour key; the RRP carries both MACs, link addressing and the echoed hop.
inline constexpr std::uint32_t kRdp = kModelRdp + kIdBytes + kKeyIndexBytes;  // 55
inline constexpr std::uint32_t kKeyDisclosure = kIdBytes + kKeyBytes;         // 12
inline constexpr std::uint32_t kRrp = kFlagBytes + 2 * kIdBytes + kSnBytes + kSnvBytes + 2 * kMacBytes +
                                      4 * kIdBytes + kKeyIndexBytes;  // 67
inline constexpr std::uint32_t kHello = kIdBytes + kKeyBytes + 4;
inline constexpr std::uint32_t kAlert = 4 * kIdBytes + 1 + kMacBytes;
inline constexpr std::uint32_t kRouteError = 6 * kIdBytes;
inline constexpr std::uint32_t kChallenge = 6 * kIdBytes + 16;
inline constexpr std::uint32_t kRenewal = 6 * kIdBytes + kSnBytes + kKeyBytes;
inline constexpr std::uint32_t kDataDefault = 36;

}  // namespace srps::wire
