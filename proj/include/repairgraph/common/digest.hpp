#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace repairgraph::digest {

// 64-bit FNV-1a. Stable across platforms; used for state digests,
// cassette keys, and snapshot integrity checks.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        hash ^= static_cast<std::uint64_t>(c);
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string fnv1a64_hex(std::string_view bytes);

}  // namespace repairgraph::digest
