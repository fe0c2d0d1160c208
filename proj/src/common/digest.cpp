#include "repairgraph/common/digest.hpp"

#include <array>

namespace repairgraph::digest {

std::string fnv1a64_hex(std::string_view bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    const std::uint64_t hash = fnv1a64(bytes);
    std::array<char, 16> out{};
    for (int i = 0; i < 16; ++i) {
        out[i] = kHex[(hash >> (60 - 4 * i)) & 0xF];
    }
    return std::string(out.data(), out.size());
}

}  // namespace repairgraph::digest
