#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace gmacn {

// FNV-1a 64-bit. Used for montage identity hashes and manifest file hashes;
// not cryptographic.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(std::uint64_t h);

}  // namespace gmacn
