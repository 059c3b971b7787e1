#include "gmacn/hash.hpp"

#include <cstdio>

namespace gmacn {

std::string to_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace gmacn
