#include "specbath/hash.hpp"

#include <cstdio>

namespace specbath {

std::string hash_hex(std::string_view data) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

}  // namespace specbath
