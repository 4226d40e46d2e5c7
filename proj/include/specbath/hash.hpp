// hash.hpp - stable content hashing for provenance records.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace specbath {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// 16 lowercase hex digits.
std::string hash_hex(std::string_view data);

}  // namespace specbath
