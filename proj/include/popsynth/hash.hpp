#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace popsynth {

// FNV-1a; stable across platforms, used for config provenance hashes.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value);

}  // namespace popsynth
