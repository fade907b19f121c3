#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace btr {

using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// All randomness in a run flows from one master seed. Component streams are
// derived by mixing the master seed with a string tag, so adding a component
// never perturbs the streams of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = master;
    for (char c : tag) {
        h = detail::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    }
    return detail::splitmix64(h ^ index);
}

inline Rng make_rng(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
    return Rng(derive_seed(master, tag, index));
}

}  // namespace btr
