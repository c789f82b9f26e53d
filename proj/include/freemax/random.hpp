#ifndef FREEMAX_RANDOM_HPP
#define FREEMAX_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace freemax {

/// 64-bit experiment seed. Streams are split deterministically with the
/// SplitMix64 finalizer, so child(k) never depends on how many draws other
/// streams consumed.
struct RngSeed {
    std::uint64_t value = 0;

    static constexpr std::string_view algorithm = "mt19937_64/splitmix64";

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr RngSeed child(std::uint64_t stream) const {
        return RngSeed{mix(mix(value) ^ mix(stream + 0x632be59bd9b4e019ULL))};
    }

    std::mt19937_64 engine() const { return std::mt19937_64{mix(value)}; }

    friend constexpr bool operator==(RngSeed, RngSeed) = default;
};

}  // namespace freemax

#endif  // FREEMAX_RANDOM_HPP
