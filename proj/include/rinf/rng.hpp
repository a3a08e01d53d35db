#ifndef RINF_RNG_HPP
#define RINF_RNG_HPP

#include <cstdint>
#include <random>

namespace rinf {

// splitmix64 step; used to derive independent child seeds from a root seed
// so that repetitions / folds / retrain runs are individually reproducible.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(root ^ splitmix64(stream + 1));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(root, a), b);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

} // namespace rinf

#endif // RINF_RNG_HPP
