#ifndef SPARSEDGE_RNG_HPP
#define SPARSEDGE_RNG_HPP

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace sparsedge {

// splitmix64 finalizer. All randomness in the library flows through this
// mixer so that results are reproducible across platforms and languages;
// standard-library engines are deliberately not used.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t x = (state += 0x9e3779b97f4a7c15ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64_next(state_); }

    // uniform in [0, n); n > 0
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

    // uniform double in [0, 1)
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform double in [-r, r)
    double next_symmetric(double r) { return (2.0 * next_unit() - 1.0) * r; }

private:
    std::uint64_t state_;
};

// Derive an independent stream seed from a base seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0xa0761d6478bd642fULL * (stream + 1));
    return splitmix64_next(s);
}

// Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void shuffle_in_place(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace sparsedge

#endif  // SPARSEDGE_RNG_HPP
