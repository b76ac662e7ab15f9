#pragma once

#include <cmath>
#include <cstdint>

namespace xferlab {

// Counter-based generator: output depends only on (key, counter), so streams
// can be split by key without coordination and runs are reproducible across
// platforms. The mix is the SplitMix64 finalizer applied to key ^ golden*ctr.
class Rng {
  public:
    explicit Rng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter) {}

    static std::uint64_t mix(std::uint64_t key, std::uint64_t counter) {
        std::uint64_t z = key + 0x9e3779b97f4a7c15ull * (counter + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Derive an independent stream; `tag` names the purpose.
    Rng split(std::uint64_t tag) const { return Rng(mix(key_, tag)); }

    std::uint64_t next_u64() { return mix(key_, counter_++); }

    // 53-bit mantissa in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; one value per call keeps the counter accounting trivial.
    double gaussian() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace xferlab
