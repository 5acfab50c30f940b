#pragma once

#include <cstdint>
#include <random>

namespace drpg {

/**
Portable pseudo-random source.

The engine is std::mt19937_64, whose output sequence is fixed by the C++
standard. The standard distributions are not portable, so the conversions are
done here:

- uniform(): the top 53 bits of one engine draw scaled by 2^-53, in [0, 1).
- below(n): rejection sampling on the top bits, unbiased, in [0, n).

The same seed therefore yields the same instances on every conforming
platform.
*/
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

} // namespace drpg
