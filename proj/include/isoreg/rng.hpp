#pragma once

#include <cstdint>
#include <random>

namespace isoreg {

// splitmix64 step; used to derive independent per-path seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Per-path Gaussian stream: mt19937_64 seeded from (seed, stream index) via
// splitmix64, normals by the polar method.  The engine's output sequence is
// fixed by the standard, so paths are reproducible in any execution order.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream, bool negate = false)
        : negate_(negate) {
        std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
        engine_.seed(splitmix64(s));
    }

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return negate_ ? -spare_ : spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        const double x = u * m;
        return negate_ ? -x : x;
    }

private:
    double uniform() {
        // 53-bit mantissa uniform in (0, 1).
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
    bool negate_ = false;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace isoreg
