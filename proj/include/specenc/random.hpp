#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace specenc
{
    // mt19937_64 with distribution code spelled out, so sequences do not depend on the standard
    // library's distribution implementations.
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : engine_(seed) {}

        // Uniform in [0, 1).
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        // Uniform integer in [0, n).
        std::uint64_t index(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

        double normal(double mean = 0.0, double stddev = 1.0)
        {
            const double u1 = 1.0 - uniform(); // (0, 1]
            const double u2 = uniform();
            return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }

        bool bernoulli(double p) { return uniform() < p; }

    private:
        std::mt19937_64 engine_;
    };
}
