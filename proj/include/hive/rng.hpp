#pragma once

// Seeded draws on top of std::mt19937_64. The mapping from raw engine
// output to doubles is done here rather than through std::*_distribution,
// whose output is implementation-defined; this keeps generated scenarios
// identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

namespace hive {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // zero-mean unit-variance Laplacian (scale 1/sqrt(2))
    double laplacian() {
        const double u = uniform() - 0.5;
        const double b = 1.0 / std::sqrt(2.0);
        const double v = 1.0 - 2.0 * std::abs(u);
        return -b * std::copysign(std::log(v > 1e-300 ? v : 1e-300), -u);
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// decorrelated per-stream seed (splitmix64 finalizer), so component
// generators derived from one scenario seed do not share state
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace hive
