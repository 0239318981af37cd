#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace pqvit {

// All randomness in the project flows through this wrapper. mt19937_64 is
// fully specified by the C++ standard and the derived distributions below
// are hand-rolled, so every stream is bit-exact across platforms
// (std::uniform_real_distribution et al. are not portable).
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64/u53/box-muller";

    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller; one value per call, cached pair unused
    // on purpose so the stream stays a pure function of the call count.
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 == 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Normal(0, sigma) rejected outside +-2 sigma.
    double truncated_normal(double sigma) {
        double v;
        do {
            v = normal();
        } while (v < -2.0 || v > 2.0);
        return v * sigma;
    }

    // splitmix64 finalizer; used to derive independent per-sample seeds.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                     std::uint64_t b) {
        return mix(mix(master ^ mix(a)) ^ mix(b ^ 0x517cc1b727220a95ULL));
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 gen_;
};

}  // namespace pqvit
