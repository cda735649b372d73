#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sofa {

/// Seeded random source. Gaussian draws are hand-rolled (Box-Muller) so that
/// streams are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed), base_seed_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    double uniform01() {
        // 53-bit mantissa in [0,1)
        return double(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform01(); } while (u1 <= 0.0);
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling keeps it unbiased
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = eng_(); } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    /// Derives an independent stream; used to give each pipeline stage its
    /// own seed from one run seed.
    std::uint64_t derive(std::uint64_t salt) {
        std::uint64_t x = base_seed_ ^ (salt * 0x9E3779B97F4A7C15ull);
        x ^= x >> 33; x *= 0xFF51AFD7ED558CCDull;
        x ^= x >> 33; x *= 0xC4CEB9FE1A85EC53ull;
        x ^= x >> 33;
        return x;
    }

    static Rng derived(std::uint64_t seed, std::uint64_t salt) {
        Rng r(seed);
        return Rng(r.derive(salt));
    }

private:
    std::mt19937_64 eng_;
    std::uint64_t base_seed_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sofa
