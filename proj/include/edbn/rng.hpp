#pragma once

#include "edbn/error.hpp"
#include "edbn/matrix.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace edbn {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over the platform engines
// because the draw sequence must be identical across compilers and OSes:
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//   z = (z ^ z>>27) * 0x94D049BB133111EB;  return z ^ z>>31
// Doubles in [0,1) take the top 53 bits: (z >> 11) * 2^-53.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi); lo == hi degenerates to the constant lo.
    double uniform(double lo, double hi) {
        if (lo > hi) throw ValueError("uniform: lo > hi");
        double v = lo + (hi - lo) * next_unit();
        if (v >= hi && hi > lo) v = std::nextafter(hi, lo);
        return v;
    }

    // Standard normal via Box-Muller (one value per two draws; no carry,
    // so the consumed-draw count stays position-independent).
    double normal() {
        double u1 = 1.0 - next_unit(); // (0, 1], keeps log finite
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return n ? next_u64() % n : 0;
    }

    // Independent stream for a fixed purpose tag; derived from the original
    // seed only, so streams do not shift when another consumer draws more.
    Rng derive(std::uint64_t stream) const {
        Rng mixer(seed_ ^ (0xA076'1D64'78BD'642FULL + stream));
        return Rng(mixer.next_u64());
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

// i.i.d. uniform [lo, hi) entries; float storage rounds the double draw.
template <class T>
Mat<T> seeded_uniform(Rng& rng, double lo, double hi, std::size_t m, std::size_t n) {
    if (lo > hi) throw ValueError("seeded_uniform: lo > hi");
    Mat<T> out(m, n);
    for (auto& v : out.data) {
        double d = rng.uniform(lo, hi);
        v = static_cast<T>(d);
        if (static_cast<double>(v) >= hi && hi > lo)
            v = std::nextafter(static_cast<T>(hi), static_cast<T>(lo));
    }
    return out;
}

} // namespace edbn
