#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace longcast {

// Deterministic, platform-independent random streams. We avoid the standard
// <random> distributions because their outputs are implementation-defined;
// every draw here is fully specified by the seed.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0xA0761D6478BD642Full) {
        // warm up so nearby seeds decorrelate
        next();
        next();
    }

    std::uint64_t next() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

    // uniform integer in [0, n), rejection-free for our n << 2^64
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    // standard normal via Box-Muller (no cached spare; one draw per call)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Derive an independent stream for a named purpose from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    std::uint64_t s = base ^ h;
    return splitmix64(s);
}

}  // namespace longcast
