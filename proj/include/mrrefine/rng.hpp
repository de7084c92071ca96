#pragma once

// Deterministic labeled RNG splitting. Every random stream in the planner is
// derived from the single run seed plus a label and up to two indices, so
// subproblems can be reordered or retried without perturbing each other.

#include <cstdint>
#include <random>
#include <string_view>

namespace mrrefine {

class Rng {
  public:
    explicit Rng(uint64_t state) : eng_(state) {}

    double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    double uniform(double a, double b) {
        return std::uniform_real_distribution<double>(a, b)(eng_);
    }
    int uniform_int(int a, int b) {  // inclusive
        return std::uniform_int_distribution<int>(a, b)(eng_);
    }
    /// Angle in (-pi, pi].
    double angle() { return uniform(-3.14159265358979323846, 3.14159265358979323846); }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}
}  // namespace detail

inline Rng rng_for(uint64_t seed, std::string_view label, uint64_t a = 0, uint64_t b = 0) {
    uint64_t s = detail::splitmix64(seed ^ detail::fnv1a(label));
    s = detail::splitmix64(s ^ (a * 0x9e3779b97f4a7c15ull + 1));
    s = detail::splitmix64(s ^ (b * 0xd1342543de82ef95ull + 1));
    return Rng(s);
}

}  // namespace mrrefine
