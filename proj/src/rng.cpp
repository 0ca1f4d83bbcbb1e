#include "navcbn/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace navcbn {

std::uint64_t Rng::next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw std::domain_error("Rng::next_below: n must be positive");
    const std::uint64_t threshold = -n % n; // 2^64 mod n
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double Rng::normal(double mean, double sigma) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + sigma * spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return mean + sigma * r * std::cos(a);
}

Rng Rng::split(std::uint64_t stream) const {
    Rng child(state_ ^ (0xA0761D6478BD642Full * (stream + 1)));
    child.next_u64();
    return child;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a offset basis
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ull;
    }
    Rng mixer(seed ^ h);
    return mixer.next_u64();
}

} // namespace navcbn
