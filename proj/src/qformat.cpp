#include "ncp/qformat.hpp"

#include <cmath>

namespace ncp {

int64_t round_away(double v) {
    return static_cast<int64_t>(v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

q15_t q15_from_double(double v) {
    int64_t r = round_away(v * 32768.0);
    if (r > 32767) return 32767;
    if (r < -32768) return -32768;
    return static_cast<q15_t>(r);
}

phase_code_t code_from_radians(double phi) {
    return wrap_code(round_away(phi / kRadPerCode));
}

double code_to_radians(phase_code_t c) { return c * kRadPerCode; }

double code_to_degrees(phase_code_t c) { return c * (360.0 / 1024.0); }

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t master, const char* tag, uint64_t index) {
    uint64_t h = fnv1a64(tag, std::char_traits<char>::length(tag));
    uint64_t s = master ^ h;
    s ^= 0x632be59bd9b4e019ull * (index + 1);
    // one mixing round so adjacent indices decorrelate
    uint64_t tmp = s;
    return splitmix64(tmp);
}

double GaussianSource::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0,1] uniforms built from the top 53 bits.
    double u1, u2;
    do {
        u1 = static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
    } while (u1 <= 0.0);
    u2 = static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
    const double two_pi = 6.283185307179586476925286766559;
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_hex(uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

} // namespace ncp
