// Fixed-point primitives shared by the whole signal chain: Q1.15 samples,
// wide accumulators, rounding/saturation helpers and the 10-bit phase code.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ncp {

// Thrown for malformed configuration (CLI maps it to exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown for unusable input data (CLI maps it to exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

using q15_t = int16_t;   // Q1.15 sample, range [-1.0, 1.0)
using acc40_t = int64_t; // accumulator, asserted to stay within 40 bits in the FIR
using acc48_t = int64_t; // accumulator, asserted to stay within 48 bits in features

inline constexpr int32_t kQ15One = 32768; // 1.0 would be 32768; max stored value is 32767

// Saturate a wide value into the Q1.15 container. Saturation is reported via
// the optional counter, never fatal.
inline q15_t sat_q15(int64_t v, uint64_t* sat_count = nullptr) {
    if (v > 32767) {
        if (sat_count) ++*sat_count;
        return 32767;
    }
    if (v < -32768) {
        if (sat_count) ++*sat_count;
        return -32768;
    }
    return static_cast<q15_t>(v);
}

// Round-half-to-even right shift (used at FIR outputs: unbiased for long
// accumulation chains).
inline int64_t rshift_round_even(int64_t v, int shift) {
    if (shift <= 0) return v << -shift;
    const int64_t half = int64_t{1} << (shift - 1);
    const int64_t mask = (int64_t{1} << shift) - 1;
    int64_t q = v >> shift;
    int64_t rem = v & mask;
    if (rem > half || (rem == half && (q & 1))) ++q;
    return q;
}

// Round-half-away-from-zero right shift (used in the phase datapath and
// table generation).
inline int64_t rshift_round_away(int64_t v, int shift) {
    if (shift <= 0) return v << -shift;
    const int64_t half = int64_t{1} << (shift - 1);
    if (v >= 0) return (v + half) >> shift;
    return -((-v + half) >> shift);
}

// Round-half-away-from-zero for doubles (table generation).
int64_t round_away(double v);

inline double q15_to_double(q15_t v) { return static_cast<double>(v) / 32768.0; }

q15_t q15_from_double(double v); // rounds half away from zero, saturates

// ---------------------------------------------------------------------------
// 10-bit phase code: one code = 2*pi/1024 rad, range [-512, 511], +pi -> -512.

using phase_code_t = int16_t;

inline constexpr int kPhaseCodes = 1024;
inline constexpr double kRadPerCode = 6.283185307179586476925286766559 / 1024.0;

// Wrap an arbitrary integer angle (in codes) into [-512, 511].
inline phase_code_t wrap_code(int64_t c) {
    int64_t m = ((c + 512) % 1024 + 1024) % 1024;
    return static_cast<phase_code_t>(m - 512);
}

// Signed wrapped difference a - b in [-512, 511].
inline phase_code_t code_diff(phase_code_t a, phase_code_t b) {
    return wrap_code(static_cast<int64_t>(a) - static_cast<int64_t>(b));
}

// Circular distance in codes, range [0, 512].
inline int code_distance(int64_t a, int64_t b) {
    int64_t d = ((a - b) % 1024 + 1024) % 1024;
    return static_cast<int>(d <= 512 ? d : 1024 - d);
}

phase_code_t code_from_radians(double phi); // rounds to nearest code and wraps
double code_to_radians(phase_code_t c);
double code_to_degrees(phase_code_t c);

// ---------------------------------------------------------------------------
// Deterministic seeding utilities. Every stochastic element derives its own
// stream from (master seed, purpose tag) so runs are reproducible regardless
// of evaluation order.

uint64_t splitmix64(uint64_t& state);
uint64_t derive_seed(uint64_t master, const char* tag, uint64_t index = 0);

// Gaussian deviates via Box-Muller over an explicit uint64 stream; fixed
// algorithm so byte-identical output does not depend on the standard library.
class GaussianSource {
  public:
    explicit GaussianSource(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    double next();

  private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a 64-bit content hash used to fingerprint generated tables and filter
// sets in reports.
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull);
std::string hash_hex(uint64_t h);

} // namespace ncp
