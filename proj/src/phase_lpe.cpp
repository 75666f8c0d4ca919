#include "ncp/phase_lpe.hpp"

#include <cmath>

namespace ncp {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
// eighth-of-a-code units per radian: 8 * 1024 / (2*pi)
constexpr double kEighthPerRad = 8.0 * 1024.0 / (2.0 * kPi);

// Rotation angles atan(2^-i), i = 0..11, rounded to 1/8-code units. The i=0
// entry is exactly pi/4 = 1024/8 codes.
constexpr int32_t kCordicAngles8[12] = {1024, 605, 319, 162, 81, 41,
                                        20,   10,  5,   3,   1,  1};

// Round a non-negative eighth-code angle to a signed code with wrapping.
phase_code_t round_eighths_to_code(int32_t eighths) {
    int64_t c = rshift_round_away(eighths, 3);
    return wrap_code(c);
}

} // namespace

OctantInfo octant_reduce(int32_t re, int32_t im) {
    OctantInfo o;
    o.sign_re = re < 0;
    o.sign_im = im < 0;
    int32_t a = re < 0 ? -re : re;
    int32_t b = im < 0 ? -im : im;
    o.swapped = b > a;
    o.num = o.swapped ? a : b;
    o.den = o.swapped ? b : a;
    return o;
}

LpeLuts build_luts() {
    LpeLuts t;
    for (int d = 0; d < 256; ++d) {
        // mantissa for the normalized denominator bucket [256+d, 257+d) * 2^7
        int64_t v = round_away(131072.0 / (256.0 + d)) - 256; // 2^17/(256+d) - 256
        t.recip[d] = static_cast<uint16_t>(v);
    }
    for (int x = 0; x < 256; ++x) {
        double tt = x / 256.0;
        double corr = std::atan(tt) - (kPi / 4.0) * tt; // >= 0 on [0, 1]
        t.lin[x] = static_cast<uint8_t>(round_away(corr * kEighthPerRad));
    }
    return t;
}

uint64_t LpeLuts::content_hash() const {
    uint64_t h = fnv1a64(recip.data(), recip.size() * sizeof(recip[0]));
    return fnv1a64(lin.data(), lin.size() * sizeof(lin[0]), h);
}

PhaseResult lpe_phase(q15_t re, q15_t im, const LpeLuts& luts) {
    if (re == 0 && im == 0) return {0, true};

    const OctantInfo o = octant_reduce(re, im);

    // In-octant angle in eighth-code units, range [0, 1024] == [0, pi/4].
    int32_t oct8;
    if (o.num == o.den) {
        oct8 = 1024; // exact diagonal
    } else if (o.num == 0) {
        oct8 = 0;
    } else {
        // Shared normalization: shift den into [2^15, 2^16). num <= den keeps
        // num in range under the same shift.
        int32_t den = o.den;
        int32_t num = o.num;
        int shift = 0;
        while (den < (1 << 15)) {
            den <<= 1;
            ++shift;
        }
        num <<= shift;

        const int d = (den >> 7) & 0xff;          // 8 bits below the leading one
        const int32_t mant = 256 + luts.recip[d]; // [257, 512]
        const int64_t p = static_cast<int64_t>(num) * mant; // ~ ratio * 2^24

        int x = static_cast<int>(p >> 16); // ratio * 256, truncated
        if (x > 255) x = 255;              // reciprocal overshoot near the diagonal
        // Chord term x/2 codes plus correction lin[x]/8 codes, both kept in
        // eighth-code units until the final rounding. Driving both from the
        // same index keeps the in-octant map monotone.
        oct8 = 4 * x + luts.lin[x];
    }

    // Octant swap: angle' = pi/2 - angle (2048 eighths).
    int32_t alpha8 = o.swapped ? 2048 - oct8 : oct8;

    // Quadrant reconstruction in eighth-codes; pi == 4096.
    int32_t phi8;
    if (!o.sign_re && !o.sign_im) phi8 = alpha8;
    else if (o.sign_re && !o.sign_im) phi8 = 4096 - alpha8;
    else if (o.sign_re && o.sign_im) phi8 = alpha8 - 4096;
    else phi8 = -alpha8;

    return {round_eighths_to_code(phi8), false};
}

PhaseResult cordic_phase(q15_t re, q15_t im) {
    if (re == 0 && im == 0) return {0, true};

    int32_t x = re;
    int32_t y = im;

    // Fold into the right half-plane; the pre-rotation contributes +-pi.
    int32_t z8 = 0; // angle accumulator, eighth-code units
    if (x < 0) {
        z8 = (y >= 0) ? 4096 : -4096;
        x = -x;
        y = -y;
    }

    // Normalize so max(|x|,|y|) lies in [2^12, 2^13): CORDIC gain (~1.647)
    // then keeps the datapath within 16 signed bits.
    int32_t ax = x < 0 ? -x : x;
    int32_t ay = y < 0 ? -y : y;
    int32_t m = ax > ay ? ax : ay;
    if (m >= (1 << 13)) {
        while (m >= (1 << 13)) {
            m >>= 1;
            x >>= 1; // arithmetic shift; small truncation absorbed by the error budget
            y >>= 1;
        }
    } else {
        while (m < (1 << 12)) {
            m <<= 1;
            x <<= 1;
            y <<= 1;
        }
    }

    for (int i = 0; i < 12; ++i) {
        const int32_t xs = x >> i;
        const int32_t ys = y >> i;
        if (y >= 0) {
            x += ys;
            y -= xs;
            z8 += kCordicAngles8[i];
        } else {
            x -= ys;
            y += xs;
            z8 -= kCordicAngles8[i];
        }
    }

    return {round_eighths_to_code(z8), false};
}

double oracle_phase(double re, double im) {
    if (re == 0.0 && im == 0.0) return 0.0;
    double phi = std::atan2(im, re);
    if (phi == kPi) phi = -kPi; // single-valued convention at the wrap
    return phi;
}

phase_code_t oracle_code(double re, double im) {
    return code_from_radians(oracle_phase(re, im));
}

OpCountModel lpe_op_counts() {
    OpCountModel m;
    m.multiplies = 1; // num * reciprocal mantissa
    m.lookups = 2;    // recip + lin
    m.compares = 3;   // two sign tests + magnitude compare
    m.shift_adds = 2; // normalization shift + chord/correction add
    return m;
}

OpCountModel cordic_op_counts() {
    OpCountModel m;
    m.multiplies = 0;
    m.lookups = 0;
    m.shift_adds = 24; // 12 iterations x 2 datapath updates
    m.angle_adds = 12;
    m.compares = 12;
    return m;
}

} // namespace ncp
