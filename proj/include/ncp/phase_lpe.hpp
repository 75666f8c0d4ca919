// Instantaneous phase extraction from a fixed-point analytic pair (re, im).
//
// Two bit-exact kernels produce the same 10-bit phase code (one code =
// 2*pi/1024 rad, range [-512, 511], +pi maps to -512):
//
//  * lpe_phase   - octant reduction + reciprocal/linearization lookup tables
//                  and a single general multiply per conversion.
//  * cordic_phase - 12-iteration vectoring CORDIC, 16-bit datapath, kept as
//                  the conventional reference the table design is judged
//                  against (shift-add only, no multiplier).
//
// Both are required to land within one code of a double-precision atan2 for
// every input; the exhaustive sweep in the test suite is the binding check.
#pragma once

#include <array>
#include <cstdint>

#include "ncp/qformat.hpp"

namespace ncp {

// Octant decomposition of an input pair: |im|>|re| selects the mirrored
// octant, signs select the quadrant. num/den is confined to [0, 1].
struct OctantInfo {
    bool sign_re = false; // re < 0
    bool sign_im = false; // im < 0
    bool swapped = false; // |im| > |re|
    int32_t num = 0;      // min(|re|, |im|)
    int32_t den = 0;      // max(|re|, |im|)
};

OctantInfo octant_reduce(int32_t re, int32_t im);

// Lookup tables for the in-octant arctangent.
//  recip: 256 x 9 bit. Entry d approximates the reciprocal of a denominator
//         normalized into [2^15, 2^16): mantissa = 256 + recip[d] ~= 2^17/(256+d).
//  lin:   256 x 7 bit. Correction from the linear chord to atan, in 1/8-code
//         units: lin[x] = round((atan(x/256) - (pi/4)(x/256)) * 1024/(2*pi) * 8).
struct LpeLuts {
    std::array<uint16_t, 256> recip{};
    std::array<uint8_t, 256> lin{};

    uint64_t content_hash() const;
};

LpeLuts build_luts();

struct PhaseResult {
    phase_code_t code = 0;
    bool degenerate = false; // re == im == 0
};

PhaseResult lpe_phase(q15_t re, q15_t im, const LpeLuts& luts);
PhaseResult cordic_phase(q15_t re, q15_t im);

// Double-precision reference: atan2 with atan2(0, re<0) mapped to -pi so the
// rounded code convention (+pi -> -512) is single-valued.
double oracle_phase(double re, double im);
phase_code_t oracle_code(double re, double im);

// Static per-conversion operation counts used by the benchmark report.
struct OpCountModel {
    int multiplies = 0;
    int lookups = 0;
    int shift_adds = 0;
    int angle_adds = 0;
    int compares = 0;
};

OpCountModel lpe_op_counts();    // 1 multiply + 2 lookups + octant compares
OpCountModel cordic_op_counts(); // 24 shift-adds + 12 angle adds

} // namespace ncp
