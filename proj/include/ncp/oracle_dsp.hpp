// Double-precision reference DSP used to judge the fixed-point chain:
// zero-phase Butterworth bandpass, FFT-based analytic signal, spectrum and
// slope estimation, circular statistics, and Pearson correlation.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace ncp {

struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0; // numerator
    double a1 = 0, a2 = 0;         // denominator (a0 normalized to 1)
};

// Fourth-order Butterworth bandpass (second-order lowpass prototype through
// the bandpass transform), bilinear-discretized with prewarped edges so the
// -3 dB points land exactly on f_lo and f_hi.
struct ButterBandpass {
    std::array<Biquad, 2> sections{};
    double f_lo_hz = 0, f_hi_hz = 0, rate_hz = 0;
};

ButterBandpass design_butter_bandpass(double f_lo_hz, double f_hi_hz, double rate_hz);

double bandpass_mag_sq(const ButterBandpass& bp, double f_hz);

std::vector<double> sosfilt(const ButterBandpass& bp, const std::vector<double>& x);

// Forward-backward (zero-phase) filtering with odd-reflection padding long
// enough for the band transient to die out. Throws DataError when the trace
// is too short to pad.
std::vector<double> filtfilt(const ButterBandpass& bp, const std::vector<double>& x);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

struct AnalyticTrace {
    std::vector<double> re, im;    // analytic pair
    std::vector<double> phase;     // radians, [-pi, pi)
    std::vector<double> envelope;  // |re + j im|
};

// Frequency-domain analytic signal; the input is zero-padded to the next
// power of two internally.
AnalyticTrace analytic_signal(const std::vector<double>& x);

// Zero-phase bandpass then analytic signal: the reference per-sample phase.
// Throws DataError when the trace holds fewer than 8 cycles of f_lo.
AnalyticTrace oracle_ground_truth(const std::vector<double>& trace, double f_lo_hz,
                                  double f_hi_hz, double rate_hz);

// Least-squares slope of the unwrapped phase, rad/s.
double unwrapped_slope(const std::vector<double>& phase, double rate_hz);

// Welch power spectral density (Hann window, 50% overlap, one-sided).
std::vector<double> welch_psd(const std::vector<double>& x, double rate_hz, int nfft,
                              std::vector<double>* freqs_hz);

// Least-squares slope of 10*log10(psd) against log10(f) over [f_lo, f_hi],
// i.e. dB per decade.
double loglog_slope_db_per_decade(const std::vector<double>& freqs_hz,
                                  const std::vector<double>& psd, double f_lo_hz,
                                  double f_hi_hz);

struct CircularStats {
    int64_t n = 0;
    double mean_deg = 0.0;      // circular mean of the samples
    double r = 0.0;             // resultant length in [0, 1]
    std::array<int64_t, 36> hist{}; // 10-degree bins over [-180, 180)
};

// Input angles in radians (any branch; wrapped internally).
CircularStats circular_stats(const std::vector<double>& angles_rad);

struct PearsonResult {
    double r = 0.0;
    bool degenerate = false; // variance below the supplied floor
};

PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b,
                      double var_floor_a = 0.0, double var_floor_b = 0.0);

} // namespace ncp
