// Three-stage fixed-point filter bank per channel:
//
//   input 4 kHz -> 31-tap lowpass, evaluated only at every 4th input sample
//   (decimate by 4) -> at 1 kHz, a 63-tap bandpass (Re path) and its
//   sine-modulated counterpart (Im path) sharing one window and one group
//   delay, so (Re, Im) form an analytic pair with no extra alignment delay.
//
// Coefficients are Q1.15; accumulators stay within 40 bits; outputs are
// rounded half-to-even and saturated (saturation is counted, not fatal).
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ncp/qformat.hpp"

namespace ncp {

struct BandConfig {
    double f_lo_hz = 4.0;
    double f_hi_hz = 8.0;
    double f_center_hz = 0.0; // 0 -> midpoint of [f_lo, f_hi]

    double center() const { return f_center_hz > 0.0 ? f_center_hz : 0.5 * (f_lo_hz + f_hi_hz); }
};

struct FilterDesignSpec {
    double input_rate_hz = 4000.0;
    int decim = 4;
    int lpf_taps = 31;  // odd
    int band_taps = 63; // odd
    double lpf_pass_hz = 100.0; // passband edge; stopband starts at the decimated Nyquist
    double atten_db = 50.0;     // stopband target for the lowpass, window target for the band pair
    BandConfig band{};
};

// Quantized filter set plus the design report used by tooling.
struct FilterSet {
    FilterDesignSpec spec{};
    std::vector<q15_t> lpf; // even-symmetric, DC gain ~1
    std::vector<q15_t> bpf; // even-symmetric, DC gain exactly 0
    std::vector<q15_t> ht;  // odd-symmetric (center tap 0)
    int group_delay_lpf = 0;  // input-rate samples
    int group_delay_band = 0; // decimated-rate samples

    struct Achieved {
        double lpf_atten_db = 0.0;        // worst stopband attenuation, quantized taps
        double ratio_db_at_center = 0.0;  // 20*log10(|H_im|/|H_re|) at f_center
        double quadrature_err_deg = 0.0;  // deviation from a 90 degree lag at f_center
        double dc_gain_re = 0.0;          // exact tap sum of the Re path (Q1.15 units)
    } achieved;

    double decimated_rate_hz() const { return spec.input_rate_hz / spec.decim; }
    uint64_t content_hash() const;
};

// Windowed-sinc / modulated-window design. Throws ConfigError when the tap
// budget cannot reach the requested stopband attenuation (message carries the
// achieved figure).
FilterSet design_filters(const FilterDesignSpec& spec);

// Complex frequency response of an integer-coefficient FIR at f (Hz).
void fir_response(const std::vector<q15_t>& taps, double rate_hz, double f_hz,
                  double* mag, double* phase_rad);

// Kaiser helpers (exposed for tests).
double kaiser_beta_for_atten(double atten_db);
double bessel_i0(double x);

// ADC code -> Q1.15 with one bit of headroom so lowpass overshoot on clipped
// inputs cannot saturate the chain.
q15_t adc_code_to_q15(int32_t code, int adc_bits);

struct AnalyticSample {
    int64_t t_index = 0; // decimated index; input-clock timestamp is t_index * decim
    q15_t bp = 0;        // bandpass (Re path) output
    q15_t re = 0;        // analytic real part (== bp for this filter bank)
    q15_t im = 0;        // analytic imaginary part (Im path output)
};

// One channel of the filter bank. Feed one input-rate sample per call; every
// decim-th call yields an analytic sample.
class ChannelPipeline {
  public:
    explicit ChannelPipeline(const FilterSet* fs);

    struct StageOutput {
        AnalyticSample analytic;
        q15_t lp = 0; // decimated lowpass output that feeds the band stage
    };

    std::optional<StageOutput> process(q15_t x);
    void reset();

    uint64_t saturation_events() const { return sat_count_; }
    int64_t decimated_count() const { return dec_index_; }

  private:
    q15_t band_dot(const std::vector<q15_t>& taps);

    const FilterSet* fs_;
    std::vector<q15_t> lpf_ring_;
    std::vector<q15_t> band_ring_;
    int lpf_pos_ = 0;
    int band_pos_ = 0;
    int phase_ = 0;
    int64_t dec_index_ = 0;
    uint64_t sat_count_ = 0;
};

// Static arithmetic cost of the bank (used by reports and tests).
struct MacBudget {
    double lpf_macs_per_s = 0.0;
    double band_macs_per_s = 0.0;
    double total_macs_per_s = 0.0;
    double lpf_shift_rate_hz = 0.0;  // delay registers shift at the input rate
    double band_shift_rate_hz = 0.0; // band registers shift at the decimated rate
};

MacBudget mac_budget(int n_channels, const FilterDesignSpec& spec);

} // namespace ncp
