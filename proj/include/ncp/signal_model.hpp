// Synthetic voltage sources and a behavioral 16-channel analog front end:
// programmable gain with static mismatch, input-referred noise, ADC
// quantization with clamping, and input blanking around stimulation.
#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "ncp/qformat.hpp"

namespace ncp {

inline constexpr int kNumChannels = 16;

struct FrontendConfig {
    double gain_db = 53.0;
    double mismatch_sigma_rel = 0.0; // relative sigma of the static gain spread
    double irn_uvrms = 0.0;          // input-referred noise, uV rms; 0 disables
    int adc_bits = 10;
    double adc_fullscale_vpp = 1.2;
    double per_channel_rate_hz = 4000.0;
    std::array<int, kNumChannels> scan_order{0, 1, 2,  3,  4,  5,  6,  7,
                                             8, 9, 10, 11, 12, 13, 14, 15};
    uint64_t seed = 1;
    bool chip_gain_limits = true; // enforce the 53..61 dB programmable range

    double gain_linear() const;
    double lsb_v() const { return adc_fullscale_vpp / (1 << adc_bits); }
    void validate() const; // throws ConfigError
};

struct RawSampleFrame {
    int64_t t_index = 0;                     // per-channel sample counter
    std::array<int16_t, kNumChannels> codes{}; // indexed by channel id
};

// Sorted, non-overlapping half-open intervals [start, start+len) of sample
// indices during which the front end is held at zero.
struct BlankingSchedule {
    std::vector<std::pair<int64_t, int64_t>> intervals; // (start, duration)

    void validate() const; // throws ConfigError
    bool active(int64_t t) const;
    void add(int64_t start, int64_t duration); // keeps order, merges overlap
};

// Single-channel test source: sine plus pink noise.
//   amplitude is exactly amp_pp_v/2; the pink component is white Gaussian
//   noise shaped by a fixed three-section pole/zero cascade and scaled so the
//   emitted block has exactly pink_rms_v rms.
std::vector<double> gen_sine_pink(double amp_pp_v, double freq_hz, double pink_rms_v,
                                  double duration_s, double rate_hz, uint64_t seed);

// Bare shaped-noise block with unit rms (exposed for spectrum tests).
std::vector<double> pink_noise(int64_t n, double rate_hz, uint64_t seed);

enum class PairKind { PlvLocked, PacCoupled, Independent };

struct CoupledPairParams {
    double f_low_hz = 6.0;     // phase-bearing band
    double f_high_hz = 80.0;   // amplitude-bearing band (pac only)
    double amp_pp_v = 2e-3;    // channel 0 peak-to-peak
    double amp2_pp_v = 2e-3;   // channel 1 peak-to-peak (base amplitude)
    double lag_rad = 0.0;      // channel 1 phase lag (plv-locked)
    double m = 1.0;            // modulation depth (pac-coupled)
    double noise_rms_v = 1e-3; // per-channel noise (independent)
};

// Two-channel test source. plv-locked: same-frequency cosines with a constant
// lag. pac-coupled: channel 0 carries the low-band phase, channel 1 a high
// tone with amplitude (1 + m*cos(phi_low)). independent: two uncorrelated
// white Gaussian channels.
std::array<std::vector<double>, 2> gen_coupled_pair(PairKind kind,
                                                    const CoupledPairParams& params,
                                                    double duration_s, double rate_hz,
                                                    uint64_t seed);

PairKind pair_kind_from_string(const std::string& s); // throws ConfigError

// Behavioral front end + ADC for one run. Gains are drawn once at
// construction; each channel owns an independent noise stream so digitizing
// order across channels cannot change results. Blanked samples still consume
// a noise draw (the noise exists either way), only the code is forced to 0.
class AfeModel {
  public:
    explicit AfeModel(const FrontendConfig& cfg); // validates

    int16_t digitize_sample(int ch, double v, bool blanked);
    const std::array<double, kNumChannels>& channel_gains() const { return gains_; }
    const FrontendConfig& config() const { return cfg_; }

  private:
    FrontendConfig cfg_;
    std::array<double, kNumChannels> gains_{};
    std::vector<GaussianSource> noise_;
    double noise_v_ = 0.0;
    int32_t code_min_ = 0, code_max_ = 0;
};

// Batch digitization of 16 equal-length traces under a fixed schedule.
std::vector<RawSampleFrame> afe_digitize(const std::array<std::vector<double>, kNumChannels>& traces,
                                         const FrontendConfig& cfg,
                                         const BlankingSchedule& blanking);

} // namespace ncp
