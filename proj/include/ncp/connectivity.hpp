// Windowed connectivity features over analytic channel streams: Chebyshev
// (max-abs) envelope, phase-locking value, phase-amplitude coupling, and
// spectral energy, computed in fixed point with a shared quarter-wave sine
// table, plus double-precision ideal counterparts for calibration.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ncp/qformat.hpp"
#include "ncp/signal_model.hpp"

namespace ncp {

// Quarter-wave sine table: quarter[i] = round(256*sin(pi*i/512)) for
// i in [0,255]; the full 1024-code circle is reconstructed by symmetry and
// sin at the quarter point (code 256) is exactly 256.
struct TrigLut {
    std::array<int16_t, 256> quarter{};
    uint64_t content_hash() const;
};

TrigLut build_trig_lut();

// Reconstructed sine/cosine of a phase code, in [-256, 256].
int trig_sin(const TrigLut& lut, phase_code_t c);
int trig_cos(const TrigLut& lut, phase_code_t c);

// Max-abs amplitude of one analytic sample. Bounded between the Euclidean
// envelope over sqrt(2) and the Euclidean envelope itself.
q15_t envelope_linf(q15_t re, q15_t im);

enum class FeatureKind { Plv, Pac, Se };

struct PairSpec {
    int id = 0;
    int ch_a = 0; // phase-bearing channel (low band for PAC)
    int ch_b = 0; // second phase channel (PLV) or amplitude channel (PAC)
    FeatureKind feature = FeatureKind::Plv;
};

inline constexpr int kMaxPairs = 8;

struct PairConfig {
    std::vector<PairSpec> pairs;
    void validate() const; // throws ConfigError
};

// Non-overlapping windows; length a power of two so normalization is a
// shift. 48-bit accumulators stay exact for lengths up to 2^16.
struct WindowConfig {
    int n_samples = 1024;
    int hop() const { return n_samples; }
    void validate() const; // throws ConfigError
};

struct FeatureWindowRecord {
    int64_t window_index = 0;
    int id = 0; // pair id for PLV/PAC, channel id for SE
    FeatureKind kind = FeatureKind::Plv;
    q15_t value = 0;
    bool degenerate = false; // PAC normalization guard tripped
};

// One-shot window reductions (same arithmetic as the streaming engine).
// Window lengths must be powers of two; mismatched lengths are data errors.
q15_t plv_window(const std::vector<phase_code_t>& a, const std::vector<phase_code_t>& b,
                 const TrigLut& lut);

struct PacResult {
    q15_t raw = 0;
    q15_t normalized = 0;
    bool degenerate = false;
};
PacResult pac_window(const std::vector<phase_code_t>& phase_low,
                     const std::vector<q15_t>& amp_high, const TrigLut& lut);

q15_t se_window(const std::vector<q15_t>& bp);

// Streaming extractor: per decimated tick it ingests one phase, envelope, and
// band sample per channel, accumulates every configured pair plus per-channel
// spectral energy, and emits the finished records at each window boundary
// (pair records in configuration order, then SE for channels 0..15).
struct ChannelFeatureInput {
    phase_code_t phase = 0;
    q15_t env = 0;
    q15_t bp = 0;
};

class FeatureEngine {
  public:
    FeatureEngine(const PairConfig& pairs, const WindowConfig& window, const TrigLut& lut);

    std::vector<FeatureWindowRecord> push(const std::array<ChannelFeatureInput, kNumChannels>& in);
    void reset();
    int64_t windows_emitted() const { return windows_; }

  private:
    struct PairAcc {
        int64_t sc = 0, ss = 0, amp = 0;
    };
    PairConfig pairs_;
    WindowConfig window_;
    const TrigLut* lut_;
    std::vector<PairAcc> acc_;
    std::array<int64_t, kNumChannels> se_acc_{};
    int tick_ = 0;
    int64_t windows_ = 0;
};

// Double-precision ideal features over the same non-overlapping windows.
// Inputs are instantaneous phases (radians) and amplitudes; the trailing
// partial window is dropped.
std::vector<double> ideal_plv_windows(const std::vector<double>& phase_a,
                                      const std::vector<double>& phase_b, int n_window);
std::vector<double> ideal_pac_windows(const std::vector<double>& phase_low,
                                      const std::vector<double>& amp_high, int n_window);
std::vector<double> ideal_se_windows(const std::vector<double>& bp, int n_window);

// Convenience wrapper that derives phases and amplitudes from raw voltage
// traces with the zero-phase reference filters: PLV between the low-band
// phases, PAC between trace_a's low-band phase and trace_b's high-band
// amplitude, SE of trace_a's low-band component.
struct IdealFeatureSeries {
    std::vector<double> plv, pac, se;
};
IdealFeatureSeries ideal_features(const std::vector<double>& trace_a,
                                  const std::vector<double>& trace_b, double low_lo_hz,
                                  double low_hi_hz, double high_lo_hz, double high_hi_hz,
                                  double rate_hz, int n_window);

} // namespace ncp
