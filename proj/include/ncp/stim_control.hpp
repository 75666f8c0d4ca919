// Multi-mode stimulation trigger engine: per-sample phase/envelope threshold
// crossing with wrap-jump rejection, windowed-feature therapeutic range
// gating, combined mode, LFSR-randomized phase targets, group-delay
// compensation, refractory rate limiting, and blanking emission.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ncp/connectivity.hpp"
#include "ncp/qformat.hpp"
#include "ncp/signal_model.hpp"

namespace ncp {

enum class StimMode { SamplePhase, SampleEnv, WindowFeature, Combined, RandomPhase };

StimMode stim_mode_from_string(const std::string& s); // throws ConfigError
std::string to_string(StimMode m);

// Shifts a phase target earlier by the phase the band advances during the
// pipeline delay: effective = wrap(target - round(1024 * delay_s * f_hz)).
// The advance must be less than a full cycle.
phase_code_t advance_compensation(phase_code_t target, double group_delay_s,
                                  double f_center_hz); // throws ConfigError

// 16-bit maximal-length Fibonacci LFSR (x^16 + x^14 + x^13 + x^11 + 1),
// stepped ten times per draw; the top ten bits, read as two's complement,
// become the phase code.
struct PrbsState {
    uint16_t lfsr = 0xACE1;
};
PrbsState make_prbs(uint64_t seed); // low 16 bits; zero -> ConfigError
uint16_t lfsr_step(uint16_t s);
phase_code_t prbs_next(PrbsState& st);

struct StimConfig {
    StimMode mode = StimMode::SamplePhase;
    int channel = 0;            // monitored channel
    phase_code_t target_phase = -512; // 180 degrees
    q15_t env_threshold = 8192; // SampleEnv upward-crossing level
    q15_t th_win_l = 0;         // therapeutic range for window gating
    q15_t th_win_h = 32767;
    FeatureKind window_kind = FeatureKind::Plv;
    int window_pair_id = 0;
    double f_max_hz = 6.0;      // maximum trigger rate
    double group_delay_s = 0.031;
    double f_center_hz = 6.0;
    bool compensate = true;
    bool wrap_rejection = true; // false: plain signed comparison (test builds)
    int blank_duration_samples = 0; // decimated samples, mapped x dec_factor
    uint64_t prbs_seed = 0xACE1;
    double rate_hz = 1000.0;    // decimated clock this engine runs on
    int dec_factor = 4;         // decimated -> input clock ratio

    int refractory_samples() const; // ceil(rate / f_max)
    void validate() const;          // throws ConfigError
};

struct TriggerEvent {
    int64_t t_index = 0; // decimated clock
    StimMode mode = StimMode::SamplePhase;
    phase_code_t effective_target = 0;
    bool window_valid = false;
    q15_t window_value = 0;
    int channel = 0;
    int pair_id = -1;
};

// Latest completed feature window for the configured (kind, pair id);
// zero-order hold between boundaries.
struct WindowSnapshot {
    bool valid = false;
    int64_t window_index = -1;
    q15_t value = 0;
};

class TriggerEngine {
  public:
    explicit TriggerEngine(const StimConfig& cfg); // validates

    // Call once per decimated sample of the monitored channel, in t order.
    std::optional<TriggerEvent> on_sample(int64_t t_index, phase_code_t phase, q15_t env,
                                          const WindowSnapshot& win = {},
                                          bool blanked = false);

    int64_t trigger_count() const { return fired_; }
    // Combined-mode phase crossings suppressed because no window was ready.
    int64_t gate_missing_count() const { return gate_missing_; }
    const StimConfig& config() const { return cfg_; }
    void reset();

  private:
    bool phase_crossing(phase_code_t cur, phase_code_t target) const;

    StimConfig cfg_;
    int refractory_ = 1;
    phase_code_t fixed_target_ = 0; // compensated, for fixed-target modes
    int offset_codes_ = 0;
    PrbsState prbs_;
    phase_code_t random_target_ = 0; // compensated, redrawn after each fire
    bool has_prev_ = false;
    phase_code_t prev_phase_ = 0;
    q15_t prev_env_ = 0;
    int64_t last_fire_ = 0;
    bool any_fire_ = false;
    int64_t last_window_seen_ = -1;
    int64_t gate_missing_ = 0;
    int64_t fired_ = 0;
};

// Appends the input-rate blanking interval for an accepted trigger:
// [t * dec_factor, t * dec_factor + blank_duration_samples * dec_factor).
void emit_blanking(const TriggerEvent& ev, const StimConfig& cfg, BlankingSchedule& schedule);

} // namespace ncp
