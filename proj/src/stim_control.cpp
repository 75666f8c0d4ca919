#include "ncp/stim_control.hpp"

#include <cmath>

namespace ncp {

StimMode stim_mode_from_string(const std::string& s) {
    if (s == "sample-phase") return StimMode::SamplePhase;
    if (s == "sample-env") return StimMode::SampleEnv;
    if (s == "window-feature") return StimMode::WindowFeature;
    if (s == "combined") return StimMode::Combined;
    if (s == "random-phase") return StimMode::RandomPhase;
    throw ConfigError("unknown stimulation mode: " + s);
}

std::string to_string(StimMode m) {
    switch (m) {
        case StimMode::SamplePhase: return "sample-phase";
        case StimMode::SampleEnv: return "sample-env";
        case StimMode::WindowFeature: return "window-feature";
        case StimMode::Combined: return "combined";
        default: return "random-phase";
    }
}

namespace {

// Offset in codes for a delay at a band frequency; rejects a full cycle.
int compensation_offset(double group_delay_s, double f_center_hz) {
    if (group_delay_s < 0.0) throw ConfigError("group delay must be >= 0");
    if (f_center_hz <= 0.0) throw ConfigError("band center must be positive");
    const double cycles = group_delay_s * f_center_hz;
    if (cycles >= 1.0)
        throw ConfigError("delay compensation of a full cycle or more is ambiguous");
    return static_cast<int>(std::llround(cycles * kPhaseCodes));
}

} // namespace

phase_code_t advance_compensation(phase_code_t target, double group_delay_s,
                                  double f_center_hz) {
    return wrap_code(target - compensation_offset(group_delay_s, f_center_hz));
}

PrbsState make_prbs(uint64_t seed) {
    auto reg = static_cast<uint16_t>(seed & 0xffffu);
    if (reg == 0) throw ConfigError("LFSR seed must be nonzero in its low 16 bits");
    return PrbsState{reg};
}

uint16_t lfsr_step(uint16_t s) {
    const uint16_t bit = static_cast<uint16_t>((s ^ (s >> 2) ^ (s >> 3) ^ (s >> 5)) & 1u);
    return static_cast<uint16_t>((s >> 1) | (bit << 15));
}

phase_code_t prbs_next(PrbsState& st) {
    for (int i = 0; i < 10; ++i) st.lfsr = lfsr_step(st.lfsr);
    const auto top = static_cast<int32_t>(st.lfsr >> 6); // 10 bits
    return static_cast<phase_code_t>(top >= 512 ? top - 1024 : top);
}

int StimConfig::refractory_samples() const {
    return static_cast<int>(std::ceil(rate_hz / f_max_hz));
}

void StimConfig::validate() const {
    if (channel < 0 || channel >= kNumChannels) throw ConfigError("channel out of range");
    if (f_max_hz <= 0.0) throw ConfigError("f_max_hz must be positive");
    if (rate_hz <= 0.0) throw ConfigError("rate_hz must be positive");
    if (dec_factor < 1) throw ConfigError("dec_factor must be >= 1");
    if (th_win_l > th_win_h) throw ConfigError("therapeutic range is inverted");
    if (th_win_l < 0) throw ConfigError("window thresholds are non-negative");
    if (env_threshold < 0) throw ConfigError("envelope threshold is non-negative");
    if (blank_duration_samples < 0) throw ConfigError("blank duration must be >= 0");
    if (blank_duration_samples > refractory_samples())
        throw ConfigError("blanking longer than the refractory interval would "
                          "overlap the next trigger");
    if (window_pair_id < 0) throw ConfigError("pair id must be >= 0");
    const bool phase_mode = mode == StimMode::SamplePhase || mode == StimMode::Combined ||
                            mode == StimMode::RandomPhase;
    if (phase_mode && compensate)
        (void)compensation_offset(group_delay_s, f_center_hz); // range check
    if (mode == StimMode::RandomPhase) (void)make_prbs(prbs_seed);
}

TriggerEngine::TriggerEngine(const StimConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    refractory_ = cfg_.refractory_samples();
    offset_codes_ = cfg_.compensate ? compensation_offset(cfg_.group_delay_s, cfg_.f_center_hz) : 0;
    fixed_target_ = wrap_code(cfg_.target_phase - offset_codes_);
    if (cfg_.mode == StimMode::RandomPhase) {
        prbs_ = make_prbs(cfg_.prbs_seed);
        random_target_ = wrap_code(prbs_next(prbs_) - offset_codes_);
    }
}

void TriggerEngine::reset() {
    has_prev_ = false;
    prev_phase_ = 0;
    prev_env_ = 0;
    any_fire_ = false;
    last_fire_ = 0;
    last_window_seen_ = -1;
    gate_missing_ = 0;
    fired_ = 0;
    if (cfg_.mode == StimMode::RandomPhase) {
        prbs_ = make_prbs(cfg_.prbs_seed);
        random_target_ = wrap_code(prbs_next(prbs_) - offset_codes_);
    }
}

bool TriggerEngine::phase_crossing(phase_code_t cur, phase_code_t target) const {
    if (!has_prev_) return false;
    if (cfg_.wrap_rejection) {
        // Fire when the target lies in (prev, cur] along a small forward
        // step; steps of a quarter cycle or more are wrap jumps, not motion.
        const phase_code_t step = wrap_code(cur - prev_phase_);
        if (step <= 0 || step >= 256) return false;
        const phase_code_t d = wrap_code(cur - target);
        return d >= 0 && d < step;
    }
    // Plain signed comparison: blind to the circular topology, so a code
    // wrapping under the target refires even when the phase barely moved.
    return prev_phase_ < target && target <= cur;
}

std::optional<TriggerEvent> TriggerEngine::on_sample(int64_t t_index, phase_code_t phase,
                                                     q15_t env, const WindowSnapshot& win,
                                                     bool blanked) {
    const bool new_window = win.valid && win.window_index != last_window_seen_;
    if (new_window) last_window_seen_ = win.window_index;
    const bool in_range = win.valid && win.value >= cfg_.th_win_l && win.value <= cfg_.th_win_h;

    bool condition = false;
    phase_code_t target_in_force = fixed_target_;
    switch (cfg_.mode) {
        case StimMode::SamplePhase:
            condition = phase_crossing(phase, fixed_target_);
            break;
        case StimMode::SampleEnv:
            condition = has_prev_ && prev_env_ < cfg_.env_threshold && cfg_.env_threshold <= env;
            break;
        case StimMode::WindowFeature:
            condition = new_window && in_range;
            break;
        case StimMode::Combined:
            condition = phase_crossing(phase, fixed_target_);
            if (condition && !win.valid) {
                ++gate_missing_; // no window ready: gate treated closed
                condition = false;
            } else {
                condition = condition && in_range;
            }
            break;
        case StimMode::RandomPhase:
            target_in_force = random_target_;
            condition = phase_crossing(phase, random_target_);
            break;
    }

    const bool refractory_open = !any_fire_ || t_index - last_fire_ >= refractory_;
    std::optional<TriggerEvent> out;
    if (condition && refractory_open && !blanked) {
        TriggerEvent ev;
        ev.t_index = t_index;
        ev.mode = cfg_.mode;
        ev.effective_target = target_in_force;
        const bool window_mode =
            cfg_.mode == StimMode::WindowFeature || cfg_.mode == StimMode::Combined;
        ev.window_valid = window_mode && win.valid;
        ev.window_value = ev.window_valid ? win.value : 0;
        ev.channel = cfg_.channel;
        ev.pair_id = window_mode ? cfg_.window_pair_id : -1;
        out = ev;
        last_fire_ = t_index;
        any_fire_ = true;
        ++fired_;
        if (cfg_.mode == StimMode::RandomPhase)
            random_target_ = wrap_code(prbs_next(prbs_) - offset_codes_);
    }

    prev_phase_ = phase;
    prev_env_ = env;
    has_prev_ = true;
    return out;
}

void emit_blanking(const TriggerEvent& ev, const StimConfig& cfg, BlankingSchedule& schedule) {
    if (cfg.blank_duration_samples <= 0) return;
    schedule.add(ev.t_index * cfg.dec_factor,
                 static_cast<int64_t>(cfg.blank_duration_samples) * cfg.dec_factor);
}

} // namespace ncp
