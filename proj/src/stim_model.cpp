#include "ncp/stim_model.hpp"

#include <algorithm>
#include <cmath>

namespace ncp {

void StimPulseParams::validate() const {
    if (!(i_cathodic_ua > 0.0) || !(i_anodic_ua > 0.0))
        throw ConfigError("pulse currents must be positive");
    if (w_cathodic_us <= 0 || w_anodic_us <= 0)
        throw ConfigError("pulse widths must be positive");
    if (gap_us < 0) throw ConfigError("inter-phase gap must be non-negative");
    if (!(v_safe_mv > 0.0)) throw ConfigError("residual band must be positive");
    if (!(delta_i_ua > 0.0)) throw ConfigError("balance step must be positive");
    if (!(compliance_v > 0.0)) throw ConfigError("compliance limit must be positive");
}

void ElectrodeState::validate() const {
    if (!std::isfinite(v_cap_v)) throw ConfigError("capacitor voltage must be finite");
    if (!(r_s_ohm > 0.0) || !(c_f > 0.0) || !(r_dis_ohm > 0.0))
        throw ConfigError("electrode parameters must be positive");
    if (r_leak_ohm < 0.0) throw ConfigError("leakage resistance must be non-negative");
}

StimTrace run_pulse(const StimPulseParams& params, ElectrodeState& state,
                    int64_t tick_us) {
    params.validate();
    state.validate();
    if (tick_us <= 0) throw ConfigError("tick must be positive");
    const int64_t min_width = std::min(params.w_cathodic_us, params.w_anodic_us);
    if (tick_us * 10 > min_width)
        throw ConfigError("tick too coarse to resolve the narrower pulse phase");
    if (params.w_cathodic_us % tick_us || params.w_anodic_us % tick_us ||
        params.gap_us % tick_us)
        throw ConfigError("phase widths must be whole ticks");

    const double dt_s = static_cast<double>(tick_us) * 1e-6;
    const double leak =
        state.r_leak_ohm > 0.0
            ? std::exp(-dt_s / (state.r_leak_ohm * state.c_f))
            : 1.0;

    StimTrace trace;
    trace.tick_us = tick_us;
    const int64_t total =
        (params.w_cathodic_us + params.gap_us + params.w_anodic_us) / tick_us;
    trace.i_out_ua.reserve(total);
    trace.v_out_v.reserve(total);
    trace.v_cap_v.reserve(total);
    trace.clamp_flags.reserve(total);

    struct Phase {
        double i_ua;
        int64_t ticks;
    };
    const Phase phases[3] = {
        {-params.i_cathodic_ua, params.w_cathodic_us / tick_us},
        {0.0, params.gap_us / tick_us},
        {params.i_anodic_ua, params.w_anodic_us / tick_us},
    };
    for (const Phase& ph : phases) {
        const double i_a = ph.i_ua * 1e-6;
        for (int64_t k = 0; k < ph.ticks; ++k) {
            state.v_cap_v = state.v_cap_v * leak + i_a * dt_s / state.c_f;
            const double raw = i_a * state.r_s_ohm + state.v_cap_v;
            const bool clamped = std::fabs(raw) > params.compliance_v;
            trace.i_out_ua.push_back(ph.i_ua);
            trace.v_cap_v.push_back(state.v_cap_v);
            trace.v_out_v.push_back(
                clamped ? std::copysign(params.compliance_v, raw) : raw);
            trace.clamp_flags.push_back(clamped ? 1 : 0);
        }
    }
    trace.residual_v = state.v_cap_v;
    return trace;
}

StimPulseParams cb_update(double residual_v, const StimPulseParams& params) {
    StimPulseParams next = params;
    const double band_v = params.v_safe_mv * 1e-3;
    if (residual_v > band_v)
        next.i_anodic_ua -= params.delta_i_ua;
    else if (residual_v < -band_v)
        next.i_anodic_ua += params.delta_i_ua;
    next.i_anodic_ua = std::clamp(next.i_anodic_ua, params.delta_i_ua,
                                  2.0 * params.i_cathodic_ua);
    return next;
}

ElectrodeState passive_discharge(ElectrodeState state, double duration_us) {
    state.validate();
    if (duration_us < 0.0) throw ConfigError("discharge duration must be non-negative");
    const double tau_s = state.r_dis_ohm * state.c_f;
    state.v_cap_v *= std::exp(-duration_us * 1e-6 / tau_s);
    return state;
}

PulseTrainResult run_pulse_train(StimPulseParams params, ElectrodeState state,
                                 int n_pulses, bool charge_balance,
                                 double inter_pulse_us) {
    if (n_pulses < 0) throw ConfigError("pulse count must be non-negative");
    PulseTrainResult result;
    result.residual_mv.reserve(n_pulses);
    result.i_anodic_ua.reserve(n_pulses);
    for (int n = 0; n < n_pulses; ++n) {
        result.i_anodic_ua.push_back(params.i_anodic_ua);
        StimTrace trace = run_pulse(params, state);
        result.residual_mv.push_back(trace.residual_v * 1e3);
        for (uint8_t f : trace.clamp_flags) result.clamped_ticks += f;
        if (charge_balance) params = cb_update(trace.residual_v, params);
        if (inter_pulse_us > 0.0) state = passive_discharge(state, inter_pulse_us);
    }
    return result;
}

} // namespace ncp
