// Behavioral model of the biphasic stimulation output stage driving a
// series-RC electrode load: constant-current cathodic/anodic phases
// integrated at a fixed tick, a charge-balancing loop that trims the anodic
// amplitude until the post-pulse residual voltage sits inside a safety band,
// and closed-form passive discharge between pulses.
#pragma once

#include <cstdint>
#include <vector>

#include "ncp/qformat.hpp"

namespace ncp {

// One biphasic pulse: cathodic phase (current sunk out of the tissue),
// inter-phase gap, anodic phase. The H-bridge uses a single current sink,
// so each phase has one amplitude magnitude and the polarity is flipped.
struct StimPulseParams {
    double i_cathodic_ua = 100.0;
    double i_anodic_ua = 100.0;
    int64_t w_cathodic_us = 100;
    int64_t w_anodic_us = 100;
    int64_t gap_us = 20;
    double v_safe_mv = 4.0;    // residual-voltage band for the balancing loop
    double delta_i_ua = 2.0;   // per-pulse anodic amplitude adjustment
    double compliance_v = 8.0; // output stage voltage clamp
    void validate() const;
};

// Series resistance + capacitance electrode-tissue load. r_dis_ohm sets the
// passive-discharge time constant; r_leak_ohm > 0 adds an optional Faradaic
// leakage path across the capacitor during stimulation (off by default).
struct ElectrodeState {
    double v_cap_v = 0.0;
    double r_s_ohm = 5000.0;
    double c_f = 330e-9;
    double r_dis_ohm = 10000.0;
    double r_leak_ohm = 0.0;
    void validate() const;
};

// Tick-resolution record of one pulse. v_out is the electrode voltage
// i*R + v_cap after the tick's charge update, clamped to the compliance
// limit; clamp_flags marks ticks where the unclamped value exceeded it.
struct StimTrace {
    int64_t tick_us = 1;
    std::vector<double> i_out_ua;
    std::vector<double> v_out_v;
    std::vector<double> v_cap_v;
    std::vector<uint8_t> clamp_flags;
    double residual_v = 0.0; // capacitor voltage at anodic phase end
};

// Integrates one pulse through the load, advancing `state`. The tick must
// resolve the narrower phase by at least 10x and divide every phase width.
StimTrace run_pulse(const StimPulseParams& params, ElectrodeState& state,
                    int64_t tick_us = 1);

// One step of the balancing loop: residual above +v_safe trims the anodic
// amplitude down by delta_i, below -v_safe bumps it up; the amplitude stays
// within [delta_i, 2 * i_cathodic]. In-band residuals leave params unchanged.
StimPulseParams cb_update(double residual_v, const StimPulseParams& params);

// Exact exponential decay of the capacitor voltage through r_dis_ohm.
ElectrodeState passive_discharge(ElectrodeState state, double duration_us);

// Repeated pulses with optional balancing and inter-pulse passive discharge;
// records the residual seen after each pulse and the amplitude that drove it.
struct PulseTrainResult {
    std::vector<double> residual_mv;
    std::vector<double> i_anodic_ua;
    int64_t clamped_ticks = 0;
};
PulseTrainResult run_pulse_train(StimPulseParams params, ElectrodeState state,
                                 int n_pulses, bool charge_balance,
                                 double inter_pulse_us);

} // namespace ncp
