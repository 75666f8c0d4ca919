// End-to-end run engine: input synthesis/replay, front-end digitization, the
// per-channel fixed-point filter bank and phase kernels, windowed features,
// trigger evaluation with optional closed-loop blanking and pulse-engine
// feedback, artifact emission, and the measurement experiments built on top
// (phase-locking error, noise tolerance, feature fidelity, kernel benchmark).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ncp/io_formats.hpp"
#include "ncp/oracle_dsp.hpp"
#include "ncp/phase_lpe.hpp"

namespace ncp {

// One designed filter bank per band assignment in the configuration.
std::vector<DesignedBank> design_banks(const RunConfig& cfg);

// Per-channel source voltages for a generated input spec (File inputs do not
// go through this path). Deterministic in (cfg.input, cfg.seed).
std::array<std::vector<double>, kNumChannels> build_input_traces(const RunConfig& cfg);

struct RunStats {
    int64_t input_samples = 0; // per channel
    int64_t decimated_samples = 0;
    int64_t windows = 0;
    int64_t feature_records = 0;
    int64_t triggers = 0;
    int64_t gate_missing = 0;
    int64_t blanked_input_samples = 0;
    uint64_t saturation_events = 0;
};

struct RunOutputs {
    std::vector<PhaseCsvRow> phases; // one row per decimated tick
    std::vector<std::array<q15_t, kNumChannels>> envelopes;
    std::vector<std::array<q15_t, kNumChannels>> lowpass; // decimated LPF stream
    std::vector<FeatureCsvRow> features;
    std::vector<TriggerCsvRow> triggers;
    std::vector<StimPulseCsvRow> stim_pulses; // closed loop only
    BlankingSchedule blanking;                // input-rate intervals applied
    RunStats stats;
    std::string summary_json;
};

// Open-loop deterministic run: triggers are recorded but do not blank the
// front end or fire the pulse engine. `parallel` selects the multi-threaded
// filter path; both paths produce identical outputs.
RunOutputs run_offline(const RunConfig& cfg, bool parallel = false);

// Closed loop: each accepted trigger blanks the front end (from the next
// input sample onward) and drives one biphasic pulse through the electrode
// model, with passive discharge between pulses.
RunOutputs simulate_closed_loop(const RunConfig& cfg);

struct ArtifactPaths {
    std::string features, phases, triggers, stim, summary;
};
// Writes the artifact set into out_dir (created if missing); returns the
// paths actually written (empty string = artifact not applicable).
ArtifactPaths write_artifacts(const std::string& out_dir, const RunConfig& cfg,
                              const RunOutputs& out);

// ---------------------------------------------------------------------------
// Experiments

// Phase-locking error at trigger instants, measured against the zero-phase
// reference phase of the decimated lowpass stream on the monitored channel:
// error = wrap(intended_target - reference_phase at the trigger tick).
struct PhaseErrorResult {
    CircularStats stats;
    std::vector<double> errors_rad;
    int64_t n_triggers = 0;
    bool empty = false; // zero triggers: explicit empty status, not an error
    uint64_t saturation_events = 0;
};
PhaseErrorResult phase_error_experiment(const RunConfig& cfg);

// Repeats the phase-error protocol at several pink-noise levels.
struct NoiseSweepPoint {
    double pink_rms_v = 0.0;
    double r = 0.0;
    double mean_deg = 0.0;
    int64_t n_triggers = 0;
    uint64_t saturation_events = 0;
};
std::vector<NoiseSweepPoint> noise_sweep_experiment(const RunConfig& base,
                                                    const std::vector<double>& pink_levels_v);

// Fixed-point window features against their double-precision ideals over two
// synthetic sweeps: a locking sweep (inter-channel phase jitter depth ramped
// 0 -> pi across windows) scored on PLV, and a coupling sweep (modulation
// depth ramped 0 -> 1) scored on PAC.
struct CorrelationResult {
    int64_t n_windows = 0;
    PearsonResult plv;
    PearsonResult pac;
    std::vector<double> device_plv, ideal_plv;
    std::vector<double> device_pac, ideal_pac;
};
CorrelationResult correlation_experiment(int n_windows, uint64_t seed);

// Exhaustive accuracy + cost comparison of the two phase kernels.
struct BenchReport {
    int max_err_lpe = 0;
    int max_err_cordic = 0;
    double mean_abs_err_lpe = 0.0;
    double mean_abs_err_cordic = 0.0;
    double exact_frac_lpe = 0.0;
    double exact_frac_cordic = 0.0;
    double lpe_conversions_per_s = 0.0;
    double cordic_conversions_per_s = 0.0;
    OpCountModel lpe_ops{};
    OpCountModel cordic_ops{};
};
BenchReport bench_compare();
std::string bench_report_json(const BenchReport& r);
std::string bench_report_table(const BenchReport& r);

// Wall-clock throughput of the full 16-channel pipeline (filters, phase,
// envelopes, features, trigger engine) on synthesized input.
struct ThroughputReport {
    double input_samples_per_s = 0.0; // aggregate over all 16 channels
    double realtime_factor = 0.0;     // vs 16 channels at the input rate
    double seconds_simulated = 0.0;
    double wall_s = 0.0;
};
ThroughputReport throughput_benchmark(double duration_s, bool parallel);

} // namespace ncp
