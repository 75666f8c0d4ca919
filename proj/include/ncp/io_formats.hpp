// Configuration and artifact serialization: the run-configuration JSON
// document (strict schema, unknown keys rejected), CSV emit/parse for every
// run artifact, raw int16 capture files with JSON sidecars, and JSON dumps of
// generated tables and filter banks for tooling.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ncp/connectivity.hpp"
#include "ncp/fir_pipeline.hpp"
#include "ncp/phase_lpe.hpp"
#include "ncp/signal_model.hpp"
#include "ncp/stim_control.hpp"
#include "ncp/stim_model.hpp"

namespace ncp {

// ---------------------------------------------------------------------------
// Run configuration

// What drives the 16 input channels.
struct InputSpec {
    enum class Kind { Zero, SinePink, Pair, File };
    Kind kind = Kind::Zero;

    // kind == SinePink: the tone plus an independent pink-noise stream on
    // every listed channel; unlisted channels stay silent.
    double amp_pp_v = 2e-3;
    double freq_hz = 6.0;
    double pink_rms_v = 0.0;
    std::vector<int> channels{0};

    // kind == Pair: a generated two-channel test pair on (ch_a, ch_b).
    PairKind pair_kind = PairKind::PlvLocked;
    CoupledPairParams pair_params{};
    int ch_a = 0;
    int ch_b = 1;

    // kind == File: raw capture (see write_raw_i16) replayed as ADC codes,
    // bypassing the generator and front-end model.
    std::string path;

    void validate() const;
};

// One designed band shared by a set of channels.
struct BandAssignment {
    std::vector<int> channels;
    BandConfig band{};
};

struct StimSection {
    bool enabled = false;
    StimConfig trigger{};
    StimPulseParams pulse{};
    ElectrodeState electrode{};
    bool charge_balance = true;
};

struct RunConfig {
    uint64_t seed = 1;
    double duration_s = 10.0;
    FrontendConfig frontend{};
    FilterDesignSpec filter_base{}; // shared tap budget; bands listed below
    // Must cover each channel exactly once; default: one shared band.
    std::vector<BandAssignment> bands{
        {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}, {}}};
    WindowConfig window{};
    PairConfig pairs{};
    StimSection stim{};
    InputSpec input{};
    bool emit_phases = true;

    double decimated_rate_hz() const {
        return frontend.per_channel_rate_hz / filter_base.decim;
    }
    void validate() const; // throws ConfigError
};

// Strict parse: unknown keys anywhere in the document are configuration
// errors; omitted keys take the documented defaults.
RunConfig parse_run_config(const std::string& json_text);
std::string emit_run_config(const RunConfig& cfg); // canonical, sorted keys

// A band design bound to its channels (built by the orchestrator, dumped by
// the fir-design tool).
struct DesignedBank {
    BandAssignment assignment;
    FilterSet filters;
};

// ---------------------------------------------------------------------------
// CSV artifacts. Emitters produce a header plus one line per record; parsers
// accept exactly that shape and report the offending line number otherwise.

struct PhaseCsvRow {
    int64_t t = 0; // decimated sample index
    std::array<phase_code_t, kNumChannels> phase{};
};
std::string emit_phases_csv(const std::vector<PhaseCsvRow>& rows);
std::vector<PhaseCsvRow> parse_phases_csv(const std::string& text);

struct FeatureCsvRow {
    int64_t window = 0;
    int id = 0; // pair id for plv/pac, channel for se
    FeatureKind kind = FeatureKind::Plv;
    q15_t value = 0;
    bool degenerate = false;
    bool blank_overlap = false; // window spans front-end blanking
};
std::string emit_features_csv(const std::vector<FeatureCsvRow>& rows);
std::vector<FeatureCsvRow> parse_features_csv(const std::string& text);

struct TriggerCsvRow {
    int64_t t_index = 0;
    StimMode mode = StimMode::SamplePhase;
    phase_code_t effective_target = 0;
    bool window_valid = false;
    q15_t window_value = 0;
    int channel = 0;
    int pair_id = -1;
};
std::string emit_triggers_csv(const std::vector<TriggerCsvRow>& rows);
std::vector<TriggerCsvRow> parse_triggers_csv(const std::string& text);

struct StimPulseCsvRow {
    int64_t pulse = 0;
    int64_t t_index = 0; // decimated trigger time
    double i_anodic_ua = 0.0;
    double residual_mv = 0.0;
};
std::string emit_stim_csv(const std::vector<StimPulseCsvRow>& rows);
std::vector<StimPulseCsvRow> parse_stim_csv(const std::string& text);

// Input-rate voltage traces, one column per channel.
std::string emit_trace_csv(const std::array<std::vector<double>, kNumChannels>& traces);
std::array<std::vector<double>, kNumChannels> parse_trace_csv(const std::string& text);

// Tick-level electrical trace of a single stimulation pulse.
std::string emit_stim_trace_csv(const StimTrace& trace);

std::string feature_kind_to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s); // throws ConfigError

// ---------------------------------------------------------------------------
// Raw capture: <base>.i16 (little-endian int16, channel-interleaved frames)
// plus <base>.json sidecar carrying the geometry.
void write_raw_i16(const std::string& base_path, const std::vector<RawSampleFrame>& frames,
                   double rate_hz);
std::vector<RawSampleFrame> read_raw_i16(const std::string& base_path, double* rate_hz);

// ---------------------------------------------------------------------------
// Table and filter dumps for the lutgen / fir-design subcommands.
std::string emit_luts_json(const LpeLuts& phase_luts, const TrigLut& trig);
std::string emit_filters_json(const std::vector<DesignedBank>& banks);

// ---------------------------------------------------------------------------
// Small file helpers shared by the tools.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path); // DataError when unreadable

} // namespace ncp
