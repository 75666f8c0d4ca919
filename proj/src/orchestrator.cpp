#include "ncp/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "ncp/stim_model.hpp"

namespace ncp {

using nlohmann::json;

std::vector<DesignedBank> design_banks(const RunConfig& cfg) {
    std::vector<DesignedBank> banks;
    banks.reserve(cfg.bands.size());
    for (const BandAssignment& ba : cfg.bands) {
        FilterDesignSpec spec = cfg.filter_base;
        spec.band = ba.band;
        DesignedBank bk;
        bk.assignment = ba;
        bk.filters = design_filters(spec);
        banks.push_back(std::move(bk));
    }
    return banks;
}

std::array<std::vector<double>, kNumChannels> build_input_traces(const RunConfig& cfg) {
    const double rate = cfg.frontend.per_channel_rate_hz;
    std::array<std::vector<double>, kNumChannels> traces;
    switch (cfg.input.kind) {
        case InputSpec::Kind::Zero: {
            const auto n = static_cast<size_t>(std::llround(cfg.duration_s * rate));
            for (auto& t : traces) t.assign(n, 0.0);
            break;
        }
        case InputSpec::Kind::SinePink: {
            size_t n = 0;
            for (int ch : cfg.input.channels) {
                traces[ch] = gen_sine_pink(cfg.input.amp_pp_v, cfg.input.freq_hz,
                                           cfg.input.pink_rms_v, cfg.duration_s, rate,
                                           derive_seed(cfg.seed, "input", ch));
                n = traces[ch].size();
            }
            for (auto& t : traces)
                if (t.empty()) t.assign(n, 0.0);
            break;
        }
        case InputSpec::Kind::Pair: {
            auto pair = gen_coupled_pair(cfg.input.pair_kind, cfg.input.pair_params,
                                         cfg.duration_s, rate,
                                         derive_seed(cfg.seed, "input-pair"));
            const size_t n = pair[0].size();
            for (auto& t : traces) t.assign(n, 0.0);
            traces[cfg.input.ch_a] = std::move(pair[0]);
            traces[cfg.input.ch_b] = std::move(pair[1]);
            break;
        }
        case InputSpec::Kind::File:
            throw ConfigError("file inputs replay recorded codes, not synthesized traces");
    }
    return traces;
}

// ---------------------------------------------------------------------------
// pipeline internals

namespace {

struct DecimatedStreams {
    std::vector<std::array<phase_code_t, kNumChannels>> phase;
    std::vector<std::array<q15_t, kNumChannels>> env, bp, lp;
    uint64_t saturation = 0;
};

std::array<const FilterSet*, kNumChannels> channel_filters(
    const std::vector<DesignedBank>& banks) {
    std::array<const FilterSet*, kNumChannels> ch_fs{};
    for (const DesignedBank& bk : banks)
        for (int ch : bk.assignment.channels) ch_fs[ch] = &bk.filters;
    return ch_fs;
}

// The per-channel hot path: fixed-point filter bank plus phase/envelope
// extraction. Channels are fully independent, so the threaded and serial
// schedules produce identical words.
DecimatedStreams filter_and_phase(const std::vector<std::vector<int16_t>>& codes,
                                  const std::array<const FilterSet*, kNumChannels>& ch_fs,
                                  int adc_bits, const LpeLuts& luts, bool parallel) {
    const int64_t n_in = static_cast<int64_t>(codes[0].size());
    const int decim = ch_fs[0]->spec.decim;
    const int64_t n_dec = (n_in + decim - 1) / decim;
    DecimatedStreams out;
    out.phase.resize(n_dec);
    out.env.resize(n_dec);
    out.bp.resize(n_dec);
    out.lp.resize(n_dec);
    std::array<uint64_t, kNumChannels> sat{};
    (void)parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (int ch = 0; ch < kNumChannels; ++ch) {
        ChannelPipeline pipe(ch_fs[ch]);
        const std::vector<int16_t>& in = codes[ch];
        int64_t td = 0;
        for (int64_t t = 0; t < n_in; ++t) {
            auto so = pipe.process(adc_code_to_q15(in[t], adc_bits));
            if (!so) continue;
            PhaseResult pr = lpe_phase(so->analytic.re, so->analytic.im, luts);
            out.phase[td][ch] = pr.code;
            out.env[td][ch] = envelope_linf(so->analytic.re, so->analytic.im);
            out.bp[td][ch] = so->analytic.bp;
            out.lp[td][ch] = so->lp;
            ++td;
        }
        sat[ch] = pipe.saturation_events();
    }
    for (uint64_t s : sat) out.saturation += s;
    return out;
}

bool window_overlaps_blanking(const BlankingSchedule& sched, int64_t in_begin,
                              int64_t in_end) {
    for (const auto& [start, dur] : sched.intervals) {
        if (start >= in_end) break;
        if (start + dur > in_begin) return true;
    }
    return false;
}

struct SequentialOutputs {
    std::vector<FeatureWindowRecord> features;
    std::vector<TriggerCsvRow> triggers;
    int64_t windows = 0;
    int64_t gate_missing = 0;
};

// Windowed features plus trigger evaluation over precomputed decimated
// streams (open loop: triggers do not feed back).
SequentialOutputs features_and_triggers(const RunConfig& cfg, const DecimatedStreams& ds,
                                        const TrigLut& trig) {
    SequentialOutputs seq;
    FeatureEngine feng(cfg.pairs, cfg.window, trig);
    std::optional<TriggerEngine> teng;
    if (cfg.stim.enabled) teng.emplace(cfg.stim.trigger);
    WindowSnapshot snap;
    const int mon = cfg.stim.trigger.channel;
    const int64_t n_dec = static_cast<int64_t>(ds.phase.size());
    for (int64_t t = 0; t < n_dec; ++t) {
        std::array<ChannelFeatureInput, kNumChannels> in;
        for (int ch = 0; ch < kNumChannels; ++ch)
            in[ch] = {ds.phase[t][ch], ds.env[t][ch], ds.bp[t][ch]};
        for (const FeatureWindowRecord& rec : feng.push(in)) {
            seq.features.push_back(rec);
            if (rec.kind == cfg.stim.trigger.window_kind &&
                rec.id == cfg.stim.trigger.window_pair_id)
                snap = {true, rec.window_index, rec.value};
        }
        if (teng) {
            auto ev = teng->on_sample(t, ds.phase[t][mon], ds.env[t][mon], snap, false);
            if (ev)
                seq.triggers.push_back({ev->t_index, ev->mode, ev->effective_target,
                                        ev->window_valid, ev->window_value, ev->channel,
                                        ev->pair_id});
        }
    }
    seq.windows = feng.windows_emitted();
    if (teng) seq.gate_missing = teng->gate_missing_count();
    return seq;
}

std::vector<FeatureCsvRow> feature_rows(const std::vector<FeatureWindowRecord>& recs,
                                        const RunConfig& cfg,
                                        const BlankingSchedule& sched) {
    const int64_t span_in = static_cast<int64_t>(cfg.window.n_samples) * cfg.filter_base.decim;
    std::vector<FeatureCsvRow> rows;
    rows.reserve(recs.size());
    for (const FeatureWindowRecord& r : recs) {
        FeatureCsvRow row;
        row.window = r.window_index;
        row.id = r.id;
        row.kind = r.kind;
        row.value = r.value;
        row.degenerate = r.degenerate;
        row.blank_overlap = window_overlaps_blanking(sched, r.window_index * span_in,
                                                     (r.window_index + 1) * span_in);
        rows.push_back(row);
    }
    return rows;
}

std::string build_summary(const RunConfig& cfg, const std::vector<DesignedBank>& banks,
                          const LpeLuts& luts, const TrigLut& trig, const RunOutputs& out,
                          bool closed_loop, int64_t clamped_ticks) {
    json j;
    j["schema"] = 1;
    j["mode"] = closed_loop ? "closed-loop" : "open-loop";
    j["seed"] = cfg.seed;
    const std::string cfg_text = emit_run_config(cfg);
    j["config_hash"] = hash_hex(fnv1a64(cfg_text.data(), cfg_text.size()));

    json counts;
    counts["input_samples_per_channel"] = out.stats.input_samples;
    counts["decimated_samples"] = out.stats.decimated_samples;
    counts["windows"] = out.stats.windows;
    counts["feature_records"] = out.stats.feature_records;
    counts["triggers"] = out.stats.triggers;
    counts["gate_missing"] = out.stats.gate_missing;
    counts["blanked_input_samples"] = out.stats.blanked_input_samples;
    j["counts"] = counts;
    j["saturation_events"] = out.stats.saturation_events;

    j["luts"]["phase_tables"] = hash_hex(luts.content_hash());
    j["luts"]["trig"] = hash_hex(trig.content_hash());
    j["filters"] = json::array();
    for (const DesignedBank& bk : banks) {
        json b;
        b["channels"] = bk.assignment.channels;
        b["f_lo_hz"] = bk.assignment.band.f_lo_hz;
        b["f_hi_hz"] = bk.assignment.band.f_hi_hz;
        b["content_hash"] = hash_hex(bk.filters.content_hash());
        b["group_delay_lpf"] = bk.filters.group_delay_lpf;
        b["group_delay_band"] = bk.filters.group_delay_band;
        b["lpf_atten_db"] = bk.filters.achieved.lpf_atten_db;
        j["filters"].push_back(b);
    }
    if (closed_loop) {
        json st;
        st["pulses"] = out.stim_pulses.size();
        st["clamped_ticks"] = clamped_ticks;
        st["final_residual_mv"] =
            out.stim_pulses.empty() ? 0.0 : out.stim_pulses.back().residual_mv;
        st["final_i_anodic_ua"] =
            out.stim_pulses.empty() ? cfg.stim.pulse.i_anodic_ua
                                    : out.stim_pulses.back().i_anodic_ua;
        j["stim"] = st;
    }
    return j.dump(2) + "\n";
}

std::vector<std::vector<int16_t>> digitize_traces(
    const RunConfig& cfg, const std::array<std::vector<double>, kNumChannels>& traces,
    const BlankingSchedule& sched) {
    FrontendConfig fe = cfg.frontend;
    fe.seed = derive_seed(cfg.seed, "frontend");
    AfeModel afe(fe);
    const int64_t n_in = static_cast<int64_t>(traces[0].size());
    std::vector<std::vector<int16_t>> codes(kNumChannels);
    for (int ch = 0; ch < kNumChannels; ++ch) {
        codes[ch].resize(n_in);
        const std::vector<double>& tr = traces[ch];
        for (int64_t t = 0; t < n_in; ++t)
            codes[ch][t] = afe.digitize_sample(ch, tr[t], sched.active(t));
    }
    return codes;
}

std::vector<std::vector<int16_t>> load_file_codes(const RunConfig& cfg, int64_t* n_in) {
    double rate = 0.0;
    std::vector<RawSampleFrame> frames = read_raw_i16(cfg.input.path, &rate);
    if (rate != cfg.frontend.per_channel_rate_hz)
        throw DataError("recorded rate does not match frontend.rate_hz");
    if (frames.empty()) throw DataError("recorded capture is empty");
    std::vector<std::vector<int16_t>> codes(kNumChannels);
    for (int ch = 0; ch < kNumChannels; ++ch) {
        codes[ch].resize(frames.size());
        for (size_t t = 0; t < frames.size(); ++t) codes[ch][t] = frames[t].codes[ch];
    }
    *n_in = static_cast<int64_t>(frames.size());
    return codes;
}

// Shared open-loop core once the ADC codes exist.
RunOutputs run_on_codes(const RunConfig& cfg, const std::vector<std::vector<int16_t>>& codes,
                        bool parallel) {
    const std::vector<DesignedBank> banks = design_banks(cfg);
    const auto ch_fs = channel_filters(banks);
    const LpeLuts luts = build_luts();
    const TrigLut trig = build_trig_lut();

    DecimatedStreams ds =
        filter_and_phase(codes, ch_fs, cfg.frontend.adc_bits, luts, parallel);
    SequentialOutputs seq = features_and_triggers(cfg, ds, trig);

    RunOutputs out;
    const int64_t n_dec = static_cast<int64_t>(ds.phase.size());
    out.phases.resize(n_dec);
    for (int64_t t = 0; t < n_dec; ++t) {
        out.phases[t].t = t;
        out.phases[t].phase = ds.phase[t];
    }
    out.envelopes = std::move(ds.env);
    out.lowpass = std::move(ds.lp);
    out.features = feature_rows(seq.features, cfg, out.blanking);
    out.triggers = std::move(seq.triggers);
    out.stats.input_samples = static_cast<int64_t>(codes[0].size());
    out.stats.decimated_samples = n_dec;
    out.stats.windows = seq.windows;
    out.stats.feature_records = static_cast<int64_t>(out.features.size());
    out.stats.triggers = static_cast<int64_t>(out.triggers.size());
    out.stats.gate_missing = seq.gate_missing;
    out.stats.saturation_events = ds.saturation;
    out.summary_json = build_summary(cfg, banks, luts, trig, out, false, 0);
    return out;
}

} // namespace

RunOutputs run_offline(const RunConfig& cfg, bool parallel) {
    cfg.validate();
    std::vector<std::vector<int16_t>> codes;
    if (cfg.input.kind == InputSpec::Kind::File) {
        int64_t n_in = 0;
        codes = load_file_codes(cfg, &n_in); // file length wins over duration_s
    } else {
        const auto traces = build_input_traces(cfg);
        codes = digitize_traces(cfg, traces, BlankingSchedule{});
    }
    return run_on_codes(cfg, codes, parallel);
}

RunOutputs simulate_closed_loop(const RunConfig& cfg) {
    cfg.validate();
    if (!cfg.stim.enabled)
        throw ConfigError("closed-loop simulation requires the stim section");

    const std::vector<DesignedBank> banks = design_banks(cfg);
    const auto ch_fs = channel_filters(banks);
    const LpeLuts luts = build_luts();
    const TrigLut trig = build_trig_lut();

    // Source: synthesized voltages through the live front end, or recorded
    // codes (zeroed while blanked, as the real front end would have done).
    std::array<std::vector<double>, kNumChannels> traces;
    std::vector<std::vector<int16_t>> file_codes;
    int64_t n_in = 0;
    std::optional<AfeModel> afe;
    const bool from_file = cfg.input.kind == InputSpec::Kind::File;
    if (from_file) {
        file_codes = load_file_codes(cfg, &n_in);
    } else {
        traces = build_input_traces(cfg);
        n_in = static_cast<int64_t>(traces[0].size());
        FrontendConfig fe = cfg.frontend;
        fe.seed = derive_seed(cfg.seed, "frontend");
        afe.emplace(fe);
    }

    std::vector<ChannelPipeline> pipes;
    pipes.reserve(kNumChannels);
    for (int ch = 0; ch < kNumChannels; ++ch) pipes.emplace_back(ch_fs[ch]);
    FeatureEngine feng(cfg.pairs, cfg.window, trig);
    TriggerEngine teng(cfg.stim.trigger);
    const int mon = cfg.stim.trigger.channel;

    StimPulseParams pulse = cfg.stim.pulse;
    ElectrodeState electrode = cfg.stim.electrode;
    const double pulse_span_us = static_cast<double>(
        pulse.w_cathodic_us + pulse.gap_us + pulse.w_anodic_us);
    double prev_pulse_end_us = 0.0;
    bool any_pulse = false;
    int64_t clamped_ticks = 0;

    RunOutputs out;
    BlankingSchedule& sched = out.blanking;
    std::vector<FeatureWindowRecord> frecs;
    WindowSnapshot snap;
    int64_t n_dec = 0;

    for (int64_t t = 0; t < n_in; ++t) {
        const bool blanked = sched.active(t);
        if (blanked) ++out.stats.blanked_input_samples;

        std::array<ChannelFeatureInput, kNumChannels> in{};
        std::array<q15_t, kNumChannels> lp_row{};
        bool emitted = false;
        for (int ch = 0; ch < kNumChannels; ++ch) {
            int16_t code;
            if (from_file)
                code = blanked ? int16_t{0} : file_codes[ch][t];
            else
                code = afe->digitize_sample(ch, traces[ch][t], blanked);
            auto so = pipes[ch].process(adc_code_to_q15(code, cfg.frontend.adc_bits));
            if (!so) continue;
            emitted = true;
            PhaseResult pr = lpe_phase(so->analytic.re, so->analytic.im, luts);
            in[ch] = {pr.code, envelope_linf(so->analytic.re, so->analytic.im),
                      so->analytic.bp};
            lp_row[ch] = so->lp;
        }
        if (!emitted) continue;

        const int64_t td = n_dec++;
        PhaseCsvRow prow;
        prow.t = td;
        for (int ch = 0; ch < kNumChannels; ++ch) prow.phase[ch] = in[ch].phase;
        out.phases.push_back(prow);
        std::array<q15_t, kNumChannels> erow{};
        for (int ch = 0; ch < kNumChannels; ++ch) erow[ch] = in[ch].env;
        out.envelopes.push_back(erow);
        out.lowpass.push_back(lp_row);

        for (const FeatureWindowRecord& rec : feng.push(in)) {
            frecs.push_back(rec);
            if (rec.kind == cfg.stim.trigger.window_kind &&
                rec.id == cfg.stim.trigger.window_pair_id)
                snap = {true, rec.window_index, rec.value};
        }

        auto ev = teng.on_sample(td, in[mon].phase, in[mon].env, snap, blanked);
        if (!ev) continue;
        out.triggers.push_back({ev->t_index, ev->mode, ev->effective_target,
                                ev->window_valid, ev->window_value, ev->channel,
                                ev->pair_id});
        // The decimated tick that fired was produced from input sample t, so
        // blanking recorded at t takes effect from the next input sample on.
        emit_blanking(*ev, cfg.stim.trigger, sched);

        // One biphasic pulse per trigger. The electrode discharges passively
        // between pulses (exact closed form over the idle span).
        const double now_us = static_cast<double>(t) * 1e6 /
                              cfg.frontend.per_channel_rate_hz;
        if (any_pulse && now_us > prev_pulse_end_us)
            electrode = passive_discharge(electrode, now_us - prev_pulse_end_us);
        StimTrace trace = run_pulse(pulse, electrode);
        for (uint8_t f : trace.clamp_flags) clamped_ticks += f;
        out.stim_pulses.push_back({static_cast<int64_t>(out.stim_pulses.size()),
                                   ev->t_index, pulse.i_anodic_ua,
                                   trace.residual_v * 1e3});
        if (cfg.stim.charge_balance) pulse = cb_update(trace.residual_v, pulse);
        prev_pulse_end_us = now_us + pulse_span_us;
        any_pulse = true;
    }

    out.features = feature_rows(frecs, cfg, sched);
    out.stats.input_samples = n_in;
    out.stats.decimated_samples = n_dec;
    out.stats.windows = feng.windows_emitted();
    out.stats.feature_records = static_cast<int64_t>(out.features.size());
    out.stats.triggers = static_cast<int64_t>(out.triggers.size());
    out.stats.gate_missing = teng.gate_missing_count();
    for (const ChannelPipeline& p : pipes) out.stats.saturation_events += p.saturation_events();
    out.summary_json = build_summary(cfg, banks, luts, trig, out, true, clamped_ticks);
    return out;
}

ArtifactPaths write_artifacts(const std::string& out_dir, const RunConfig& cfg,
                              const RunOutputs& out) {
    std::filesystem::create_directories(out_dir);
    auto join = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };
    ArtifactPaths paths;
    paths.features = join("features.csv");
    write_text_file(paths.features, emit_features_csv(out.features));
    paths.triggers = join("triggers.csv");
    write_text_file(paths.triggers, emit_triggers_csv(out.triggers));
    if (cfg.emit_phases) {
        paths.phases = join("phases.csv");
        write_text_file(paths.phases, emit_phases_csv(out.phases));
    }
    if (!out.stim_pulses.empty()) {
        paths.stim = join("stim.csv");
        write_text_file(paths.stim, emit_stim_csv(out.stim_pulses));
    }
    paths.summary = join("summary.json");
    write_text_file(paths.summary, out.summary_json);
    return paths;
}

// ---------------------------------------------------------------------------
// experiments

PhaseErrorResult phase_error_experiment(const RunConfig& cfg) {
    if (!cfg.stim.enabled)
        throw ConfigError("phase-error experiment requires the stim section");
    const StimMode mode = cfg.stim.trigger.mode;
    if (mode != StimMode::SamplePhase && mode != StimMode::RandomPhase)
        throw ConfigError("phase-error experiment requires a phase-crossing mode");

    RunOutputs out = run_offline(cfg, false);
    PhaseErrorResult res;
    res.saturation_events = out.stats.saturation_events;
    if (out.triggers.empty()) {
        res.empty = true;
        return res;
    }

    // Reference phase: zero-phase band filter + analytic signal over the
    // decimated lowpass stream of the monitored channel, so the comparison
    // isolates the band-stage group delay the compensator targets.
    const int mon = cfg.stim.trigger.channel;
    std::vector<double> lp(out.lowpass.size());
    for (size_t t = 0; t < lp.size(); ++t) lp[t] = q15_to_double(out.lowpass[t][mon]);
    const BandConfig* band = nullptr;
    for (const BandAssignment& ba : cfg.bands)
        for (int ch : ba.channels)
            if (ch == mon) band = &ba.band;
    AnalyticTrace gt = oracle_ground_truth(lp, band->f_lo_hz, band->f_hi_hz,
                                           cfg.decimated_rate_hz());

    // The event carries the compensated target; undo the advance to recover
    // the intended phase each trigger was aiming at.
    const phase_code_t advance0 =
        cfg.stim.trigger.compensate
            ? advance_compensation(0, cfg.stim.trigger.group_delay_s,
                                   cfg.stim.trigger.f_center_hz)
            : phase_code_t{0};
    res.errors_rad.reserve(out.triggers.size());
    for (const TriggerCsvRow& tr : out.triggers) {
        const phase_code_t intended =
            wrap_code(static_cast<int64_t>(tr.effective_target) - advance0);
        const double err =
            std::remainder(code_to_radians(intended) - gt.phase[tr.t_index],
                           2.0 * 3.14159265358979323846);
        res.errors_rad.push_back(err);
    }
    res.stats = circular_stats(res.errors_rad);
    res.n_triggers = static_cast<int64_t>(res.errors_rad.size());
    return res;
}

std::vector<NoiseSweepPoint> noise_sweep_experiment(
    const RunConfig& base, const std::vector<double>& pink_levels_v) {
    if (base.input.kind != InputSpec::Kind::SinePink)
        throw ConfigError("noise sweep requires a sine-pink input");
    std::vector<NoiseSweepPoint> points;
    points.reserve(pink_levels_v.size());
    for (double level : pink_levels_v) {
        RunConfig cfg = base;
        cfg.input.pink_rms_v = level;
        PhaseErrorResult r = phase_error_experiment(cfg);
        points.push_back({level, r.stats.r, r.stats.mean_deg, r.n_triggers,
                          r.saturation_events});
    }
    return points;
}

CorrelationResult correlation_experiment(int n_windows, uint64_t seed) {
    if (n_windows < 8) throw ConfigError("correlation experiment needs at least 8 windows");

    RunConfig cfg;
    cfg.seed = seed;
    cfg.window.n_samples = 1024;
    BandAssignment low, high;
    for (int ch = 0; ch < kNumChannels - 1; ++ch) low.channels.push_back(ch);
    low.band = {4.0, 8.0, 0.0};
    high.channels = {15};
    high.band = {70.0, 90.0, 0.0};
    cfg.bands = {low, high};
    cfg.pairs.pairs = {{0, 0, 1, FeatureKind::Plv}, {1, 0, 15, FeatureKind::Pac}};

    const double rate = cfg.frontend.per_channel_rate_hz;
    const int64_t win_in = static_cast<int64_t>(cfg.window.n_samples) * cfg.filter_base.decim;
    const int64_t n_in = static_cast<int64_t>(n_windows) * win_in;
    cfg.duration_s = static_cast<double>(n_in) / rate;

    // Locking sweep on channels (0,1): the lag between the two 6 Hz carriers
    // wobbles sinusoidally within each window, with the wobble depth ramped
    // 0 -> pi across windows. Coupling sweep on (0,15): an 80 Hz tone whose
    // amplitude tracks the 6 Hz phase with depth ramped 0 -> 1.
    std::array<std::vector<double>, kNumChannels> traces;
    for (auto& t : traces) t.assign(n_in, 0.0);
    const double amp = 1e-3, amp_hi = 0.5e-3;
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int64_t t = 0; t < n_in; ++t) {
        const double frac =
            n_windows > 1 ? static_cast<double>(t / win_in) / (n_windows - 1) : 0.0;
        const double ts = static_cast<double>(t) / rate;
        const double phi = two_pi * 6.0 * ts;
        const double wobble = 3.14159265358979323846 * frac * std::sin(two_pi * 0.5 * ts);
        traces[0][t] = amp * std::cos(phi);
        traces[1][t] = amp * std::cos(phi + wobble);
        traces[15][t] = amp_hi * (1.0 + frac * std::cos(phi)) * std::cos(two_pi * 80.0 * ts);
    }

    std::vector<std::vector<int16_t>> codes = digitize_traces(cfg, traces, BlankingSchedule{});
    RunOutputs out = run_on_codes(cfg, codes, false);

    CorrelationResult res;
    for (const FeatureCsvRow& row : out.features) {
        if (row.kind == FeatureKind::Plv && row.id == 0)
            res.device_plv.push_back(static_cast<double>(row.value) / kQ15One);
        else if (row.kind == FeatureKind::Pac && row.id == 1)
            res.device_pac.push_back(static_cast<double>(row.value) / kQ15One);
    }
    IdealFeatureSeries lock = ideal_features(traces[0], traces[1], 4.0, 8.0, 70.0, 90.0,
                                             rate, static_cast<int>(win_in));
    IdealFeatureSeries couple = ideal_features(traces[0], traces[15], 4.0, 8.0, 70.0, 90.0,
                                               rate, static_cast<int>(win_in));
    res.ideal_plv = std::move(lock.plv);
    res.ideal_pac = std::move(couple.pac);
    const size_t n = std::min({res.device_plv.size(), res.ideal_plv.size(),
                               res.device_pac.size(), res.ideal_pac.size()});
    res.device_plv.resize(n);
    res.ideal_plv.resize(n);
    res.device_pac.resize(n);
    res.ideal_pac.resize(n);
    res.n_windows = static_cast<int64_t>(n);

    const double lsb = 1.0 / kQ15One;
    const double floor = 10.0 * lsb * lsb;
    res.plv = pearson(res.device_plv, res.ideal_plv, floor, floor);
    res.pac = pearson(res.device_pac, res.ideal_pac, floor, floor);
    return res;
}

BenchReport bench_compare() {
    const LpeLuts luts = build_luts();
    BenchReport r;
    r.lpe_ops = lpe_op_counts();
    r.cordic_ops = cordic_op_counts();

    int64_t sum_lpe = 0, sum_cordic = 0, exact_lpe = 0, exact_cordic = 0, n = 0;
    for (int re = -512; re <= 511; ++re)
        for (int im = -512; im <= 511; ++im) {
            const phase_code_t ref = oracle_code(re, im);
            const int el = code_distance(lpe_phase(static_cast<q15_t>(re),
                                                   static_cast<q15_t>(im), luts)
                                             .code,
                                         ref);
            const int ec = code_distance(cordic_phase(static_cast<q15_t>(re),
                                                      static_cast<q15_t>(im))
                                             .code,
                                         ref);
            r.max_err_lpe = std::max(r.max_err_lpe, el);
            r.max_err_cordic = std::max(r.max_err_cordic, ec);
            sum_lpe += el;
            sum_cordic += ec;
            exact_lpe += el == 0;
            exact_cordic += ec == 0;
            ++n;
        }
    r.mean_abs_err_lpe = static_cast<double>(sum_lpe) / n;
    r.mean_abs_err_cordic = static_cast<double>(sum_cordic) / n;
    r.exact_frac_lpe = static_cast<double>(exact_lpe) / n;
    r.exact_frac_cordic = static_cast<double>(exact_cordic) / n;

    // Wall-clock conversion rate over the same sweep; the checksum keeps the
    // loops from being optimized away.
    using clock = std::chrono::steady_clock;
    int64_t sink = 0;
    auto t0 = clock::now();
    for (int re = -512; re <= 511; ++re)
        for (int im = -512; im <= 511; ++im)
            sink += lpe_phase(static_cast<q15_t>(re), static_cast<q15_t>(im), luts).code;
    auto t1 = clock::now();
    for (int re = -512; re <= 511; ++re)
        for (int im = -512; im <= 511; ++im)
            sink += cordic_phase(static_cast<q15_t>(re), static_cast<q15_t>(im)).code;
    auto t2 = clock::now();
    if (sink == 0x7fffffffffffffff) std::abort(); // defeat dead-code elimination
    const double s_lpe = std::chrono::duration<double>(t1 - t0).count();
    const double s_cordic = std::chrono::duration<double>(t2 - t1).count();
    r.lpe_conversions_per_s = n / std::max(s_lpe, 1e-9);
    r.cordic_conversions_per_s = n / std::max(s_cordic, 1e-9);
    return r;
}

std::string bench_report_json(const BenchReport& r) {
    json j;
    auto ops = [](const OpCountModel& m) {
        json o;
        o["multiplies"] = m.multiplies;
        o["lookups"] = m.lookups;
        o["shift_adds"] = m.shift_adds;
        o["angle_adds"] = m.angle_adds;
        o["compares"] = m.compares;
        return o;
    };
    j["schema"] = 1;
    j["sweep_pairs"] = 1024 * 1024;
    j["lpe"]["max_err_codes"] = r.max_err_lpe;
    j["lpe"]["mean_abs_err_codes"] = r.mean_abs_err_lpe;
    j["lpe"]["exact_fraction"] = r.exact_frac_lpe;
    j["lpe"]["conversions_per_s"] = r.lpe_conversions_per_s;
    j["lpe"]["ops_per_conversion"] = ops(r.lpe_ops);
    j["cordic"]["max_err_codes"] = r.max_err_cordic;
    j["cordic"]["mean_abs_err_codes"] = r.mean_abs_err_cordic;
    j["cordic"]["exact_fraction"] = r.exact_frac_cordic;
    j["cordic"]["conversions_per_s"] = r.cordic_conversions_per_s;
    j["cordic"]["ops_per_conversion"] = ops(r.cordic_ops);
    return j.dump(2) + "\n";
}

std::string bench_report_table(const BenchReport& r) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "kernel  max_err  mean_err  exact%%   conv/s      mult  lut  shift-add  angle-add\n"
                  "lpe     %7d  %8.4f  %6.2f  %10.3e  %4d  %3d  %9d  %9d\n"
                  "cordic  %7d  %8.4f  %6.2f  %10.3e  %4d  %3d  %9d  %9d\n",
                  r.max_err_lpe, r.mean_abs_err_lpe, 100.0 * r.exact_frac_lpe,
                  r.lpe_conversions_per_s, r.lpe_ops.multiplies, r.lpe_ops.lookups,
                  r.lpe_ops.shift_adds, r.lpe_ops.angle_adds, r.max_err_cordic,
                  r.mean_abs_err_cordic, 100.0 * r.exact_frac_cordic,
                  r.cordic_conversions_per_s, r.cordic_ops.multiplies,
                  r.cordic_ops.lookups, r.cordic_ops.shift_adds, r.cordic_ops.angle_adds);
    return buf;
}

ThroughputReport throughput_benchmark(double duration_s, bool parallel) {
    RunConfig cfg;
    cfg.seed = 7;
    cfg.duration_s = duration_s;
    cfg.input.kind = InputSpec::Kind::SinePink;
    cfg.input.channels.clear();
    for (int ch = 0; ch < kNumChannels; ++ch) cfg.input.channels.push_back(ch);
    cfg.input.pink_rms_v = 0.5e-3;
    cfg.frontend.irn_uvrms = 10.0;
    cfg.frontend.mismatch_sigma_rel = 0.001;
    for (int p = 0; p < kMaxPairs; ++p)
        cfg.pairs.pairs.push_back({p, 2 * p % kNumChannels, (2 * p + 1) % kNumChannels,
                                   p % 2 ? FeatureKind::Pac : FeatureKind::Plv});
    cfg.stim.enabled = true;
    cfg.stim.trigger.rate_hz = cfg.decimated_rate_hz();
    cfg.stim.trigger.dec_factor = cfg.filter_base.decim;
    cfg.validate();

    // Stage the input outside the timed region: the claim under test is the
    // processing chain, not the synthesis of test vectors.
    const auto traces = build_input_traces(cfg);
    const auto codes = digitize_traces(cfg, traces, BlankingSchedule{});
    const std::vector<DesignedBank> banks = design_banks(cfg);
    const auto ch_fs = channel_filters(banks);
    const LpeLuts luts = build_luts();
    const TrigLut trig = build_trig_lut();

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    DecimatedStreams ds =
        filter_and_phase(codes, ch_fs, cfg.frontend.adc_bits, luts, parallel);
    SequentialOutputs seq = features_and_triggers(cfg, ds, trig);
    const auto t1 = clock::now();
    if (seq.windows < 0) std::abort(); // keep the pipeline results live

    ThroughputReport rep;
    rep.wall_s = std::chrono::duration<double>(t1 - t0).count();
    rep.seconds_simulated = static_cast<double>(codes[0].size()) /
                            cfg.frontend.per_channel_rate_hz;
    rep.input_samples_per_s =
        static_cast<double>(codes[0].size()) * kNumChannels / std::max(rep.wall_s, 1e-9);
    rep.realtime_factor = rep.input_samples_per_s /
                          (kNumChannels * cfg.frontend.per_channel_rate_hz);
    return rep;
}

} // namespace ncp
