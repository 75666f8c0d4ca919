// The threaded filter path must be bit-identical to the serial one: channels
// are independent, so the schedule cannot change any output word. Exercised
// on a deliberately busy configuration (two bands, mixed feature pairs,
// pink noise plus front-end noise and gain spread, trigger engine on).
#include <cstdio>

#include "ncp/orchestrator.hpp"

static int failures = 0;

#define CHECK(cond)                                                       \
    do {                                                                  \
        if (!(cond)) {                                                    \
            std::printf("FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond);   \
            ++failures;                                                   \
        }                                                                 \
    } while (0)

int main() {
    ncp::RunConfig cfg;
    cfg.seed = 99;
    cfg.duration_s = 6.0;
    cfg.input.kind = ncp::InputSpec::Kind::SinePink;
    cfg.input.amp_pp_v = 2e-3;
    cfg.input.freq_hz = 6.0;
    cfg.input.pink_rms_v = 0.7e-3;
    cfg.input.channels.clear();
    for (int ch = 0; ch < 16; ++ch) cfg.input.channels.push_back(ch);
    cfg.frontend.irn_uvrms = 5.0;
    cfg.frontend.mismatch_sigma_rel = 0.01;

    ncp::BandAssignment low, high;
    for (int ch = 0; ch < 12; ++ch) low.channels.push_back(ch);
    low.band = {4.0, 8.0, 0.0};
    for (int ch = 12; ch < 16; ++ch) high.channels.push_back(ch);
    high.band = {70.0, 90.0, 0.0};
    cfg.bands = {low, high};

    cfg.pairs.pairs = {{0, 0, 1, ncp::FeatureKind::Plv},
                       {1, 2, 3, ncp::FeatureKind::Plv},
                       {2, 0, 12, ncp::FeatureKind::Pac},
                       {3, 4, 15, ncp::FeatureKind::Pac}};

    cfg.stim.enabled = true;
    cfg.stim.trigger.mode = ncp::StimMode::SamplePhase;
    cfg.stim.trigger.channel = 0;
    cfg.stim.trigger.rate_hz = cfg.decimated_rate_hz();
    cfg.stim.trigger.dec_factor = cfg.filter_base.decim;

    auto serial = ncp::run_offline(cfg, false);
    auto threaded = ncp::run_offline(cfg, true);

    CHECK(serial.stats.decimated_samples == 6000);
    CHECK(serial.stats.triggers > 0);
    CHECK(ncp::emit_phases_csv(serial.phases) == ncp::emit_phases_csv(threaded.phases));
    CHECK(ncp::emit_features_csv(serial.features) ==
          ncp::emit_features_csv(threaded.features));
    CHECK(ncp::emit_triggers_csv(serial.triggers) ==
          ncp::emit_triggers_csv(threaded.triggers));
    CHECK(serial.summary_json == threaded.summary_json);
    CHECK(serial.envelopes == threaded.envelopes);
    CHECK(serial.lowpass == threaded.lowpass);
    CHECK(serial.stats.saturation_events == threaded.stats.saturation_events);

    if (failures == 0) std::printf("test_parallel_consistency: all checks passed\n");
    return failures == 0 ? 0 : 1;
}
