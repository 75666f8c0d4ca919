// Command-line front end for the connectivity-processor model.
//
//   ncpsim lutgen      --out DIR                 generated table dump
//   ncpsim fir-design  --config F --out DIR      designed filter banks
//   ncpsim run         --config F --out DIR      open-loop run -> artifacts
//   ncpsim simulate    --config F --out DIR      closed-loop run -> artifacts
//   ncpsim phase-error --config F --out DIR      trigger phase-error protocol
//   ncpsim correlate   --out DIR                 feature-fidelity experiment
//   ncpsim bench       --out DIR                 kernel + throughput benchmark
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 a --check
// bound was not met.
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ncp/orchestrator.hpp"

namespace {

struct CheckFailure {
    std::string what;
};

ncp::RunConfig load_config(const std::string& path, std::optional<uint64_t> seed) {
    std::string text;
    try {
        text = ncp::read_text_file(path);
    } catch (const ncp::DataError& e) {
        // An unreadable configuration is a configuration problem, not a data
        // problem with the run's inputs.
        throw ncp::ConfigError(e.what());
    }
    ncp::RunConfig cfg = ncp::parse_run_config(text);
    if (seed) cfg.seed = *seed;
    return cfg;
}

std::string join_path(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_into(const std::string& dir, const char* name, const std::string& text) {
    std::filesystem::create_directories(dir);
    const std::string path = join_path(dir, name);
    ncp::write_text_file(path, text);
    std::printf("wrote %s\n", path.c_str());
}

void print_run_outcome(const ncp::RunOutputs& out, const ncp::ArtifactPaths& paths) {
    std::printf("%s", out.summary_json.c_str());
    std::printf("artifacts: %s", paths.features.c_str());
    if (!paths.phases.empty()) std::printf(", %s", paths.phases.c_str());
    std::printf(", %s", paths.triggers.c_str());
    if (!paths.stim.empty()) std::printf(", %s", paths.stim.c_str());
    std::printf(", %s\n", paths.summary.c_str());
}

nlohmann::json phase_error_json(const ncp::PhaseErrorResult& res) {
    nlohmann::json j;
    j["schema"] = 1;
    j["status"] = res.empty ? "empty" : "ok";
    j["n_triggers"] = res.n_triggers;
    j["saturation_events"] = res.saturation_events;
    if (!res.empty) {
        j["circular_mean_deg"] = res.stats.mean_deg;
        j["resultant_r"] = res.stats.r;
        j["histogram_deg10"] = res.stats.hist;
    }
    return j;
}

void print_phase_error_table(const ncp::PhaseErrorResult& res) {
    if (res.empty) {
        std::printf("phase-error: no triggers fired (empty result)\n");
        return;
    }
    std::printf("triggers            %" PRId64 "\n", res.n_triggers);
    std::printf("circular mean (deg) %+.3f\n", res.stats.mean_deg);
    std::printf("resultant r         %.4f\n", res.stats.r);
    std::printf("saturation events   %" PRIu64 "\n", res.saturation_events);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bit-exact model of a 16-channel connectivity processor with "
                 "phase-locked stimulation"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<uint64_t> seed;
    bool parallel = false, check = false;
    int windows = 256;
    double max_mean_deg = 5.0, min_r = 0.95, min_realtime = 100.0;
    double bench_seconds = 2.0;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", config_path,
                                  "run-configuration JSON file");
        if (config_required) c->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "override the configured seed");
    };

    auto* lutgen = app.add_subcommand("lutgen", "dump the generated phase/trig tables");
    lutgen->add_option("--config", config_path, "accepted for uniformity; tables are fixed");
    lutgen->add_option("--out", out_dir, "output directory")->required();
    lutgen->add_option("--seed", seed, "accepted for uniformity; tables are fixed");

    auto* fir = app.add_subcommand("fir-design", "design the configured filter banks");
    add_common(fir, true);

    auto* run = app.add_subcommand("run", "open-loop run: features, phases, triggers");
    add_common(run, true);
    run->add_flag("--parallel", parallel, "use the threaded filter path");
    run->add_flag("--check", check, "exit 4 on any saturation fault");

    auto* sim = app.add_subcommand("simulate", "closed-loop run with blanking and pulses");
    add_common(sim, true);
    sim->add_flag("--check", check, "exit 4 on any saturation fault");

    auto* perr = app.add_subcommand("phase-error",
                                    "trigger phase error vs the reference phase");
    add_common(perr, true);
    perr->add_flag("--check", check, "exit 4 unless |mean| and r meet the bounds");
    perr->add_option("--max-mean-deg", max_mean_deg, "|circular mean| bound for --check");
    perr->add_option("--min-r", min_r, "resultant-length bound for --check");

    auto* corr = app.add_subcommand("correlate",
                                    "fixed-point features vs ideal over synthetic sweeps");
    corr->add_option("--config", config_path, "optional; contributes its seed");
    corr->add_option("--out", out_dir, "output directory")->required();
    corr->add_option("--seed", seed, "experiment seed");
    corr->add_option("--windows", windows, "number of feature windows")
        ->check(CLI::Range(8, 1 << 20));
    corr->add_flag("--check", check, "exit 4 unless both r meet the bound");
    corr->add_option("--min-r", min_r, "Pearson bound for --check");

    auto* bench = app.add_subcommand("bench", "phase-kernel sweep + pipeline throughput");
    bench->add_option("--config", config_path, "optional; contributes its seed");
    bench->add_option("--out", out_dir, "output directory")->required();
    bench->add_option("--seed", seed, "accepted for uniformity");
    bench->add_option("--seconds", bench_seconds, "simulated seconds for throughput");
    bench->add_flag("--parallel", parallel, "use the threaded filter path");
    bench->add_flag("--check", check,
                    "exit 4 unless kernel error <= 1 code and throughput >= bound");
    bench->add_option("--min-realtime", min_realtime, "throughput bound for --check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(lutgen)) {
            const auto luts = ncp::build_luts();
            const auto trig = ncp::build_trig_lut();
            write_into(out_dir, "luts.json", ncp::emit_luts_json(luts, trig));

        } else if (app.got_subcommand(fir)) {
            const ncp::RunConfig cfg = load_config(config_path, seed);
            const auto banks = ncp::design_banks(cfg);
            write_into(out_dir, "filters.json", ncp::emit_filters_json(banks));

        } else if (app.got_subcommand(run)) {
            const ncp::RunConfig cfg = load_config(config_path, seed);
            const auto out = ncp::run_offline(cfg, parallel);
            const auto paths = ncp::write_artifacts(out_dir, cfg, out);
            print_run_outcome(out, paths);
            if (check && out.stats.saturation_events > 0)
                throw CheckFailure{"saturation faults during the run"};

        } else if (app.got_subcommand(sim)) {
            const ncp::RunConfig cfg = load_config(config_path, seed);
            const auto out = ncp::simulate_closed_loop(cfg);
            const auto paths = ncp::write_artifacts(out_dir, cfg, out);
            print_run_outcome(out, paths);
            if (check && out.stats.saturation_events > 0)
                throw CheckFailure{"saturation faults during the run"};

        } else if (app.got_subcommand(perr)) {
            const ncp::RunConfig cfg = load_config(config_path, seed);
            const auto res = ncp::phase_error_experiment(cfg);
            const auto j = phase_error_json(res);
            write_into(out_dir, "phase_error.json", j.dump(2) + "\n");
            std::printf("%s\n", j.dump(2).c_str());
            print_phase_error_table(res);
            if (check) {
                if (res.empty) throw CheckFailure{"no triggers fired"};
                if (std::fabs(res.stats.mean_deg) > max_mean_deg)
                    throw CheckFailure{"circular mean outside bound"};
                if (res.stats.r < min_r) throw CheckFailure{"resultant below bound"};
            }

        } else if (app.got_subcommand(corr)) {
            uint64_t s = 1;
            if (!config_path.empty()) s = load_config(config_path, seed).seed;
            if (seed) s = *seed;
            const auto res = ncp::correlation_experiment(windows, s);
            nlohmann::json j;
            j["schema"] = 1;
            j["n_windows"] = res.n_windows;
            j["plv"]["r"] = res.plv.r;
            j["plv"]["degenerate"] = res.plv.degenerate;
            j["pac"]["r"] = res.pac.r;
            j["pac"]["degenerate"] = res.pac.degenerate;
            write_into(out_dir, "correlation.json", j.dump(2) + "\n");
            std::printf("%s\n", j.dump(2).c_str());
            std::printf("feature  windows  pearson_r  degenerate\n");
            std::printf("plv      %7" PRId64 "  %9.4f  %s\n", res.n_windows, res.plv.r,
                        res.plv.degenerate ? "yes" : "no");
            std::printf("pac      %7" PRId64 "  %9.4f  %s\n", res.n_windows, res.pac.r,
                        res.pac.degenerate ? "yes" : "no");
            if (check) {
                if (res.plv.degenerate || res.pac.degenerate)
                    throw CheckFailure{"degenerate correlation (variance below floor)"};
                if (res.plv.r < min_r || res.pac.r < min_r)
                    throw CheckFailure{"correlation below bound"};
            }

        } else if (app.got_subcommand(bench)) {
            const auto rep = ncp::bench_compare();
            const auto tp = ncp::throughput_benchmark(bench_seconds, parallel);
            nlohmann::json j = nlohmann::json::parse(ncp::bench_report_json(rep));
            j["throughput"]["input_samples_per_s"] = tp.input_samples_per_s;
            j["throughput"]["realtime_factor"] = tp.realtime_factor;
            j["throughput"]["seconds_simulated"] = tp.seconds_simulated;
            j["throughput"]["wall_s"] = tp.wall_s;
            write_into(out_dir, "bench.json", j.dump(2) + "\n");
            std::printf("%s\n", j.dump(2).c_str());
            std::printf("%s", ncp::bench_report_table(rep).c_str());
            std::printf("pipeline: %.3e input samples/s aggregate (%.0fx real time)\n",
                        tp.input_samples_per_s, tp.realtime_factor);
            if (check) {
                if (rep.max_err_lpe > 1 || rep.max_err_cordic > 1)
                    throw CheckFailure{"kernel error above one code"};
                if (tp.realtime_factor < min_realtime)
                    throw CheckFailure{"throughput below bound"};
            }
        }
    } catch (const CheckFailure& e) {
        std::fprintf(stderr, "check failed: %s\n", e.what.c_str());
        return 4;
    } catch (const ncp::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const ncp::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    }
    return 0;
}
