#include "ncp/io_formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace ncp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// small formatting / parsing helpers

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
        size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

[[noreturn]] void csv_error(const char* file, size_t line_no, const std::string& msg) {
    throw DataError(std::string(file) + " line " + std::to_string(line_no) + ": " + msg);
}

int64_t parse_i64(const std::string& s, const char* file, size_t line_no, const char* what) {
    try {
        size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        csv_error(file, line_no, std::string("bad integer for ") + what + ": '" + s + "'");
    }
}

double parse_f64(const std::string& s, const char* file, size_t line_no, const char* what) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        csv_error(file, line_no, std::string("bad number for ") + what + ": '" + s + "'");
    }
}

bool parse_flag(const std::string& s, const char* file, size_t line_no, const char* what) {
    if (s == "0") return false;
    if (s == "1") return true;
    csv_error(file, line_no, std::string("bad flag for ") + what + ": '" + s + "'");
}

int64_t parse_ranged(const std::string& s, const char* file, size_t line_no, const char* what,
                     int64_t lo, int64_t hi) {
    int64_t v = parse_i64(s, file, line_no, what);
    if (v < lo || v > hi)
        csv_error(file, line_no,
                  std::string(what) + " out of range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]: " + std::to_string(v));
    return v;
}

// Lines of a CSV document after validating the header; blank trailing line ok.
std::vector<std::string> csv_body(const std::string& text, const char* file,
                                  const std::string& header) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines[0] != header)
        csv_error(file, 1, "expected header '" + header + "'");
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

void expect_fields(const std::vector<std::string>& f, size_t n, const char* file,
                   size_t line_no) {
    if (f.size() != n)
        csv_error(file, line_no,
                  "expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
}

} // namespace

std::string feature_kind_to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::Plv: return "plv";
        case FeatureKind::Pac: return "pac";
        case FeatureKind::Se: return "se";
    }
    throw ConfigError("unhandled feature kind");
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "plv") return FeatureKind::Plv;
    if (s == "pac") return FeatureKind::Pac;
    if (s == "se") return FeatureKind::Se;
    throw ConfigError("unknown feature kind '" + s + "'");
}

static std::string pair_kind_to_string(PairKind k) {
    switch (k) {
        case PairKind::PlvLocked: return "plv-locked";
        case PairKind::PacCoupled: return "pac-coupled";
        case PairKind::Independent: return "independent";
    }
    throw ConfigError("unhandled pair kind");
}

// ---------------------------------------------------------------------------
// phases.csv

static std::string phases_header() {
    std::string h = "t";
    for (int ch = 0; ch < kNumChannels; ++ch) h += ",ph" + std::to_string(ch);
    return h;
}

std::string emit_phases_csv(const std::vector<PhaseCsvRow>& rows) {
    std::string out = phases_header() + "\n";
    for (const PhaseCsvRow& r : rows) {
        out += std::to_string(r.t);
        for (int ch = 0; ch < kNumChannels; ++ch)
            out += "," + std::to_string(r.phase[ch]);
        out += "\n";
    }
    return out;
}

std::vector<PhaseCsvRow> parse_phases_csv(const std::string& text) {
    const char* file = "phases.csv";
    std::vector<std::string> lines = csv_body(text, file, phases_header());
    std::vector<PhaseCsvRow> rows;
    rows.reserve(lines.size());
    for (size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_fields(lines[i]);
        expect_fields(f, 1 + kNumChannels, file, i + 1);
        PhaseCsvRow r;
        r.t = parse_i64(f[0], file, i + 1, "t");
        for (int ch = 0; ch < kNumChannels; ++ch)
            r.phase[ch] = static_cast<phase_code_t>(
                parse_ranged(f[1 + ch], file, i + 1, "phase code", -512, 511));
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// features.csv

static const char* kFeaturesHeader =
    "window,id,kind,value_q15,value_float,degenerate,blank_overlap";

std::string emit_features_csv(const std::vector<FeatureCsvRow>& rows) {
    std::string out = std::string(kFeaturesHeader) + "\n";
    for (const FeatureCsvRow& r : rows) {
        out += std::to_string(r.window);
        out += "," + std::to_string(r.id);
        out += "," + feature_kind_to_string(r.kind);
        out += "," + std::to_string(r.value);
        out += "," + fmt_double(static_cast<double>(r.value) / kQ15One);
        out += r.degenerate ? ",1" : ",0";
        out += r.blank_overlap ? ",1\n" : ",0\n";
    }
    return out;
}

std::vector<FeatureCsvRow> parse_features_csv(const std::string& text) {
    const char* file = "features.csv";
    std::vector<std::string> lines = csv_body(text, file, kFeaturesHeader);
    std::vector<FeatureCsvRow> rows;
    rows.reserve(lines.size());
    for (size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_fields(lines[i]);
        expect_fields(f, 7, file, i + 1);
        FeatureCsvRow r;
        r.window = parse_i64(f[0], file, i + 1, "window");
        r.id = static_cast<int>(parse_ranged(f[1], file, i + 1, "id", 0, 1 << 30));
        try {
            r.kind = feature_kind_from_string(f[2]);
        } catch (const ConfigError& e) {
            csv_error(file, i + 1, e.what());
        }
        r.value = static_cast<q15_t>(
            parse_ranged(f[3], file, i + 1, "value_q15", -32768, 32767));
        double vf = parse_f64(f[4], file, i + 1, "value_float");
        if (std::fabs(vf - static_cast<double>(r.value) / kQ15One) > 1e-12)
            csv_error(file, i + 1, "value_float does not match value_q15");
        r.degenerate = parse_flag(f[5], file, i + 1, "degenerate");
        r.blank_overlap = parse_flag(f[6], file, i + 1, "blank_overlap");
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// triggers.csv

static const char* kTriggersHeader =
    "t_index,mode,effective_target,window_valid,window_value,channel,pair";

std::string emit_triggers_csv(const std::vector<TriggerCsvRow>& rows) {
    std::string out = std::string(kTriggersHeader) + "\n";
    for (const TriggerCsvRow& r : rows) {
        out += std::to_string(r.t_index);
        out += "," + to_string(r.mode);
        out += "," + std::to_string(r.effective_target);
        out += r.window_valid ? ",1" : ",0";
        out += "," + std::to_string(r.window_value);
        out += "," + std::to_string(r.channel);
        out += "," + std::to_string(r.pair_id) + "\n";
    }
    return out;
}

std::vector<TriggerCsvRow> parse_triggers_csv(const std::string& text) {
    const char* file = "triggers.csv";
    std::vector<std::string> lines = csv_body(text, file, kTriggersHeader);
    std::vector<TriggerCsvRow> rows;
    rows.reserve(lines.size());
    for (size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_fields(lines[i]);
        expect_fields(f, 7, file, i + 1);
        TriggerCsvRow r;
        r.t_index = parse_i64(f[0], file, i + 1, "t_index");
        try {
            r.mode = stim_mode_from_string(f[1]);
        } catch (const ConfigError& e) {
            csv_error(file, i + 1, e.what());
        }
        r.effective_target = static_cast<phase_code_t>(
            parse_ranged(f[2], file, i + 1, "effective_target", -512, 511));
        r.window_valid = parse_flag(f[3], file, i + 1, "window_valid");
        r.window_value = static_cast<q15_t>(
            parse_ranged(f[4], file, i + 1, "window_value", -32768, 32767));
        r.channel = static_cast<int>(
            parse_ranged(f[5], file, i + 1, "channel", 0, kNumChannels - 1));
        r.pair_id = static_cast<int>(parse_ranged(f[6], file, i + 1, "pair", -1, 1 << 30));
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// stim.csv (per-pulse balancing record)

static const char* kStimHeader = "pulse,t_index,i_anodic_ua,residual_mv";

std::string emit_stim_csv(const std::vector<StimPulseCsvRow>& rows) {
    std::string out = std::string(kStimHeader) + "\n";
    for (const StimPulseCsvRow& r : rows) {
        out += std::to_string(r.pulse);
        out += "," + std::to_string(r.t_index);
        out += "," + fmt_double(r.i_anodic_ua);
        out += "," + fmt_double(r.residual_mv) + "\n";
    }
    return out;
}

std::vector<StimPulseCsvRow> parse_stim_csv(const std::string& text) {
    const char* file = "stim.csv";
    std::vector<std::string> lines = csv_body(text, file, kStimHeader);
    std::vector<StimPulseCsvRow> rows;
    rows.reserve(lines.size());
    for (size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_fields(lines[i]);
        expect_fields(f, 4, file, i + 1);
        StimPulseCsvRow r;
        r.pulse = parse_i64(f[0], file, i + 1, "pulse");
        r.t_index = parse_i64(f[1], file, i + 1, "t_index");
        r.i_anodic_ua = parse_f64(f[2], file, i + 1, "i_anodic_ua");
        r.residual_mv = parse_f64(f[3], file, i + 1, "residual_mv");
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// input trace CSV

static std::string trace_header() {
    std::string h = "t";
    for (int ch = 0; ch < kNumChannels; ++ch) h += ",ch" + std::to_string(ch);
    return h;
}

std::string emit_trace_csv(const std::array<std::vector<double>, kNumChannels>& traces) {
    for (int ch = 1; ch < kNumChannels; ++ch)
        if (traces[ch].size() != traces[0].size())
            throw DataError("trace channels differ in length");
    std::string out = trace_header() + "\n";
    for (size_t t = 0; t < traces[0].size(); ++t) {
        out += std::to_string(t);
        for (int ch = 0; ch < kNumChannels; ++ch) out += "," + fmt_double(traces[ch][t]);
        out += "\n";
    }
    return out;
}

std::array<std::vector<double>, kNumChannels> parse_trace_csv(const std::string& text) {
    const char* file = "trace.csv";
    std::vector<std::string> lines = csv_body(text, file, trace_header());
    std::array<std::vector<double>, kNumChannels> traces;
    for (size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_fields(lines[i]);
        expect_fields(f, 1 + kNumChannels, file, i + 1);
        int64_t t = parse_i64(f[0], file, i + 1, "t");
        if (t != static_cast<int64_t>(i - 1))
            csv_error(file, i + 1, "sample index out of sequence");
        for (int ch = 0; ch < kNumChannels; ++ch)
            traces[ch].push_back(parse_f64(f[1 + ch], file, i + 1, "sample"));
    }
    return traces;
}

// ---------------------------------------------------------------------------
// single-pulse electrical trace

std::string emit_stim_trace_csv(const StimTrace& trace) {
    std::string out = "t_us,i_ua,v_out_mv,v_cap_mv\n";
    for (size_t k = 0; k < trace.i_out_ua.size(); ++k) {
        out += std::to_string(static_cast<int64_t>(k) * trace.tick_us);
        out += "," + fmt_double(trace.i_out_ua[k]);
        out += "," + fmt_double(trace.v_out_v[k] * 1e3);
        out += "," + fmt_double(trace.v_cap_v[k] * 1e3) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// raw int16 capture

void write_raw_i16(const std::string& base_path, const std::vector<RawSampleFrame>& frames,
                   double rate_hz) {
    std::string bytes;
    bytes.reserve(frames.size() * kNumChannels * 2);
    for (const RawSampleFrame& fr : frames)
        for (int ch = 0; ch < kNumChannels; ++ch) {
            uint16_t v = static_cast<uint16_t>(fr.codes[ch]);
            bytes.push_back(static_cast<char>(v & 0xff));
            bytes.push_back(static_cast<char>(v >> 8));
        }
    write_text_file(base_path + ".i16", bytes);

    json side;
    side["channels"] = kNumChannels;
    side["format"] = "i16le-interleaved";
    side["frames"] = frames.size();
    side["rate_hz"] = rate_hz;
    side["schema"] = 1;
    write_text_file(base_path + ".json", side.dump(2) + "\n");
}

std::vector<RawSampleFrame> read_raw_i16(const std::string& base_path, double* rate_hz) {
    json side;
    try {
        side = json::parse(read_text_file(base_path + ".json"));
    } catch (const json::parse_error& e) {
        throw DataError(base_path + ".json: " + e.what());
    }
    for (auto& [key, value] : side.items()) {
        (void)value;
        static const char* allowed[] = {"channels", "format", "frames", "rate_hz", "schema"};
        if (std::find_if(std::begin(allowed), std::end(allowed),
                         [&](const char* a) { return key == a; }) == std::end(allowed))
            throw DataError(base_path + ".json: unknown key '" + key + "'");
    }
    if (side.value("channels", 0) != kNumChannels)
        throw DataError(base_path + ".json: expected 16 channels");
    if (side.value("format", "") != std::string("i16le-interleaved"))
        throw DataError(base_path + ".json: unknown format");
    const int64_t n_frames = side.value("frames", int64_t{-1});
    if (n_frames < 0) throw DataError(base_path + ".json: missing frame count");
    if (rate_hz) *rate_hz = side.value("rate_hz", 0.0);

    std::string bytes = read_text_file(base_path + ".i16");
    if (static_cast<int64_t>(bytes.size()) != n_frames * kNumChannels * 2)
        throw DataError(base_path + ".i16: size does not match the sidecar frame count");
    std::vector<RawSampleFrame> frames(n_frames);
    size_t pos = 0;
    for (int64_t t = 0; t < n_frames; ++t) {
        frames[t].t_index = t;
        for (int ch = 0; ch < kNumChannels; ++ch) {
            uint16_t lo = static_cast<uint8_t>(bytes[pos++]);
            uint16_t hi = static_cast<uint8_t>(bytes[pos++]);
            frames[t].codes[ch] = static_cast<int16_t>(lo | (hi << 8));
        }
    }
    return frames;
}

// ---------------------------------------------------------------------------
// configuration JSON

namespace {

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
    for (auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError(ctx + ": unknown key '" + key + "'");
    }
}

double jget_f64(const json& j, const std::string& ctx, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
    return v.get<double>();
}

int64_t jget_i64(const json& j, const std::string& ctx, const char* key, int64_t dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(ctx + "." + key + ": expected an integer");
    return v.get<int64_t>();
}

uint64_t jget_u64(const json& j, const std::string& ctx, const char* key, uint64_t dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
        throw ConfigError(ctx + "." + key + ": expected a non-negative integer");
    return v.get<uint64_t>();
}

bool jget_bool(const json& j, const std::string& ctx, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(ctx + "." + key + ": expected a boolean");
    return v.get<bool>();
}

std::string jget_str(const json& j, const std::string& ctx, const char* key,
                     const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(ctx + "." + key + ": expected a string");
    return v.get<std::string>();
}

std::vector<int> jget_int_list(const json& j, const std::string& ctx, const char* key) {
    if (!j.contains(key)) return {};
    const json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(ctx + "." + key + ": expected an array");
    std::vector<int> out;
    for (const json& e : v) {
        if (!e.is_number_integer())
            throw ConfigError(ctx + "." + key + ": expected integer entries");
        out.push_back(e.get<int>());
    }
    return out;
}

FrontendConfig parse_frontend(const json& j) {
    check_keys(j, "frontend",
               {"gain_db", "mismatch_sigma_rel", "irn_uvrms", "adc_bits",
                "adc_fullscale_vpp", "rate_hz", "chip_gain_limits", "scan_order"});
    FrontendConfig fe;
    fe.gain_db = jget_f64(j, "frontend", "gain_db", fe.gain_db);
    fe.mismatch_sigma_rel = jget_f64(j, "frontend", "mismatch_sigma_rel", fe.mismatch_sigma_rel);
    fe.irn_uvrms = jget_f64(j, "frontend", "irn_uvrms", fe.irn_uvrms);
    fe.adc_bits = static_cast<int>(jget_i64(j, "frontend", "adc_bits", fe.adc_bits));
    fe.adc_fullscale_vpp = jget_f64(j, "frontend", "adc_fullscale_vpp", fe.adc_fullscale_vpp);
    fe.per_channel_rate_hz = jget_f64(j, "frontend", "rate_hz", fe.per_channel_rate_hz);
    fe.chip_gain_limits = jget_bool(j, "frontend", "chip_gain_limits", fe.chip_gain_limits);
    std::vector<int> scan = jget_int_list(j, "frontend", "scan_order");
    if (!scan.empty()) {
        if (scan.size() != kNumChannels)
            throw ConfigError("frontend.scan_order: expected 16 entries");
        std::copy(scan.begin(), scan.end(), fe.scan_order.begin());
    }
    return fe;
}

FilterDesignSpec parse_filters(const json& j) {
    check_keys(j, "filters",
               {"input_rate_hz", "decim", "lpf_taps", "band_taps", "lpf_pass_hz", "atten_db"});
    FilterDesignSpec fs;
    fs.input_rate_hz = jget_f64(j, "filters", "input_rate_hz", fs.input_rate_hz);
    fs.decim = static_cast<int>(jget_i64(j, "filters", "decim", fs.decim));
    fs.lpf_taps = static_cast<int>(jget_i64(j, "filters", "lpf_taps", fs.lpf_taps));
    fs.band_taps = static_cast<int>(jget_i64(j, "filters", "band_taps", fs.band_taps));
    fs.lpf_pass_hz = jget_f64(j, "filters", "lpf_pass_hz", fs.lpf_pass_hz);
    fs.atten_db = jget_f64(j, "filters", "atten_db", fs.atten_db);
    return fs;
}

std::vector<BandAssignment> parse_bands(const json& j) {
    if (!j.is_array()) throw ConfigError("bands: expected an array");
    std::vector<BandAssignment> out;
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string ctx = "bands[" + std::to_string(i) + "]";
        check_keys(j[i], ctx, {"channels", "f_lo_hz", "f_hi_hz", "f_center_hz"});
        BandAssignment ba;
        ba.channels = jget_int_list(j[i], ctx, "channels");
        if (ba.channels.empty()) throw ConfigError(ctx + ": channels must be non-empty");
        ba.band.f_lo_hz = jget_f64(j[i], ctx, "f_lo_hz", ba.band.f_lo_hz);
        ba.band.f_hi_hz = jget_f64(j[i], ctx, "f_hi_hz", ba.band.f_hi_hz);
        ba.band.f_center_hz = jget_f64(j[i], ctx, "f_center_hz", ba.band.f_center_hz);
        out.push_back(std::move(ba));
    }
    return out;
}

PairConfig parse_pairs(const json& j) {
    if (!j.is_array()) throw ConfigError("pairs: expected an array");
    PairConfig pc;
    for (size_t i = 0; i < j.size(); ++i) {
        const std::string ctx = "pairs[" + std::to_string(i) + "]";
        check_keys(j[i], ctx, {"id", "ch_a", "ch_b", "feature"});
        PairSpec ps;
        ps.id = static_cast<int>(jget_i64(j[i], ctx, "id", static_cast<int64_t>(i)));
        ps.ch_a = static_cast<int>(jget_i64(j[i], ctx, "ch_a", 0));
        ps.ch_b = static_cast<int>(jget_i64(j[i], ctx, "ch_b", 1));
        ps.feature = feature_kind_from_string(jget_str(j[i], ctx, "feature", "plv"));
        pc.pairs.push_back(ps);
    }
    return pc;
}

InputSpec parse_input(const json& j) {
    InputSpec in;
    const std::string kind = jget_str(j, "input", "kind", "zero");
    if (kind == "zero") {
        check_keys(j, "input", {"kind"});
        in.kind = InputSpec::Kind::Zero;
    } else if (kind == "sine-pink") {
        check_keys(j, "input", {"kind", "amp_pp_v", "freq_hz", "pink_rms_v", "channels"});
        in.kind = InputSpec::Kind::SinePink;
        in.amp_pp_v = jget_f64(j, "input", "amp_pp_v", in.amp_pp_v);
        in.freq_hz = jget_f64(j, "input", "freq_hz", in.freq_hz);
        in.pink_rms_v = jget_f64(j, "input", "pink_rms_v", in.pink_rms_v);
        std::vector<int> ch = jget_int_list(j, "input", "channels");
        if (!ch.empty()) in.channels = ch;
    } else if (kind == "pair") {
        check_keys(j, "input",
                   {"kind", "pair_kind", "f_low_hz", "f_high_hz", "amp_pp_v", "amp2_pp_v",
                    "lag_rad", "m", "noise_rms_v", "ch_a", "ch_b"});
        in.kind = InputSpec::Kind::Pair;
        in.pair_kind = pair_kind_from_string(jget_str(j, "input", "pair_kind", "plv-locked"));
        in.pair_params.f_low_hz = jget_f64(j, "input", "f_low_hz", in.pair_params.f_low_hz);
        in.pair_params.f_high_hz = jget_f64(j, "input", "f_high_hz", in.pair_params.f_high_hz);
        in.pair_params.amp_pp_v = jget_f64(j, "input", "amp_pp_v", in.pair_params.amp_pp_v);
        in.pair_params.amp2_pp_v = jget_f64(j, "input", "amp2_pp_v", in.pair_params.amp2_pp_v);
        in.pair_params.lag_rad = jget_f64(j, "input", "lag_rad", in.pair_params.lag_rad);
        in.pair_params.m = jget_f64(j, "input", "m", in.pair_params.m);
        in.pair_params.noise_rms_v = jget_f64(j, "input", "noise_rms_v", in.pair_params.noise_rms_v);
        in.ch_a = static_cast<int>(jget_i64(j, "input", "ch_a", in.ch_a));
        in.ch_b = static_cast<int>(jget_i64(j, "input", "ch_b", in.ch_b));
    } else if (kind == "file") {
        check_keys(j, "input", {"kind", "path"});
        in.kind = InputSpec::Kind::File;
        in.path = jget_str(j, "input", "path", "");
    } else {
        throw ConfigError("input.kind: unknown kind '" + kind + "'");
    }
    return in;
}

StimSection parse_stim(const json& j) {
    check_keys(j, "stim",
               {"enabled", "mode", "channel", "target_phase_deg", "env_threshold",
                "window_low", "window_high", "window_pair_id", "f_max_hz", "group_delay_s",
                "f_center_hz", "compensate", "wrap_rejection", "blank_duration_samples",
                "prbs_seed", "charge_balance", "pulse", "electrode"});
    StimSection st;
    st.enabled = jget_bool(j, "stim", "enabled", true);
    st.trigger.mode = stim_mode_from_string(jget_str(j, "stim", "mode", "sample-phase"));
    st.trigger.channel = static_cast<int>(jget_i64(j, "stim", "channel", st.trigger.channel));
    const double deg =
        jget_f64(j, "stim", "target_phase_deg", code_to_degrees(st.trigger.target_phase));
    st.trigger.target_phase = code_from_radians(deg * kRadPerCode * 1024.0 / 360.0);
    st.trigger.env_threshold = static_cast<q15_t>(
        jget_i64(j, "stim", "env_threshold", st.trigger.env_threshold));
    st.trigger.th_win_l = static_cast<q15_t>(jget_i64(j, "stim", "window_low", st.trigger.th_win_l));
    st.trigger.th_win_h = static_cast<q15_t>(jget_i64(j, "stim", "window_high", st.trigger.th_win_h));
    st.trigger.window_pair_id =
        static_cast<int>(jget_i64(j, "stim", "window_pair_id", st.trigger.window_pair_id));
    st.trigger.f_max_hz = jget_f64(j, "stim", "f_max_hz", st.trigger.f_max_hz);
    st.trigger.group_delay_s = jget_f64(j, "stim", "group_delay_s", st.trigger.group_delay_s);
    st.trigger.f_center_hz = jget_f64(j, "stim", "f_center_hz", st.trigger.f_center_hz);
    st.trigger.compensate = jget_bool(j, "stim", "compensate", st.trigger.compensate);
    st.trigger.wrap_rejection = jget_bool(j, "stim", "wrap_rejection", st.trigger.wrap_rejection);
    st.trigger.blank_duration_samples = static_cast<int>(
        jget_i64(j, "stim", "blank_duration_samples", st.trigger.blank_duration_samples));
    st.trigger.prbs_seed = jget_u64(j, "stim", "prbs_seed", st.trigger.prbs_seed);
    st.charge_balance = jget_bool(j, "stim", "charge_balance", st.charge_balance);

    if (j.contains("pulse")) {
        const json& p = j.at("pulse");
        check_keys(p, "stim.pulse",
                   {"i_cathodic_ua", "i_anodic_ua", "w_cathodic_us", "w_anodic_us", "gap_us",
                    "v_safe_mv", "delta_i_ua", "compliance_v"});
        st.pulse.i_cathodic_ua = jget_f64(p, "stim.pulse", "i_cathodic_ua", st.pulse.i_cathodic_ua);
        st.pulse.i_anodic_ua = jget_f64(p, "stim.pulse", "i_anodic_ua", st.pulse.i_anodic_ua);
        st.pulse.w_cathodic_us = jget_i64(p, "stim.pulse", "w_cathodic_us", st.pulse.w_cathodic_us);
        st.pulse.w_anodic_us = jget_i64(p, "stim.pulse", "w_anodic_us", st.pulse.w_anodic_us);
        st.pulse.gap_us = jget_i64(p, "stim.pulse", "gap_us", st.pulse.gap_us);
        st.pulse.v_safe_mv = jget_f64(p, "stim.pulse", "v_safe_mv", st.pulse.v_safe_mv);
        st.pulse.delta_i_ua = jget_f64(p, "stim.pulse", "delta_i_ua", st.pulse.delta_i_ua);
        st.pulse.compliance_v = jget_f64(p, "stim.pulse", "compliance_v", st.pulse.compliance_v);
    }
    if (j.contains("electrode")) {
        const json& e = j.at("electrode");
        check_keys(e, "stim.electrode", {"v_cap_v", "r_s_ohm", "c_f", "r_dis_ohm", "r_leak_ohm"});
        st.electrode.v_cap_v = jget_f64(e, "stim.electrode", "v_cap_v", st.electrode.v_cap_v);
        st.electrode.r_s_ohm = jget_f64(e, "stim.electrode", "r_s_ohm", st.electrode.r_s_ohm);
        st.electrode.c_f = jget_f64(e, "stim.electrode", "c_f", st.electrode.c_f);
        st.electrode.r_dis_ohm = jget_f64(e, "stim.electrode", "r_dis_ohm", st.electrode.r_dis_ohm);
        st.electrode.r_leak_ohm = jget_f64(e, "stim.electrode", "r_leak_ohm", st.electrode.r_leak_ohm);
    }
    return st;
}

} // namespace

void InputSpec::validate() const {
    auto channel_ok = [](int ch) { return ch >= 0 && ch < kNumChannels; };
    switch (kind) {
        case Kind::Zero:
            break;
        case Kind::SinePink: {
            if (channels.empty()) throw ConfigError("input.channels must be non-empty");
            std::vector<int> sorted = channels;
            std::sort(sorted.begin(), sorted.end());
            for (size_t i = 0; i < sorted.size(); ++i) {
                if (!channel_ok(sorted[i])) throw ConfigError("input.channels out of range");
                if (i && sorted[i] == sorted[i - 1])
                    throw ConfigError("input.channels must be unique");
            }
            if (amp_pp_v < 0 || pink_rms_v < 0 || freq_hz <= 0)
                throw ConfigError("input tone parameters out of range");
            break;
        }
        case Kind::Pair:
            if (!channel_ok(ch_a) || !channel_ok(ch_b) || ch_a == ch_b)
                throw ConfigError("input pair channels invalid");
            break;
        case Kind::File:
            if (path.empty()) throw ConfigError("input.path must be set");
            break;
    }
}

void RunConfig::validate() const {
    if (!(duration_s > 0)) throw ConfigError("duration_s must be positive");
    frontend.validate();
    if (filter_base.input_rate_hz != frontend.per_channel_rate_hz)
        throw ConfigError("filters.input_rate_hz must match frontend.rate_hz");
    if (bands.empty()) throw ConfigError("bands must be non-empty");
    std::array<int, kNumChannels> covered{};
    for (const BandAssignment& ba : bands) {
        for (int ch : ba.channels) {
            if (ch < 0 || ch >= kNumChannels) throw ConfigError("bands channel out of range");
            ++covered[ch];
        }
    }
    for (int ch = 0; ch < kNumChannels; ++ch)
        if (covered[ch] != 1)
            throw ConfigError("bands must cover channel " + std::to_string(ch) +
                              " exactly once");
    window.validate();
    pairs.validate();
    input.validate();
    if (stim.enabled) {
        stim.trigger.validate();
        stim.pulse.validate();
        stim.electrode.validate();
        if (stim.trigger.mode == StimMode::WindowFeature ||
            stim.trigger.mode == StimMode::Combined) {
            bool found = false;
            for (const PairSpec& ps : pairs.pairs)
                if (ps.id == stim.trigger.window_pair_id) found = true;
            if (!found)
                throw ConfigError("stim.window_pair_id does not reference a configured pair");
        }
    }
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    check_keys(j, "config",
               {"bands", "duration_s", "emit_phases", "filters", "frontend", "input", "pairs",
                "seed", "stim", "window"});
    RunConfig cfg;
    cfg.seed = jget_u64(j, "config", "seed", cfg.seed);
    cfg.duration_s = jget_f64(j, "config", "duration_s", cfg.duration_s);
    cfg.emit_phases = jget_bool(j, "config", "emit_phases", cfg.emit_phases);
    if (j.contains("frontend")) cfg.frontend = parse_frontend(j.at("frontend"));
    if (j.contains("filters")) cfg.filter_base = parse_filters(j.at("filters"));
    if (j.contains("bands")) cfg.bands = parse_bands(j.at("bands"));
    if (cfg.bands.empty()) {
        BandAssignment all;
        for (int ch = 0; ch < kNumChannels; ++ch) all.channels.push_back(ch);
        all.band = cfg.filter_base.band;
        cfg.bands.push_back(std::move(all));
    }
    if (j.contains("window")) {
        check_keys(j.at("window"), "window", {"n_samples"});
        cfg.window.n_samples =
            static_cast<int>(jget_i64(j.at("window"), "window", "n_samples", cfg.window.n_samples));
    }
    if (j.contains("pairs")) cfg.pairs = parse_pairs(j.at("pairs"));
    if (j.contains("input")) cfg.input = parse_input(j.at("input"));
    if (j.contains("stim")) cfg.stim = parse_stim(j.at("stim"));

    // Clock plumbing the document never states explicitly: the trigger engine
    // runs on the decimated clock, and window gating tracks the referenced
    // pair's feature kind.
    cfg.stim.trigger.rate_hz = cfg.frontend.per_channel_rate_hz / cfg.filter_base.decim;
    cfg.stim.trigger.dec_factor = cfg.filter_base.decim;
    for (const PairSpec& ps : cfg.pairs.pairs)
        if (ps.id == cfg.stim.trigger.window_pair_id)
            cfg.stim.trigger.window_kind = ps.feature;

    cfg.validate();
    return cfg;
}

std::string emit_run_config(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["duration_s"] = cfg.duration_s;
    j["emit_phases"] = cfg.emit_phases;

    json fe;
    fe["gain_db"] = cfg.frontend.gain_db;
    fe["mismatch_sigma_rel"] = cfg.frontend.mismatch_sigma_rel;
    fe["irn_uvrms"] = cfg.frontend.irn_uvrms;
    fe["adc_bits"] = cfg.frontend.adc_bits;
    fe["adc_fullscale_vpp"] = cfg.frontend.adc_fullscale_vpp;
    fe["rate_hz"] = cfg.frontend.per_channel_rate_hz;
    fe["chip_gain_limits"] = cfg.frontend.chip_gain_limits;
    fe["scan_order"] = cfg.frontend.scan_order;
    j["frontend"] = fe;

    json fl;
    fl["input_rate_hz"] = cfg.filter_base.input_rate_hz;
    fl["decim"] = cfg.filter_base.decim;
    fl["lpf_taps"] = cfg.filter_base.lpf_taps;
    fl["band_taps"] = cfg.filter_base.band_taps;
    fl["lpf_pass_hz"] = cfg.filter_base.lpf_pass_hz;
    fl["atten_db"] = cfg.filter_base.atten_db;
    j["filters"] = fl;

    j["bands"] = json::array();
    for (const BandAssignment& ba : cfg.bands) {
        json b;
        b["channels"] = ba.channels;
        b["f_lo_hz"] = ba.band.f_lo_hz;
        b["f_hi_hz"] = ba.band.f_hi_hz;
        b["f_center_hz"] = ba.band.f_center_hz;
        j["bands"].push_back(b);
    }

    j["window"] = json{{"n_samples", cfg.window.n_samples}};

    j["pairs"] = json::array();
    for (const PairSpec& ps : cfg.pairs.pairs) {
        json p;
        p["id"] = ps.id;
        p["ch_a"] = ps.ch_a;
        p["ch_b"] = ps.ch_b;
        p["feature"] = feature_kind_to_string(ps.feature);
        j["pairs"].push_back(p);
    }

    json in;
    switch (cfg.input.kind) {
        case InputSpec::Kind::Zero:
            in["kind"] = "zero";
            break;
        case InputSpec::Kind::SinePink:
            in["kind"] = "sine-pink";
            in["amp_pp_v"] = cfg.input.amp_pp_v;
            in["freq_hz"] = cfg.input.freq_hz;
            in["pink_rms_v"] = cfg.input.pink_rms_v;
            in["channels"] = cfg.input.channels;
            break;
        case InputSpec::Kind::Pair:
            in["kind"] = "pair";
            in["pair_kind"] = pair_kind_to_string(cfg.input.pair_kind);
            in["f_low_hz"] = cfg.input.pair_params.f_low_hz;
            in["f_high_hz"] = cfg.input.pair_params.f_high_hz;
            in["amp_pp_v"] = cfg.input.pair_params.amp_pp_v;
            in["amp2_pp_v"] = cfg.input.pair_params.amp2_pp_v;
            in["lag_rad"] = cfg.input.pair_params.lag_rad;
            in["m"] = cfg.input.pair_params.m;
            in["noise_rms_v"] = cfg.input.pair_params.noise_rms_v;
            in["ch_a"] = cfg.input.ch_a;
            in["ch_b"] = cfg.input.ch_b;
            break;
        case InputSpec::Kind::File:
            in["kind"] = "file";
            in["path"] = cfg.input.path;
            break;
    }
    j["input"] = in;

    if (cfg.stim.enabled) {
        json st;
        st["enabled"] = true;
        st["mode"] = to_string(cfg.stim.trigger.mode);
        st["channel"] = cfg.stim.trigger.channel;
        st["target_phase_deg"] = code_to_degrees(cfg.stim.trigger.target_phase);
        st["env_threshold"] = cfg.stim.trigger.env_threshold;
        st["window_low"] = cfg.stim.trigger.th_win_l;
        st["window_high"] = cfg.stim.trigger.th_win_h;
        st["window_pair_id"] = cfg.stim.trigger.window_pair_id;
        st["f_max_hz"] = cfg.stim.trigger.f_max_hz;
        st["group_delay_s"] = cfg.stim.trigger.group_delay_s;
        st["f_center_hz"] = cfg.stim.trigger.f_center_hz;
        st["compensate"] = cfg.stim.trigger.compensate;
        st["wrap_rejection"] = cfg.stim.trigger.wrap_rejection;
        st["blank_duration_samples"] = cfg.stim.trigger.blank_duration_samples;
        st["prbs_seed"] = cfg.stim.trigger.prbs_seed;
        st["charge_balance"] = cfg.stim.charge_balance;
        json pu;
        pu["i_cathodic_ua"] = cfg.stim.pulse.i_cathodic_ua;
        pu["i_anodic_ua"] = cfg.stim.pulse.i_anodic_ua;
        pu["w_cathodic_us"] = cfg.stim.pulse.w_cathodic_us;
        pu["w_anodic_us"] = cfg.stim.pulse.w_anodic_us;
        pu["gap_us"] = cfg.stim.pulse.gap_us;
        pu["v_safe_mv"] = cfg.stim.pulse.v_safe_mv;
        pu["delta_i_ua"] = cfg.stim.pulse.delta_i_ua;
        pu["compliance_v"] = cfg.stim.pulse.compliance_v;
        st["pulse"] = pu;
        json el;
        el["v_cap_v"] = cfg.stim.electrode.v_cap_v;
        el["r_s_ohm"] = cfg.stim.electrode.r_s_ohm;
        el["c_f"] = cfg.stim.electrode.c_f;
        el["r_dis_ohm"] = cfg.stim.electrode.r_dis_ohm;
        el["r_leak_ohm"] = cfg.stim.electrode.r_leak_ohm;
        st["electrode"] = el;
        j["stim"] = st;
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// table and filter dumps

std::string emit_luts_json(const LpeLuts& phase_luts, const TrigLut& trig) {
    json j;
    j["schema"] = 1;
    j["phase_tables"]["recip"] = phase_luts.recip;
    j["phase_tables"]["lin"] = phase_luts.lin;
    j["phase_tables"]["content_hash"] = hash_hex(phase_luts.content_hash());
    j["trig"]["quarter"] = trig.quarter;
    j["trig"]["content_hash"] = hash_hex(trig.content_hash());
    return j.dump(2) + "\n";
}

std::string emit_filters_json(const std::vector<DesignedBank>& banks) {
    json j;
    j["schema"] = 1;
    j["banks"] = json::array();
    for (const DesignedBank& bk : banks) {
        json b;
        b["channels"] = bk.assignment.channels;
        b["f_lo_hz"] = bk.assignment.band.f_lo_hz;
        b["f_hi_hz"] = bk.assignment.band.f_hi_hz;
        b["f_center_hz"] = bk.assignment.band.center();
        b["lpf"] = bk.filters.lpf;
        b["bpf"] = bk.filters.bpf;
        b["ht"] = bk.filters.ht;
        b["group_delay_lpf"] = bk.filters.group_delay_lpf;
        b["group_delay_band"] = bk.filters.group_delay_band;
        b["content_hash"] = hash_hex(bk.filters.content_hash());
        b["achieved"]["lpf_atten_db"] = bk.filters.achieved.lpf_atten_db;
        b["achieved"]["ratio_db_at_center"] = bk.filters.achieved.ratio_db_at_center;
        b["achieved"]["quadrature_err_deg"] = bk.filters.achieved.quadrature_err_deg;
        b["achieved"]["dc_gain_re"] = bk.filters.achieved.dc_gain_re;
        j["banks"].push_back(b);
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// file helpers

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw DataError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace ncp
