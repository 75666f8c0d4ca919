#include "ncp/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ncp/oracle_dsp.hpp"

namespace ncp {

namespace {

const double kPi = 3.14159265358979323846;

// Shift count for a power-of-two window length.
int window_shift(size_t n) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw DataError("window length must be a nonzero power of two");
    int k = 0;
    while ((size_t{1} << k) != n) ++k;
    return k;
}

q15_t clamp_q15_mag(int64_t v) {
    return static_cast<q15_t>(std::min<int64_t>(v, kQ15One - 1));
}

// max(|sc|,|ss|) scaled by 2^7/N with round-half-away, clamped to Q1.15.
q15_t finalize_plv(int64_t sc, int64_t ss, int shift) {
    int64_t m = std::max(std::llabs(sc), std::llabs(ss));
    return clamp_q15_mag(rshift_round_away(m << 7, shift));
}

PacResult finalize_pac(int64_t sc, int64_t ss, int64_t amp_sum, int shift) {
    PacResult res;
    int64_t m = std::max(std::llabs(sc), std::llabs(ss));
    res.raw = clamp_q15_mag(rshift_round_away(m, shift + 8));
    if (amp_sum < 16) { // guarded divide: near-silent window
        res.normalized = 0;
        res.degenerate = true;
        return res;
    }
    // round(m * 128 / amp_sum), all positive
    int64_t q = (m * 256 + amp_sum) / (2 * amp_sum);
    res.normalized = clamp_q15_mag(q);
    return res;
}

q15_t finalize_se(int64_t acc, int shift) {
    return clamp_q15_mag(rshift_round_away(acc, shift + 15));
}

} // namespace

TrigLut build_trig_lut() {
    TrigLut lut;
    for (int i = 0; i < 256; ++i)
        lut.quarter[static_cast<size_t>(i)] =
            static_cast<int16_t>(std::llround(256.0 * std::sin(kPi * i / 512.0)));
    return lut;
}

uint64_t TrigLut::content_hash() const {
    return fnv1a64(quarter.data(), quarter.size() * sizeof(quarter[0]));
}

int trig_sin(const TrigLut& lut, phase_code_t c) {
    const unsigned u = static_cast<unsigned>(c) & 1023u;
    const unsigned quadrant = u >> 8, idx = u & 255u;
    auto quarter_at = [&lut](unsigned i) -> int {
        return i == 256u ? 256 : lut.quarter[i];
    };
    switch (quadrant) {
        case 0: return quarter_at(idx);
        case 1: return quarter_at(256u - idx);
        case 2: return -quarter_at(idx);
        default: return -quarter_at(256u - idx);
    }
}

int trig_cos(const TrigLut& lut, phase_code_t c) {
    return trig_sin(lut, wrap_code(c + 256));
}

q15_t envelope_linf(q15_t re, q15_t im) {
    int32_t m = std::max(std::abs(static_cast<int32_t>(re)), std::abs(static_cast<int32_t>(im)));
    return clamp_q15_mag(m);
}

void PairConfig::validate() const {
    if (pairs.size() > static_cast<size_t>(kMaxPairs))
        throw ConfigError("at most 8 feature pairs");
    std::vector<int> ids;
    for (const auto& p : pairs) {
        if (p.ch_a < 0 || p.ch_a >= kNumChannels || p.ch_b < 0 || p.ch_b >= kNumChannels)
            throw ConfigError("pair channel out of range");
        if (p.feature == FeatureKind::Se)
            throw ConfigError("pair features are plv or pac; se is per channel");
        ids.push_back(p.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ConfigError("pair ids must be unique");
}

void WindowConfig::validate() const {
    if (n_samples < 2 || n_samples > (1 << 16) || (n_samples & (n_samples - 1)) != 0)
        throw ConfigError("window length must be a power of two in [2, 65536]");
}

q15_t plv_window(const std::vector<phase_code_t>& a, const std::vector<phase_code_t>& b,
                 const TrigLut& lut) {
    if (a.size() != b.size()) throw DataError("phase streams differ in length");
    const int shift = window_shift(a.size());
    int64_t sc = 0, ss = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        phase_code_t d = wrap_code(a[i] - b[i]);
        sc += trig_cos(lut, d);
        ss += trig_sin(lut, d);
    }
    return finalize_plv(sc, ss, shift);
}

PacResult pac_window(const std::vector<phase_code_t>& phase_low,
                     const std::vector<q15_t>& amp_high, const TrigLut& lut) {
    if (phase_low.size() != amp_high.size()) throw DataError("phase/amplitude length mismatch");
    const int shift = window_shift(phase_low.size());
    int64_t sc = 0, ss = 0, amps = 0;
    for (size_t i = 0; i < phase_low.size(); ++i) {
        const int64_t a = amp_high[i] < 0 ? 0 : amp_high[i];
        sc += a * trig_cos(lut, phase_low[i]);
        ss += a * trig_sin(lut, phase_low[i]);
        amps += a;
    }
    return finalize_pac(sc, ss, amps, shift);
}

q15_t se_window(const std::vector<q15_t>& bp) {
    const int shift = window_shift(bp.size());
    int64_t acc = 0;
    for (q15_t v : bp) acc += static_cast<int64_t>(v) * v;
    return finalize_se(acc, shift);
}

FeatureEngine::FeatureEngine(const PairConfig& pairs, const WindowConfig& window,
                             const TrigLut& lut)
    : pairs_(pairs), window_(window), lut_(&lut) {
    pairs_.validate();
    window_.validate();
    acc_.resize(pairs_.pairs.size());
}

void FeatureEngine::reset() {
    std::fill(acc_.begin(), acc_.end(), PairAcc{});
    se_acc_.fill(0);
    tick_ = 0;
    windows_ = 0;
}

std::vector<FeatureWindowRecord> FeatureEngine::push(
    const std::array<ChannelFeatureInput, kNumChannels>& in) {
    for (size_t p = 0; p < pairs_.pairs.size(); ++p) {
        const PairSpec& spec = pairs_.pairs[p];
        PairAcc& acc = acc_[p];
        if (spec.feature == FeatureKind::Plv) {
            phase_code_t d = wrap_code(in[static_cast<size_t>(spec.ch_a)].phase -
                                       in[static_cast<size_t>(spec.ch_b)].phase);
            acc.sc += trig_cos(*lut_, d);
            acc.ss += trig_sin(*lut_, d);
        } else {
            const phase_code_t c = in[static_cast<size_t>(spec.ch_a)].phase;
            const q15_t env = in[static_cast<size_t>(spec.ch_b)].env;
            const int64_t a = env < 0 ? 0 : env;
            acc.sc += a * trig_cos(*lut_, c);
            acc.ss += a * trig_sin(*lut_, c);
            acc.amp += a;
        }
    }
    for (int ch = 0; ch < kNumChannels; ++ch) {
        const int64_t v = in[static_cast<size_t>(ch)].bp;
        se_acc_[static_cast<size_t>(ch)] += v * v;
    }

    std::vector<FeatureWindowRecord> out;
    if (++tick_ < window_.n_samples) return out;

    const int shift = window_shift(static_cast<size_t>(window_.n_samples));
    out.reserve(pairs_.pairs.size() + kNumChannels);
    for (size_t p = 0; p < pairs_.pairs.size(); ++p) {
        const PairSpec& spec = pairs_.pairs[p];
        FeatureWindowRecord rec;
        rec.window_index = windows_;
        rec.id = spec.id;
        rec.kind = spec.feature;
        if (spec.feature == FeatureKind::Plv) {
            rec.value = finalize_plv(acc_[p].sc, acc_[p].ss, shift);
        } else {
            PacResult pr = finalize_pac(acc_[p].sc, acc_[p].ss, acc_[p].amp, shift);
            rec.value = pr.normalized;
            rec.degenerate = pr.degenerate;
        }
        out.push_back(rec);
    }
    for (int ch = 0; ch < kNumChannels; ++ch) {
        FeatureWindowRecord rec;
        rec.window_index = windows_;
        rec.id = ch;
        rec.kind = FeatureKind::Se;
        rec.value = finalize_se(se_acc_[static_cast<size_t>(ch)], shift);
        out.push_back(rec);
    }
    std::fill(acc_.begin(), acc_.end(), PairAcc{});
    se_acc_.fill(0);
    tick_ = 0;
    ++windows_;
    return out;
}

std::vector<double> ideal_plv_windows(const std::vector<double>& phase_a,
                                      const std::vector<double>& phase_b, int n_window) {
    if (phase_a.size() != phase_b.size()) throw DataError("phase streams differ in length");
    if (n_window <= 0) throw ConfigError("window length must be positive");
    const size_t windows = phase_a.size() / static_cast<size_t>(n_window);
    std::vector<double> out(windows);
    for (size_t w = 0; w < windows; ++w) {
        double sc = 0, ss = 0;
        for (int i = 0; i < n_window; ++i) {
            double d = phase_a[w * static_cast<size_t>(n_window) + static_cast<size_t>(i)] -
                       phase_b[w * static_cast<size_t>(n_window) + static_cast<size_t>(i)];
            sc += std::cos(d);
            ss += std::sin(d);
        }
        out[w] = std::hypot(sc, ss) / n_window;
    }
    return out;
}

std::vector<double> ideal_pac_windows(const std::vector<double>& phase_low,
                                      const std::vector<double>& amp_high, int n_window) {
    if (phase_low.size() != amp_high.size()) throw DataError("phase/amplitude length mismatch");
    if (n_window <= 0) throw ConfigError("window length must be positive");
    const size_t windows = phase_low.size() / static_cast<size_t>(n_window);
    std::vector<double> out(windows);
    for (size_t w = 0; w < windows; ++w) {
        double sc = 0, ss = 0, amps = 0;
        for (int i = 0; i < n_window; ++i) {
            size_t t = w * static_cast<size_t>(n_window) + static_cast<size_t>(i);
            double a = std::max(0.0, amp_high[t]);
            sc += a * std::cos(phase_low[t]);
            ss += a * std::sin(phase_low[t]);
            amps += a;
        }
        out[w] = amps > 0.0 ? std::hypot(sc, ss) / amps : 0.0;
    }
    return out;
}

std::vector<double> ideal_se_windows(const std::vector<double>& bp, int n_window) {
    if (n_window <= 0) throw ConfigError("window length must be positive");
    const size_t windows = bp.size() / static_cast<size_t>(n_window);
    std::vector<double> out(windows);
    for (size_t w = 0; w < windows; ++w) {
        double acc = 0;
        for (int i = 0; i < n_window; ++i) {
            double v = bp[w * static_cast<size_t>(n_window) + static_cast<size_t>(i)];
            acc += v * v;
        }
        out[w] = acc / n_window;
    }
    return out;
}

IdealFeatureSeries ideal_features(const std::vector<double>& trace_a,
                                  const std::vector<double>& trace_b, double low_lo_hz,
                                  double low_hi_hz, double high_lo_hz, double high_hi_hz,
                                  double rate_hz, int n_window) {
    if (trace_a.size() != trace_b.size()) throw DataError("trace length mismatch");
    auto ga = oracle_ground_truth(trace_a, low_lo_hz, low_hi_hz, rate_hz);
    auto gb = oracle_ground_truth(trace_b, low_lo_hz, low_hi_hz, rate_hz);
    auto hb = oracle_ground_truth(trace_b, high_lo_hz, high_hi_hz, rate_hz);

    IdealFeatureSeries out;
    out.plv = ideal_plv_windows(ga.phase, gb.phase, n_window);
    out.pac = ideal_pac_windows(ga.phase, hb.envelope, n_window);

    std::vector<double> bp(ga.re.begin(), ga.re.end());
    out.se = ideal_se_windows(bp, n_window);
    return out;
}

} // namespace ncp
