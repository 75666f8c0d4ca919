#include "ncp/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ncp {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

} // namespace

double FrontendConfig::gain_linear() const { return std::pow(10.0, gain_db / 20.0); }

void FrontendConfig::validate() const {
    if (adc_bits < 2 || adc_bits > 15) throw ConfigError("adc_bits must be in [2, 15]");
    if (per_channel_rate_hz <= 0.0) throw ConfigError("per_channel_rate_hz must be positive");
    if (adc_fullscale_vpp <= 0.0) throw ConfigError("adc_fullscale_vpp must be positive");
    if (mismatch_sigma_rel < 0.0) throw ConfigError("mismatch_sigma_rel must be >= 0");
    if (irn_uvrms < 0.0) throw ConfigError("irn_uvrms must be >= 0");
    if (chip_gain_limits && (gain_db < 53.0 || gain_db > 61.0))
        throw ConfigError("gain_db outside the 53..61 dB programmable range");
    std::array<bool, kNumChannels> seen{};
    for (int ch : scan_order) {
        if (ch < 0 || ch >= kNumChannels || seen[ch])
            throw ConfigError("scan_order must be a permutation of 0..15");
        seen[ch] = true;
    }
}

void BlankingSchedule::validate() const {
    int64_t prev_end = INT64_MIN;
    for (const auto& [start, dur] : intervals) {
        if (dur <= 0) throw ConfigError("blanking duration must be positive");
        if (start < prev_end) throw ConfigError("blanking intervals must be sorted and disjoint");
        prev_end = start + dur;
    }
}

bool BlankingSchedule::active(int64_t t) const {
    // first interval with start > t, then check its predecessor
    auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                               [](int64_t v, const auto& iv) { return v < iv.first; });
    if (it == intervals.begin()) return false;
    --it;
    return t < it->first + it->second;
}

void BlankingSchedule::add(int64_t start, int64_t duration) {
    if (duration <= 0) return;
    auto it = std::lower_bound(intervals.begin(), intervals.end(),
                               std::make_pair(start, INT64_MIN));
    it = intervals.insert(it, {start, duration});
    // merge with neighbours that touch or overlap
    size_t i = it - intervals.begin();
    if (i > 0 && intervals[i - 1].first + intervals[i - 1].second >= intervals[i].first) --i;
    while (i + 1 < intervals.size() &&
           intervals[i].first + intervals[i].second >= intervals[i + 1].first) {
        int64_t end = std::max(intervals[i].first + intervals[i].second,
                               intervals[i + 1].first + intervals[i + 1].second);
        intervals[i].second = end - intervals[i].first;
        intervals.erase(intervals.begin() + i + 1);
    }
}

std::vector<double> pink_noise(int64_t n, double rate_hz, uint64_t seed) {
    if (n <= 0) throw ConfigError("pink_noise needs a positive length");
    if (rate_hz <= 0.0) throw ConfigError("pink_noise needs a positive rate");
    // White Gaussian noise through three first-order pole/zero sections.
    // Poles a decade apart with zeros at the geometric midpoints give a mean
    // -10 dB/decade slope (half the one-pole -20) across ~0.5..160 Hz with
    // small ripple, which covers the 1..100 Hz band the tests measure.
    struct Section { double pole_hz, zero_hz; };
    static constexpr Section kSections[3] = {{0.5, 1.58}, {5.0, 15.8}, {50.0, 158.0}};

    double a[3], b[3];
    for (int i = 0; i < 3; ++i) {
        a[i] = std::exp(-2.0 * kPi * kSections[i].pole_hz / rate_hz);
        b[i] = std::exp(-2.0 * kPi * kSections[i].zero_hz / rate_hz);
    }

    GaussianSource white(seed);
    std::vector<double> y(static_cast<size_t>(n));
    double xprev[3] = {0, 0, 0}, yprev[3] = {0, 0, 0};
    for (int64_t t = 0; t < n; ++t) {
        double v = white.next();
        for (int i = 0; i < 3; ++i) {
            double out = v - b[i] * xprev[i] + a[i] * yprev[i];
            xprev[i] = v;
            yprev[i] = out;
            v = out;
        }
        y[static_cast<size_t>(t)] = v;
    }
    double ss = 0.0;
    for (double v : y) ss += v * v;
    double rms = std::sqrt(ss / static_cast<double>(n));
    if (rms > 0.0)
        for (double& v : y) v /= rms;
    return y;
}

std::vector<double> gen_sine_pink(double amp_pp_v, double freq_hz, double pink_rms_v,
                                  double duration_s, double rate_hz, uint64_t seed) {
    if (duration_s <= 0.0) throw ConfigError("duration_s must be positive");
    if (rate_hz <= 0.0) throw ConfigError("rate_hz must be positive");
    if (freq_hz < 0.0 || amp_pp_v < 0.0 || pink_rms_v < 0.0)
        throw ConfigError("amplitudes and frequency must be >= 0");
    if (freq_hz > 0.0 && rate_hz < 4.0 * freq_hz)
        throw ConfigError("rate_hz must be at least 4x freq_hz");

    const auto n = static_cast<int64_t>(std::llround(duration_s * rate_hz));
    if (n <= 0) throw ConfigError("duration too short for one sample");

    std::vector<double> v(static_cast<size_t>(n), 0.0);
    const double amp = amp_pp_v / 2.0;
    for (int64_t t = 0; t < n; ++t)
        v[static_cast<size_t>(t)] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(t) / rate_hz);

    if (pink_rms_v > 0.0) {
        auto p = pink_noise(n, rate_hz, derive_seed(seed, "pink"));
        for (int64_t t = 0; t < n; ++t) v[static_cast<size_t>(t)] += pink_rms_v * p[static_cast<size_t>(t)];
    }
    return v;
}

PairKind pair_kind_from_string(const std::string& s) {
    if (s == "plv-locked") return PairKind::PlvLocked;
    if (s == "pac-coupled") return PairKind::PacCoupled;
    if (s == "independent") return PairKind::Independent;
    throw ConfigError("unknown pair kind: " + s);
}

std::array<std::vector<double>, 2> gen_coupled_pair(PairKind kind,
                                                    const CoupledPairParams& params,
                                                    double duration_s, double rate_hz,
                                                    uint64_t seed) {
    if (duration_s <= 0.0 || rate_hz <= 0.0)
        throw ConfigError("duration_s and rate_hz must be positive");
    if (params.f_low_hz <= 0.0 || rate_hz < 4.0 * params.f_low_hz)
        throw ConfigError("rate_hz must be at least 4x f_low_hz");
    if (kind == PairKind::PacCoupled &&
        (params.f_high_hz <= 0.0 || rate_hz < 4.0 * params.f_high_hz))
        throw ConfigError("rate_hz must be at least 4x f_high_hz");
    if (params.m < 0.0 || params.m > 1.0) throw ConfigError("m must be in [0, 1]");

    const auto n = static_cast<int64_t>(std::llround(duration_s * rate_hz));
    if (n <= 0) throw ConfigError("duration too short for one sample");

    std::array<std::vector<double>, 2> out;
    out[0].resize(static_cast<size_t>(n));
    out[1].resize(static_cast<size_t>(n));
    const double a0 = params.amp_pp_v / 2.0;
    const double a1 = params.amp2_pp_v / 2.0;

    switch (kind) {
        case PairKind::PlvLocked:
            for (int64_t t = 0; t < n; ++t) {
                double phi = 2.0 * kPi * params.f_low_hz * static_cast<double>(t) / rate_hz;
                out[0][static_cast<size_t>(t)] = a0 * std::cos(phi);
                out[1][static_cast<size_t>(t)] = a1 * std::cos(phi - params.lag_rad);
            }
            break;
        case PairKind::PacCoupled:
            for (int64_t t = 0; t < n; ++t) {
                double phi = 2.0 * kPi * params.f_low_hz * static_cast<double>(t) / rate_hz;
                double phi_hi = 2.0 * kPi * params.f_high_hz * static_cast<double>(t) / rate_hz;
                out[0][static_cast<size_t>(t)] = a0 * std::cos(phi);
                out[1][static_cast<size_t>(t)] =
                    a1 * (1.0 + params.m * std::cos(phi)) * std::cos(phi_hi);
            }
            break;
        case PairKind::Independent: {
            GaussianSource ga(derive_seed(seed, "pair-a"));
            GaussianSource gb(derive_seed(seed, "pair-b"));
            for (int64_t t = 0; t < n; ++t) {
                out[0][static_cast<size_t>(t)] = params.noise_rms_v * ga.next();
                out[1][static_cast<size_t>(t)] = params.noise_rms_v * gb.next();
            }
            break;
        }
    }
    return out;
}

AfeModel::AfeModel(const FrontendConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const double g = cfg_.gain_linear();
    GaussianSource mismatch(derive_seed(cfg_.seed, "gain-mismatch"));
    for (int ch = 0; ch < kNumChannels; ++ch) {
        double gch = g * (1.0 + cfg_.mismatch_sigma_rel * mismatch.next());
        gains_[ch] = gch > 0.0 ? gch : 0.0;
    }
    noise_.reserve(kNumChannels);
    for (int ch = 0; ch < kNumChannels; ++ch)
        noise_.emplace_back(derive_seed(cfg_.seed, "irn", static_cast<uint64_t>(ch)));
    noise_v_ = cfg_.irn_uvrms * 1e-6;
    code_max_ = (1 << (cfg_.adc_bits - 1)) - 1;
    code_min_ = -(1 << (cfg_.adc_bits - 1));
}

int16_t AfeModel::digitize_sample(int ch, double v, bool blanked) {
    double n = noise_v_ > 0.0 ? noise_v_ * noise_[static_cast<size_t>(ch)].next() : 0.0;
    if (blanked) return 0;
    double scaled = gains_[static_cast<size_t>(ch)] * (v + n) / cfg_.lsb_v();
    auto code = static_cast<int32_t>(round_away(scaled));
    if (code > code_max_) code = code_max_;
    if (code < code_min_) code = code_min_;
    return static_cast<int16_t>(code);
}

std::vector<RawSampleFrame> afe_digitize(const std::array<std::vector<double>, kNumChannels>& traces,
                                         const FrontendConfig& cfg,
                                         const BlankingSchedule& blanking) {
    blanking.validate();
    AfeModel afe(cfg);
    const size_t n = traces[0].size();
    for (const auto& tr : traces)
        if (tr.size() != n) throw DataError("channel traces differ in length");

    std::vector<RawSampleFrame> frames(n);
    for (size_t t = 0; t < n; ++t) {
        frames[t].t_index = static_cast<int64_t>(t);
        const bool blanked = blanking.active(static_cast<int64_t>(t));
        for (int ch = 0; ch < kNumChannels; ++ch)
            frames[t].codes[ch] = afe.digitize_sample(ch, traces[ch][t], blanked);
    }
    return frames;
}

} // namespace ncp
