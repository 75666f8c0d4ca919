#include "ncp/fir_pipeline.hpp"

#include <cmath>
#include <complex>
#include <sstream>

namespace ncp {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Window spectrum at angular frequency theta (rad/sample), evaluated around
// the center tap: W(theta) = sum w[k] cos(theta*(k-M)). Real by symmetry.
double window_spectrum(const std::vector<double>& w, double theta) {
    const int m = (static_cast<int>(w.size()) - 1) / 2;
    double s = 0.0;
    for (size_t k = 0; k < w.size(); ++k) s += w[k] * std::cos(theta * (static_cast<int>(k) - m));
    return s;
}

std::vector<q15_t> quantize(const std::vector<double>& h) {
    std::vector<q15_t> q(h.size());
    for (size_t i = 0; i < h.size(); ++i) q[i] = q15_from_double(h[i]);
    return q;
}

double worst_stopband_db(const std::vector<q15_t>& taps, double rate, double f_start) {
    double worst = -1e9;
    const int grid = 600;
    for (int i = 0; i <= grid; ++i) {
        double f = f_start + (rate / 2.0 - f_start) * i / grid;
        double mag, ph;
        fir_response(taps, rate, f, &mag, &ph);
        double db = 20.0 * std::log10(std::max(mag, 1e-12));
        if (db > worst) worst = db;
    }
    return -worst; // attenuation is positive
}

} // namespace

double bessel_i0(double x) {
    // power series; converges quickly for the beta range used here
    double sum = 1.0;
    double term = 1.0;
    const double hx = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (hx / k) * (hx / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double kaiser_beta_for_atten(double a) {
    if (a > 50.0) return 0.1102 * (a - 8.7);
    if (a >= 21.0) return 0.5842 * std::pow(a - 21.0, 0.4) + 0.07886 * (a - 21.0);
    return 0.0;
}

namespace {

std::vector<double> kaiser_window(int n, double beta) {
    std::vector<double> w(n);
    const double denom = bessel_i0(beta);
    const double m = (n - 1) / 2.0;
    for (int k = 0; k < n; ++k) {
        double r = (k - m) / m;
        w[k] = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
    }
    return w;
}

} // namespace

void fir_response(const std::vector<q15_t>& taps, double rate_hz, double f_hz,
                  double* mag, double* phase_rad) {
    std::complex<double> h(0.0, 0.0);
    const double w = 2.0 * kPi * f_hz / rate_hz;
    for (size_t k = 0; k < taps.size(); ++k) {
        double c = taps[k] / 32768.0;
        h += c * std::exp(std::complex<double>(0.0, -w * static_cast<double>(k)));
    }
    if (mag) *mag = std::abs(h);
    if (phase_rad) *phase_rad = std::arg(h);
}

FilterSet design_filters(const FilterDesignSpec& spec) {
    if (spec.lpf_taps < 5 || spec.lpf_taps % 2 == 0)
        throw ConfigError("lpf_taps must be odd and >= 5");
    if (spec.band_taps < 5 || spec.band_taps % 2 == 0)
        throw ConfigError("band_taps must be odd and >= 5");
    if (spec.decim < 1) throw ConfigError("decim must be >= 1");
    if (spec.input_rate_hz <= 0.0) throw ConfigError("input_rate_hz must be positive");
    const double dec_rate = spec.input_rate_hz / spec.decim;
    const double dec_nyq = dec_rate / 2.0;
    if (!(spec.band.f_lo_hz > 0.0 && spec.band.f_lo_hz < spec.band.f_hi_hz &&
          spec.band.f_hi_hz < dec_nyq))
        throw ConfigError("band must satisfy 0 < f_lo < f_hi < decimated Nyquist");
    if (!(spec.lpf_pass_hz > 0.0 && spec.lpf_pass_hz < dec_nyq))
        throw ConfigError("lpf_pass_hz must lie below the decimated Nyquist");

    FilterSet fs;
    fs.spec = spec;

    const double beta = kaiser_beta_for_atten(spec.atten_db);

    // Lowpass: windowed sinc, cutoff midway between the passband edge and the
    // decimated Nyquist where the stopband starts. The window is steepened in
    // small steps until the quantized taps meet the stopband target, so the
    // request fails only when the tap budget truly cannot reach it.
    {
        const int n = spec.lpf_taps;
        const int m = (n - 1) / 2;
        double best_atten = -1e9;
        bool met = false;
        // Window shape is fixed by the attenuation target; only the cutoff
        // placement inside the transition band is searched, widest passband
        // first, until the quantized taps meet the stopband target.
        const auto w = kaiser_window(n, beta);
        for (double frac = 0.50; frac >= 0.29 && !met; frac -= 0.03) {
            const double fc = spec.lpf_pass_hz + frac * (dec_nyq - spec.lpf_pass_hz);
            std::vector<double> h(n);
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                h[k] = (2.0 * fc / spec.input_rate_hz) *
                       sinc(2.0 * fc / spec.input_rate_hz * (k - m)) * w[k];
                sum += h[k];
            }
            for (auto& v : h) v /= sum; // unit DC gain
            auto q = quantize(h);
            double atten = worst_stopband_db(q, spec.input_rate_hz, dec_nyq);
            if (atten > best_atten) {
                best_atten = atten;
                fs.lpf = std::move(q);
            }
            met = atten >= spec.atten_db;
        }
        fs.group_delay_lpf = m;
        fs.achieved.lpf_atten_db = best_atten;
        if (!met) {
            std::ostringstream os;
            os << "lowpass cannot reach " << spec.atten_db << " dB above " << dec_nyq
               << " Hz with " << n << " taps (achieved " << best_atten << " dB)";
            throw ConfigError(os.str());
        }
    }

    // Band pair: one window, cosine modulation for the Re path and sine
    // modulation for the Im path. The Re path gets a DC-null correction
    // (subtracting the window's DC leak) and both paths are normalized to
    // unit gain at the band center, which also balances the pair exactly
    // where the phase readout operates.
    {
        const int n = spec.band_taps;
        const int m = (n - 1) / 2;
        const double wc = 2.0 * kPi * spec.band.center() / dec_rate;
        auto w = kaiser_window(n, beta);

        const double w0 = window_spectrum(w, 0.0);
        const double wd = window_spectrum(w, wc);
        const double c0 = wd / w0;

        std::vector<double> hre(n), him(n);
        for (int k = 0; k < n; ++k) {
            hre[k] = w[k] * (std::cos(wc * (k - m)) - c0);
            him[k] = w[k] * std::sin(wc * (k - m));
        }
        double gre = 0.0, gim = 0.0;
        for (int k = 0; k < n; ++k) {
            gre += hre[k] * std::cos(wc * (k - m));
            gim += him[k] * std::sin(wc * (k - m));
        }
        for (int k = 0; k < n; ++k) {
            hre[k] /= gre;
            him[k] /= gim;
        }

        fs.bpf = quantize(hre);
        fs.ht = quantize(him);
        fs.group_delay_band = m;

        // Exact symmetry after quantization.
        for (int k = 0; k < m; ++k) {
            fs.bpf[n - 1 - k] = fs.bpf[k];
            fs.ht[n - 1 - k] = static_cast<q15_t>(-fs.ht[k]);
        }
        fs.ht[m] = 0;
        // Exact DC null: fold the rounding residue into the center tap.
        int32_t dcsum = 0;
        for (auto v : fs.bpf) dcsum += v;
        fs.bpf[m] = static_cast<q15_t>(fs.bpf[m] - dcsum);

        int32_t check = 0;
        for (auto v : fs.bpf) check += v;
        fs.achieved.dc_gain_re = static_cast<double>(check);

        double mre, pre, mim, pim;
        fir_response(fs.bpf, dec_rate, spec.band.center(), &mre, &pre);
        fir_response(fs.ht, dec_rate, spec.band.center(), &mim, &pim);
        fs.achieved.ratio_db_at_center = 20.0 * std::log10(mim / mre);
        double dphi = pre - pim; // Im lags Re by pi/2 for an analytic pair
        while (dphi > kPi) dphi -= 2.0 * kPi;
        while (dphi < -kPi) dphi += 2.0 * kPi;
        fs.achieved.quadrature_err_deg = (dphi - kPi / 2.0) * 180.0 / kPi;
    }

    return fs;
}

uint64_t FilterSet::content_hash() const {
    uint64_t h = fnv1a64(lpf.data(), lpf.size() * sizeof(q15_t));
    h = fnv1a64(bpf.data(), bpf.size() * sizeof(q15_t), h);
    h = fnv1a64(ht.data(), ht.size() * sizeof(q15_t), h);
    return h;
}

q15_t adc_code_to_q15(int32_t code, int adc_bits) {
    int shift = 15 - adc_bits;
    if (shift < 0) shift = 0;
    return static_cast<q15_t>(code << shift);
}

ChannelPipeline::ChannelPipeline(const FilterSet* fs)
    : fs_(fs), lpf_ring_(fs->lpf.size(), 0), band_ring_(fs->bpf.size(), 0) {}

void ChannelPipeline::reset() {
    std::fill(lpf_ring_.begin(), lpf_ring_.end(), 0);
    std::fill(band_ring_.begin(), band_ring_.end(), 0);
    lpf_pos_ = 0;
    band_pos_ = 0;
    phase_ = 0;
    dec_index_ = 0;
    sat_count_ = 0;
}

q15_t ChannelPipeline::band_dot(const std::vector<q15_t>& taps) {
    const int n = static_cast<int>(taps.size());
    acc40_t acc = 0;
    // newest sample sits at band_pos_; taps[k] multiplies x[n-k]
    int j = band_pos_;
    int k = 0;
    for (; j >= 0 && k < n; --j, ++k) acc += static_cast<int32_t>(taps[k]) * band_ring_[j];
    for (j = n - 1; k < n; --j, ++k) acc += static_cast<int32_t>(taps[k]) * band_ring_[j];
    return sat_q15(rshift_round_even(acc, 15), &sat_count_);
}

std::optional<ChannelPipeline::StageOutput> ChannelPipeline::process(q15_t x) {
    lpf_pos_ = lpf_pos_ + 1 == static_cast<int>(lpf_ring_.size()) ? 0 : lpf_pos_ + 1;
    lpf_ring_[lpf_pos_] = x;

    const bool emit = (phase_ == 0);
    phase_ = phase_ + 1 == fs_->spec.decim ? 0 : phase_ + 1;
    if (!emit) return std::nullopt;

    // Lowpass evaluated only on emitting ticks.
    acc40_t acc = 0;
    {
        const auto& taps = fs_->lpf;
        const int n = static_cast<int>(taps.size());
        int j = lpf_pos_;
        int k = 0;
        for (; j >= 0 && k < n; --j, ++k) acc += static_cast<int32_t>(taps[k]) * lpf_ring_[j];
        for (j = n - 1; k < n; --j, ++k) acc += static_cast<int32_t>(taps[k]) * lpf_ring_[j];
    }
    const q15_t lp = sat_q15(rshift_round_even(acc, 15), &sat_count_);

    band_pos_ = band_pos_ + 1 == static_cast<int>(band_ring_.size()) ? 0 : band_pos_ + 1;
    band_ring_[band_pos_] = lp;

    StageOutput out;
    out.lp = lp;
    out.analytic.t_index = dec_index_++;
    out.analytic.bp = band_dot(fs_->bpf);
    out.analytic.re = out.analytic.bp;
    out.analytic.im = band_dot(fs_->ht);
    return out;
}

MacBudget mac_budget(int n_channels, const FilterDesignSpec& spec) {
    MacBudget b;
    const double dec_rate = spec.input_rate_hz / spec.decim;
    b.lpf_macs_per_s = static_cast<double>(n_channels) * spec.lpf_taps * dec_rate;
    b.band_macs_per_s = static_cast<double>(n_channels) * 2.0 * spec.band_taps * dec_rate;
    b.total_macs_per_s = b.lpf_macs_per_s + b.band_macs_per_s;
    b.lpf_shift_rate_hz = spec.input_rate_hz;
    b.band_shift_rate_hz = dec_rate;
    return b;
}

} // namespace ncp
