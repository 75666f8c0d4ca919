#include "ncp/oracle_dsp.hpp"

#include <algorithm>
#include <cmath>

#include "ncp/qformat.hpp"

namespace ncp {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace

ButterBandpass design_butter_bandpass(double f_lo_hz, double f_hi_hz, double rate_hz) {
    if (!(f_lo_hz > 0.0 && f_lo_hz < f_hi_hz && f_hi_hz < rate_hz / 2.0))
        throw ConfigError("bandpass requires 0 < f_lo < f_hi < Nyquist");

    using cplx = std::complex<double>;
    const double fs2 = 2.0 * rate_hz;
    // Prewarp the band edges so the bilinear transform maps them exactly.
    const double w1 = fs2 * std::tan(kPi * f_lo_hz / rate_hz);
    const double w2 = fs2 * std::tan(kPi * f_hi_hz / rate_hz);
    const double w0sq = w1 * w2;
    const double bw = w2 - w1;

    // Second-order unit Butterworth prototype pole in the upper half plane;
    // its conjugate generates the mirror pair.
    const cplx proto(-std::sqrt(0.5), std::sqrt(0.5));

    // Bandpass transform: s_proto = (s^2 + w0^2)/(bw*s) -> quadratic in s.
    const cplx pb = proto * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
    const cplx s_a = (pb + disc) / 2.0;
    const cplx s_b = (pb - disc) / 2.0;

    ButterBandpass out;
    out.f_lo_hz = f_lo_hz;
    out.f_hi_hz = f_hi_hz;
    out.rate_hz = rate_hz;

    const cplx analog_poles[2] = {s_a, s_b};
    for (int i = 0; i < 2; ++i) {
        // Bilinear map; the conjugate pole lands on the conjugate z, so one
        // biquad per upper-half-plane pole.
        const cplx z = (fs2 + analog_poles[i]) / (fs2 - analog_poles[i]);
        Biquad q;
        q.a1 = -2.0 * z.real();
        q.a2 = std::norm(z);
        // Bandpass zeros: one at DC, one at Nyquist per section.
        q.b0 = 1.0;
        q.b1 = 0.0;
        q.b2 = -1.0;
        out.sections[i] = q;
    }

    // Normalize to unit gain at the (warped-back) center frequency, where the
    // analog prototype response is exactly 1; the -3 dB edges then calibrate
    // themselves.
    const double f_center = std::atan(std::sqrt(w0sq) / fs2) * rate_hz / kPi;
    const double g = std::sqrt(bandpass_mag_sq(out, f_center));
    const double per_section = std::sqrt(1.0 / g);
    for (auto& q : out.sections) {
        q.b0 *= per_section;
        q.b1 *= per_section;
        q.b2 *= per_section;
    }
    return out;
}

double bandpass_mag_sq(const ButterBandpass& bp, double f_hz) {
    using cplx = std::complex<double>;
    const cplx z = std::exp(cplx(0.0, -2.0 * kPi * f_hz / bp.rate_hz));
    cplx h(1.0, 0.0);
    for (const auto& q : bp.sections) {
        cplx num = q.b0 + q.b1 * z + q.b2 * z * z;
        cplx den = 1.0 + q.a1 * z + q.a2 * z * z;
        h *= num / den;
    }
    return std::norm(h);
}

std::vector<double> sosfilt(const ButterBandpass& bp, const std::vector<double>& x) {
    std::vector<double> y = x;
    for (const auto& q : bp.sections) {
        double s1 = 0.0, s2 = 0.0; // direct form II transposed state
        for (double& v : y) {
            const double in = v;
            const double out = q.b0 * in + s1;
            s1 = q.b1 * in - q.a1 * out + s2;
            s2 = q.b2 * in - q.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> filtfilt(const ButterBandpass& bp, const std::vector<double>& x) {
    const size_t n = x.size();
    const auto padlen = static_cast<size_t>(std::ceil(3.0 * bp.rate_hz / bp.f_lo_hz));
    if (n < 2 || n - 1 < padlen)
        throw DataError("trace too short for zero-phase filtering at this band");

    // Odd reflection about both endpoints suppresses edge transients.
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x[0] - x[padlen - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    auto y = sosfilt(bp, ext);
    std::reverse(y.begin(), y.end());
    y = sosfilt(bp, y);
    std::reverse(y.begin(), y.end());
    return {y.begin() + static_cast<ptrdiff_t>(padlen),
            y.begin() + static_cast<ptrdiff_t>(padlen + n)};
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw ConfigError("fft size must be a power of two");

    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& v : a) v /= static_cast<double>(n);
}

AnalyticTrace analytic_signal(const std::vector<double>& x) {
    const size_t n = x.size();
    if (n == 0) throw DataError("empty trace");
    const size_t nfft = next_pow2(n);

    std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
    for (size_t i = 0; i < n; ++i) buf[i] = {x[i], 0.0};
    fft_radix2(buf, false);

    // one-sided doubling: keep DC and Nyquist, double positives, zero negatives
    for (size_t k = 1; k < nfft / 2; ++k) buf[k] *= 2.0;
    for (size_t k = nfft / 2 + 1; k < nfft; ++k) buf[k] = {0.0, 0.0};
    fft_radix2(buf, true);

    AnalyticTrace out;
    out.re.resize(n);
    out.im.resize(n);
    out.phase.resize(n);
    out.envelope.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.re[i] = buf[i].real();
        out.im[i] = buf[i].imag();
        out.phase[i] = std::atan2(out.im[i], out.re[i]);
        out.envelope[i] = std::hypot(out.re[i], out.im[i]);
    }
    return out;
}

AnalyticTrace oracle_ground_truth(const std::vector<double>& trace, double f_lo_hz,
                                  double f_hi_hz, double rate_hz) {
    auto bp = design_butter_bandpass(f_lo_hz, f_hi_hz, rate_hz);
    const double min_len = 8.0 * rate_hz / f_lo_hz;
    if (static_cast<double>(trace.size()) < min_len)
        throw DataError("trace shorter than 8 cycles of the band's low edge");
    return analytic_signal(filtfilt(bp, trace));
}

double unwrapped_slope(const std::vector<double>& phase, double rate_hz) {
    const size_t n = phase.size();
    if (n < 2) throw DataError("need at least 2 phase samples");
    std::vector<double> u(n);
    u[0] = phase[0];
    double offset = 0.0;
    for (size_t i = 1; i < n; ++i) {
        double d = phase[i] - phase[i - 1];
        if (d > kPi) offset -= 2.0 * kPi;
        else if (d < -kPi) offset += 2.0 * kPi;
        u[i] = phase[i] + offset;
    }
    // least squares u = a + b t
    double st = 0, su = 0, stt = 0, stu = 0;
    for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        st += t;
        su += u[i];
        stt += t * t;
        stu += t * u[i];
    }
    const double nn = static_cast<double>(n);
    return (nn * stu - st * su) / (nn * stt - st * st);
}

std::vector<double> welch_psd(const std::vector<double>& x, double rate_hz, int nfft,
                              std::vector<double>* freqs_hz) {
    if (nfft < 8 || (nfft & (nfft - 1)) != 0) throw ConfigError("nfft must be a power of two >= 8");
    const size_t n = x.size();
    const size_t seg = static_cast<size_t>(nfft);
    if (n < seg) throw DataError("trace shorter than one spectrum segment");

    std::vector<double> win(seg);
    double u = 0.0;
    for (size_t i = 0; i < seg; ++i) {
        win[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(seg));
        u += win[i] * win[i];
    }

    std::vector<double> psd(seg / 2 + 1, 0.0);
    size_t count = 0;
    for (size_t start = 0; start + seg <= n; start += seg / 2) {
        std::vector<std::complex<double>> buf(seg);
        for (size_t i = 0; i < seg; ++i) buf[i] = {x[start + i] * win[i], 0.0};
        fft_radix2(buf, false);
        for (size_t k = 0; k <= seg / 2; ++k) {
            double p = std::norm(buf[k]) / (rate_hz * u);
            if (k != 0 && k != seg / 2) p *= 2.0; // one-sided
            psd[k] += p;
        }
        ++count;
    }
    for (auto& p : psd) p /= static_cast<double>(count);

    if (freqs_hz) {
        freqs_hz->resize(seg / 2 + 1);
        for (size_t k = 0; k <= seg / 2; ++k)
            (*freqs_hz)[k] = static_cast<double>(k) * rate_hz / static_cast<double>(seg);
    }
    return psd;
}

double loglog_slope_db_per_decade(const std::vector<double>& freqs_hz,
                                  const std::vector<double>& psd, double f_lo_hz,
                                  double f_hi_hz) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int64_t n = 0;
    for (size_t k = 0; k < freqs_hz.size() && k < psd.size(); ++k) {
        const double f = freqs_hz[k];
        if (f < f_lo_hz || f > f_hi_hz || psd[k] <= 0.0) continue;
        const double lx = std::log10(f);
        const double ly = 10.0 * std::log10(psd[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 3) throw DataError("not enough spectrum points in the fit band");
    const double nn = static_cast<double>(n);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

CircularStats circular_stats(const std::vector<double>& angles_rad) {
    CircularStats cs;
    cs.n = static_cast<int64_t>(angles_rad.size());
    if (cs.n == 0) return cs;
    double sc = 0.0, ss = 0.0;
    for (double a : angles_rad) {
        sc += std::cos(a);
        ss += std::sin(a);
        double deg = std::fmod(a * 180.0 / kPi, 360.0);
        if (deg < -180.0) deg += 360.0;
        if (deg >= 180.0) deg -= 360.0;
        auto bin = static_cast<int>(std::floor((deg + 180.0) / 10.0));
        if (bin < 0) bin = 0;
        if (bin > 35) bin = 35;
        ++cs.hist[static_cast<size_t>(bin)];
    }
    const double nn = static_cast<double>(cs.n);
    cs.r = std::hypot(sc, ss) / nn;
    cs.mean_deg = std::atan2(ss, sc) * 180.0 / kPi;
    return cs;
}

PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b,
                      double var_floor_a, double var_floor_b) {
    PearsonResult res;
    const size_t n = std::min(a.size(), b.size());
    if (n < 2) {
        res.degenerate = true;
        return res;
    }
    double ma = 0, mb = 0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0, sbb = 0, sab = 0;
    for (size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    const double va = saa / static_cast<double>(n);
    const double vb = sbb / static_cast<double>(n);
    if (va <= var_floor_a || vb <= var_floor_b) {
        res.degenerate = true;
        return res;
    }
    res.r = sab / std::sqrt(saa * sbb);
    return res;
}

} // namespace ncp
