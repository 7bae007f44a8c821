#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/common.hpp"

namespace scatmir {

enum class WaveletFamily { gabor, spline };

inline const char* to_string(WaveletFamily f) {
    return f == WaveletFamily::gabor ? "gabor" : "spline";
}

inline WaveletFamily wavelet_family_from_string(const std::string& s) {
    if (s == "gabor") return WaveletFamily::gabor;
    if (s == "spline") return WaveletFamily::spline;
    throw ParseError("unknown wavelet family: " + s);
}

/// Frequency-domain filter bank over an n_fft-point DFT grid.
///
/// Responses are stored as real nonnegative magnitudes. Analytic (wavelet)
/// banks are supported only on positive-frequency bins and list filters by
/// decreasing center frequency; mel banks are triangles listed low to high.
/// The lowpass response, when present, is even-symmetric so that convolution
/// with a real signal stays real.
struct FilterBank {
    std::vector<std::vector<double>> filters;
    std::vector<double> lowpass;             // empty for mel banks
    std::vector<double> center_freqs;        // Hz, one per filter
    double sample_rate = 0.0;
    std::size_t n_fft = 0;
    int q_factor = 0;                        // filters per octave (wavelet banks)
    int j_octaves = 0;
    WaveletFamily family = WaveletFamily::gabor;
    bool analytic = false;

    std::size_t size() const { return filters.size(); }
    double bin_hz() const { return sample_rate / static_cast<double>(n_fft); }
};

struct WaveletBankParams {
    int q = 8;
    int j_octaves = 8;
    WaveletFamily family = WaveletFamily::gabor;
    std::size_t n_fft = 0;
    double sample_rate = 0.0;
};

inline nlohmann::json to_json(const WaveletBankParams& p) {
    return {{"q", p.q},
            {"j_octaves", p.j_octaves},
            {"family", to_string(p.family)},
            {"n_fft", p.n_fft},
            {"sample_rate", p.sample_rate}};
}

inline WaveletBankParams wavelet_params_from_json(const nlohmann::json& j) {
    WaveletBankParams p;
    p.q = j.at("q").get<int>();
    p.j_octaves = j.at("j_octaves").get<int>();
    p.family = wavelet_family_from_string(j.at("family").get<std::string>());
    p.n_fft = j.at("n_fft").get<std::size_t>();
    p.sample_rate = j.at("sample_rate").get<double>();
    return p;
}

// ---------------------------------------------------------------------------
// Mel bank: triangles with centers equally spaced on the mel scale
// m = 2595*log10(1 + f/700); adjacent triangles cross at half height because
// the triangle is linear in mel coordinates.
// ---------------------------------------------------------------------------

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline FilterBank build_mel_bank(std::size_t n_filters, double sample_rate,
                                 std::size_t n_fft, double f_min, double f_max) {
    if (n_filters < 1) throw InvalidInput("mel bank: need at least one filter");
    if (!(f_min >= 0.0) || !(f_min < f_max) || !(f_max <= sample_rate / 2.0))
        throw InvalidInput("mel bank: need 0 <= f_min < f_max <= nyquist");
    if (n_fft < 2) throw InvalidInput("mel bank: n_fft too small");

    const double mel_lo = hz_to_mel(f_min);
    const double mel_hi = hz_to_mel(f_max);
    std::vector<double> mel_pts(n_filters + 2);
    for (std::size_t i = 0; i < mel_pts.size(); ++i)
        mel_pts[i] = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                  static_cast<double>(n_filters + 1);

    FilterBank bank;
    bank.sample_rate = sample_rate;
    bank.n_fft = n_fft;
    bank.analytic = false;
    bank.family = WaveletFamily::gabor;

    const double bin_hz = sample_rate / static_cast<double>(n_fft);
    for (std::size_t m = 0; m < n_filters; ++m) {
        const double lo = mel_pts[m], mid = mel_pts[m + 1], hi = mel_pts[m + 2];
        std::vector<double> resp(n_fft, 0.0);
        double sum = 0.0;
        for (std::size_t k = 0; k <= n_fft / 2; ++k) {
            const double f = static_cast<double>(k) * bin_hz;
            if (f < f_min || f > f_max) continue;
            const double mel = hz_to_mel(f);
            double v = 0.0;
            if (mel >= lo && mel <= mid && mid > lo) v = (mel - lo) / (mid - lo);
            else if (mel > mid && mel <= hi && hi > mid) v = (hi - mel) / (hi - mid);
            resp[k] = v;
            sum += v;
        }
        if (sum <= 0.0)
            throw InvalidInput("mel bank: filter " + std::to_string(m) +
                               " has no support; n_filters too large for n_fft");
        bank.filters.push_back(std::move(resp));
        bank.center_freqs.push_back(mel_to_hz(mid));
    }
    return bank;
}

// ---------------------------------------------------------------------------
// Analytic wavelet banks.
//
// Band-pass responses are geometric dilations of a unit-peak prototype
// (Gaussian for gabor, the analytic Battle-Lemarie cubic spline magnitude for
// spline), q per octave, spanning j_octaves octaves below Nyquist. The
// lowpass is built to complement the band-pass sum-of-squares up to the
// lowest center, after which it decays like the narrowest wavelet; the whole
// bank is then rescaled so the Littlewood-Paley maximum is exactly one.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kGaborBandwidthDivisor = 2.0;

// S_8(u) = sum_k (u + 2*pi*k)^-8, the periodized sum in the Battle-Lemarie
// closed form. 2*pi-periodic, so the argument is reduced first and the
// truncated summation converges fast. The singularity at u == 0 (mod 2*pi)
// is kept finite; downstream ratios then approximate the analytic limits.
inline double spline_s8(double u) {
    double r = std::fmod(u, kTwoPi);
    if (r > kPi) r -= kTwoPi;
    if (r < -kPi) r += kTwoPi;
    if (std::abs(r) < 1e-7) r = r < 0.0 ? -1e-7 : 1e-7;
    double acc = 0.0;
    for (int k = -24; k <= 24; ++k) {
        const double d = r + kTwoPi * static_cast<double>(k);
        const double d2 = d * d;
        const double d4 = d2 * d2;
        acc += 1.0 / (d4 * d4);
    }
    return acc;
}

/// |psi_hat| of the cubic Battle-Lemarie wavelet.
inline double spline_wavelet_mag(double w) {
    if (w <= 1e-9) return 0.0;
    const double w4 = w * w * w * w;
    const double num = spline_s8(w / 2.0 + kPi);
    const double den = spline_s8(w) * spline_s8(w / 2.0);
    return std::sqrt(num / den) / w4;
}

struct SplineMother {
    double peak_w = 0.0;
    double peak_val = 0.0;
};

inline const SplineMother& spline_mother() {
    static const SplineMother m = [] {
        SplineMother r;
        for (double w = 0.05; w < 4.0 * kPi; w += 1e-3) {
            const double v = spline_wavelet_mag(w);
            if (v > r.peak_val) {
                r.peak_val = v;
                r.peak_w = w;
            }
        }
        return r;
    }();
    return m;
}

}  // namespace detail

inline FilterBank build_wavelet_bank(int q, int j_octaves, double sample_rate,
                                     std::size_t n_fft, WaveletFamily family) {
    if (q < 1 || j_octaves < 1)
        throw InvalidInput("wavelet bank: q and j_octaves must be >= 1");
    if (!is_pow2(n_fft)) throw InvalidInput("wavelet bank: n_fft must be a power of two");
    if (!(sample_rate > 0.0)) throw InvalidInput("wavelet bank: bad sample rate");

    const double bin_hz = sample_rate / static_cast<double>(n_fft);
    const int n_filters = q * j_octaves;
    const double top = (sample_rate / 2.0) * std::pow(2.0, -1.0 / static_cast<double>(q));

    std::vector<double> centers(static_cast<std::size_t>(n_filters));
    for (int k = 0; k < n_filters; ++k)
        centers[static_cast<std::size_t>(k)] =
            top * std::pow(2.0, -static_cast<double>(k) / static_cast<double>(q));
    if (centers.back() < bin_hz)
        throw InvalidInput("wavelet bank: lowest center below one DFT bin; "
                           "reduce j_octaves or raise n_fft");
    const double narrowest =
        centers.back() * (std::pow(2.0, 1.0 / static_cast<double>(q)) - 1.0) /
        detail::kGaborBandwidthDivisor;
    if (narrowest < bin_hz)
        throw InvalidInput("wavelet bank: narrowest filter under one DFT bin wide; "
                           "reduce j_octaves or raise n_fft");

    FilterBank bank;
    bank.sample_rate = sample_rate;
    bank.n_fft = n_fft;
    bank.q_factor = q;
    bank.j_octaves = j_octaves;
    bank.family = family;
    bank.analytic = true;
    bank.center_freqs = centers;

    const double rel_bw = std::pow(2.0, 1.0 / static_cast<double>(q)) - 1.0;
    for (int k = 0; k < n_filters; ++k) {
        const double c = centers[static_cast<std::size_t>(k)];
        std::vector<double> resp(n_fft, 0.0);
        if (family == WaveletFamily::gabor) {
            const double sigma = c * rel_bw / detail::kGaborBandwidthDivisor;
            for (std::size_t b = 1; b <= n_fft / 2; ++b) {
                const double f = static_cast<double>(b) * bin_hz;
                const double d = (f - c) / sigma;
                resp[b] = std::exp(-0.5 * d * d);
            }
        } else {
            const auto& mother = detail::spline_mother();
            for (std::size_t b = 1; b <= n_fft / 2; ++b) {
                const double f = static_cast<double>(b) * bin_hz;
                resp[b] = detail::spline_wavelet_mag(mother.peak_w * f / c) / mother.peak_val;
            }
        }
        bank.filters.push_back(std::move(resp));
    }

    // complementary lowpass: flat Littlewood-Paley sum below the lowest
    // center, narrowest-wavelet rolloff above it
    std::vector<double> psum(n_fft / 2 + 1, 0.0);
    for (const auto& f : bank.filters)
        for (std::size_t b = 0; b <= n_fft / 2; ++b) psum[b] += f[b] * f[b];
    const double plateau = *std::max_element(psum.begin(), psum.end());

    const double c_min = centers.back();
    const double sigma_tail = c_min * rel_bw / detail::kGaborBandwidthDivisor;
    const auto cmin_bin = static_cast<std::size_t>(c_min / bin_hz);
    const double edge = std::sqrt(std::max(0.0, plateau - psum[std::min(cmin_bin, n_fft / 2)]));

    std::vector<double> low(n_fft, 0.0);
    for (std::size_t b = 0; b <= n_fft / 2; ++b) {
        const double f = static_cast<double>(b) * bin_hz;
        if (b <= cmin_bin) {
            low[b] = std::sqrt(std::max(0.0, plateau - psum[b]));
        } else {
            const double d = (f - c_min) / sigma_tail;
            low[b] = edge * std::exp(-0.5 * d * d);
        }
    }
    for (std::size_t b = 1; b < n_fft / 2; ++b) low[n_fft - b] = low[b];  // even symmetry
    bank.lowpass = std::move(low);

    // rescale the whole bank so max_w (|phi|^2 + sum |psi_j|^2) == 1
    double max_sum = 0.0;
    for (std::size_t b = 0; b <= n_fft / 2; ++b) {
        double a = bank.lowpass[b] * bank.lowpass[b];
        for (const auto& f : bank.filters) a += f[b] * f[b];
        max_sum = std::max(max_sum, a);
    }
    const double scale = 1.0 / std::sqrt(max_sum);
    for (auto& f : bank.filters)
        for (auto& v : f) v *= scale;
    for (auto& v : bank.lowpass) v *= scale;

    return bank;
}

/// Extrema over the covered band [0, highest center] of
/// |phi_J(w)|^2 + sum_j |psi_j(w)|^2. Frequencies above the highest center
/// carry no filter support by construction and are excluded.
inline std::pair<double, double> littlewood_paley_bounds(const FilterBank& bank) {
    if (bank.filters.empty()) throw InvalidInput("littlewood-paley: empty bank");
    const double bin_hz = bank.bin_hz();
    const double c_max = *std::max_element(bank.center_freqs.begin(), bank.center_freqs.end());
    const auto top_bin = std::min(bank.n_fft / 2,
                                  static_cast<std::size_t>(c_max / bin_hz + 0.5));
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t b = 0; b <= top_bin; ++b) {
        double a = 0.0;
        if (!bank.lowpass.empty()) a += bank.lowpass[b] * bank.lowpass[b];
        for (const auto& f : bank.filters) a += f[b] * f[b];
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    return {lo, hi};
}

/// Shared, immutable banks keyed by construction parameters. Scattering
/// rebuilds banks per padded signal length; identical requests hit the cache.
inline std::shared_ptr<const FilterBank> cached_wavelet_bank(
    int q, int j_octaves, double sample_rate, std::size_t n_fft, WaveletFamily family) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const FilterBank>> cache;
    const std::string key = std::to_string(q) + "/" + std::to_string(j_octaves) + "/" +
                            std::to_string(sample_rate) + "/" + std::to_string(n_fft) +
                            "/" + to_string(family);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto bank = std::make_shared<const FilterBank>(
        build_wavelet_bank(q, j_octaves, sample_rate, n_fft, family));
    cache.emplace(key, bank);
    return bank;
}

}  // namespace scatmir
