#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "scatmir/common.hpp"

namespace scatmir {

using cplx = std::complex<double>;

/// DFT of a real frame. For real input of length N, bins k and N-k are
/// complex conjugates. bin_hz is 0 when the caller gave no sample rate.
struct ComplexSpectrum {
    std::vector<cplx> bins;
    double bin_hz = 0.0;

    std::size_t size() const { return bins.size(); }
};

namespace detail {

// Twiddle tables are cached per transform size; banks and scattering reuse
// the same few sizes thousands of times.
inline std::shared_ptr<const std::vector<cplx>> twiddles(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::shared_ptr<const std::vector<cplx>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto table = std::make_shared<std::vector<cplx>>(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double a = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        (*table)[k] = cplx(std::cos(a), std::sin(a));
    }
    cache.emplace(n, table);
    return table;
}

}  // namespace detail

/// In-place iterative radix-2 transform. Length must be a power of two.
/// Forward is unnormalized; inverse applies the 1/N factor.
inline void fft_inplace(std::vector<cplx>& a, bool inverse = false) {
    const std::size_t n = a.size();
    if (n == 0) throw InvalidInput("fft: empty input");
    if (!is_pow2(n)) throw InvalidInput("fft: length must be a power of two");
    if (n == 1) return;

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    const auto tw = detail::twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx w = (*tw)[k * step];
                if (inverse) w = std::conj(w);
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= scale;
    }
}

/// DFT of a real frame, zero-padded to the next power of two. The padded
/// length is visible as bins.size().
inline ComplexSpectrum fft(const std::vector<double>& frame, double sample_rate = 0.0) {
    if (frame.empty()) throw InvalidInput("fft: empty frame");
    const std::size_t n = next_pow2(frame.size());
    ComplexSpectrum out;
    out.bins.assign(n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < frame.size(); ++i) out.bins[i] = cplx(frame[i], 0.0);
    fft_inplace(out.bins, false);
    out.bin_hz = sample_rate > 0.0 ? sample_rate / static_cast<double>(n) : 0.0;
    return out;
}

/// Inverse of fft() for conjugate-symmetric spectra; returns the real part.
inline std::vector<double> ifft_real(const ComplexSpectrum& spectrum) {
    if (spectrum.bins.empty()) throw InvalidInput("ifft: empty spectrum");
    std::vector<cplx> work = spectrum.bins;
    fft_inplace(work, true);
    std::vector<double> out(work.size());
    for (std::size_t i = 0; i < work.size(); ++i) out[i] = work[i].real();
    return out;
}

// ---------------------------------------------------------------------------
// Orthonormal type-II DCT and its inverse. Direct O(N^2) evaluation; every
// call site in this codebase works on short vectors (mel bands, scattering
// path indices), so no fast path is needed.
// ---------------------------------------------------------------------------

inline std::vector<double> dct2(const std::vector<double>& x) {
    if (x.empty()) throw InvalidInput("dct2: empty vector");
    const std::size_t n = x.size();
    std::vector<double> out(n, 0.0);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
    const double norm = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(kPi * (2.0 * static_cast<double>(i) + 1.0) *
                                   static_cast<double>(k) / (2.0 * static_cast<double>(n)));
        out[k] = acc * (k == 0 ? norm0 : norm);
    }
    return out;
}

inline std::vector<double> idct2(const std::vector<double>& y) {
    if (y.empty()) throw InvalidInput("idct2: empty vector");
    const std::size_t n = y.size();
    std::vector<double> out(n, 0.0);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
    const double norm = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double basis = std::cos(kPi * (2.0 * static_cast<double>(i) + 1.0) *
                                          static_cast<double>(k) / (2.0 * static_cast<double>(n)));
            acc += y[k] * basis * (k == 0 ? norm0 : norm);
        }
        out[i] = acc;
    }
    return out;
}

}  // namespace scatmir
