#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "scatmir/common.hpp"
#include "scatmir/fft.hpp"
#include "scatmir/matrix.hpp"
#include "scatmir/signal.hpp"

namespace scatmir {

enum class WindowKind { hann, hamming, rectangular };

inline const char* to_string(WindowKind k) {
    switch (k) {
        case WindowKind::hann: return "hann";
        case WindowKind::hamming: return "hamming";
        case WindowKind::rectangular: return "rectangular";
    }
    return "?";
}

inline WindowKind window_kind_from_string(const std::string& s) {
    if (s == "hann") return WindowKind::hann;
    if (s == "hamming") return WindowKind::hamming;
    if (s == "rectangular") return WindowKind::rectangular;
    throw ParseError("unknown window kind: " + s);
}

struct FrameConfig {
    std::size_t window_size = 1024;
    std::size_t hop = 256;
    WindowKind window = WindowKind::hann;

    void validate() const {
        if (window_size == 0 || hop == 0)
            throw InvalidInput("frame config: window and hop must be positive");
        if (hop > window_size)
            throw InvalidInput("frame config: hop exceeds window size");
    }
};

inline std::vector<double> make_window(WindowKind kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n == 1 || kind == WindowKind::rectangular) return w;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::cos(kTwoPi * static_cast<double>(i) / denom);
        if (kind == WindowKind::hann) w[i] = 0.5 - 0.5 * c;
        else w[i] = 0.54 - 0.46 * c;
    }
    return w;
}

/// Number of STFT rows for a signal of the given length. The tail is
/// zero-padded so the final partial window is still analyzed; when hop
/// divides (len - window) exactly this equals floor((len-window)/hop)+1.
inline std::size_t stft_frame_count(std::size_t len, const FrameConfig& cfg) {
    if (len < cfg.window_size) return 0;
    const std::size_t span = len - cfg.window_size;
    return (span + cfg.hop - 1) / cfg.hop + 1;
}

/// Short-time Fourier transform. Row n holds the windowed DFT of the frame
/// starting at n*hop; the DFT length is the window size padded to a power of
/// two, and all bins (including the conjugate-symmetric half) are kept.
inline ComplexMatrix stft(const Signal& signal, const FrameConfig& cfg) {
    signal.validate();
    cfg.validate();
    if (signal.size() < cfg.window_size)
        throw InvalidInput("stft: signal shorter than one window");

    const std::size_t n_fft = next_pow2(cfg.window_size);
    const std::size_t n_rows = stft_frame_count(signal.size(), cfg);
    const auto win = make_window(cfg.window, cfg.window_size);

    // rows are stamped at the window center
    ComplexMatrix out(n_rows, n_fft,
                      static_cast<double>(cfg.hop) / signal.sample_rate,
                      signal.sample_rate / static_cast<double>(n_fft),
                      static_cast<double>(cfg.window_size) / (2.0 * signal.sample_rate));
    std::vector<cplx> buf(n_fft);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t start = r * cfg.hop;
        std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
        for (std::size_t i = 0; i < cfg.window_size; ++i) {
            const std::size_t idx = start + i;
            if (idx >= signal.size()) break;  // zero-padded tail
            buf[i] = cplx(signal.samples[idx] * win[i], 0.0);
        }
        fft_inplace(buf, false);
        std::copy(buf.begin(), buf.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * n_fft));
    }
    return out;
}

/// Squared-magnitude STFT.
inline FeatureMatrix spectrogram(const Signal& signal, const FrameConfig& cfg) {
    const ComplexMatrix s = stft(signal, cfg);
    FeatureMatrix out(FeatureKind::spectrogram, s.n_rows, s.n_cols, s.frame_hop_seconds,
                      s.time_offset_seconds);
    for (std::size_t i = 0; i < s.data.size(); ++i) out.data[i] = std::norm(s.data[i]);
    return out;
}

}  // namespace scatmir
