#include <doctest.h>

#include <cmath>
#include <vector>

#include "scatmir/features.hpp"

using namespace scatmir;

namespace {

FeatureMatrix random_spectrogram(std::size_t rows, std::size_t n_fft, RandomStream& rng) {
    FeatureMatrix m(FeatureKind::spectrogram, rows, n_fft, 0.01);
    for (auto& v : m.data) v = rng.uniform(0.0, 4.0);
    return m;
}

}  // namespace

TEST_CASE("mfsc: zero spectrogram gives zero output") {
    const auto mel = build_mel_bank(8, 8000.0, 512, 0.0, 4000.0);
    FeatureMatrix spec(FeatureKind::spectrogram, 3, 512, 0.01);
    const auto out = mfsc(spec, mel);
    CHECK(out.kind == FeatureKind::mfsc);
    CHECK(out.n_cols == 8);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("mfsc: single-bin energy excites only covering filters") {
    const auto mel = build_mel_bank(8, 8000.0, 512, 0.0, 4000.0);
    FeatureMatrix spec(FeatureKind::spectrogram, 1, 512, 0.01);
    const std::size_t bin = 100;
    spec.at(0, bin) = 3.0;
    const auto out = mfsc(spec, mel);
    for (std::size_t j = 0; j < 8; ++j) {
        const double w = mel.filters[j][bin];
        CHECK(out.at(0, j) == doctest::Approx(3.0 * w * w / kTwoPi).epsilon(1e-12));
    }
}

TEST_CASE("mfsc: random row matches the direct weighted-sum oracle") {
    RandomStream rng(23, "mfsc");
    const auto mel = build_mel_bank(12, 8000.0, 512, 0.0, 4000.0);
    const auto spec = random_spectrogram(4, 512, rng);
    const auto out = mfsc(spec, mel);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t j = 0; j < 12; ++j) {
            double want = 0.0;
            for (std::size_t k = 0; k < 512; ++k)
                want += spec.at(r, k) * mel.filters[j][k] * mel.filters[j][k];
            want /= kTwoPi;
            CHECK(out.at(r, j) == doctest::Approx(want).epsilon(1e-9));
        }
}

TEST_CASE("mfsc: dimension mismatch rejected") {
    const auto mel = build_mel_bank(8, 8000.0, 1024, 0.0, 4000.0);
    FeatureMatrix spec(FeatureKind::spectrogram, 2, 512, 0.01);
    CHECK_THROWS_AS(mfsc(spec, mel), InvalidInput);
    FeatureMatrix wrong_kind(FeatureKind::mfcc, 2, 1024, 0.01);
    CHECK_THROWS_AS(mfsc(wrong_kind, mel), InvalidInput);
}

TEST_CASE("mfcc: constant MFSC row concentrates in coefficient 0") {
    FeatureMatrix m(FeatureKind::mfsc, 2, 10, 0.01);
    for (auto& v : m.data) v = 2.0;
    const auto out = mfcc(m, 10);
    for (std::size_t r = 0; r < 2; ++r) {
        CHECK(std::abs(out.at(r, 0)) > 0.0);
        for (std::size_t k = 1; k < 10; ++k) CHECK(std::abs(out.at(r, k)) < 1e-12);
    }
}

TEST_CASE("mfcc: positive scaling shifts only coefficient 0") {
    RandomStream rng(29, "mfcc-scale");
    FeatureMatrix m(FeatureKind::mfsc, 1, 16, 0.01);
    for (auto& v : m.data) v = rng.uniform(0.5, 2.0);
    FeatureMatrix scaled = m;
    for (auto& v : scaled.data) v *= 7.0;
    const auto a = mfcc(m, 16);
    const auto b = mfcc(scaled, 16);
    CHECK(b.at(0, 0) - a.at(0, 0) ==
          doctest::Approx(std::log(7.0) * std::sqrt(16.0)).epsilon(1e-9));
    for (std::size_t k = 1; k < 16; ++k)
        CHECK(b.at(0, k) == doctest::Approx(a.at(0, k)).epsilon(1e-9));
}

TEST_CASE("mfcc: matches the log->DCT->truncate oracle") {
    RandomStream rng(31, "mfcc-oracle");
    FeatureMatrix m(FeatureKind::mfsc, 3, 20, 0.01);
    for (auto& v : m.data) v = rng.uniform(0.0, 3.0);
    const auto out = mfcc(m, 7);
    REQUIRE(out.n_cols == 7);
    for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> logs(20);
        for (std::size_t j = 0; j < 20; ++j)
            logs[j] = std::log(std::max(m.at(r, j), 1e-10));
        const auto want = dct2(logs);
        for (std::size_t k = 0; k < 7; ++k)
            CHECK(out.at(r, k) == doctest::Approx(want[k]).epsilon(1e-12));
    }
}

TEST_CASE("mfcc: invalid n_keep rejected") {
    FeatureMatrix m(FeatureKind::mfsc, 2, 10, 0.01);
    CHECK_THROWS_AS(mfcc(m, 0), InvalidInput);
    CHECK_THROWS_AS(mfcc(m, 11), InvalidInput);
}

TEST_CASE("delta_mfcc: time-constant input has zero deltas") {
    FeatureMatrix m(FeatureKind::mfcc, 4, 5, 0.01);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 5; ++c) m.at(r, c) = static_cast<double>(c);
    const auto out = delta_mfcc(m);
    REQUIRE(out.n_cols == 10);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 5; ++c) {
            CHECK(out.at(r, c) == m.at(r, c));
            CHECK(out.at(r, 5 + c) == 0.0);
        }
}

TEST_CASE("delta_mfcc: two-row fixture") {
    FeatureMatrix m(FeatureKind::mfcc, 2, 2, 0.01);
    m.at(0, 0) = 1.0;
    m.at(0, 1) = 2.0;
    m.at(1, 0) = 4.0;
    m.at(1, 1) = 6.0;
    const auto out = delta_mfcc(m);
    CHECK(out.at(0, 2) == 0.0);
    CHECK(out.at(0, 3) == 0.0);
    CHECK(out.at(1, 2) == doctest::Approx(3.0));
    CHECK(out.at(1, 3) == doctest::Approx(4.0));
}

TEST_CASE("delta_mfcc: random matrix matches first-difference oracle") {
    RandomStream rng(37, "delta");
    FeatureMatrix m(FeatureKind::mfcc, 6, 4, 0.01);
    for (auto& v : m.data) v = rng.normal();
    const auto out = delta_mfcc(m);
    for (std::size_t r = 1; r < 6; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(out.at(r, 4 + c) == doctest::Approx(m.at(r, c) - m.at(r - 1, c)));
}

TEST_CASE("delta_mfcc: single row rejected") {
    FeatureMatrix m(FeatureKind::mfcc, 1, 4, 0.01);
    CHECK_THROWS_AS(delta_mfcc(m), InvalidInput);
}

TEST_CASE("cwt: pure sine at a center frequency dominates its own scale") {
    const double fs = 8000.0;
    const auto bank = build_wavelet_bank(2, 4, fs, 1 << 12, WaveletFamily::gabor);
    const std::size_t target = 3;
    const double f0 = bank.center_freqs[target];
    std::vector<double> x(1 << 12);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(kTwoPi * f0 * static_cast<double>(i) / fs);
    const auto out = cwt(Signal(x, fs), bank, 64);
    for (std::size_t r = 2; r + 2 < out.n_rows; ++r) {
        for (std::size_t j = 0; j < bank.size(); ++j)
            if (j != target) CHECK(out.at(r, target) > out.at(r, j));
    }
}

TEST_CASE("cwt: zero signal gives zero scalogram") {
    const auto bank = build_wavelet_bank(1, 3, 8000.0, 1 << 10, WaveletFamily::gabor);
    const auto out = cwt(Signal(std::vector<double>(1 << 10, 0.0), 8000.0), bank, 16);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("cwt: matches a direct circular-convolution oracle") {
    RandomStream rng(41, "cwt-oracle");
    const double fs = 4000.0;
    const std::size_t n = 256;
    const auto bank = build_wavelet_bank(1, 3, fs, n, WaveletFamily::gabor);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto got = cwt(Signal(x, fs), bank, 1);

    for (std::size_t j = 0; j < bank.size(); ++j) {
        // time-domain kernel from the filter's frequency response
        std::vector<cplx> kernel(n);
        for (std::size_t k = 0; k < n; ++k) kernel[k] = cplx(bank.filters[j][k], 0.0);
        fft_inplace(kernel, true);
        for (std::size_t t = 0; t < n; ++t) {
            cplx acc(0.0, 0.0);
            for (std::size_t tau = 0; tau < n; ++tau)
                acc += x[tau] * kernel[(t + n - tau) % n];
            CHECK(got.at(t, j) == doctest::Approx(std::abs(acc)).epsilon(1e-6));
        }
    }
}

TEST_CASE("cwt: rate mismatch and short banks rejected") {
    const auto bank = build_wavelet_bank(1, 3, 8000.0, 1 << 10, WaveletFamily::gabor);
    CHECK_THROWS_AS(cwt(Signal(std::vector<double>(64, 0.1), 4000.0), bank, 1), InvalidInput);
    CHECK_THROWS_AS(cwt(Signal(std::vector<double>(1 << 11, 0.1), 8000.0), bank, 1),
                    InvalidInput);
}

TEST_CASE("cwt: modulus homogeneity under nonnegative scaling") {
    RandomStream rng(43, "cwt-homog");
    const double fs = 4000.0;
    const std::size_t n = 512;
    const auto bank = build_wavelet_bank(2, 3, fs, n, WaveletFamily::gabor);
    std::vector<double> x(n), ax(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform(-1.0, 1.0);
        ax[i] = 2.5 * x[i];
    }
    const auto a = cwt(Signal(x, fs), bank, 8);
    const auto b = cwt(Signal(ax, fs), bank, 8);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        CHECK(b.data[i] == doctest::Approx(2.5 * a.data[i]).epsilon(1e-9));
}

TEST_CASE("representations: time shift by a hop multiple shifts rows") {
    RandomStream rng(47, "shift");
    const double fs = 8000.0;
    const std::size_t n = 4096;
    const std::size_t hop = 256;
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 1024; i < 2048; ++i) x[i] = rng.uniform(-1.0, 1.0);
    std::vector<double> shifted(n, 0.0);
    const std::size_t shift = 2 * hop;
    for (std::size_t i = 0; i + shift < n; ++i) shifted[i + shift] = x[i];

    FrameConfig cfg{512, hop, WindowKind::hann};
    const auto a = spectrogram(Signal(x, fs), cfg);
    const auto b = spectrogram(Signal(shifted, fs), cfg);
    for (std::size_t r = 2; r + 4 < a.n_rows; ++r)
        for (std::size_t c = 0; c < a.n_cols; ++c)
            CHECK(b.at(r + 2, c) == doctest::Approx(a.at(r, c)).epsilon(1e-9));
}

TEST_CASE("mfsc and cwt shift rows like the spectrogram does") {
    RandomStream rng(211, "shift2");
    const double fs = 8000.0;
    const std::size_t n = 4096;
    const std::size_t hop = 256;
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 1024; i < 2048; ++i) x[i] = rng.uniform(-1.0, 1.0);
    std::vector<double> shifted(n, 0.0);
    for (std::size_t i = 0; i + hop < n; ++i) shifted[i + hop] = x[i];

    FrameConfig cfg{512, hop, WindowKind::hann};
    const auto mel = build_mel_bank(12, fs, 512, 0.0, 4000.0);
    const auto a = mfsc(spectrogram(Signal(x, fs), cfg), mel);
    const auto b = mfsc(spectrogram(Signal(shifted, fs), cfg), mel);
    for (std::size_t r = 2; r + 3 < a.n_rows; ++r)
        for (std::size_t c = 0; c < a.n_cols; ++c)
            CHECK(b.at(r + 1, c) == doctest::Approx(a.at(r, c)).epsilon(1e-9));

    const auto bank = build_wavelet_bank(2, 4, fs, n, WaveletFamily::gabor);
    const auto ca = cwt(Signal(x, fs), bank, hop);
    const auto cb = cwt(Signal(shifted, fs), bank, hop);
    for (std::size_t r = 2; r + 3 < ca.n_rows; ++r)
        for (std::size_t c = 0; c < ca.n_cols; ++c)
            CHECK(cb.at(r + 1, c) == doctest::Approx(ca.at(r, c)).epsilon(1e-6));
}
