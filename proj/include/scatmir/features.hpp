#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "scatmir/common.hpp"
#include "scatmir/fft.hpp"
#include "scatmir/filterbank.hpp"
#include "scatmir/matrix.hpp"
#include "scatmir/signal.hpp"
#include "scatmir/stft.hpp"

namespace scatmir {

/// Mel-frequency spectral coefficients: the spectrogram averaged against the
/// squared mel responses, row t entry j = (1/2pi) * sum_w S(t,w) |psi_j(w)|^2.
inline FeatureMatrix mfsc(const FeatureMatrix& spec, const FilterBank& mel) {
    if (spec.kind != FeatureKind::spectrogram)
        throw InvalidInput("mfsc: input must be a spectrogram");
    if (mel.analytic) throw InvalidInput("mfsc: need a mel bank, got a wavelet bank");
    if (mel.n_fft != spec.n_cols)
        throw InvalidInput("mfsc: mel bank n_fft does not match spectrogram width");

    FeatureMatrix out(FeatureKind::mfsc, spec.n_rows, mel.size(), spec.frame_hop_seconds,
                      spec.time_offset_seconds);
    for (std::size_t r = 0; r < spec.n_rows; ++r) {
        const auto row = spec.row(r);
        for (std::size_t j = 0; j < mel.size(); ++j) {
            const auto& resp = mel.filters[j];
            double acc = 0.0;
            for (std::size_t k = 0; k < resp.size(); ++k)
                if (resp[k] != 0.0) acc += row[k] * resp[k] * resp[k];
            out.at(r, j) = acc / kTwoPi;
        }
    }
    return out;
}

/// Row-wise floored log then orthonormal DCT-II, truncated to n_keep.
inline FeatureMatrix mfcc(const FeatureMatrix& mel_spec, std::size_t n_keep) {
    if (mel_spec.kind != FeatureKind::mfsc)
        throw InvalidInput("mfcc: input must be MFSC");
    if (n_keep == 0) throw InvalidInput("mfcc: n_keep must be positive");
    if (n_keep > mel_spec.n_cols)
        throw InvalidInput("mfcc: n_keep exceeds mel filter count");

    FeatureMatrix out(FeatureKind::mfcc, mel_spec.n_rows, n_keep,
                      mel_spec.frame_hop_seconds, mel_spec.time_offset_seconds);
    std::vector<double> work(mel_spec.n_cols);
    for (std::size_t r = 0; r < mel_spec.n_rows; ++r) {
        const auto row = mel_spec.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) work[j] = floored_log(row[j]);
        const auto coeffs = dct2(work);
        std::copy(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(n_keep),
                  out.row(r).begin());
    }
    return out;
}

/// Static+delta concatenation: row t = [mfcc(t), mfcc(t) - mfcc(t-1)].
/// The first row's delta half is zero.
inline FeatureMatrix delta_mfcc(const FeatureMatrix& coeffs) {
    if (coeffs.kind != FeatureKind::mfcc)
        throw InvalidInput("delta_mfcc: input must be MFCC");
    if (coeffs.n_rows < 2)
        throw InvalidInput("delta_mfcc: need at least two rows");

    FeatureMatrix out(FeatureKind::delta_mfcc, coeffs.n_rows, 2 * coeffs.n_cols,
                      coeffs.frame_hop_seconds, coeffs.time_offset_seconds);
    for (std::size_t r = 0; r < coeffs.n_rows; ++r) {
        for (std::size_t c = 0; c < coeffs.n_cols; ++c) {
            out.at(r, c) = coeffs.at(r, c);
            out.at(r, coeffs.n_cols + c) =
                r == 0 ? 0.0 : coeffs.at(r, c) - coeffs.at(r - 1, c);
        }
    }
    return out;
}

/// Scalogram |x * psi_j|(t) by frequency-domain multiplication against an
/// analytic bank, sampled every hop_samples. The bank must be built for the
/// signal's rate with n_fft at least the signal length (circular filtering
/// over the zero-padded extent).
inline FeatureMatrix cwt(const Signal& signal, const FilterBank& bank,
                         std::size_t hop_samples = 1) {
    signal.validate();
    if (!bank.analytic) throw InvalidInput("cwt: need an analytic wavelet bank");
    if (bank.sample_rate != signal.sample_rate)
        throw InvalidInput("cwt: bank sample rate does not match signal");
    if (bank.n_fft < signal.size())
        throw InvalidInput("cwt: bank n_fft smaller than signal length");
    if (hop_samples == 0) throw InvalidInput("cwt: hop must be positive");

    std::vector<cplx> spectrum(bank.n_fft, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < signal.size(); ++i)
        spectrum[i] = cplx(signal.samples[i], 0.0);
    fft_inplace(spectrum, false);

    const std::size_t n_rows = (signal.size() + hop_samples - 1) / hop_samples;
    FeatureMatrix out(FeatureKind::cwt, n_rows, bank.size(),
                      static_cast<double>(hop_samples) / signal.sample_rate);
    std::vector<cplx> work(bank.n_fft);
    for (std::size_t j = 0; j < bank.size(); ++j) {
        const auto& resp = bank.filters[j];
        for (std::size_t k = 0; k < bank.n_fft; ++k) work[k] = spectrum[k] * resp[k];
        fft_inplace(work, true);
        for (std::size_t r = 0; r < n_rows; ++r)
            out.at(r, j) = std::abs(work[r * hop_samples]);
    }
    return out;
}

}  // namespace scatmir
