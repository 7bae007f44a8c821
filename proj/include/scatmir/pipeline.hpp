#pragma once

#include <string>
#include <vector>

#include "scatmir/classify.hpp"
#include "scatmir/config.hpp"
#include "scatmir/features.hpp"
#include "scatmir/matrix.hpp"
#include "scatmir/onset.hpp"
#include "scatmir/pca.hpp"
#include "scatmir/scattering.hpp"
#include "scatmir/signal.hpp"
#include "scatmir/stft.hpp"
#include "scatmir/synthesis.hpp"

namespace scatmir {

/// Signal -> chosen representation under one experiment config. CWT and
/// scattering are hopped to the STFT grid so detection functions over
/// different representations stay frame-aligned.
inline FeatureMatrix extract_features(const Signal& signal, FeatureKind kind,
                                      const ExperimentConfig& cfg) {
    switch (kind) {
        case FeatureKind::spectrogram:
            return spectrogram(signal, cfg.stft);
        case FeatureKind::mfsc: {
            const auto spec = spectrogram(signal, cfg.stft);
            const auto mel = build_mel_bank(cfg.mel.n_filters, signal.sample_rate,
                                            spec.n_cols, cfg.mel.f_min, cfg.mel_f_max());
            return mfsc(spec, mel);
        }
        case FeatureKind::mfcc: {
            return mfcc(extract_features(signal, FeatureKind::mfsc, cfg), cfg.mfcc_keep);
        }
        case FeatureKind::delta_mfcc: {
            return delta_mfcc(extract_features(signal, FeatureKind::mfcc, cfg));
        }
        case FeatureKind::cwt: {
            const auto bank = cached_wavelet_bank(cfg.cwt_bank.q, cfg.cwt_bank.j_octaves,
                                                  signal.sample_rate,
                                                  next_pow2(signal.size()),
                                                  cfg.cwt_bank.family);
            return cwt(signal, *bank, cfg.stft.hop);
        }
        case FeatureKind::scattering: {
            return scattering_features(scatter(signal, cfg.scattering.transform));
        }
        case FeatureKind::clsc: {
            return clsc(scatter(signal, cfg.scattering.transform), cfg.scattering.clsc_keep);
        }
    }
    throw InvalidInput("extract_features: unknown representation");
}

/// Cache key over the exact bytes and parameters that determine the output.
inline std::uint64_t feature_cache_key(const Signal& signal, FeatureKind kind,
                                       const ExperimentConfig& cfg) {
    std::uint64_t h = fnv1a64(to_json(cfg).dump());
    h = fnv1a64(to_string(kind), h);
    h = fnv1a64_bytes(&signal.sample_rate, sizeof(double), h);
    h = fnv1a64_bytes(signal.samples.data(), signal.samples.size() * sizeof(double), h);
    return h;
}

/// One labeled corpus entry: audio plus its sidecar ground truth.
struct CorpusEntry {
    std::string wav_path;
    std::string truth_path;
    std::string id;          // wav stem
    std::string instrument;  // from the sidecar
    Score truth;
};

/// Track features for the classifier: silence-gated rows, optionally capped
/// per track by even subsampling.
inline Track track_from_signal(const Signal& signal, const std::string& id,
                               const std::string& label, FeatureKind kind,
                               const ExperimentConfig& cfg) {
    const auto features = extract_features(signal, kind, cfg);
    const double window_seconds =
        kind == FeatureKind::scattering || kind == FeatureKind::clsc
            ? cfg.scattering.transform.t_window_seconds
            : static_cast<double>(cfg.stft.window_size) / signal.sample_rate;
    const auto powers =
        frame_powers_db(signal, features.frame_hop_seconds, window_seconds, features.n_rows);
    Track t;
    t.id = id;
    t.label = label;
    t.frames = non_silent_rows(features, powers, cfg.svm.silence_threshold_dbfs);
    if (t.frames.empty() && features.n_rows > 0) t.frames.push_back(features.row_vec(0));

    const std::size_t cap = cfg.svm.max_frames_per_track;
    if (cap > 0 && t.frames.size() > cap) {
        std::vector<std::vector<double>> kept;
        kept.reserve(cap);
        for (std::size_t i = 0; i < cap; ++i)
            kept.push_back(t.frames[i * t.frames.size() / cap]);
        t.frames = std::move(kept);
    }
    return t;
}

/// Fits PCA on all frames and projects every track down to out_dim.
inline std::vector<Track> pca_reduce_tracks(const std::vector<Track>& tracks,
                                            std::size_t out_dim) {
    std::vector<std::vector<double>> all;
    for (const auto& t : tracks)
        for (const auto& f : t.frames) all.push_back(f);
    if (all.empty()) throw InvalidInput("pca_reduce_tracks: no frames");
    const std::size_t dim = std::min(out_dim, all.front().size());
    const auto model = pca_fit(all, dim);
    std::vector<Track> out = tracks;
    for (auto& t : out)
        for (auto& f : t.frames) f = pca_project(model, f);
    return out;
}

}  // namespace scatmir
