#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/common.hpp"
#include "scatmir/filterbank.hpp"
#include "scatmir/scattering.hpp"
#include "scatmir/stft.hpp"

namespace scatmir {

inline constexpr int kConfigSchemaVersion = 1;

struct MelConfig {
    std::size_t n_filters = 40;
    double f_min = 0.0;
    double f_max = 0.0;  // 0 means Nyquist
};

struct OnsetConfig {
    std::size_t median_half_window = 8;
    double delta_static_fraction = 0.01;  // of each ODF's global max
    std::vector<double> threshold_scales{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
    double tolerance_seconds = 0.040;
};

struct SvmConfig {
    std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_grid{1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0, 4.0};
    std::size_t folds = 5;
    double train_fraction = 0.7;
    double silence_threshold_dbfs = -60.0;
    std::size_t max_frames_per_track = 40;  // 0 disables the cap
};

struct SynthConfig {
    double target_seconds = 23.8;
    std::vector<std::string> instruments{"I1", "I2"};
    int pitch_lo = 48;
    int pitch_hi = 72;
    std::optional<double> snr_db;
    std::optional<std::size_t> sparsity_max_notes_per_10s;
    std::optional<double> lambda_int_target;
};

struct ScatteringPipelineConfig {
    ScatteringConfig transform;
    std::size_t clsc_keep = 24;
    std::size_t pca_dim = 50;
};

struct ExperimentConfig {
    std::uint64_t seed = 42;
    double sample_rate = 11025.0;
    FrameConfig stft{1024, 256, WindowKind::hann};
    MelConfig mel;
    std::size_t mfcc_keep = 20;
    WaveletBankSpec cwt_bank{8, 7, WaveletFamily::gabor};
    ScatteringPipelineConfig scattering;
    OnsetConfig onset;
    SvmConfig svm;
    SynthConfig synthesis;

    double mel_f_max() const {
        return mel.f_max > 0.0 ? mel.f_max : sample_rate / 2.0;
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                       const std::string& context) {
    if (!j.is_object()) throw ParseError("config: " + context + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ParseError("config: unknown key '" + key + "' in " + context);
    }
}

template <class T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::maybe;
    check_keys(j, {"schema_version", "seed", "sample_rate", "stft", "mel", "mfcc", "cwt",
                   "scattering", "onset", "svm", "synthesis"},
               "top level");
    if (!j.contains("schema_version"))
        throw ParseError("config: missing schema_version");
    if (j.at("schema_version").get<int>() != kConfigSchemaVersion)
        throw ParseError("config: unsupported schema_version");

    ExperimentConfig cfg;
    maybe(j, "seed", cfg.seed);
    maybe(j, "sample_rate", cfg.sample_rate);

    if (j.contains("stft")) {
        const auto& s = j.at("stft");
        check_keys(s, {"window_size", "hop", "window"}, "stft");
        maybe(s, "window_size", cfg.stft.window_size);
        maybe(s, "hop", cfg.stft.hop);
        if (s.contains("window"))
            cfg.stft.window = window_kind_from_string(s.at("window").get<std::string>());
    }
    if (j.contains("mel")) {
        const auto& m = j.at("mel");
        check_keys(m, {"n_filters", "f_min", "f_max"}, "mel");
        maybe(m, "n_filters", cfg.mel.n_filters);
        maybe(m, "f_min", cfg.mel.f_min);
        maybe(m, "f_max", cfg.mel.f_max);
    }
    if (j.contains("mfcc")) {
        const auto& m = j.at("mfcc");
        check_keys(m, {"n_keep"}, "mfcc");
        maybe(m, "n_keep", cfg.mfcc_keep);
    }
    if (j.contains("cwt")) {
        const auto& c = j.at("cwt");
        check_keys(c, {"q", "j_octaves", "family"}, "cwt");
        maybe(c, "q", cfg.cwt_bank.q);
        maybe(c, "j_octaves", cfg.cwt_bank.j_octaves);
        if (c.contains("family"))
            cfg.cwt_bank.family = wavelet_family_from_string(c.at("family").get<std::string>());
    }
    if (j.contains("scattering")) {
        const auto& s = j.at("scattering");
        check_keys(s, {"t_window_seconds", "max_order", "output_hop_seconds", "bank1",
                       "bank2", "clsc_keep", "pca_dim"},
                   "scattering");
        auto& t = cfg.scattering.transform;
        maybe(s, "t_window_seconds", t.t_window_seconds);
        maybe(s, "max_order", t.max_order);
        maybe(s, "output_hop_seconds", t.output_hop_seconds);
        for (const char* bank_key : {"bank1", "bank2"}) {
            if (!s.contains(bank_key)) continue;
            const auto& b = s.at(bank_key);
            check_keys(b, {"q", "j_octaves", "family"}, bank_key);
            auto& spec = std::string(bank_key) == "bank1" ? t.bank1 : t.bank2;
            maybe(b, "q", spec.q);
            maybe(b, "j_octaves", spec.j_octaves);
            if (b.contains("family"))
                spec.family = wavelet_family_from_string(b.at("family").get<std::string>());
        }
        maybe(s, "clsc_keep", cfg.scattering.clsc_keep);
        maybe(s, "pca_dim", cfg.scattering.pca_dim);
    }
    if (j.contains("onset")) {
        const auto& o = j.at("onset");
        check_keys(o, {"median_half_window", "delta_static_fraction", "threshold_scales",
                       "tolerance_seconds"},
                   "onset");
        maybe(o, "median_half_window", cfg.onset.median_half_window);
        maybe(o, "delta_static_fraction", cfg.onset.delta_static_fraction);
        maybe(o, "threshold_scales", cfg.onset.threshold_scales);
        maybe(o, "tolerance_seconds", cfg.onset.tolerance_seconds);
    }
    if (j.contains("svm")) {
        const auto& s = j.at("svm");
        check_keys(s, {"c_grid", "gamma_grid", "folds", "train_fraction",
                       "silence_threshold_dbfs", "max_frames_per_track"},
                   "svm");
        maybe(s, "c_grid", cfg.svm.c_grid);
        maybe(s, "gamma_grid", cfg.svm.gamma_grid);
        maybe(s, "folds", cfg.svm.folds);
        maybe(s, "train_fraction", cfg.svm.train_fraction);
        maybe(s, "silence_threshold_dbfs", cfg.svm.silence_threshold_dbfs);
        maybe(s, "max_frames_per_track", cfg.svm.max_frames_per_track);
    }
    if (j.contains("synthesis")) {
        const auto& s = j.at("synthesis");
        check_keys(s, {"target_seconds", "instruments", "pitch_lo", "pitch_hi", "snr_db",
                       "sparsity_max_notes_per_10s", "lambda_int_target"},
                   "synthesis");
        maybe(s, "target_seconds", cfg.synthesis.target_seconds);
        maybe(s, "instruments", cfg.synthesis.instruments);
        maybe(s, "pitch_lo", cfg.synthesis.pitch_lo);
        maybe(s, "pitch_hi", cfg.synthesis.pitch_hi);
        if (s.contains("snr_db") && !s.at("snr_db").is_null())
            cfg.synthesis.snr_db = s.at("snr_db").get<double>();
        if (s.contains("sparsity_max_notes_per_10s") &&
            !s.at("sparsity_max_notes_per_10s").is_null())
            cfg.synthesis.sparsity_max_notes_per_10s =
                s.at("sparsity_max_notes_per_10s").get<std::size_t>();
        if (s.contains("lambda_int_target") && !s.at("lambda_int_target").is_null())
            cfg.synthesis.lambda_int_target = s.at("lambda_int_target").get<double>();
    }
    return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["seed"] = cfg.seed;
    j["sample_rate"] = cfg.sample_rate;
    j["stft"] = {{"window_size", cfg.stft.window_size},
                 {"hop", cfg.stft.hop},
                 {"window", to_string(cfg.stft.window)}};
    j["mel"] = {{"n_filters", cfg.mel.n_filters},
                {"f_min", cfg.mel.f_min},
                {"f_max", cfg.mel.f_max}};
    j["mfcc"] = {{"n_keep", cfg.mfcc_keep}};
    j["cwt"] = to_json(cfg.cwt_bank);
    j["scattering"] = {{"t_window_seconds", cfg.scattering.transform.t_window_seconds},
                       {"max_order", cfg.scattering.transform.max_order},
                       {"output_hop_seconds", cfg.scattering.transform.output_hop_seconds},
                       {"bank1", to_json(cfg.scattering.transform.bank1)},
                       {"bank2", to_json(cfg.scattering.transform.bank2)},
                       {"clsc_keep", cfg.scattering.clsc_keep},
                       {"pca_dim", cfg.scattering.pca_dim}};
    j["onset"] = {{"median_half_window", cfg.onset.median_half_window},
                  {"delta_static_fraction", cfg.onset.delta_static_fraction},
                  {"threshold_scales", cfg.onset.threshold_scales},
                  {"tolerance_seconds", cfg.onset.tolerance_seconds}};
    j["svm"] = {{"c_grid", cfg.svm.c_grid},
                {"gamma_grid", cfg.svm.gamma_grid},
                {"folds", cfg.svm.folds},
                {"train_fraction", cfg.svm.train_fraction},
                {"silence_threshold_dbfs", cfg.svm.silence_threshold_dbfs},
                {"max_frames_per_track", cfg.svm.max_frames_per_track}};
    j["synthesis"] = {{"target_seconds", cfg.synthesis.target_seconds},
                      {"instruments", cfg.synthesis.instruments},
                      {"pitch_lo", cfg.synthesis.pitch_lo},
                      {"pitch_hi", cfg.synthesis.pitch_hi},
                      {"snr_db", cfg.synthesis.snr_db ? nlohmann::json(*cfg.synthesis.snr_db)
                                                      : nlohmann::json(nullptr)},
                      {"sparsity_max_notes_per_10s",
                       cfg.synthesis.sparsity_max_notes_per_10s
                           ? nlohmann::json(*cfg.synthesis.sparsity_max_notes_per_10s)
                           : nlohmann::json(nullptr)},
                      {"lambda_int_target",
                       cfg.synthesis.lambda_int_target
                           ? nlohmann::json(*cfg.synthesis.lambda_int_target)
                           : nlohmann::json(nullptr)}};
    return j;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("config: cannot open " + path);
    return experiment_config_from_json(nlohmann::json::parse(is));
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a64(to_json(cfg).dump());
}

}  // namespace scatmir
