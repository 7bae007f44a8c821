#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/common.hpp"
#include "scatmir/fft.hpp"
#include "scatmir/filterbank.hpp"
#include "scatmir/matrix.hpp"
#include "scatmir/signal.hpp"

namespace scatmir {

struct WaveletBankSpec {
    int q = 8;
    int j_octaves = 8;
    WaveletFamily family = WaveletFamily::gabor;
};

inline nlohmann::json to_json(const WaveletBankSpec& s) {
    return {{"q", s.q}, {"j_octaves", s.j_octaves}, {"family", to_string(s.family)}};
}

inline WaveletBankSpec bank_spec_from_json(const nlohmann::json& j) {
    WaveletBankSpec s;
    s.q = j.at("q").get<int>();
    s.j_octaves = j.at("j_octaves").get<int>();
    s.family = wavelet_family_from_string(j.at("family").get<std::string>());
    return s;
}

struct ScatteringConfig {
    double t_window_seconds = 16384.0 / 44100.0;  // ~370 ms
    WaveletBankSpec bank1{8, 8, WaveletFamily::gabor};
    WaveletBankSpec bank2{1, 8, WaveletFamily::gabor};
    int max_order = 2;
    double output_hop_seconds = 256.0 / 44100.0;

    void validate() const {
        if (!(t_window_seconds > 0.0))
            throw InvalidInput("scattering: averaging window must be positive");
        if (max_order < 1 || max_order > 2)
            throw InvalidInput("scattering: max_order must be 1 or 2");
        if (!(output_hop_seconds > 0.0))
            throw InvalidInput("scattering: output hop must be positive");
    }
};

inline nlohmann::json to_json(const ScatteringConfig& c) {
    return {{"t_window_seconds", c.t_window_seconds},
            {"bank1", to_json(c.bank1)},
            {"bank2", to_json(c.bank2)},
            {"max_order", c.max_order},
            {"output_hop_seconds", c.output_hop_seconds}};
}

inline ScatteringConfig scattering_config_from_json(const nlohmann::json& j) {
    ScatteringConfig c;
    c.t_window_seconds = j.at("t_window_seconds").get<double>();
    c.bank1 = bank_spec_from_json(j.at("bank1"));
    c.bank2 = bank_spec_from_json(j.at("bank2"));
    c.max_order = j.at("max_order").get<int>();
    c.output_hop_seconds = j.at("output_hop_seconds").get<double>();
    return c;
}

inline std::uint64_t config_hash(const ScatteringConfig& c) {
    return fnv1a64(to_json(c).dump());
}

/// Path label: order-1 paths carry j2 == -1.
struct ScatteringPath {
    int j1 = 0;
    int j2 = -1;
};

struct ScatteringCoeffs {
    FeatureMatrix order0;  // 1 column
    FeatureMatrix order1;  // one column per j1
    FeatureMatrix order2;  // one column per frequency-decreasing (j1, j2) pair
    std::vector<ScatteringPath> path_index;  // order-1 labels then order-2 labels
    ScatteringConfig config;
    double sample_rate = 0.0;
    bool order2_normalized = false;
};

/// One-layer wavelet modulus propagator output: the averaged channel x*phi
/// plus the propagated envelopes |x*psi_lambda|, all at full internal rate.
struct WaveletModulus {
    std::vector<double> lowpass;
    std::vector<std::vector<double>> modulus;
};

namespace detail {

/// Even-symmetric Gaussian lowpass on the DFT grid with time-domain std of
/// half the averaging window.
inline std::vector<double> averaging_lowpass(double t_window_seconds,
                                             double sample_rate, std::size_t n_fft) {
    const double sigma_t = t_window_seconds / 2.0;
    const double sigma_f = 1.0 / (kTwoPi * sigma_t);
    const double bin_hz = sample_rate / static_cast<double>(n_fft);
    std::vector<double> resp(n_fft, 0.0);
    for (std::size_t b = 0; b <= n_fft / 2; ++b) {
        const double f = static_cast<double>(b) * bin_hz;
        resp[b] = std::exp(-0.5 * (f / sigma_f) * (f / sigma_f));
        if (b > 0 && b < n_fft / 2) resp[n_fft - b] = resp[b];
    }
    return resp;
}

inline std::vector<cplx> padded_spectrum(const std::vector<double>& x, std::size_t n_fft) {
    std::vector<cplx> s(n_fft, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = cplx(x[i], 0.0);
    fft_inplace(s, false);
    return s;
}

inline std::vector<double> modulus_channel(const std::vector<cplx>& spectrum,
                                           const std::vector<double>& response) {
    std::vector<cplx> work(spectrum.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) work[k] = spectrum[k] * response[k];
    fft_inplace(work, true);
    std::vector<double> out(work.size());
    for (std::size_t i = 0; i < work.size(); ++i) out[i] = std::abs(work[i]);
    return out;
}

inline std::vector<double> real_channel(const std::vector<cplx>& spectrum,
                                        const std::vector<double>& response) {
    std::vector<cplx> work(spectrum.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) work[k] = spectrum[k] * response[k];
    fft_inplace(work, true);
    std::vector<double> out(work.size());
    for (std::size_t i = 0; i < work.size(); ++i) out[i] = work[i].real();
    return out;
}

}  // namespace detail

/// Applies the propagator U to one channel already matching the bank's DFT
/// length (shorter input is zero-padded).
inline WaveletModulus wavelet_modulus(const std::vector<double>& x, const FilterBank& bank) {
    if (x.empty()) throw InvalidInput("wavelet_modulus: empty input");
    if (!bank.analytic) throw InvalidInput("wavelet_modulus: need an analytic bank");
    if (x.size() > bank.n_fft)
        throw InvalidInput("wavelet_modulus: input longer than bank n_fft");
    const auto spectrum = detail::padded_spectrum(x, bank.n_fft);
    WaveletModulus out;
    out.lowpass = detail::real_channel(spectrum, bank.lowpass);
    out.modulus.reserve(bank.size());
    for (const auto& f : bank.filters)
        out.modulus.push_back(detail::modulus_channel(spectrum, f));
    return out;
}

inline WaveletModulus wavelet_modulus(const Signal& signal, const FilterBank& bank) {
    signal.validate();
    if (signal.sample_rate != bank.sample_rate)
        throw InvalidInput("wavelet_modulus: bank rate does not match signal");
    return wavelet_modulus(signal.samples, bank);
}

/// Deep scattering transform up to order two. Filtering is circular over the
/// signal zero-padded to the next power of two; every order is averaged by
/// the same Gaussian lowpass at scale T and sampled on the output hop grid,
/// keeping frames inside the original signal extent. Second-order paths are
/// restricted to strictly decreasing center frequency.
inline ScatteringCoeffs scatter(const Signal& signal, const ScatteringConfig& cfg) {
    signal.validate();
    cfg.validate();
    const double fs = signal.sample_rate;
    if (static_cast<double>(signal.size()) < cfg.t_window_seconds * fs)
        throw InvalidInput("scatter: signal shorter than one averaging window");

    const std::size_t n_fft = next_pow2(signal.size());
    const auto bank1 = cached_wavelet_bank(cfg.bank1.q, cfg.bank1.j_octaves, fs, n_fft,
                                           cfg.bank1.family);
    std::shared_ptr<const FilterBank> bank2;
    if (cfg.max_order >= 2)
        bank2 = cached_wavelet_bank(cfg.bank2.q, cfg.bank2.j_octaves, fs, n_fft,
                                    cfg.bank2.family);
    const auto phi = detail::averaging_lowpass(cfg.t_window_seconds, fs, n_fft);

    const auto hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.output_hop_seconds * fs)));
    const std::size_t n_frames = (signal.size() + hop - 1) / hop;

    ScatteringCoeffs out;
    out.config = cfg;
    out.sample_rate = fs;

    const double hop_seconds = static_cast<double>(hop) / fs;
    auto subsample = [&](const std::vector<double>& full, FeatureMatrix& m, std::size_t col) {
        for (std::size_t r = 0; r < n_frames; ++r)
            m.at(r, col) = std::max(0.0, full[r * hop]);
    };

    // enumerate paths up front so the matrices have fixed width; order-2
    // paths are listed j2-major so each modulation band occupies a
    // contiguous stretch of the path index (the CLSC cosine transform then
    // compresses across first-order bands, not across modulation rates)
    std::vector<ScatteringPath> paths1;
    for (std::size_t j1 = 0; j1 < bank1->size(); ++j1)
        paths1.push_back({static_cast<int>(j1), -1});
    std::vector<ScatteringPath> paths2;
    std::map<std::pair<int, int>, std::size_t> pair_column;
    if (cfg.max_order >= 2) {
        for (std::size_t j2 = 0; j2 < bank2->size(); ++j2)
            for (std::size_t j1 = 0; j1 < bank1->size(); ++j1)
                if (bank2->center_freqs[j2] < bank1->center_freqs[j1]) {
                    pair_column[{static_cast<int>(j1), static_cast<int>(j2)}] =
                        paths2.size();
                    paths2.push_back({static_cast<int>(j1), static_cast<int>(j2)});
                }
    }

    out.order0 = FeatureMatrix(FeatureKind::scattering, n_frames, 1, hop_seconds);
    out.order1 =
        FeatureMatrix(FeatureKind::scattering, n_frames, paths1.size(), hop_seconds);
    out.order2 =
        FeatureMatrix(FeatureKind::scattering, n_frames, paths2.size(), hop_seconds);

    const auto spectrum = detail::padded_spectrum(signal.samples, n_fft);
    {
        const auto s0 = detail::real_channel(spectrum, phi);
        for (std::size_t r = 0; r < n_frames; ++r)
            out.order0.at(r, 0) = s0[r * hop];  // order 0 is signed (no modulus yet)
    }

    for (std::size_t j1 = 0; j1 < bank1->size(); ++j1) {
        const auto u1 = detail::modulus_channel(spectrum, bank1->filters[j1]);
        std::vector<cplx> u1_spec(n_fft);
        for (std::size_t i = 0; i < n_fft; ++i) u1_spec[i] = cplx(u1[i], 0.0);
        fft_inplace(u1_spec, false);

        subsample(detail::real_channel(u1_spec, phi), out.order1, j1);

        if (cfg.max_order >= 2) {
            for (std::size_t j2 = 0; j2 < bank2->size(); ++j2) {
                if (!(bank2->center_freqs[j2] < bank1->center_freqs[j1])) continue;
                const auto u2 = detail::modulus_channel(u1_spec, bank2->filters[j2]);
                std::vector<cplx> u2_spec(n_fft);
                for (std::size_t i = 0; i < n_fft; ++i) u2_spec[i] = cplx(u2[i], 0.0);
                fft_inplace(u2_spec, false);
                const auto col =
                    pair_column.at({static_cast<int>(j1), static_cast<int>(j2)});
                subsample(detail::real_channel(u2_spec, phi), out.order2, col);
            }
        }
    }

    out.path_index = paths1;
    out.path_index.insert(out.path_index.end(), paths2.begin(), paths2.end());
    return out;
}

/// Divides each order-2 entry by its order-1 parent; parents below eps yield
/// zero so silent paths stay defined and the vector width stays constant.
inline ScatteringCoeffs normalize_order2(const ScatteringCoeffs& coeffs,
                                         double eps = kLogFloor) {
    if (coeffs.config.max_order < 2)
        throw InvalidInput("normalize_order2: coefficients have no second order");
    ScatteringCoeffs out = coeffs;
    const std::size_t n1 = coeffs.order1.n_cols;
    for (std::size_t r = 0; r < coeffs.order2.n_rows; ++r) {
        for (std::size_t p = 0; p < coeffs.order2.n_cols; ++p) {
            const auto& path = coeffs.path_index[n1 + p];
            const double parent = coeffs.order1.at(r, static_cast<std::size_t>(path.j1));
            out.order2.at(r, p) =
                parent < eps ? 0.0 : coeffs.order2.at(r, p) / parent;
        }
    }
    out.order2_normalized = true;
    return out;
}

/// Cosine log scattering coefficients: per frame, floored log of order 1 and
/// of the normalized order 2, DCT along each order's path index, first
/// n_keep coefficients of each kept.
inline FeatureMatrix clsc(const ScatteringCoeffs& coeffs, std::size_t n_keep) {
    if (n_keep == 0) throw InvalidInput("clsc: n_keep must be positive");
    if (n_keep > coeffs.order1.n_cols)
        throw InvalidInput("clsc: n_keep exceeds order-1 path count");
    const bool has_o2 = coeffs.config.max_order >= 2 && coeffs.order2.n_cols > 0;
    if (has_o2 && n_keep > coeffs.order2.n_cols)
        throw InvalidInput("clsc: n_keep exceeds order-2 path count");

    const ScatteringCoeffs& src =
        (has_o2 && !coeffs.order2_normalized) ? normalize_order2(coeffs) : coeffs;

    const std::size_t width = has_o2 ? 2 * n_keep : n_keep;
    FeatureMatrix out(FeatureKind::clsc, src.order1.n_rows, width,
                      src.order1.frame_hop_seconds);
    std::vector<double> work;
    for (std::size_t r = 0; r < src.order1.n_rows; ++r) {
        work.assign(src.order1.row(r).begin(), src.order1.row(r).end());
        for (auto& v : work) v = floored_log(v);
        auto c1 = dct2(work);
        for (std::size_t k = 0; k < n_keep; ++k) out.at(r, k) = c1[k];
        if (has_o2) {
            work.assign(src.order2.row(r).begin(), src.order2.row(r).end());
            for (auto& v : work) v = floored_log(v);
            auto c2 = dct2(work);
            for (std::size_t k = 0; k < n_keep; ++k) out.at(r, n_keep + k) = c2[k];
        }
    }
    return out;
}

/// Raw order-1 and order-2 magnitudes side by side; the representation fed
/// to the onset detection function.
inline FeatureMatrix scattering_features(const ScatteringCoeffs& coeffs) {
    const std::size_t n1 = coeffs.order1.n_cols;
    const std::size_t n2 = coeffs.order2.n_cols;
    FeatureMatrix out(FeatureKind::scattering, coeffs.order1.n_rows, n1 + n2,
                      coeffs.order1.frame_hop_seconds);
    for (std::size_t r = 0; r < out.n_rows; ++r) {
        for (std::size_t c = 0; c < n1; ++c) out.at(r, c) = coeffs.order1.at(r, c);
        for (std::size_t c = 0; c < n2; ++c) out.at(r, n1 + c) = coeffs.order2.at(r, c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: a small JSON header next to a raw binary payload, with the
// config hash embedded so stale caches are rejected.
// ---------------------------------------------------------------------------

inline void save_scattering(const ScatteringCoeffs& coeffs, const std::string& base_path) {
    nlohmann::json header;
    header["config"] = to_json(coeffs.config);
    header["config_hash"] = hash_hex(config_hash(coeffs.config));
    header["sample_rate"] = coeffs.sample_rate;
    header["order2_normalized"] = coeffs.order2_normalized;
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : coeffs.path_index) paths.push_back({p.j1, p.j2});
    header["path_index"] = paths;
    header["frames"] = coeffs.order1.n_rows;
    header["hop_seconds"] = coeffs.order1.frame_hop_seconds;

    std::ofstream js(base_path + ".json", std::ios::binary);
    if (!js) throw ParseError("cannot write " + base_path + ".json");
    js << header.dump(2) << "\n";

    std::ofstream bs(base_path + ".bin", std::ios::binary);
    if (!bs) throw ParseError("cannot write " + base_path + ".bin");
    write_cache(coeffs.order0, config_hash(coeffs.config), bs);
    write_cache(coeffs.order1, config_hash(coeffs.config), bs);
    write_cache(coeffs.order2, config_hash(coeffs.config), bs);
}

inline ScatteringCoeffs load_scattering(const std::string& base_path) {
    std::ifstream js(base_path + ".json", std::ios::binary);
    if (!js) throw ParseError("cannot read " + base_path + ".json");
    nlohmann::json header = nlohmann::json::parse(js);

    ScatteringCoeffs out;
    out.config = scattering_config_from_json(header.at("config"));
    if (header.at("config_hash").get<std::string>() != hash_hex(config_hash(out.config)))
        throw ParseError("scattering header: config hash mismatch");
    out.sample_rate = header.at("sample_rate").get<double>();
    out.order2_normalized = header.at("order2_normalized").get<bool>();
    for (const auto& p : header.at("path_index"))
        out.path_index.push_back({p.at(0).get<int>(), p.at(1).get<int>()});

    std::ifstream bs(base_path + ".bin", std::ios::binary);
    if (!bs) throw ParseError("cannot read " + base_path + ".bin");
    out.order0 = read_cache(bs);
    out.order1 = read_cache(bs);
    out.order2 = read_cache(bs);
    return out;
}

}  // namespace scatmir
