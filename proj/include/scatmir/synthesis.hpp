#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "scatmir/common.hpp"
#include "scatmir/fft.hpp"
#include "scatmir/score.hpp"
#include "scatmir/signal.hpp"
#include "scatmir/wav.hpp"

namespace scatmir {

struct Template {
    Signal signal;           // peak-normalized on ingest
    int pitch = 60;
    std::string instrument;
    int model = 0;
    int amplitude_rank = 1;  // 1 = softest
    double lambda_int = -1.0;  // intermodulation descriptor; < 0 until computed
};

// ---------------------------------------------------------------------------
// Amplitude-modulation descriptor: energy of the 4-8 Hz band of the note's
// amplitude envelope relative to the envelope's total AC energy.
// ---------------------------------------------------------------------------

inline double am_descriptor(const Signal& note) {
    if (note.duration_seconds() < 0.5)
        throw InvalidInput("am_descriptor: template shorter than 0.5 s");
    const std::size_t n = next_pow2(note.size());

    // amplitude envelope: |analytic signal|, lowpassed at 30 Hz
    std::vector<cplx> spec(n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < note.size(); ++i) spec[i] = cplx(note.samples[i], 0.0);
    fft_inplace(spec, false);
    for (std::size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = cplx(0.0, 0.0);
    fft_inplace(spec, true);
    std::vector<double> env(note.size());
    for (std::size_t i = 0; i < note.size(); ++i) env[i] = std::abs(spec[i]);

    std::vector<cplx> env_spec(n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < note.size(); ++i) env_spec[i] = cplx(env[i], 0.0);
    fft_inplace(env_spec, false);
    const double bin_hz = note.sample_rate / static_cast<double>(n);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        const double g = std::exp(-0.5 * (f / 30.0) * (f / 30.0));
        env_spec[k] *= g;
        if (k > 0 && k < n / 2) env_spec[n - k] *= g;
    }

    double band = 0.0, total = 0.0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        const double e = std::norm(env_spec[k]);
        total += e;
        if (f >= 4.0 && f <= 8.0) band += e;
    }
    if (total < 1e-12) throw InvalidInput("am_descriptor: silent template");
    return band / total;
}

inline double am_descriptor(const Template& t) { return am_descriptor(t.signal); }

/// Template with lambda_int nearest the target; ties break toward the lower
/// amplitude rank. Descriptors must be precomputed (lambda_int >= 0).
inline const Template& select_by_intermodulation(const std::vector<const Template*>& pool,
                                                 double target) {
    if (pool.empty()) throw InvalidInput("select_by_intermodulation: empty pool");
    const Template* best = nullptr;
    for (const Template* t : pool) {
        if (t->lambda_int < 0.0)
            throw InvalidInput("select_by_intermodulation: descriptor not precomputed");
        if (!best) {
            best = t;
            continue;
        }
        const double da = std::abs(t->lambda_int - target);
        const double db = std::abs(best->lambda_int - target);
        if (da < db || (da == db && t->amplitude_rank < best->amplitude_rank)) best = t;
    }
    return *best;
}

// ---------------------------------------------------------------------------
// Synthetic pluck templates: damped inharmonic partials with per-instrument
// decay, brightness, envelope AM and attack noise. Eight pseudo-instruments
// ship as defaults; real corpora plug in through from_directory().
// ---------------------------------------------------------------------------

struct InstrumentParams {
    std::string name;
    double decay_seconds = 0.8;
    double inharmonicity = 1e-4;
    double brightness = 1.0;        // harmonic rolloff exponent
    double odd_even = 1.0;          // gain applied to even harmonics
    double am_rate_hz = 0.0;
    double am_depth = 0.0;
    double attack_noise = 0.05;
    double damping_slope = 0.25;    // higher partials decay faster
};

/// Eight pseudo-instruments arranged as spectral twins: within a pair the
/// harmonic envelope matches and the envelope dynamics (AM rate/depth,
/// decay, attack) carry the identity.
inline std::vector<InstrumentParams> default_instruments() {
    return {
        {"I1", 0.85, 1.0e-4, 0.75, 1.00, 6.5, 0.35, 0.045, 0.28},
        {"I2", 1.25, 3.0e-4, 0.80, 1.00, 0.0, 0.00, 0.055, 0.22},
        {"I3", 0.60, 8.0e-5, 1.05, 0.90, 4.5, 0.32, 0.030, 0.32},
        {"I4", 0.62, 1.2e-4, 1.00, 0.92, 8.5, 0.22, 0.060, 0.30},
        {"I5", 0.30, 2.0e-4, 0.65, 1.05, 0.0, 0.00, 0.110, 0.15},
        {"I6", 0.95, 1.5e-4, 0.62, 1.02, 0.0, 0.06, 0.075, 0.18},
        {"I7", 0.45, 2.5e-4, 1.30, 0.70, 7.0, 0.25, 0.060, 0.35},
        {"I8", 0.48, 1.8e-4, 1.25, 0.75, 3.0, 0.18, 0.020, 0.38},
    };
}

inline double midi_pitch_hz(int pitch) {
    return 440.0 * std::pow(2.0, (pitch - 69) / 12.0);
}

inline constexpr int kModelsPerInstrument = 3;
inline constexpr int kRanksPerModel = 6;

/// One deterministic pluck rendering. Model index jitters the instrument
/// parameters (three builds of the same instrument); rank tracks playing
/// dynamics, higher rank being brighter with a harder attack.
inline Signal render_pluck(const InstrumentParams& base, int pitch, int model, int rank,
                           double sample_rate, std::uint64_t seed,
                           double duration_seconds = 1.2) {
    RandomStream rng(seed, "template/" + base.name + "/" + std::to_string(model) + "/" +
                               std::to_string(pitch) + "/" + std::to_string(rank));
    InstrumentParams p = base;
    auto jitter = [&](double v, double frac) { return v * (1.0 + frac * rng.uniform(-1.0, 1.0)); };
    p.decay_seconds = jitter(p.decay_seconds, 0.12);
    p.brightness = jitter(p.brightness, 0.08);
    p.am_rate_hz = jitter(p.am_rate_hz, 0.10);
    p.am_depth = jitter(p.am_depth, 0.15);
    p.inharmonicity = jitter(p.inharmonicity, 0.20);

    const double rank_t = (rank - 1) / static_cast<double>(kRanksPerModel - 1);
    const double brightness = p.brightness * (1.0 - 0.25 * rank_t);
    const double attack = p.attack_noise * (0.5 + rank_t);

    const double f0 = midi_pitch_hz(pitch);
    const auto n = static_cast<std::size_t>(duration_seconds * sample_rate);
    std::vector<double> x(n, 0.0);

    for (int h = 1; h <= 24; ++h) {
        const double fh = f0 * h * std::sqrt(1.0 + p.inharmonicity * h * h);
        if (fh > 0.45 * sample_rate) break;
        const double amp = std::pow(static_cast<double>(h), -brightness) *
                           (h % 2 == 0 ? p.odd_even : 1.0);
        const double tau = p.decay_seconds / (1.0 + p.damping_slope * (h - 1));
        const double phase = rng.uniform(0.0, kTwoPi);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / sample_rate;
            x[i] += amp * std::sin(kTwoPi * fh * t + phase) * std::exp(-t / tau);
        }
    }

    // envelope amplitude modulation (the intermodulation feature)
    if (p.am_depth > 0.0) {
        const double am_phase = rng.uniform(0.0, kTwoPi);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / sample_rate;
            x[i] *= (1.0 + p.am_depth * std::sin(kTwoPi * p.am_rate_hz * t + am_phase)) /
                    (1.0 + p.am_depth);
        }
    }

    // attack transient: short decaying noise burst
    const auto attack_len = static_cast<std::size_t>(0.015 * sample_rate);
    for (std::size_t i = 0; i < std::min(attack_len, n); ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        x[i] += attack * rng.uniform(-1.0, 1.0) * std::exp(-t / 0.005);
    }

    // 1 ms fade-in keeps the start click-free without dulling the pluck
    const auto ramp = static_cast<std::size_t>(0.001 * sample_rate);
    for (std::size_t i = 0; i < std::min(ramp, n); ++i)
        x[i] *= static_cast<double>(i) / static_cast<double>(ramp);

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : x) v /= peak;
    return Signal(std::move(x), sample_rate);
}

class TemplatePool {
public:
    /// 18 templates (3 models x 6 amplitude ranks) per instrument and pitch.
    static TemplatePool synthetic(const std::vector<InstrumentParams>& instruments,
                                  int pitch_lo, int pitch_hi, double sample_rate,
                                  std::uint64_t seed) {
        if (pitch_lo > pitch_hi) throw InvalidInput("template pool: bad pitch range");
        TemplatePool pool;
        for (const auto& inst : instruments) {
            for (int pitch = pitch_lo; pitch <= pitch_hi; ++pitch) {
                for (int model = 0; model < kModelsPerInstrument; ++model) {
                    for (int rank = 1; rank <= kRanksPerModel; ++rank) {
                        Template t;
                        t.signal = render_pluck(inst, pitch, model, rank, sample_rate, seed);
                        t.pitch = pitch;
                        t.instrument = inst.name;
                        t.model = model;
                        t.amplitude_rank = rank;
                        pool.add(std::move(t));
                    }
                }
            }
        }
        return pool;
    }

    /// Directory layout: instrument/pitch/rank.wav (one model per directory
    /// tree). Templates are peak-normalized on ingest.
    static TemplatePool from_directory(const std::string& root) {
        namespace fs = std::filesystem;
        TemplatePool pool;
        if (!fs::is_directory(root))
            throw ParseError("template pool: not a directory: " + root);
        for (const auto& inst_dir : fs::directory_iterator(root)) {
            if (!inst_dir.is_directory()) continue;
            const std::string instrument = inst_dir.path().filename().string();
            for (const auto& pitch_dir : fs::directory_iterator(inst_dir.path())) {
                if (!pitch_dir.is_directory()) continue;
                const int pitch = std::stoi(pitch_dir.path().filename().string());
                for (const auto& wav : fs::directory_iterator(pitch_dir.path())) {
                    if (wav.path().extension() != ".wav") continue;
                    Template t;
                    t.signal = load_wav_file(wav.path().string());
                    double peak = 0.0;
                    for (double v : t.signal.samples) peak = std::max(peak, std::abs(v));
                    if (peak > 0.0)
                        for (double& v : t.signal.samples) v /= peak;
                    t.pitch = pitch;
                    t.instrument = instrument;
                    t.model = 0;
                    t.amplitude_rank = std::stoi(wav.path().stem().string());
                    pool.add(std::move(t));
                }
            }
        }
        if (pool.templates_.empty())
            throw ParseError("template pool: no templates under " + root);
        return pool;
    }

    void add(Template t) {
        const Key key{t.instrument, t.model, t.pitch};
        templates_.push_back(std::move(t));
        auto& bucket = index_[key];
        bucket.push_back(templates_.size() - 1);
        std::sort(bucket.begin(), bucket.end(), [&](std::size_t a, std::size_t b) {
            return templates_[a].amplitude_rank < templates_[b].amplitude_rank;
        });
    }

    std::vector<std::string> instruments() const {
        std::vector<std::string> out;
        for (const auto& [key, idx] : index_)
            if (std::find(out.begin(), out.end(), key.instrument) == out.end())
                out.push_back(key.instrument);
        return out;
    }

    std::vector<int> models(const std::string& instrument) const {
        std::vector<int> out;
        for (const auto& [key, idx] : index_)
            if (key.instrument == instrument &&
                std::find(out.begin(), out.end(), key.model) == out.end())
                out.push_back(key.model);
        return out;
    }

    bool has_pitch(const std::string& instrument, int model, int pitch) const {
        return index_.count({instrument, model, pitch}) > 0;
    }

    std::vector<const Template*> candidates(const std::string& instrument, int model,
                                            int pitch) const {
        auto it = index_.find({instrument, model, pitch});
        if (it == index_.end()) return {};
        std::vector<const Template*> out;
        for (auto i : it->second) out.push_back(&templates_[i]);
        return out;
    }

    /// Velocity quantile to amplitude rank: v -> ceil(v/127 * n_ranks).
    const Template& by_velocity(const std::string& instrument, int model, int pitch,
                                int velocity) const {
        const auto cands = candidates(instrument, model, pitch);
        if (cands.empty())
            throw InvalidInput("template pool: no templates for " + instrument + " pitch " +
                               std::to_string(pitch));
        const auto n_ranks = cands.size();
        auto rank = static_cast<std::size_t>(std::ceil(
            static_cast<double>(std::max(1, velocity)) / 127.0 * static_cast<double>(n_ranks)));
        rank = std::clamp<std::size_t>(rank, 1, n_ranks);
        return *cands[rank - 1];
    }

    /// Computes lambda_int for every template (needed before any
    /// intermodulation-targeted synthesis).
    void ensure_descriptors() {
        for (auto& t : templates_)
            if (t.lambda_int < 0.0) t.lambda_int = am_descriptor(t.signal);
    }

    double sample_rate() const {
        return templates_.empty() ? 0.0 : templates_.front().signal.sample_rate;
    }
    std::size_t size() const { return templates_.size(); }

private:
    struct Key {
        std::string instrument;
        int model;
        int pitch;
        bool operator<(const Key& o) const {
            return std::tie(instrument, model, pitch) <
                   std::tie(o.instrument, o.model, o.pitch);
        }
    };

    std::vector<Template> templates_;
    std::map<Key, std::vector<std::size_t>> index_;
};

// ---------------------------------------------------------------------------
// Sequence synthesis
// ---------------------------------------------------------------------------

struct SynthesisOptions {
    std::string instrument;            // empty picks the pool's only instrument
    double target_seconds = 23.8;      // padded up to a power-of-two sample count
    std::optional<double> lambda_int_target;  // template choice by descriptor
};

struct SynthesisResult {
    Signal audio;
    Score ground_truth;   // truncated notes removed, instrument labels set
    int model = 0;
};

inline SynthesisResult synthesize(const Score& score, const TemplatePool& pool,
                                  std::uint64_t seed, const SynthesisOptions& opts = {}) {
    if (pool.size() == 0) throw InvalidInput("synthesize: empty template pool");
    std::string instrument = opts.instrument;
    if (instrument.empty()) {
        const auto all = pool.instruments();
        if (all.size() != 1)
            throw InvalidInput("synthesize: pool holds several instruments; pick one");
        instrument = all.front();
    }
    const auto model_list = pool.models(instrument);
    if (model_list.empty())
        throw InvalidInput("synthesize: unknown instrument " + instrument);

    RandomStream model_rng(seed, "synthesis/model/" + instrument);
    const int model = model_list[static_cast<std::size_t>(
        model_rng.uniform_int(0, static_cast<std::int64_t>(model_list.size()) - 1))];

    const double fs = pool.sample_rate();
    const auto n_total = next_pow2(static_cast<std::size_t>(
        std::llround(opts.target_seconds * fs)));
    const double total_seconds = static_cast<double>(n_total) / fs;

    // every pitch must be covered before any audio is produced
    std::vector<int> missing;
    for (const auto& e : score.events) {
        e.validate();
        if (!pool.has_pitch(instrument, model, e.pitch) &&
            std::find(missing.begin(), missing.end(), e.pitch) == missing.end())
            missing.push_back(e.pitch);
    }
    if (!missing.empty()) {
        std::string list;
        for (int p : missing) list += (list.empty() ? "" : ", ") + std::to_string(p);
        throw InvalidInput("synthesize: pool missing pitches: " + list);
    }

    SynthesisResult out;
    out.model = model;
    out.audio = Signal(std::vector<double>(n_total, 0.0), fs);

    const auto fade_len = static_cast<std::size_t>(0.005 * fs);
    for (const auto& e : score.events) {
        if (e.onset_seconds + e.duration_seconds > total_seconds) continue;  // truncated

        const Template* tpl;
        if (opts.lambda_int_target) {
            const auto cands = pool.candidates(instrument, model, e.pitch);
            tpl = &select_by_intermodulation(cands, *opts.lambda_int_target);
        } else {
            tpl = &pool.by_velocity(instrument, model, e.pitch, e.velocity);
        }

        const auto onset = static_cast<std::size_t>(std::llround(e.onset_seconds * fs));
        const auto dur = static_cast<std::size_t>(std::llround(e.duration_seconds * fs));
        const std::size_t len =
            std::min({tpl->signal.size(), dur, n_total - std::min(onset, n_total)});
        const double scale = static_cast<double>(e.velocity) / 127.0;
        for (std::size_t i = 0; i < len; ++i) {
            double v = tpl->signal.samples[i];
            if (len < tpl->signal.size() && i + fade_len >= len)
                v *= static_cast<double>(len - i) / static_cast<double>(fade_len);
            out.audio.samples[onset + i] += scale * v;
        }

        NoteEvent truth = e;
        truth.instrument = instrument;
        out.ground_truth.events.push_back(truth);
    }
    out.ground_truth.total_duration = total_seconds;
    out.ground_truth.sort_events();
    return out;
}

// ---------------------------------------------------------------------------
// Controlled degradations
// ---------------------------------------------------------------------------

/// Additive white Gaussian noise scaled so the measured SNR equals the
/// target exactly (well inside the 0.1 dB contract).
inline Signal degrade_snr(const Signal& signal, double snr_db, std::uint64_t seed) {
    signal.validate();
    const double p_signal = signal.mean_power();
    if (p_signal < 1e-20) throw InvalidInput("degrade_snr: silent input");

    RandomStream rng(seed, "degradation/snr");
    std::vector<double> noise(signal.size());
    double p_noise = 0.0;
    for (auto& v : noise) {
        v = rng.normal();
        p_noise += v * v;
    }
    p_noise /= static_cast<double>(noise.size());
    const double target_noise_power = p_signal / std::pow(10.0, snr_db / 10.0);
    const double scale = std::sqrt(target_noise_power / p_noise);

    Signal out = signal;
    for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += scale * noise[i];
    return out;
}

struct SparsityResult {
    Score score;
    std::vector<NoteEvent> removed;
};

inline constexpr double kSparsityWindowSeconds = 10.0;

/// Caps the note count in every sliding 10 s window by seeded random removal
/// of excess notes. Removed notes are returned for logging.
inline SparsityResult enforce_sparsity(const Score& score, std::size_t max_notes,
                                       std::uint64_t seed) {
    if (max_notes < 1) throw InvalidInput("enforce_sparsity: limit must be >= 1");
    RandomStream rng(seed, "degradation/sparsity");

    SparsityResult out;
    out.score = score;
    out.score.sort_events();
    auto& events = out.score.events;

    // the sliding-window maximum is attained at some event onset, so scanning
    // windows anchored at events is exhaustive
    while (true) {
        bool violated = false;
        for (std::size_t i = 0; i < events.size() && !violated; ++i) {
            const double lo = events[i].onset_seconds;
            const double hi = lo + kSparsityWindowSeconds;
            std::vector<std::size_t> inside;
            for (std::size_t j = i; j < events.size(); ++j) {
                if (events[j].onset_seconds < hi) inside.push_back(j);
                else break;
            }
            if (inside.size() > max_notes) {
                const auto pick = static_cast<std::size_t>(rng.uniform_int(
                    0, static_cast<std::int64_t>(inside.size()) - 1));
                out.removed.push_back(events[inside[pick]]);
                events.erase(events.begin() + static_cast<std::ptrdiff_t>(inside[pick]));
                violated = true;
            }
        }
        if (!violated) break;
    }
    return out;
}

}  // namespace scatmir
