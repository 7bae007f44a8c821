#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "scatmir/common.hpp"
#include "scatmir/matrix.hpp"
#include "scatmir/signal.hpp"
#include "scatmir/svm.hpp"

namespace scatmir {

/// One audio track's frame features plus its instrument label.
struct Track {
    std::string id;
    std::string label;
    std::vector<std::vector<double>> frames;
};

inline constexpr double kSilenceThresholdDbfs = -60.0;

/// Mean power of each feature row's signal window in dBFS; rows are assumed
/// to start at multiples of the hop.
inline std::vector<double> frame_powers_db(const Signal& signal, double hop_seconds,
                                           double window_seconds, std::size_t n_rows) {
    const auto hop = static_cast<std::size_t>(std::llround(hop_seconds * signal.sample_rate));
    const auto win = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(window_seconds * signal.sample_rate)));
    std::vector<double> out(n_rows, -300.0);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t start = r * hop;
        if (start >= signal.size()) break;
        const std::size_t stop = std::min(signal.size(), start + win);
        double acc = 0.0;
        for (std::size_t i = start; i < stop; ++i)
            acc += signal.samples[i] * signal.samples[i];
        acc /= static_cast<double>(stop - start);
        out[r] = 10.0 * std::log10(std::max(acc, 1e-30));
    }
    return out;
}

/// Rows whose window power is below the threshold are dropped before
/// training or prediction.
inline std::vector<std::vector<double>> non_silent_rows(
    const FeatureMatrix& features, const std::vector<double>& powers_db,
    double threshold_db = kSilenceThresholdDbfs) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < features.n_rows; ++r) {
        if (r < powers_db.size() && powers_db[r] < threshold_db) continue;
        rows.push_back(features.row_vec(r));
    }
    return rows;
}

/// Per-dimension zero-mean unit-variance transform fitted on training frames.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const std::vector<std::vector<double>>& frames) {
        if (frames.empty()) throw InvalidInput("standardizer: no frames");
        const std::size_t d = frames.front().size();
        Standardizer s;
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        for (const auto& f : frames)
            for (std::size_t k = 0; k < d; ++k) s.mean[k] += f[k];
        for (auto& v : s.mean) v /= static_cast<double>(frames.size());
        std::vector<double> var(d, 0.0);
        for (const auto& f : frames)
            for (std::size_t k = 0; k < d; ++k) {
                const double c = f[k] - s.mean[k];
                var[k] += c * c;
            }
        for (std::size_t k = 0; k < d; ++k) {
            const double sd = std::sqrt(var[k] / static_cast<double>(frames.size()));
            s.scale[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
        }
        return s;
    }

    std::vector<double> apply(const std::vector<double>& f) const {
        std::vector<double> out(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) out[k] = (f[k] - mean[k]) * scale[k];
        return out;
    }
};

/// Maximum voting: classify every frame, then take the plurality class over
/// the track; ties fall back to summed decision magnitude, then class order.
inline std::string classify_track(const OvoModel& ovo,
                                  const std::vector<std::vector<double>>& frames) {
    if (frames.empty()) throw InvalidInput("classify_track: empty track");
    std::vector<int> votes(ovo.classes.size(), 0);
    std::vector<double> strength(ovo.classes.size(), 0.0);
    for (const auto& f : frames) {
        const auto s = ovo_scores(ovo, f);
        const std::size_t c = ovo_pick(s.votes, s.strength);
        votes[c] += 1;
        for (std::size_t k = 0; k < strength.size(); ++k) strength[k] += s.strength[k];
    }
    return ovo.classes[ovo_pick(votes, strength)];
}

struct HyperGrid {
    std::vector<double> c_values{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_values{1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0, 0.25, 1.0, 4.0};
};

struct TrackResult {
    std::string track_id;
    std::string true_label;
    std::string predicted_label;
};

struct CvReport {
    std::vector<std::string> classes;
    double best_c = 0.0;
    double best_gamma = 0.0;
    double cv_error = 0.0;          // grid-search error on training folds
    double test_error = 0.0;        // held-out track error
    std::vector<TrackResult> results;              // held-out tracks
    std::vector<std::string> train_track_ids;
    std::vector<std::string> test_track_ids;
};

struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::size_t> counts;  // row-major [true][predicted]
    std::vector<double> per_class_error;
    double average_error = 0.0;

    std::size_t at(std::size_t t, std::size_t p) const {
        return counts[t * labels.size() + p];
    }
    std::size_t row_sum(std::size_t t) const {
        std::size_t s = 0;
        for (std::size_t p = 0; p < labels.size(); ++p) s += at(t, p);
        return s;
    }
};

namespace detail {

inline OvoModel train_standardized(const std::vector<const Track*>& tracks, double c,
                                   double gamma, const Standardizer& std_xform) {
    std::vector<std::vector<double>> frames;
    std::vector<std::string> labels;
    for (const auto* t : tracks)
        for (const auto& f : t->frames) {
            frames.push_back(std_xform.apply(f));
            labels.push_back(t->label);
        }
    return ovo_train(frames, labels, c, gamma);
}

inline double track_error(const OvoModel& ovo, const std::vector<const Track*>& tracks,
                          const Standardizer& std_xform,
                          std::vector<TrackResult>* results = nullptr) {
    std::size_t wrong = 0;
    for (const auto* t : tracks) {
        std::vector<std::vector<double>> frames;
        for (const auto& f : t->frames) frames.push_back(std_xform.apply(f));
        const auto predicted = classify_track(ovo, frames);
        if (predicted != t->label) ++wrong;
        if (results) results->push_back({t->id, t->label, predicted});
    }
    return tracks.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(tracks.size());
}

}  // namespace detail

/// Track-level 70/30 split (stratified per class), hyperparameters selected
/// by k-fold cross-validation on the training split, final error reported on
/// the held-out tracks. All randomness flows from the seed's named streams.
inline CvReport cross_validate(const std::vector<Track>& dataset, std::size_t folds,
                               double train_fraction, const HyperGrid& grid,
                               std::uint64_t seed) {
    if (dataset.empty()) throw InvalidInput("cross_validate: empty dataset");
    if (folds < 2) throw InvalidInput("cross_validate: need at least two folds");
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw InvalidInput("cross_validate: train fraction must be in (0, 1)");
    if (grid.c_values.empty() || grid.gamma_values.empty())
        throw InvalidInput("cross_validate: empty hyperparameter grid");
    for (const auto& t : dataset)
        if (t.frames.empty())
            throw InvalidInput("cross_validate: track with no frames: " + t.id);

    std::map<std::string, std::vector<const Track*>> by_class;
    for (const auto& t : dataset) by_class[t.label].push_back(&t);
    CvReport report;
    for (const auto& [label, tracks] : by_class) {
        if (tracks.size() < folds)
            throw InvalidInput("cross_validate: class " + label + " has fewer tracks than folds");
        report.classes.push_back(label);
    }

    // stratified track-level split
    RandomStream split_rng(seed, "split");
    std::vector<const Track*> train, test;
    for (auto& [label, tracks] : by_class) {
        auto shuffled = tracks;
        split_rng.shuffle(shuffled);
        const auto n_train = std::max<std::size_t>(
            folds, static_cast<std::size_t>(std::llround(
                       train_fraction * static_cast<double>(shuffled.size()))));
        for (std::size_t i = 0; i < shuffled.size(); ++i)
            (i < n_train && i < shuffled.size() - 1 ? train : test).push_back(shuffled[i]);
    }
    std::sort(train.begin(), train.end(),
              [](const Track* a, const Track* b) { return a->id < b->id; });
    std::sort(test.begin(), test.end(),
              [](const Track* a, const Track* b) { return a->id < b->id; });
    for (const auto* t : train) report.train_track_ids.push_back(t->id);
    for (const auto* t : test) report.test_track_ids.push_back(t->id);

    // fold assignment, stratified and seeded
    RandomStream fold_rng(seed, "cv-folds");
    std::map<const Track*, std::size_t> fold_of;
    {
        std::map<std::string, std::vector<const Track*>> train_by_class;
        for (const auto* t : train) train_by_class[t->label].push_back(t);
        for (auto& [label, tracks] : train_by_class) {
            fold_rng.shuffle(tracks);
            for (std::size_t i = 0; i < tracks.size(); ++i) fold_of[tracks[i]] = i % folds;
        }
    }

    // grid search
    double best_error = std::numeric_limits<double>::infinity();
    for (double c : grid.c_values) {
        for (double gamma : grid.gamma_values) {
            double err_sum = 0.0;
            std::size_t held_total = 0, wrong_total = 0;
            for (std::size_t f = 0; f < folds; ++f) {
                std::vector<const Track*> fit, held;
                for (const auto* t : train)
                    (fold_of[t] == f ? held : fit).push_back(t);
                if (held.empty() || fit.empty()) continue;
                std::vector<std::vector<double>> fit_frames;
                for (const auto* t : fit)
                    for (const auto& fr : t->frames) fit_frames.push_back(fr);
                const auto xform = Standardizer::fit(fit_frames);
                const auto ovo = detail::train_standardized(fit, c, gamma, xform);
                std::size_t wrong = 0;
                for (const auto* t : held) {
                    std::vector<std::vector<double>> frames;
                    for (const auto& fr : t->frames) frames.push_back(xform.apply(fr));
                    if (classify_track(ovo, frames) != t->label) ++wrong;
                }
                wrong_total += wrong;
                held_total += held.size();
            }
            err_sum = held_total ? static_cast<double>(wrong_total) /
                                       static_cast<double>(held_total)
                                 : 1.0;
            if (err_sum < best_error) {
                best_error = err_sum;
                report.best_c = c;
                report.best_gamma = gamma;
            }
        }
    }
    report.cv_error = best_error;

    // final model on the full training split, evaluated on held-out tracks
    std::vector<std::vector<double>> train_frames;
    for (const auto* t : train)
        for (const auto& fr : t->frames) train_frames.push_back(fr);
    const auto xform = Standardizer::fit(train_frames);
    const auto ovo = detail::train_standardized(train, report.best_c, report.best_gamma, xform);
    report.test_error = detail::track_error(ovo, test, xform, &report.results);
    return report;
}

/// Tabulates held-out (true, predicted) pairs from a report.
inline ConfusionMatrix confusion(const CvReport& report) {
    ConfusionMatrix cm;
    cm.labels = report.classes;
    const std::size_t n = cm.labels.size();
    cm.counts.assign(n * n, 0);
    auto index_of = [&](const std::string& l) {
        return static_cast<std::size_t>(
            std::find(cm.labels.begin(), cm.labels.end(), l) - cm.labels.begin());
    };
    for (const auto& r : report.results) {
        const auto t = index_of(r.true_label);
        const auto p = index_of(r.predicted_label);
        if (t >= n || p >= n) throw InvalidInput("confusion: unknown label in results");
        cm.counts[t * n + p] += 1;
    }
    cm.per_class_error.assign(n, 0.0);
    double err_sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto total = cm.row_sum(t);
        const double err = total == 0 ? 0.0
                                      : 1.0 - static_cast<double>(cm.at(t, t)) /
                                                  static_cast<double>(total);
        cm.per_class_error[t] = err;
        err_sum += err;
    }
    cm.average_error = n ? err_sum / static_cast<double>(n) : 0.0;
    return cm;
}

/// CSV in the row-normalized percentage layout of the paper's confusion
/// tables: one row per true class, columns are predicted classes.
inline void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& os) {
    os << "true\\predicted";
    for (const auto& l : cm.labels) os << "," << l;
    os << "\n";
    char buf[32];
    for (std::size_t t = 0; t < cm.labels.size(); ++t) {
        os << cm.labels[t];
        const auto total = cm.row_sum(t);
        for (std::size_t p = 0; p < cm.labels.size(); ++p) {
            const double pct = total == 0 ? 0.0
                                          : 100.0 * static_cast<double>(cm.at(t, p)) /
                                                static_cast<double>(total);
            std::snprintf(buf, sizeof buf, ",%.1f", pct);
            os << buf;
        }
        os << "\n";
    }
}

inline void write_error_table_csv(const ConfusionMatrix& cm, std::ostream& os) {
    os << "class,error_rate_percent\n";
    char buf[64];
    for (std::size_t t = 0; t < cm.labels.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%s,%.1f\n", cm.labels[t].c_str(),
                      100.0 * cm.per_class_error[t]);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "average,%.1f\n", 100.0 * cm.average_error);
    os << buf;
}

}  // namespace scatmir
