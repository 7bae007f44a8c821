#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/common.hpp"
#include "scatmir/matrix.hpp"

namespace scatmir {

/// Half-wave rectifier of Eq-style spectral flux: keeps only increases.
inline double half_wave(double x) { return (x + std::abs(x)) / 2.0; }

/// Per-frame novelty signal; values are nonnegative by construction.
struct OnsetFunction {
    std::vector<double> values;
    double frame_hop_seconds = 0.0;
    double time_offset_seconds = 0.0;

    std::size_t size() const { return values.size(); }
    double max_value() const {
        return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    }
};

struct OnsetList {
    std::vector<double> times_seconds;  // strictly increasing
    std::vector<double> strengths;      // optional, parallel to times

    std::size_t size() const { return times_seconds.size(); }
};

struct DetectionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct Metrics {
    double tpr = 0.0, fpr = 0.0, ppv = 0.0, f_measure = 0.0;
};

struct RocPoint {
    double threshold_scale = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    double ppv = 0.0;
    double f_measure = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    std::size_t operating_point = 0;  // index into points
    double e_op = 0.0;

    const RocPoint& op() const { return points[operating_point]; }
};

inline double e_op(double tpr, double fpr) {
    return std::sqrt((1.0 - tpr) * (1.0 - tpr) + fpr * fpr);
}

/// Spectral-flux detection function over magnitude rows:
/// D(n) = sum_k H(|X(n,k)| - |X(n-1,k)|), D(0) = 0. The spectrogram kind
/// stores squared magnitudes, so its rows pass through a square root first;
/// all other representations are already magnitudes.
inline OnsetFunction spectral_flux_odf(const FeatureMatrix& rep) {
    if (rep.n_rows < 2) throw InvalidInput("spectral_flux: need at least two rows");
    const bool squared = rep.kind == FeatureKind::spectrogram;

    OnsetFunction odf;
    odf.frame_hop_seconds = rep.frame_hop_seconds;
    odf.time_offset_seconds = rep.time_offset_seconds;
    odf.values.assign(rep.n_rows, 0.0);
    std::vector<double> prev(rep.n_cols), cur(rep.n_cols);
    for (std::size_t c = 0; c < rep.n_cols; ++c)
        prev[c] = squared ? std::sqrt(rep.at(0, c)) : rep.at(0, c);
    for (std::size_t r = 1; r < rep.n_rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < rep.n_cols; ++c) {
            cur[c] = squared ? std::sqrt(rep.at(r, c)) : rep.at(r, c);
            acc += half_wave(cur[c] - prev[c]);
        }
        odf.values[r] = acc;
        std::swap(prev, cur);
    }
    return odf;
}

/// delta(n) = delta_static + scale * median(odf[n-M .. n+M]); edge frames use
/// the truncated window.
inline std::vector<double> adaptive_threshold(const OnsetFunction& odf,
                                              std::size_t m_half_window,
                                              double delta_static, double scale = 1.0) {
    if (m_half_window < 1) throw InvalidInput("adaptive_threshold: M must be >= 1");
    const std::size_t n = odf.size();
    std::vector<double> out(n, 0.0);
    std::vector<double> window;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= m_half_window ? i - m_half_window : 0;
        const std::size_t hi = std::min(n - 1, i + m_half_window);
        window.assign(odf.values.begin() + static_cast<std::ptrdiff_t>(lo),
                      odf.values.begin() + static_cast<std::ptrdiff_t>(hi + 1));
        const std::size_t mid = window.size() / 2;
        std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid),
                         window.end());
        double med = window[mid];
        if (window.size() % 2 == 0) {
            const double below =
                *std::max_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid));
            med = (med + below) / 2.0;
        }
        out[i] = delta_static + scale * med;
    }
    return out;
}

inline constexpr double kPeakSuppressionSeconds = 0.025;

/// Local maxima strictly above the threshold; of any two peaks closer than
/// 25 ms the larger survives, ties resolved toward the earlier frame.
inline OnsetList pick_peaks(const OnsetFunction& odf, const std::vector<double>& threshold) {
    if (threshold.size() != odf.size())
        throw InvalidInput("pick_peaks: threshold length mismatch");
    const std::size_t n = odf.size();

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(odf.values[i] > threshold[i])) continue;
        const double left = i > 0 ? odf.values[i - 1] : -1.0;
        const double right = i + 1 < n ? odf.values[i + 1] : -1.0;
        if (odf.values[i] > left && odf.values[i] >= right) candidates.push_back(i);
    }

    // greedy non-maximum suppression, tallest first, earlier frame on ties
    std::vector<std::size_t> order = candidates;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (odf.values[a] != odf.values[b]) return odf.values[a] > odf.values[b];
        return a < b;
    });
    const double min_gap = kPeakSuppressionSeconds / odf.frame_hop_seconds;
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        bool suppressed = false;
        for (std::size_t k : kept) {
            const double gap = idx > k ? static_cast<double>(idx - k)
                                       : static_cast<double>(k - idx);
            if (gap < min_gap) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    std::sort(kept.begin(), kept.end());

    OnsetList out;
    for (std::size_t idx : kept) {
        out.times_seconds.push_back(odf.time_offset_seconds +
                                    static_cast<double>(idx) * odf.frame_hop_seconds);
        out.strengths.push_back(odf.values[idx]);
    }
    return out;
}

inline constexpr double kOnsetToleranceSeconds = 0.040;

/// One-to-one greedy matching in time order: each ground-truth onset takes
/// the earliest unmatched detection within +/-tol. For this 1-D interval
/// structure the greedy assignment attains the maximum matching size.
///
/// TN follows the negative-frame convention: negatives are analysis frames
/// not within +/-tol of any truth onset, and TN = negatives - FP. Callers
/// that only need TPR/PPV/F may pass n_frames = 0 (TN stays 0).
inline DetectionCounts match_onsets(const OnsetList& detected, const OnsetList& truth,
                                    double tol_seconds = kOnsetToleranceSeconds,
                                    std::size_t n_frames = 0,
                                    double frame_hop_seconds = 0.0,
                                    double frame_time_offset_seconds = 0.0) {
    DetectionCounts counts;
    std::vector<bool> used(detected.size(), false);
    for (double t : truth.times_seconds) {
        bool matched = false;
        for (std::size_t i = 0; i < detected.size(); ++i) {
            const double d = detected.times_seconds[i];
            if (d < t - tol_seconds) continue;
            if (d > t + tol_seconds) break;
            if (!used[i]) {
                used[i] = true;
                matched = true;
                break;
            }
        }
        if (matched) ++counts.tp;
        else ++counts.fn;
    }
    counts.fp = detected.size() - counts.tp;

    if (n_frames > 0 && frame_hop_seconds > 0.0) {
        std::size_t negatives = 0;
        std::size_t t_idx = 0;
        for (std::size_t f = 0; f < n_frames; ++f) {
            const double time =
                frame_time_offset_seconds + static_cast<double>(f) * frame_hop_seconds;
            while (t_idx < truth.size() &&
                   truth.times_seconds[t_idx] < time - tol_seconds - 1e-9)
                ++t_idx;
            const bool near = t_idx < truth.size() &&
                              std::abs(truth.times_seconds[t_idx] - time) <=
                                  tol_seconds + 1e-9;
            if (!near) ++negatives;
        }
        counts.tn = negatives > counts.fp ? negatives - counts.fp : 0;
    }
    return counts;
}

/// TPR/FPR/PPV/F with zero denominators mapping to 0.
inline Metrics metrics(const DetectionCounts& c) {
    Metrics m;
    const double tp = static_cast<double>(c.tp);
    const double fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn);
    const double tn = static_cast<double>(c.tn);
    m.tpr = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
    m.fpr = (fp + tn) > 0.0 ? fp / (fp + tn) : 0.0;
    m.ppv = (tp + fp) > 0.0 ? tp / (tp + fp) : 0.0;
    m.f_measure = (m.ppv + m.tpr) > 0.0 ? 2.0 * m.ppv * m.tpr / (m.ppv + m.tpr) : 0.0;
    return m;
}

struct SweepParams {
    std::size_t median_half_window = 8;
    double delta_static_fraction = 0.01;  // of each ODF's global max
    double tolerance_seconds = kOnsetToleranceSeconds;
};

/// Threshold sweep over a set of test sequences: for each scale runs
/// threshold -> peaks -> match, averages the metrics across sequences, and
/// selects the operating point minimizing E_OP.
inline RocCurve roc_sweep(const std::vector<OnsetFunction>& odfs,
                          const std::vector<OnsetList>& truths,
                          const std::vector<double>& threshold_scales,
                          const SweepParams& params = {}) {
    if (threshold_scales.empty()) throw InvalidInput("roc_sweep: empty scale list");
    if (odfs.size() != truths.size())
        throw InvalidInput("roc_sweep: sequence/truth count mismatch");
    if (odfs.empty()) throw InvalidInput("roc_sweep: no sequences");
    std::size_t total_truth = 0;
    for (const auto& t : truths) total_truth += t.size();
    if (total_truth == 0)
        throw InvalidInput("roc_sweep: no ground-truth onsets in any sequence");

    RocCurve curve;
    for (double scale : threshold_scales) {
        Metrics avg;
        for (std::size_t s = 0; s < odfs.size(); ++s) {
            const auto thr = adaptive_threshold(
                odfs[s], params.median_half_window,
                params.delta_static_fraction * odfs[s].max_value(), scale);
            const auto peaks = pick_peaks(odfs[s], thr);
            const auto counts =
                match_onsets(peaks, truths[s], params.tolerance_seconds, odfs[s].size(),
                             odfs[s].frame_hop_seconds, odfs[s].time_offset_seconds);
            const auto m = metrics(counts);
            avg.tpr += m.tpr;
            avg.fpr += m.fpr;
            avg.ppv += m.ppv;
            avg.f_measure += m.f_measure;
        }
        const double n = static_cast<double>(odfs.size());
        curve.points.push_back(
            {scale, avg.tpr / n, avg.fpr / n, avg.ppv / n, avg.f_measure / n});
    }

    curve.operating_point = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const double e = e_op(curve.points[i].tpr, curve.points[i].fpr);
        if (e < best) {
            best = e;
            curve.operating_point = i;
        }
    }
    curve.e_op = best;
    return curve;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void write_onsets_csv(const OnsetList& onsets, std::ostream& os) {
    os << "time_seconds,strength\n";
    char buf[80];
    for (std::size_t i = 0; i < onsets.size(); ++i) {
        const double s = i < onsets.strengths.size() ? onsets.strengths[i] : 0.0;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", onsets.times_seconds[i], s);
        os << buf;
    }
}

inline void write_roc_csv(const RocCurve& curve, std::ostream& os) {
    os << "scale,TPR,FPR,PPV,F\n";
    char buf[160];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      p.threshold_scale, p.tpr, p.fpr, p.ppv, p.f_measure);
        os << buf;
    }
}

inline nlohmann::json roc_summary_json(const RocCurve& curve) {
    const auto& op = curve.op();
    return {{"operating_point",
             {{"scale", op.threshold_scale},
              {"tpr", op.tpr},
              {"fpr", op.fpr},
              {"ppv", op.ppv},
              {"f_measure", op.f_measure}}},
            {"e_op", curve.e_op}};
}

}  // namespace scatmir
