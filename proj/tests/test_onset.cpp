#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "scatmir/onset.hpp"

using namespace scatmir;

namespace {

OnsetFunction make_odf(std::vector<double> values, double hop = 0.005) {
    OnsetFunction odf;
    odf.values = std::move(values);
    odf.frame_hop_seconds = hop;
    return odf;
}

// exhaustive non-maximum suppression: repeatedly accept the tallest
// remaining candidate (earlier frame on ties) and drop everything within
// the suppression radius
std::vector<std::size_t> nms_oracle(const OnsetFunction& odf,
                                    const std::vector<double>& thr) {
    std::vector<std::size_t> cands;
    for (std::size_t i = 0; i < odf.size(); ++i) {
        if (!(odf.values[i] > thr[i])) continue;
        const double left = i > 0 ? odf.values[i - 1] : -1.0;
        const double right = i + 1 < odf.size() ? odf.values[i + 1] : -1.0;
        if (odf.values[i] > left && odf.values[i] >= right) cands.push_back(i);
    }
    const double gap = kPeakSuppressionSeconds / odf.frame_hop_seconds;
    std::vector<std::size_t> kept;
    std::vector<bool> alive(cands.size(), true);
    while (true) {
        std::size_t best = cands.size();
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (!alive[i]) continue;
            if (best == cands.size() || odf.values[cands[i]] > odf.values[cands[best]])
                best = i;
        }
        if (best == cands.size()) break;
        kept.push_back(cands[best]);
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (!alive[i]) continue;
            const double d = std::abs(static_cast<double>(cands[i]) -
                                      static_cast<double>(cands[best]));
            if (d < gap) alive[i] = false;
        }
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

// brute-force maximum matching on small clusters: tries every assignment
std::size_t best_matching(const std::vector<double>& det, const std::vector<double>& tru,
                          double tol) {
    if (tru.empty() || det.empty()) return 0;
    std::size_t best = 0;
    std::vector<int> assign(tru.size(), -1);
    std::vector<bool> used(det.size(), false);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t t, std::size_t count) {
        best = std::max(best, count);
        if (t == tru.size()) return;
        rec(t + 1, count);  // leave truth t unmatched
        for (std::size_t d = 0; d < det.size(); ++d) {
            if (used[d] || std::abs(det[d] - tru[t]) > tol) continue;
            used[d] = true;
            rec(t + 1, count + 1);
            used[d] = false;
        }
    };
    rec(0, 0);
    return best;
}

}  // namespace

TEST_CASE("half_wave: rectifier definition") {
    CHECK(half_wave(-3.0) == 0.0);
    CHECK(half_wave(3.0) == 3.0);
    CHECK(half_wave(0.0) == 0.0);
}

TEST_CASE("spectral_flux: constant representation gives zero ODF") {
    FeatureMatrix rep(FeatureKind::mfsc, 10, 6, 0.01);
    for (auto& v : rep.data) v = 2.5;
    const auto odf = spectral_flux_odf(rep);
    for (double v : odf.values) CHECK(v == 0.0);
}

TEST_CASE("spectral_flux: sums only positive increments (hand oracle)") {
    FeatureMatrix rep(FeatureKind::mfsc, 2, 4, 0.01);
    rep.at(0, 0) = 1.0; rep.at(0, 1) = 5.0; rep.at(0, 2) = 2.0; rep.at(0, 3) = 0.0;
    rep.at(1, 0) = 3.0; rep.at(1, 1) = 1.0; rep.at(1, 2) = 2.5; rep.at(1, 3) = 0.5;
    const auto odf = spectral_flux_odf(rep);
    CHECK(odf.values[0] == 0.0);
    CHECK(odf.values[1] == doctest::Approx(2.0 + 0.0 + 0.5 + 0.5));
}

TEST_CASE("spectral_flux: spectrogram rows pass through a square root") {
    FeatureMatrix rep(FeatureKind::spectrogram, 2, 2, 0.01);
    rep.at(0, 0) = 1.0; rep.at(0, 1) = 4.0;   // magnitudes 1, 2
    rep.at(1, 0) = 9.0; rep.at(1, 1) = 1.0;   // magnitudes 3, 1
    const auto odf = spectral_flux_odf(rep);
    CHECK(odf.values[1] == doctest::Approx(2.0));  // +2 rectified, -1 dropped
}

TEST_CASE("spectral_flux: rectification kills the decay side") {
    FeatureMatrix rep(FeatureKind::mfsc, 6, 3, 0.01);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) rep.at(r, c) = 4.0;
    // rows 3..5 decay to zero
    const auto odf = spectral_flux_odf(rep);
    for (std::size_t r = 3; r < 6; ++r) CHECK(odf.values[r] == 0.0);
}

TEST_CASE("spectral_flux: single-row input rejected") {
    FeatureMatrix rep(FeatureKind::mfsc, 1, 3, 0.01);
    CHECK_THROWS_AS(spectral_flux_odf(rep), InvalidInput);
}

TEST_CASE("adaptive_threshold: zero ODF gives the static offset") {
    const auto odf = make_odf(std::vector<double>(50, 0.0));
    const auto thr = adaptive_threshold(odf, 8, 0.3);
    for (double v : thr) CHECK(v == doctest::Approx(0.3));
}

TEST_CASE("adaptive_threshold: isolated impulse leaves the median at zero") {
    std::vector<double> v(101, 0.0);
    v[50] = 10.0;
    const auto thr = adaptive_threshold(make_odf(std::move(v)), 4, 0.2);
    CHECK(thr[10] == doctest::Approx(0.2));
    CHECK(thr[50] == doctest::Approx(0.2));  // median of 9 values, one nonzero
    CHECK(thr[90] == doctest::Approx(0.2));
}

TEST_CASE("adaptive_threshold: matches a sliding-median sort oracle") {
    RandomStream rng(149, "median");
    std::vector<double> v(200);
    for (auto& x : v) x = rng.uniform(0.0, 5.0);
    const auto odf = make_odf(std::move(v));
    const double scale = 1.7, offset = 0.05;
    const auto thr = adaptive_threshold(odf, 3, offset, scale);
    for (std::size_t i = 0; i < odf.size(); ++i) {
        const std::size_t lo = i >= 3 ? i - 3 : 0;
        const std::size_t hi = std::min(odf.size() - 1, i + 3);
        std::vector<double> window(odf.values.begin() + static_cast<std::ptrdiff_t>(lo),
                                   odf.values.begin() + static_cast<std::ptrdiff_t>(hi + 1));
        std::sort(window.begin(), window.end());
        double med = window[window.size() / 2];
        if (window.size() % 2 == 0)
            med = (med + window[window.size() / 2 - 1]) / 2.0;
        CHECK(thr[i] == doctest::Approx(offset + scale * med).epsilon(1e-12));
    }
}

TEST_CASE("pick_peaks: all below threshold yields empty list") {
    const auto odf = make_odf({0.1, 0.5, 0.2, 0.4, 0.1});
    const auto peaks = pick_peaks(odf, std::vector<double>(5, 1.0));
    CHECK(peaks.size() == 0);
}

TEST_CASE("pick_peaks: 10 ms apart, larger peak wins") {
    // hop 5 ms -> peaks at frames 10 and 12 are 10 ms apart
    std::vector<double> v(30, 0.0);
    v[10] = 1.0;
    v[12] = 0.8;
    const auto odf = make_odf(std::move(v), 0.005);
    const auto peaks = pick_peaks(odf, std::vector<double>(30, 0.1));
    REQUIRE(peaks.size() == 1);
    CHECK(peaks.times_seconds[0] == doctest::Approx(10 * 0.005));
}

TEST_CASE("pick_peaks: five well-separated peaks all survive, vs oracle") {
    RandomStream rng(151, "peaks");
    std::vector<double> v(300, 0.0);
    const std::vector<std::size_t> at = {20, 70, 130, 200, 270};
    for (std::size_t i : at) v[i] = rng.uniform(1.0, 2.0);
    const auto odf = make_odf(std::move(v), 0.005);
    const std::vector<double> thr(300, 0.5);
    const auto peaks = pick_peaks(odf, thr);
    REQUIRE(peaks.size() == 5);
    const auto oracle = nms_oracle(odf, thr);
    REQUIRE(oracle.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(peaks.times_seconds[i] == doctest::Approx(static_cast<double>(oracle[i]) * 0.005));
}

TEST_CASE("pick_peaks: random ODFs match the exhaustive suppression oracle") {
    RandomStream rng(157, "peaks-random");
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(120);
        for (auto& x : v) x = rng.uniform(0.0, 1.0);
        const auto odf = make_odf(std::move(v), 0.004);
        std::vector<double> thr(120, 0.5);
        const auto got = pick_peaks(odf, thr);
        const auto want = nms_oracle(odf, thr);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(got.times_seconds[i] ==
                  doctest::Approx(static_cast<double>(want[i]) * 0.004));
    }
}

TEST_CASE("pick_peaks: survivors pairwise >= 25 ms apart") {
    RandomStream rng(163, "peaks-gap");
    std::vector<double> v(400);
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    const auto odf = make_odf(std::move(v), 0.003);
    const auto peaks = pick_peaks(odf, std::vector<double>(400, 0.3));
    for (std::size_t i = 1; i < peaks.size(); ++i)
        CHECK(peaks.times_seconds[i] - peaks.times_seconds[i - 1] >=
              kPeakSuppressionSeconds - 1e-12);
}

TEST_CASE("match_onsets: identical lists are all true positives") {
    OnsetList a;
    a.times_seconds = {0.5, 1.0, 2.0};
    const auto c = match_onsets(a, a);
    CHECK(c.tp == 3);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
}

TEST_CASE("match_onsets: the 40 ms boundary") {
    OnsetList truth;
    truth.times_seconds = {1.0};
    OnsetList inside;
    inside.times_seconds = {1.039};
    OnsetList outside;
    outside.times_seconds = {1.041};
    const auto a = match_onsets(inside, truth);
    CHECK(a.tp == 1);
    CHECK(a.fp == 0);
    CHECK(a.fn == 0);
    const auto b = match_onsets(outside, truth);
    CHECK(b.tp == 0);
    CHECK(b.fp == 1);
    CHECK(b.fn == 1);
}

TEST_CASE("match_onsets: overlapping cluster matches the optimal assignment") {
    OnsetList truth;
    truth.times_seconds = {1.0, 1.05};
    OnsetList det;
    det.times_seconds = {1.025};
    const auto c = match_onsets(det, truth);
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 0);
}

TEST_CASE("match_onsets: random clusters match the exhaustive assignment oracle") {
    RandomStream rng(167, "match");
    for (int trial = 0; trial < 50; ++trial) {
        const auto nd = static_cast<std::size_t>(rng.uniform_int(0, 6));
        const auto nt = static_cast<std::size_t>(rng.uniform_int(1, 6));
        std::vector<double> det(nd), tru(nt);
        for (auto& t : det) t = rng.uniform(0.0, 0.4);
        for (auto& t : tru) t = rng.uniform(0.0, 0.4);
        std::sort(det.begin(), det.end());
        std::sort(tru.begin(), tru.end());
        OnsetList d, t;
        d.times_seconds = det;
        t.times_seconds = tru;
        const auto got = match_onsets(d, t);
        const auto want_tp = best_matching(det, tru, kOnsetToleranceSeconds);
        CHECK(got.tp == want_tp);
        CHECK(got.tp + got.fn == nt);
        CHECK(got.tp + got.fp == nd);
        CHECK(got.tp <= std::min(nd, nt));
    }
}

TEST_CASE("match_onsets: negative-frame TN convention") {
    OnsetList truth;
    truth.times_seconds = {0.5};
    OnsetList det;
    det.times_seconds = {0.1, 0.5};
    // 100 frames at 10 ms; frames within 40 ms of 0.5 s: indices 46..54 -> 9 positives
    const auto c = match_onsets(det, truth, 0.040, 100, 0.010);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 91 - 1);
}

TEST_CASE("metrics: harmonic-mean identities and fixtures") {
    {
        const auto m = metrics({5, 5, 5, 0});
        CHECK(m.tpr == doctest::Approx(0.5));
        CHECK(m.ppv == doctest::Approx(0.5));
        CHECK(m.f_measure == doctest::Approx(0.5));
    }
    {
        const auto m = metrics({4, 0, 0, 0});
        CHECK(m.tpr == 1.0);
        CHECK(m.ppv == 1.0);
        CHECK(m.f_measure == 1.0);
    }
    {
        const auto m = metrics({7, 3, 3, 87});
        CHECK(m.tpr == doctest::Approx(0.7));
        CHECK(m.fpr == doctest::Approx(1.0 / 30.0));
        CHECK(m.ppv == doctest::Approx(0.7));
        CHECK(m.f_measure == doctest::Approx(0.7));
    }
    {
        const auto m = metrics({0, 0, 0, 0});
        CHECK(m.tpr == 0.0);
        CHECK(m.fpr == 0.0);
        CHECK(m.ppv == 0.0);
        CHECK(m.f_measure == 0.0);
    }
}

TEST_CASE("e_op: paper operating points") {
    auto two_dp = [](double v) { return std::round(v * 100.0) / 100.0; };
    CHECK(two_dp(e_op(0.74, 0.08)) == doctest::Approx(0.27));
    CHECK(two_dp(e_op(0.69, 0.09)) == doctest::Approx(0.32));
    CHECK(e_op(1.0, 0.0) == 0.0);
}

TEST_CASE("roc_sweep: monotone TP counts and operating point") {
    RandomStream rng(173, "roc");
    // synthetic ODF: clear peaks on a noise floor
    std::vector<double> v(600, 0.0);
    OnsetList truth;
    for (std::size_t i = 0; i < 600; ++i) v[i] = 0.05 * rng.uniform(0.0, 1.0);
    for (std::size_t p = 50; p < 600; p += 100) {
        v[p] = 1.0 + 0.2 * rng.uniform(0.0, 1.0);
        truth.times_seconds.push_back(static_cast<double>(p) * 0.005);
    }
    const auto odf = make_odf(std::move(v), 0.005);

    // monotonicity: higher scale never yields more raw TPs
    std::size_t prev_tp = std::numeric_limits<std::size_t>::max();
    for (double scale : {0.5, 1.0, 2.0, 4.0, 8.0, 1000.0}) {
        const auto thr = adaptive_threshold(odf, 8, 0.01 * odf.max_value(), scale);
        const auto peaks = pick_peaks(odf, thr);
        const auto c = match_onsets(peaks, truth, 0.04, odf.size(), 0.005);
        CHECK(c.tp <= prev_tp);
        prev_tp = c.tp;
    }

    const auto curve = roc_sweep({odf}, {truth}, {0.25, 0.5, 1.0, 2.0, 4.0});
    CHECK(curve.e_op <= e_op(curve.points.front().tpr, curve.points.front().fpr) + 1e-12);
    CHECK(curve.op().tpr == doctest::Approx(1.0));
    CHECK(curve.e_op == doctest::Approx(0.0).epsilon(0.05));
    for (const auto& p : curve.points) {
        CHECK(p.tpr >= 0.0);
        CHECK(p.tpr <= 1.0);
        CHECK(p.fpr >= 0.0);
        CHECK(p.fpr <= 1.0);
    }
}

TEST_CASE("roc_sweep: input validation") {
    const auto odf = make_odf({0.0, 1.0, 0.0});
    OnsetList empty;
    CHECK_THROWS_AS(roc_sweep({odf}, {empty}, {}), InvalidInput);
    CHECK_THROWS_AS(roc_sweep({odf}, {empty}, {1.0}), InvalidInput);
}

TEST_CASE("onset csv/json output shapes") {
    OnsetList l;
    l.times_seconds = {0.1, 0.2};
    l.strengths = {1.0, 2.0};
    std::ostringstream os;
    write_onsets_csv(l, os);
    CHECK(os.str().find("time_seconds,strength") == 0);

    RocCurve c;
    c.points.push_back({1.0, 0.74, 0.08, 0.9, 0.8});
    c.operating_point = 0;
    c.e_op = e_op(0.74, 0.08);
    const auto j = roc_summary_json(c);
    CHECK(j.at("e_op").get<double>() == doctest::Approx(0.272029));
    std::ostringstream rs;
    write_roc_csv(c, rs);
    CHECK(rs.str().find("scale,TPR,FPR,PPV,F") == 0);
}
