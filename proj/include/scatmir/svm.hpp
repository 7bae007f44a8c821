#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/common.hpp"

namespace scatmir {

inline double gaussian_kernel(const std::vector<double>& u, const std::vector<double>& v,
                              double gamma) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = u[k] - v[k];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

/// Binary Gaussian-kernel SVM trained by SMO on the maximal KKT-violating
/// pair. Dual coefficients are stored as alpha_i * y_i.
struct SvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> coefficients;  // alpha_i * y_i, in [-C, C]
    double bias = 0.0;
    double gamma = 1.0;
    double c_slack = 1.0;
    double kkt_residual = 0.0;  // m - M at the final iterate
    std::size_t iterations = 0;
};

inline double svm_decision(const SvmModel& m, const std::vector<double>& x) {
    double acc = m.bias;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
        acc += m.coefficients[i] * gaussian_kernel(m.support_vectors[i], x, m.gamma);
    return acc;
}

/// labels must be +1/-1 with both classes present.
inline SvmModel svm_train(const std::vector<std::vector<double>>& frames,
                          const std::vector<int>& labels, double c_slack, double gamma,
                          double tol = 1e-3) {
    const std::size_t n = frames.size();
    if (n < 2 || labels.size() != n)
        throw InvalidInput("svm_train: need matching frames and labels");
    if (!(c_slack > 0.0) || !(gamma > 0.0))
        throw InvalidInput("svm_train: C and gamma must be positive");
    bool has_pos = false, has_neg = false;
    for (int y : labels) {
        if (y == 1) has_pos = true;
        else if (y == -1) has_neg = true;
        else throw InvalidInput("svm_train: labels must be +1/-1");
    }
    if (!has_pos || !has_neg) throw InvalidInput("svm_train: single-class input");

    std::vector<double> kernel(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        kernel[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = gaussian_kernel(frames[i], frames[j], gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // G_i = sum_j alpha_j y_i y_j K_ij - 1
    const auto y = [&](std::size_t i) { return static_cast<double>(labels[i]); };

    const std::size_t max_iter = std::max<std::size_t>(200000, 100 * n);
    const double bound_eps = 1e-10 * c_slack;  // alphas this close count as bound
    std::size_t it = 0;
    double m_up = 0.0, m_low = 0.0;
    for (; it < max_iter; ++it) {
        // maximal violating pair
        std::size_t i_up = n, i_low = n;
        m_up = -std::numeric_limits<double>::infinity();
        m_low = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_up = (labels[i] == 1 && alpha[i] < c_slack - bound_eps) ||
                               (labels[i] == -1 && alpha[i] > bound_eps);
            const bool in_low = (labels[i] == -1 && alpha[i] < c_slack - bound_eps) ||
                                (labels[i] == 1 && alpha[i] > bound_eps);
            const double v = -y(i) * grad[i];
            if (in_up && v > m_up) {
                m_up = v;
                i_up = i;
            }
            if (in_low && v < m_low) {
                m_low = v;
                i_low = i;
            }
        }
        if (i_up == n || i_low == n || m_up - m_low <= tol) break;

        const std::size_t i = i_up, j = i_low;
        const double yi = y(i), yj = y(j);
        double eta = kernel[i * n + i] + kernel[j * n + j] - 2.0 * kernel[i * n + j];
        if (eta <= 0.0) eta = 1e-12;

        // errors E = f(x) - y where f is biasless here; grad = y*f - 1
        const double ei = grad[i] * yi;  // f_i - y_i
        const double ej = grad[j] * yj;

        double lo, hi;
        if (labels[i] != labels[j]) {
            lo = std::max(0.0, alpha[j] - alpha[i]);
            hi = std::min(c_slack, c_slack + alpha[j] - alpha[i]);
        } else {
            lo = std::max(0.0, alpha[i] + alpha[j] - c_slack);
            hi = std::min(c_slack, alpha[i] + alpha[j]);
        }
        double aj = alpha[j] + yj * (ei - ej) / eta;
        aj = std::clamp(aj, lo, hi);
        const double ai = alpha[i] + yi * yj * (alpha[j] - aj);

        const double di = (ai - alpha[i]) * yi;
        const double dj = (aj - alpha[j]) * yj;
        if (std::abs(di) < 1e-15 && std::abs(dj) < 1e-15) break;  // numerically stuck
        for (std::size_t k = 0; k < n; ++k)
            grad[k] += y(k) * (di * kernel[i * n + k] + dj * kernel[j * n + k]);
        alpha[i] = ai;
        alpha[j] = aj;
    }

    SvmModel model;
    model.gamma = gamma;
    model.c_slack = c_slack;
    model.kkt_residual = std::max(0.0, m_up - m_low);
    model.iterations = it;
    model.bias = (m_up + m_low) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            model.support_vectors.push_back(frames[i]);
            model.coefficients.push_back(alpha[i] * y(i));
        }
    }
    return model;
}

/// Full KKT scan of a trained model against its training set; returns the
/// worst violation of the optimality conditions.
inline double svm_kkt_violation(const SvmModel& m,
                                const std::vector<std::vector<double>>& frames,
                                const std::vector<int>& labels) {
    double worst = 0.0;
    // recover alpha_i for training points: zero unless stored as a support vector
    for (std::size_t i = 0; i < frames.size(); ++i) {
        double alpha = 0.0;
        for (std::size_t s = 0; s < m.support_vectors.size(); ++s) {
            if (m.support_vectors[s] == frames[i] &&
                (m.coefficients[s] > 0) == (labels[i] > 0)) {
                alpha = std::abs(m.coefficients[s]);
                break;
            }
        }
        const double margin = static_cast<double>(labels[i]) * svm_decision(m, frames[i]);
        if (alpha <= 1e-12) worst = std::max(worst, 1.0 - margin);          // want >= 1
        else if (alpha >= m.c_slack - 1e-12) worst = std::max(worst, margin - 1.0);
        else worst = std::max(worst, std::abs(margin - 1.0));               // free SV
    }
    return worst;
}

// ---------------------------------------------------------------------------
// One-vs-one multi-class wrapper with maximum voting.
// ---------------------------------------------------------------------------

struct OvoModel {
    std::vector<std::string> classes;          // sorted
    std::vector<SvmModel> models;              // one per unordered pair (a < b)
    std::vector<std::pair<int, int>> pairs;    // class indices per model
};

inline OvoModel ovo_train(const std::vector<std::vector<double>>& frames,
                          const std::vector<std::string>& labels, double c_slack,
                          double gamma, double tol = 1e-3) {
    if (frames.size() != labels.size() || frames.empty())
        throw InvalidInput("ovo_train: need matching frames and labels");
    OvoModel ovo;
    for (const auto& l : labels)
        if (std::find(ovo.classes.begin(), ovo.classes.end(), l) == ovo.classes.end())
            ovo.classes.push_back(l);
    std::sort(ovo.classes.begin(), ovo.classes.end());
    if (ovo.classes.size() < 2) throw InvalidInput("ovo_train: need at least two classes");

    for (std::size_t a = 0; a < ovo.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < ovo.classes.size(); ++b) {
            std::vector<std::vector<double>> sub;
            std::vector<int> y;
            for (std::size_t i = 0; i < frames.size(); ++i) {
                if (labels[i] == ovo.classes[a]) {
                    sub.push_back(frames[i]);
                    y.push_back(1);
                } else if (labels[i] == ovo.classes[b]) {
                    sub.push_back(frames[i]);
                    y.push_back(-1);
                }
            }
            if (std::find(y.begin(), y.end(), 1) == y.end() ||
                std::find(y.begin(), y.end(), -1) == y.end())
                throw InvalidInput("ovo_train: class missing from training data");
            ovo.models.push_back(svm_train(sub, y, c_slack, gamma, tol));
            ovo.pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
        }
    }
    return ovo;
}

/// Per-class scores from one frame: pairwise votes plus summed decision
/// magnitudes for tie-breaking.
struct OvoScores {
    std::vector<int> votes;
    std::vector<double> strength;
};

inline OvoScores ovo_scores(const OvoModel& ovo, const std::vector<double>& x) {
    OvoScores s;
    s.votes.assign(ovo.classes.size(), 0);
    s.strength.assign(ovo.classes.size(), 0.0);
    for (std::size_t m = 0; m < ovo.models.size(); ++m) {
        const double d = svm_decision(ovo.models[m], x);
        const auto [a, b] = ovo.pairs[m];
        const int winner = d >= 0.0 ? a : b;
        s.votes[static_cast<std::size_t>(winner)] += 1;
        s.strength[static_cast<std::size_t>(winner)] += std::abs(d);
    }
    return s;
}

inline std::size_t ovo_pick(const std::vector<int>& votes, const std::vector<double>& strength) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
        if (votes[c] > votes[best] ||
            (votes[c] == votes[best] && strength[c] > strength[best]))
            best = c;
    }
    return best;
}

inline std::string ovo_predict(const OvoModel& ovo, const std::vector<double>& x) {
    const auto s = ovo_scores(ovo, x);
    return ovo.classes[ovo_pick(s.votes, s.strength)];
}

// ---------------------------------------------------------------------------
// Versioned binary container with JSON header.
// ---------------------------------------------------------------------------

inline void save_ovo(const OvoModel& ovo, const std::string& path) {
    nlohmann::json header;
    header["format"] = "scatmir-svm";
    header["version"] = 1;
    header["classes"] = ovo.classes;
    nlohmann::json models = nlohmann::json::array();
    for (std::size_t m = 0; m < ovo.models.size(); ++m) {
        const auto& sm = ovo.models[m];
        models.push_back({{"pair", {ovo.pairs[m].first, ovo.pairs[m].second}},
                          {"n_sv", sm.support_vectors.size()},
                          {"dim", sm.support_vectors.empty() ? 0 : sm.support_vectors[0].size()},
                          {"bias", sm.bias},
                          {"gamma", sm.gamma},
                          {"c", sm.c_slack}});
    }
    header["models"] = models;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot write " + path);
    const std::string h = header.dump();
    const std::uint64_t hlen = h.size();
    os.write(reinterpret_cast<const char*>(&hlen), 8);
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& sm : ovo.models) {
        for (const auto& sv : sm.support_vectors)
            os.write(reinterpret_cast<const char*>(sv.data()),
                     static_cast<std::streamsize>(sv.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(sm.coefficients.data()),
                 static_cast<std::streamsize>(sm.coefficients.size() * sizeof(double)));
    }
}

inline OvoModel load_ovo(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot read " + path);
    std::uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), 8);
    std::string h(hlen, '\0');
    is.read(h.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw ParseError("svm container: truncated header");
    const auto header = nlohmann::json::parse(h);
    if (header.at("format").get<std::string>() != "scatmir-svm" ||
        header.at("version").get<int>() != 1)
        throw ParseError("svm container: unknown format/version");

    OvoModel ovo;
    ovo.classes = header.at("classes").get<std::vector<std::string>>();
    for (const auto& jm : header.at("models")) {
        SvmModel sm;
        sm.bias = jm.at("bias").get<double>();
        sm.gamma = jm.at("gamma").get<double>();
        sm.c_slack = jm.at("c").get<double>();
        const auto n_sv = jm.at("n_sv").get<std::size_t>();
        const auto dim = jm.at("dim").get<std::size_t>();
        sm.support_vectors.assign(n_sv, std::vector<double>(dim));
        for (auto& sv : sm.support_vectors)
            is.read(reinterpret_cast<char*>(sv.data()),
                    static_cast<std::streamsize>(dim * sizeof(double)));
        sm.coefficients.resize(n_sv);
        is.read(reinterpret_cast<char*>(sm.coefficients.data()),
                static_cast<std::streamsize>(n_sv * sizeof(double)));
        ovo.models.push_back(std::move(sm));
        ovo.pairs.emplace_back(jm.at("pair")[0].get<int>(), jm.at("pair")[1].get<int>());
    }
    if (!is) throw ParseError("svm container: truncated payload");
    return ovo;
}

}  // namespace scatmir
