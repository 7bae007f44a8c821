#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/common.hpp"

namespace scatmir {

namespace detail {

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n*n).
/// Returns eigenvalues descending with matching rows of `vectors`.
inline void eigen_symmetric(std::vector<double> a, std::size_t n,
                            std::vector<double>& values, std::vector<double>& vectors) {
    vectors.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-22 * static_cast<double>(n * n)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vpk = vectors[p * n + k];
                    const double vqk = vectors[q * n + k];
                    vectors[p * n + k] = c * vpk - s * vqk;
                    vectors[q * n + k] = s * vpk + c * vqk;
                }
            }
        }
    }

    values.resize(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = a[i * n + i];

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
    std::vector<double> sv(n), svec(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        sv[i] = values[order[i]];
        for (std::size_t k = 0; k < n; ++k) svec[i * n + k] = vectors[order[i] * n + k];
    }
    values = std::move(sv);
    vectors = std::move(svec);
}

}  // namespace detail

/// Mean vector plus orthonormal projection rows, ordered by descending
/// explained variance.
struct PcaModel {
    std::vector<double> mean;
    std::vector<double> basis;  // row-major, out_dim rows of length in_dim
    std::vector<double> explained_variance;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;

    std::vector<double> basis_row(std::size_t r) const {
        return {basis.begin() + static_cast<std::ptrdiff_t>(r * in_dim),
                basis.begin() + static_cast<std::ptrdiff_t>((r + 1) * in_dim)};
    }
};

inline PcaModel pca_fit(const std::vector<std::vector<double>>& frames, std::size_t out_dim) {
    if (frames.empty()) throw InvalidInput("pca_fit: no frames");
    const std::size_t d = frames.front().size();
    if (d == 0) throw InvalidInput("pca_fit: zero-dimensional frames");
    if (out_dim == 0 || out_dim > d)
        throw InvalidInput("pca_fit: out_dim must be in [1, input dim]");
    if (frames.size() < out_dim)
        throw InvalidInput("pca_fit: need at least out_dim frames");
    for (const auto& f : frames)
        if (f.size() != d) throw InvalidInput("pca_fit: ragged frame dimensions");

    PcaModel m;
    m.in_dim = d;
    m.out_dim = out_dim;
    m.mean.assign(d, 0.0);
    for (const auto& f : frames)
        for (std::size_t i = 0; i < d; ++i) m.mean[i] += f[i];
    for (auto& v : m.mean) v /= static_cast<double>(frames.size());

    std::vector<double> cov(d * d, 0.0);
    for (const auto& f : frames) {
        for (std::size_t i = 0; i < d; ++i) {
            const double fi = f[i] - m.mean[i];
            for (std::size_t j = i; j < d; ++j)
                cov[i * d + j] += fi * (f[j] - m.mean[j]);
        }
    }
    const double norm = frames.size() > 1 ? 1.0 / static_cast<double>(frames.size() - 1) : 1.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] *= norm;
            cov[j * d + i] = cov[i * d + j];
        }

    std::vector<double> values, vectors;
    detail::eigen_symmetric(std::move(cov), d, values, vectors);

    m.basis.assign(out_dim * d, 0.0);
    m.explained_variance.assign(out_dim, 0.0);
    for (std::size_t r = 0; r < out_dim; ++r) {
        m.explained_variance[r] = std::max(0.0, values[r]);
        // sign convention: make the largest-magnitude entry positive
        std::size_t arg = 0;
        for (std::size_t k = 1; k < d; ++k)
            if (std::abs(vectors[r * d + k]) > std::abs(vectors[r * d + arg])) arg = k;
        const double sign = vectors[r * d + arg] < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < d; ++k) m.basis[r * d + k] = sign * vectors[r * d + k];
    }
    return m;
}

inline std::vector<double> pca_project(const PcaModel& m, const std::vector<double>& v) {
    if (v.size() != m.in_dim) throw InvalidInput("pca_project: dimension mismatch");
    std::vector<double> out(m.out_dim, 0.0);
    for (std::size_t r = 0; r < m.out_dim; ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m.in_dim; ++k)
            acc += m.basis[r * m.in_dim + k] * (v[k] - m.mean[k]);
        out[r] = acc;
    }
    return out;
}

inline std::vector<double> pca_reconstruct(const PcaModel& m, const std::vector<double>& proj) {
    if (proj.size() != m.out_dim) throw InvalidInput("pca_reconstruct: dimension mismatch");
    std::vector<double> out = m.mean;
    for (std::size_t r = 0; r < m.out_dim; ++r)
        for (std::size_t k = 0; k < m.in_dim; ++k)
            out[k] += proj[r] * m.basis[r * m.in_dim + k];
    return out;
}

inline void save_pca(const PcaModel& m, const std::string& path) {
    nlohmann::json j;
    j["in_dim"] = m.in_dim;
    j["out_dim"] = m.out_dim;
    j["mean"] = m.mean;
    j["basis"] = m.basis;
    j["explained_variance"] = m.explained_variance;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot write " + path);
    os << j.dump() << "\n";
}

inline PcaModel load_pca(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    PcaModel m;
    m.in_dim = j.at("in_dim").get<std::size_t>();
    m.out_dim = j.at("out_dim").get<std::size_t>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.basis = j.at("basis").get<std::vector<double>>();
    m.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    return m;
}

}  // namespace scatmir
