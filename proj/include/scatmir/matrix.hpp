#pragma once

#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "scatmir/common.hpp"
#include "scatmir/fft.hpp"

namespace scatmir {

enum class FeatureKind {
    spectrogram,
    mfsc,
    mfcc,
    delta_mfcc,
    cwt,
    scattering,
    clsc,
};

inline const char* to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::spectrogram: return "spectrogram";
        case FeatureKind::mfsc: return "mfsc";
        case FeatureKind::mfcc: return "mfcc";
        case FeatureKind::delta_mfcc: return "delta_mfcc";
        case FeatureKind::cwt: return "cwt";
        case FeatureKind::scattering: return "scattering";
        case FeatureKind::clsc: return "clsc";
    }
    return "?";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "spectrogram") return FeatureKind::spectrogram;
    if (s == "mfsc") return FeatureKind::mfsc;
    if (s == "mfcc") return FeatureKind::mfcc;
    if (s == "delta_mfcc" || s == "delta-mfcc") return FeatureKind::delta_mfcc;
    if (s == "cwt") return FeatureKind::cwt;
    if (s == "scattering") return FeatureKind::scattering;
    if (s == "clsc") return FeatureKind::clsc;
    throw ParseError("unknown feature kind: " + s);
}

/// Time-ordered rows of real feature vectors, stored flat row-major.
/// Row r describes the instant time_offset + r*hop; STFT-derived rows are
/// stamped at their window center, zero-phase transforms at zero offset.
struct FeatureMatrix {
    FeatureKind kind = FeatureKind::spectrogram;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    double frame_hop_seconds = 0.0;
    double time_offset_seconds = 0.0;
    std::vector<double> data;

    FeatureMatrix() = default;
    FeatureMatrix(FeatureKind k, std::size_t rows, std::size_t cols, double hop_s,
                  double offset_s = 0.0)
        : kind(k), n_rows(rows), n_cols(cols), frame_hop_seconds(hop_s),
          time_offset_seconds(offset_s), data(rows * cols, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * n_cols, n_cols}; }
    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * n_cols, n_cols};
    }
    std::vector<double> row_vec(std::size_t r) const {
        return {data.begin() + static_cast<std::ptrdiff_t>(r * n_cols),
                data.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_cols)};
    }
};

/// Complex-valued analogue used for raw STFT output.
struct ComplexMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    double frame_hop_seconds = 0.0;
    double time_offset_seconds = 0.0;
    double bin_hz = 0.0;
    std::vector<cplx> data;

    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols, double hop_s, double binhz,
                  double offset_s = 0.0)
        : n_rows(rows), n_cols(cols), frame_hop_seconds(hop_s),
          time_offset_seconds(offset_s), bin_hz(binhz), data(rows * cols, cplx(0.0, 0.0)) {}

    cplx& at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
    cplx at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    std::span<const cplx> row(std::size_t r) const {
        return {data.data() + r * n_cols, n_cols};
    }
};

// ---------------------------------------------------------------------------
// CSV serialization: one header line naming kind and params, one row per
// frame. Values use %.17g so a read-back reproduces the doubles exactly.
// ---------------------------------------------------------------------------

inline void write_csv(const FeatureMatrix& m, std::ostream& os) {
    char buf[96];
    os << "# kind=" << to_string(m.kind) << " rows=" << m.n_rows
       << " cols=" << m.n_cols;
    std::snprintf(buf, sizeof buf, " hop_seconds=%.17g time_offset_seconds=%.17g",
                  m.frame_hop_seconds, m.time_offset_seconds);
    os << buf << "\n";
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        for (std::size_t c = 0; c < m.n_cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m.at(r, c));
            os << (c ? "," : "") << buf;
        }
        os << "\n";
    }
}

inline void write_csv_file(const FeatureMatrix& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open for writing: " + path);
    write_csv(m, os);
}

// ---------------------------------------------------------------------------
// Compact binary cache: fixed header + raw little-endian doubles. The cache
// key (content hash of signal + config) lives in the filename and header.
// ---------------------------------------------------------------------------

inline constexpr char kCacheMagic[8] = {'S', 'M', 'F', 'E', 'A', 'T', '0', '1'};

inline void write_cache(const FeatureMatrix& m, std::uint64_t key, std::ostream& os) {
    os.write(kCacheMagic, 8);
    auto put_u64 = [&](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        os.write(reinterpret_cast<const char*>(b), 8);
    };
    put_u64(key);
    put_u64(static_cast<std::uint64_t>(m.kind));
    put_u64(m.n_rows);
    put_u64(m.n_cols);
    std::uint64_t bits;
    std::memcpy(&bits, &m.frame_hop_seconds, 8);
    put_u64(bits);
    std::memcpy(&bits, &m.time_offset_seconds, 8);
    put_u64(bits);
    os.write(reinterpret_cast<const char*>(m.data.data()),
             static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

inline FeatureMatrix read_cache(std::istream& is, std::uint64_t* key_out = nullptr) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCacheMagic, 8) != 0)
        throw ParseError("feature cache: bad magic");
    auto get_u64 = [&]() {
        unsigned char b[8];
        is.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    };
    const std::uint64_t key = get_u64();
    const auto kind = static_cast<FeatureKind>(get_u64());
    const std::uint64_t rows = get_u64();
    const std::uint64_t cols = get_u64();
    const std::uint64_t hop_bits = get_u64();
    const std::uint64_t offset_bits = get_u64();
    double hop, offset;
    std::memcpy(&hop, &hop_bits, 8);
    std::memcpy(&offset, &offset_bits, 8);
    if (!is) throw ParseError("feature cache: truncated header");
    FeatureMatrix m(kind, rows, cols, hop, offset);
    is.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!is) throw ParseError("feature cache: truncated payload");
    if (key_out) *key_out = key;
    return m;
}

}  // namespace scatmir
