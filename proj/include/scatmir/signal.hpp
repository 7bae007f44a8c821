#pragma once

#include <cmath>
#include <vector>

#include "scatmir/common.hpp"

namespace scatmir {

/// Mono sampled waveform. Samples are dimensionless amplitudes, nominally in
/// [-1, 1]; sample_rate in Hz.
struct Signal {
    std::vector<double> samples;
    double sample_rate = 0.0;

    Signal() = default;
    Signal(std::vector<double> s, double rate)
        : samples(std::move(s)), sample_rate(rate) {}

    std::size_t size() const { return samples.size(); }
    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }

    double energy() const {
        double e = 0.0;
        for (double v : samples) e += v * v;
        return e;
    }

    /// Mean-square power; 0 dBFS corresponds to a full-scale constant.
    double mean_power() const {
        return samples.empty() ? 0.0 : energy() / static_cast<double>(samples.size());
    }

    void validate() const {
        if (samples.empty()) throw InvalidInput("signal: empty sample buffer");
        if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
            throw InvalidInput("signal: sample rate must be positive");
        for (double v : samples)
            if (!std::isfinite(v)) throw InvalidInput("signal: non-finite sample");
    }
};

}  // namespace scatmir
