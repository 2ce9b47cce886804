#pragma once

#include "dselab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace dselab {

/// RMS of the estimation error relative to the measured value:
/// sqrt( (1/N) * sum ((est - truth) / meas)^2 ).
inline double tau1(const std::vector<double>& est, const std::vector<double>& truth,
                   const std::vector<double>& meas) {
    if (est.empty() || est.size() != truth.size() || est.size() != meas.size())
        throw DegenerateMeasurement("tau1: series length mismatch or empty");
    double acc = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        if (std::abs(meas[i]) <= 1e-12)
            throw DegenerateMeasurement("tau1: measured value near zero at index " +
                                        std::to_string(i));
        const double q = (est[i] - truth[i]) / meas[i];
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(est.size()));
}

/// Ratio of summed squared estimation error to summed squared measurement
/// error: sqrt( sum (est - truth)^2 / sum (meas - truth)^2 ).
inline double tau2(const std::vector<double>& est, const std::vector<double>& truth,
                   const std::vector<double>& meas) {
    if (est.empty() || est.size() != truth.size() || est.size() != meas.size())
        throw DegenerateDenominator("tau2: series length mismatch or empty");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        num += (est[i] - truth[i]) * (est[i] - truth[i]);
        den += (meas[i] - truth[i]) * (meas[i] - truth[i]);
    }
    if (den <= 0.0)
        throw DegenerateDenominator("tau2: measurements equal truth everywhere");
    return std::sqrt(num / den);
}

struct TimingStats {
    double mean_ms;
    double p95_ms;
};

/// Mean and nearest-rank 95th percentile of per-step durations (ms).
inline TimingStats timing_stats(std::vector<double> durations_ms) {
    if (durations_ms.empty())
        throw DegenerateDenominator("timing_stats: empty series");
    double sum = 0.0;
    for (double d : durations_ms) sum += d;
    std::sort(durations_ms.begin(), durations_ms.end());
    const std::size_t n = durations_ms.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    return {sum / static_cast<double>(n), durations_ms[rank - 1]};
}

} // namespace dselab
