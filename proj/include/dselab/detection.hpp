#pragma once

#include "dselab/errors.hpp"
#include "dselab/machine_model.hpp"
#include "dselab/measurement.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace dselab {

struct DetectionConfig {
    double B_j = 2.0;                 ///< threshold on the residual norm
    Vec3 C = Vec3(1.0, 0.7, 0.7);     ///< prior thresholds on standardized residuals
    bool standardized_norm = false;   ///< weight the norm by R^(-1/2) before testing
};

struct DetectionRecord {
    double t;
    Vec3 residual;
    double norm;
    bool flagged;
};

inline Vec3 residual(const Measurement& z, const Vec3& z_hat) {
    return z.vec() - z_hat;
}

/// Norm test against B_j; the boundary value is accepted.
inline bool residual_norm_test(const Vec3& r, const DetectionConfig& cfg) {
    return r.norm() > cfg.B_j;
}

/// Running per-component median of |r_i|, used both for the robust filter's
/// standardized residuals and for prior-threshold calibration. The current
/// sample is included in its own scale estimate.
class ResidualStandardizer {
public:
    /// Pushes one residual and returns its standardized form r / median(|r|).
    Vec3 push(const Vec3& r) {
        Vec3 out;
        for (int i = 0; i < 3; ++i) {
            insert_sorted(history_[i], std::abs(r[i]));
            const double med = median(history_[i]);
            if (med < 1e-15)
                throw DegenerateScale("standardized_residual: component " + std::to_string(i) +
                                      " has degenerate scale");
            out[i] = r[i] / med;
        }
        return out;
    }

    /// Scale estimate without throwing; returns false if any component is
    /// degenerate (caller then skips robustification for the step).
    bool try_push(const Vec3& r, Vec3& out) {
        Vec3 med;
        for (int i = 0; i < 3; ++i) {
            insert_sorted(history_[i], std::abs(r[i]));
            med[i] = median(history_[i]);
        }
        if (med.minCoeff() < 1e-15) return false;
        out = r.cwiseQuotient(med);
        return true;
    }

    std::size_t count() const { return history_[0].size(); }

private:
    static void insert_sorted(std::vector<double>& v, double x) {
        v.insert(std::lower_bound(v.begin(), v.end(), x), x);
    }
    static double median(const std::vector<double>& v) {
        const std::size_t n = v.size();
        return (n % 2) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }

    std::array<std::vector<double>, 3> history_;
};

/// Standardizes a whole residual series with the running median.
inline std::vector<Vec3> standardized_residual(const std::vector<Vec3>& r_series) {
    ResidualStandardizer std_;
    std::vector<Vec3> out;
    out.reserve(r_series.size());
    for (const auto& r : r_series) out.push_back(std_.push(r));
    return out;
}

/// Prior thresholds from a standardized-residual series: the last-quartile
/// mean when the curve has settled, otherwise the mid-range over the full
/// series.
inline Vec3 calibrate_prior_threshold(const std::vector<Vec3>& r_prime_series) {
    if (r_prime_series.size() < 50)
        throw CalibrationError("calibrate_prior_threshold: need at least 50 samples");
    Vec3 C;
    const std::size_t n = r_prime_series.size();
    const std::size_t q_start = n - n / 4;
    for (int i = 0; i < 3; ++i) {
        double full_min = 1e300, full_max = -1e300;
        double q_min = 1e300, q_max = -1e300, q_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double v = std::abs(r_prime_series[k][i]);
            full_min = std::min(full_min, v);
            full_max = std::max(full_max, v);
            if (k >= q_start) {
                q_min = std::min(q_min, v);
                q_max = std::max(q_max, v);
                q_sum += v;
            }
        }
        const double q_mean = q_sum / static_cast<double>(n - q_start);
        const bool converged = (q_max - q_min) < 0.05 * std::max(1.0, q_mean);
        C[i] = converged ? q_mean : 0.5 * (full_max + full_min);
    }
    return C;
}

} // namespace dselab
