#pragma once

#include "dselab/detection.hpp"
#include "dselab/errors.hpp"
#include "dselab/machine_model.hpp"

#include <Eigen/Eigenvalues>
#include <array>

namespace dselab {

struct FilterState {
    Vec4 x_hat;
    Mat4 P;
};

/// Behaviour of the robust covariance override when a standardized residual
/// exceeds its prior threshold: replace the variance by the threshold
/// constant (the literal two-branch rule) or inflate it proportionally to
/// the exceedance.
enum class RobustOverride { inflate, paper_literal };

/// Lower Cholesky factor with one PSD-repair retry (symmetrize, clamp
/// eigenvalues, add a trace-scaled jitter).
inline Mat4 cholesky_sqrt(const Mat4& P) {
    if (!P.allFinite()) throw NotPSD("cholesky_sqrt: non-finite covariance");
    Eigen::LLT<Mat4> llt(P);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    Mat4 sym = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Mat4> eig(sym);
    Vec4 ev = eig.eigenvalues().cwiseMax(1e-12);
    Mat4 repaired = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    repaired += (1e-12 * repaired.trace() / 4.0) * Mat4::Identity();
    Eigen::LLT<Mat4> retry(repaired);
    if (retry.info() != Eigen::Success) throw NotPSD("cholesky_sqrt: repair failed");
    return retry.matrixL();
}

/// The 2n equal-weight cubature points x_hat + sqrt(n) * S * (+-e_i).
inline std::array<Vec4, 8> cubature_points(const Mat4& S, const Vec4& x_hat) {
    std::array<Vec4, 8> pts;
    for (int i = 0; i < 4; ++i) {
        const Vec4 col = 2.0 * S.col(i); // sqrt(n) = 2 for n = 4
        pts[i] = x_hat + col;
        pts[i + 4] = x_hat - col;
    }
    return pts;
}

/// Prediction step: points through the discrete-time state map f, then the
/// equal-weight mean and centered covariance plus Q.
template <class F>
FilterState ckf_predict(const FilterState& fs, F&& f, const Mat4& Q) {
    const Mat4 S = cholesky_sqrt(fs.P);
    auto pts = cubature_points(S, fs.x_hat);
    std::array<Vec4, 8> prop;
    Vec4 mean = Vec4::Zero();
    for (int i = 0; i < 8; ++i) {
        prop[i] = f(pts[i]);
        mean += prop[i];
    }
    mean /= 8.0;
    Mat4 P = Q;
    for (int i = 0; i < 8; ++i) {
        const Vec4 d = prop[i] - mean;
        P += (d * d.transpose()) / 8.0;
    }
    return FilterState{mean, P};
}

/// Predicted measurement statistics shared by the plain and robust updates.
struct MeasurementMoments {
    Vec3 z_hat;
    Mat3 Pzz_base; ///< innovation covariance without R
    Eigen::Matrix<double, 4, 3> Pxz;
    std::array<Vec4, 8> points;
};

template <class H>
MeasurementMoments measurement_moments(const FilterState& pred, H&& h) {
    const Mat4 S = cholesky_sqrt(pred.P);
    MeasurementMoments mm;
    mm.points = cubature_points(S, pred.x_hat);
    std::array<Vec3, 8> zs;
    mm.z_hat = Vec3::Zero();
    for (int i = 0; i < 8; ++i) {
        zs[i] = h(mm.points[i]);
        mm.z_hat += zs[i];
    }
    mm.z_hat /= 8.0;
    mm.Pzz_base = Mat3::Zero();
    mm.Pxz.setZero();
    for (int i = 0; i < 8; ++i) {
        const Vec3 dz = zs[i] - mm.z_hat;
        mm.Pzz_base += (dz * dz.transpose()) / 8.0;
        mm.Pxz += ((mm.points[i] - pred.x_hat) * dz.transpose()) / 8.0;
    }
    return mm;
}

inline FilterState apply_update(const FilterState& pred, const MeasurementMoments& mm,
                                const Vec3& z, const Mat3& R) {
    const Mat3 Pzz = mm.Pzz_base + R;
    Eigen::SelfAdjointEigenSolver<Mat3> eig(Pzz);
    const double emin = eig.eigenvalues().cwiseAbs().minCoeff();
    const double emax = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (!(emin > 0.0) || emax / emin > 1e12)
        throw SingularInnovation("apply_update: innovation covariance is singular");
    const Eigen::Matrix<double, 4, 3> W = mm.Pxz * Pzz.inverse();
    FilterState out;
    out.x_hat = pred.x_hat + W * (z - mm.z_hat);
    out.P = pred.P - W * Pzz * W.transpose();
    return out;
}

template <class H>
FilterState ckf_update(const FilterState& pred, const Vec3& z, H&& h, const Mat3& R) {
    return apply_update(pred, measurement_moments(pred, std::forward<H>(h)), z, R);
}

/// Robust update: standardizes the prediction residual with the running
/// median scale and rescales R per component before the update. With all
/// standardized residuals inside the thresholds this is arithmetically the
/// plain update. A degenerate scale falls back to R for the step.
template <class H>
FilterState rckf_update(const FilterState& pred, const Vec3& z, H&& h, const Vec3& R_diag,
                        ResidualStandardizer& standardizer, const Vec3& C,
                        RobustOverride override_policy, Vec3* r_prime_out = nullptr) {
    MeasurementMoments mm = measurement_moments(pred, std::forward<H>(h));
    const Vec3 r = z - mm.z_hat;
    Vec3 r_prime = Vec3::Zero();
    Vec3 R_robust = R_diag;
    if (standardizer.try_push(r, r_prime)) {
        for (int i = 0; i < 3; ++i) {
            if (std::abs(r_prime[i]) > C[i]) {
                R_robust[i] = (override_policy == RobustOverride::paper_literal)
                                  ? C[i]
                                  : R_diag[i] * std::max(1.0, std::abs(r_prime[i]) / C[i]);
            }
        }
    }
    if (r_prime_out) *r_prime_out = r_prime;
    return apply_update(pred, mm, z, Mat3(R_robust.asDiagonal()));
}

} // namespace dselab
