#pragma once

#include "dselab/machine_model.hpp"
#include "dselab/rng.hpp"

#include <algorithm>

namespace dselab {

/// Noisy PMU sample [delta_z, omega_z, pe_z] at time t.
struct Measurement {
    double t;
    double delta_z; ///< rad
    double omega_z; ///< pu
    double pe_z;    ///< pu

    Vec3 vec() const { return Vec3(delta_z, omega_z, pe_z); }
    static Measurement at(double t, const Vec3& z) { return {t, z[0], z[1], z[2]}; }
};

/// Measurement noise magnitudes. The injection values (sigma_*) drive the
/// synthetic PMU streams; the model values (model_sigma_*) feed the filter's
/// R matrix. Both default to the published magnitudes of their respective
/// roles, and either can be overridden.
struct NoiseModel {
    double sigma_delta = deg2rad(2.0); ///< rad
    double sigma_omega = 1e-3;         ///< pu
    double sigma_U = 0.001;            ///< relative
    double sigma_phi = deg2rad(0.1);   ///< rad
    double model_sigma_U = 0.002;      ///< relative, used in the R model
    double model_sigma_phi = deg2rad(0.2); ///< rad, used in the R model
};

/// Diagonal 3x3 measurement covariance.
struct NoiseCovariance {
    Vec3 diag;

    Mat3 matrix() const { return diag.asDiagonal(); }
};

/// R per the diagonal model: direct variances for the angle and speed
/// channels, first-order propagation of the terminal-phasor noise for the
/// power channel. sigma_U is relative, so its absolute std is sigma_U * U.
inline NoiseCovariance measurement_noise_cov(const MachineState& x, const ControlInput& u,
                                             const GeneratorParams& p, const NoiseModel& nm) {
    const double a = x.delta - u.phi;
    const double s = std::sin(a);
    const double c = std::cos(a);
    const double K = 1.0 / p.X_q_p - 1.0 / p.X_d_p;
    const double dPe_dU = u.U * std::sin(2.0 * a) * K + s * x.Eq_p / p.X_d_p -
                          c * x.Ed_p / p.X_q_p;
    // dPe/dphi = -dPe/ddelta = -L1
    const double dPe_dphi = -(u.U * u.U * std::cos(2.0 * a) * K + u.U * c * x.Eq_p / p.X_d_p +
                              u.U * s * x.Ed_p / p.X_q_p);
    const double sU_abs = nm.model_sigma_U * u.U;
    const double var_pe = dPe_dU * dPe_dU * sU_abs * sU_abs +
                          dPe_dphi * dPe_dphi * nm.model_sigma_phi * nm.model_sigma_phi;
    NoiseCovariance R;
    R.diag = Vec3(nm.sigma_delta * nm.sigma_delta, nm.sigma_omega * nm.sigma_omega,
                  std::max(var_pe, 1e-12));
    return R;
}

/// z = h(x) + e, with e drawn per component from the injection stds.
inline Measurement sample_measurement(double t, const MachineState& x, const ControlInput& u,
                                      const GeneratorParams& p, const NoiseModel& nm,
                                      CounterRng& rng) {
    Vec3 z = measurement_fn(x, u, p);
    NoiseModel inj = nm;
    inj.model_sigma_U = nm.sigma_U;
    inj.model_sigma_phi = nm.sigma_phi;
    const Vec3 R = measurement_noise_cov(x, u, p, inj).diag;
    z[0] += std::sqrt(R[0]) * rng.normal();
    z[1] += std::sqrt(R[1]) * rng.normal();
    z[2] += (nm.sigma_U == 0.0 && nm.sigma_phi == 0.0) ? 0.0 : std::sqrt(R[2]) * rng.normal();
    return Measurement::at(t, z);
}

/// Noisy terminal phasor as the estimator's control-channel input.
inline std::pair<double, double> sample_terminal_pmu(const ControlInput& u, const NoiseModel& nm,
                                                     CounterRng& rng) {
    const double U_meas = u.U * (1.0 + nm.sigma_U * rng.normal());
    const double phi_meas = u.phi + nm.sigma_phi * rng.normal();
    return {U_meas, phi_meas};
}

} // namespace dselab
