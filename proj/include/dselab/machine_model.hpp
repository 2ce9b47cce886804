#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace dselab {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Machine constants of the two-axis synchronous generator model.
struct GeneratorParams {
    double T_J;    ///< inertia constant (s)
    double D;      ///< damping coefficient (pu)
    double X_d;    ///< d-axis synchronous reactance (pu)
    double X_d_p;  ///< d-axis transient reactance (pu)
    double X_q;    ///< q-axis synchronous reactance (pu)
    double X_q_p;  ///< q-axis transient reactance (pu)
    double T_d0_p; ///< d-axis transient open-circuit time constant (s)
    double T_q0_p; ///< q-axis transient open-circuit time constant (s)
    double omega_s = 2.0 * M_PI * 50.0; ///< synchronous electrical speed (rad/s)

    bool valid() const {
        return T_J > 0.0 && D >= 0.0 && X_d > 0.0 && X_d_p > 0.0 && X_q > 0.0 &&
               X_q_p > 0.0 && T_d0_p > 0.0 && T_q0_p > 0.0 && X_d >= X_d_p &&
               X_q >= X_q_p && omega_s > 0.0;
    }
};

/// State vector [delta, omega, E'q, E'd].
struct MachineState {
    double delta; ///< rotor angle (rad, unwrapped)
    double omega; ///< electrical speed (pu, 1.0 = synchronous)
    double Eq_p;  ///< q-axis transient EMF (pu)
    double Ed_p;  ///< d-axis transient EMF (pu)

    Vec4 vec() const { return Vec4(delta, omega, Eq_p, Ed_p); }
    static MachineState from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

    bool finite() const {
        return std::isfinite(delta) && std::isfinite(omega) && std::isfinite(Eq_p) &&
               std::isfinite(Ed_p);
    }
};

/// Control vector [T_m, E_f, U, phi].
struct ControlInput {
    double T_m; ///< mechanical torque (pu)
    double E_f; ///< excitation EMF (pu)
    double U;   ///< terminal voltage magnitude (pu)
    double phi; ///< terminal voltage phase (rad)
};

/// Whether d(delta)/dt is omega_s*(omega - 1) or the literal pu form (omega - 1).
enum class AngleRateScale { synchronous, paper_literal };

/// Stator algebraic equations: d/q axis currents from the transient EMFs
/// and the terminal voltage phasor.
inline std::pair<double, double> stator_currents(const MachineState& x,
                                                 const ControlInput& u,
                                                 const GeneratorParams& p) {
    const double s = std::sin(x.delta - u.phi);
    const double c = std::cos(x.delta - u.phi);
    const double i_d = (x.Eq_p - u.U * c) / p.X_d_p;
    const double i_q = (u.U * s - x.Ed_p) / p.X_q_p;
    return {i_d, i_q};
}

/// Electrical (air-gap) power at the terminal, in pu.
inline double electrical_power(const MachineState& x, const ControlInput& u,
                               const GeneratorParams& p) {
    const double a = x.delta - u.phi;
    return 0.5 * u.U * u.U * std::sin(2.0 * a) * (1.0 / p.X_q_p - 1.0 / p.X_d_p) +
           u.U * std::sin(a) * x.Eq_p / p.X_d_p - u.U * std::cos(a) * x.Ed_p / p.X_q_p;
}

/// Electromagnetic torque. Standard two-axis air-gap form; numerically equal
/// to electrical_power in pu.
inline double electromagnetic_torque(const MachineState& x, const ControlInput& u,
                                     const GeneratorParams& p) {
    auto [i_d, i_q] = stator_currents(x, u, p);
    return x.Ed_p * i_d + x.Eq_p * i_q + (p.X_q_p - p.X_d_p) * i_d * i_q;
}

/// Right-hand side of the two-axis swing/EMF equations.
inline Vec4 state_derivative(const MachineState& x, const ControlInput& u,
                             const GeneratorParams& p,
                             AngleRateScale scale = AngleRateScale::synchronous) {
    auto [i_d, i_q] = stator_currents(x, u, p);
    const double T_e = x.Ed_p * i_d + x.Eq_p * i_q + (p.X_q_p - p.X_d_p) * i_d * i_q;
    const double rate = (scale == AngleRateScale::synchronous) ? p.omega_s : 1.0;
    Vec4 dx;
    dx[0] = rate * (x.omega - 1.0);
    dx[1] = (u.T_m - T_e - p.D * (x.omega - 1.0)) / p.T_J;
    dx[2] = (u.E_f - x.Eq_p - (p.X_d - p.X_d_p) * i_d) / p.T_d0_p;
    dx[3] = (-x.Ed_p + (p.X_q - p.X_q_p) * i_q) / p.T_q0_p;
    return dx;
}

/// Noise-free measurement vector [delta, omega, P_e].
inline Vec3 measurement_fn(const MachineState& x, const ControlInput& u,
                           const GeneratorParams& p) {
    return Vec3(x.delta, x.omega, electrical_power(x, u, p));
}

/// Analytic 3x4 measurement Jacobian. Rows (delta, omega, P_e), columns
/// (delta, omega, E'q, E'd). Rows 0 and 1 are unit vectors; row 2 carries
/// the partials of P_e.
inline Mat34 measurement_jacobian(const MachineState& x, const ControlInput& u,
                                  const GeneratorParams& p) {
    const double a = x.delta - u.phi;
    const double s = std::sin(a);
    const double c = std::cos(a);
    const double K = 1.0 / p.X_q_p - 1.0 / p.X_d_p;
    const double L1 = u.U * u.U * std::cos(2.0 * a) * K + u.U * c * x.Eq_p / p.X_d_p +
                      u.U * s * x.Ed_p / p.X_q_p;
    const double L2 = u.U * s / p.X_d_p;
    const double L3 = -u.U * c / p.X_q_p;
    Mat34 H;
    H << 1, 0, 0, 0,
         0, 1, 0, 0,
         L1, 0, L2, L3;
    return H;
}

/// Builds a steady state for a chosen rotor angle, terminal phasor and E'q:
/// E'd is set so the q-axis EMF equation is stationary, and the returned
/// control input carries the matching T_m and E_f. state_derivative vanishes
/// at the result.
inline std::pair<MachineState, ControlInput> make_equilibrium(double delta, double U,
                                                              double phi, double Eq_p,
                                                              const GeneratorParams& p) {
    MachineState x;
    x.delta = delta;
    x.omega = 1.0;
    x.Eq_p = Eq_p;
    // E'd = (X_q - X'_q) i_q with i_q from the stator equation, solved in closed form
    x.Ed_p = (p.X_q - p.X_q_p) * U * std::sin(delta - phi) / p.X_q;
    ControlInput u;
    u.U = U;
    u.phi = phi;
    auto [i_d, i_q] = stator_currents(x, u, p);
    (void)i_q;
    u.E_f = x.Eq_p + (p.X_d - p.X_d_p) * i_d;
    u.T_m = electromagnetic_torque(x, u, p);
    return {x, u};
}

inline double deg2rad(double deg) { return deg * M_PI / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / M_PI; }

} // namespace dselab
