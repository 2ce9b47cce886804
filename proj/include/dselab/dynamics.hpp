#pragma once

#include "dselab/errors.hpp"
#include "dselab/machine_model.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace dselab {

/// Single-machine-infinite-bus closure. Faults are modelled as timed
/// overrides of the external reactance and infinite-bus voltage.
struct SmibNetwork {
    struct FaultInterval {
        double t_start;
        double t_end;
        double X_e_fault;
        double V_inf_fault;
    };

    double X_e;   ///< external reactance to the infinite bus (pu)
    double V_inf; ///< infinite-bus voltage magnitude (pu)
    std::vector<FaultInterval> fault_schedule;

    /// Effective (X_e, V_inf) at time t.
    std::pair<double, double> at(double t) const {
        for (const auto& f : fault_schedule) {
            if (t >= f.t_start && t < f.t_end) return {f.X_e_fault, f.V_inf_fault};
        }
        return {X_e, V_inf};
    }
};

/// Ground-truth trajectory on the uniform PMU grid.
struct TruthTrajectory {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<MachineState> state;
    std::vector<ControlInput> input;

    std::size_t size() const { return t.size(); }
};

/// One classical RK4 step with the control input held constant. Generic over
/// the derivative so tests can integrate arbitrary systems.
template <class State, class Deriv>
State rk4_step_generic(const State& x, double dt, Deriv&& f) {
    const State k1 = f(x);
    const State k2 = f(x + (dt / 2.0) * k1);
    const State k3 = f(x + (dt / 2.0) * k2);
    const State k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline MachineState rk4_step(const MachineState& x, const ControlInput& u,
                             const GeneratorParams& p, double dt,
                             AngleRateScale scale = AngleRateScale::synchronous) {
    Vec4 next = rk4_step_generic(x.vec(), dt, [&](const Vec4& v) {
        return state_derivative(MachineState::from_vec(v), u, p, scale);
    });
    MachineState out = MachineState::from_vec(next);
    if (!out.finite() || out.omega < 0.5 || out.omega > 1.5)
        throw Divergence("rk4_step: state diverged (omega=" + std::to_string(out.omega) + ")");
    return out;
}

/// Terminal voltage phasor of the series dq circuit at time t, with the
/// infinite bus as phase reference.
inline std::pair<double, double> smib_terminal(const MachineState& x, const SmibNetwork& net,
                                               const GeneratorParams& p, double t) {
    auto [X_e, V_inf] = net.at(t);
    const double s = std::sin(x.delta);
    const double c = std::cos(x.delta);
    const double i_d = (x.Eq_p - V_inf * c) / (p.X_d_p + X_e);
    const double i_q = (V_inf * s - x.Ed_p) / (p.X_q_p + X_e);
    const double U_q = V_inf * c + X_e * i_d;
    const double U_d = V_inf * s - X_e * i_q;
    const double U = std::hypot(U_d, U_q);
    if (U <= 1e-6) throw Divergence("smib_terminal: terminal voltage collapsed");
    const double phi = x.delta - std::atan2(U_d, U_q);
    return {U, phi};
}

/// Steady-state operating point hitting a target electrical power and terminal
/// voltage magnitude, found by 1-D Newton on the rotor angle. Returns the
/// machine state together with the constant (T_m, E_f) closing it.
inline std::pair<MachineState, ControlInput> solve_initial_state(double P_target,
                                                                 double U_target,
                                                                 const SmibNetwork& net,
                                                                 const GeneratorParams& p) {
    // For a given delta the q-axis EMF equation fixes i_q and E'd; the terminal
    // magnitude constraint then fixes i_d and E'q.
    auto point_at = [&](double delta) -> std::pair<MachineState, ControlInput> {
        const double s = std::sin(delta);
        const double c = std::cos(delta);
        const double i_q = net.V_inf * s / (p.X_q + net.X_e);
        const double Ed_p = (p.X_q - p.X_q_p) * i_q;
        const double U_d = net.V_inf * s - net.X_e * i_q;
        const double uq2 = U_target * U_target - U_d * U_d;
        if (uq2 <= 0.0) throw Divergence("solve_initial_state: no terminal solution at delta");
        const double U_q = std::sqrt(uq2);
        const double i_d = (U_q - net.V_inf * c) / net.X_e;
        const double Eq_p = net.V_inf * c + (p.X_d_p + net.X_e) * i_d;
        MachineState x{delta, 1.0, Eq_p, Ed_p};
        const double phi = delta - std::atan2(U_d, U_q);
        ControlInput u{0.0, 0.0, U_target, phi};
        u.T_m = electromagnetic_torque(x, u, p);
        u.E_f = Eq_p + (p.X_d - p.X_d_p) * i_d;
        return {x, u};
    };
    auto power_at = [&](double delta) {
        auto [x, u] = point_at(delta);
        return electrical_power(x, u, p);
    };

    double delta = 0.5;
    const double h = 1e-7;
    for (int it = 0; it < 100; ++it) {
        const double f = power_at(delta) - P_target;
        if (std::abs(f) < 1e-10) break;
        const double df = (power_at(delta + h) - power_at(delta - h)) / (2.0 * h);
        if (std::abs(df) < 1e-14)
            throw Divergence("solve_initial_state: Newton stalled");
        double step = f / df;
        if (step > 0.5) step = 0.5;
        if (step < -0.5) step = -0.5;
        delta -= step;
    }
    if (std::abs(power_at(delta) - P_target) > 1e-8)
        throw Divergence("solve_initial_state: Newton did not converge");
    return point_at(delta);
}

/// Scenario-level truth generation knobs (the full scenario config lives in
/// the harness; this is the subset the simulator needs).
struct TruthConfig {
    GeneratorParams params;
    SmibNetwork network;
    double p_e0 = 0.8;   ///< initial electrical power target (pu)
    double u0 = 1.0;     ///< initial terminal voltage target (pu)
    double horizon_s = 20.0;
    double dt_s = 0.02;  ///< PMU sample interval
    int n_sub = 10;      ///< RK4 sub-steps per PMU sample
    AngleRateScale angle_rate_scale = AngleRateScale::synchronous;
};

/// Integrates the SMIB-closed machine from its equilibrium, recording state
/// and terminal quantities on the PMU grid. Deterministic.
inline TruthTrajectory simulate_truth(const TruthConfig& cfg) {
    auto [x, u0] = solve_initial_state(cfg.p_e0, cfg.u0, cfg.network, cfg.params);
    const double T_m = u0.T_m;
    const double E_f = u0.E_f;
    const int n_samples = static_cast<int>(std::round(cfg.horizon_s / cfg.dt_s)) + 1;
    const double dt_sub = cfg.dt_s / cfg.n_sub;

    TruthTrajectory traj;
    traj.dt = cfg.dt_s;
    traj.t.reserve(n_samples);
    traj.state.reserve(n_samples);
    traj.input.reserve(n_samples);

    for (int k = 0; k < n_samples; ++k) {
        const double t_k = k * cfg.dt_s;
        auto [U, phi] = smib_terminal(x, cfg.network, cfg.params, t_k);
        traj.t.push_back(t_k);
        traj.state.push_back(x);
        traj.input.push_back(ControlInput{T_m, E_f, U, phi});
        if (k + 1 == n_samples) break;
        for (int s = 0; s < cfg.n_sub; ++s) {
            const double t_sub = t_k + s * dt_sub;
            auto [Us, phis] = smib_terminal(x, cfg.network, cfg.params, t_sub);
            x = rk4_step(x, ControlInput{T_m, E_f, Us, phis}, cfg.params, dt_sub,
                         cfg.angle_rate_scale);
        }
    }
    return traj;
}

} // namespace dselab
