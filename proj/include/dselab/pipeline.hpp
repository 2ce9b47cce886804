#pragma once

#include "dselab/attack.hpp"
#include "dselab/csv.hpp"
#include "dselab/detection.hpp"
#include "dselab/dynamics.hpp"
#include "dselab/estimators.hpp"
#include "dselab/metrics.hpp"
#include "dselab/scenario.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dselab {

/// One PMU sample as the estimator sees it: the (possibly attacked)
/// measurement plus the noisy terminal phasor.
struct PmuSample {
    Measurement z;          ///< received measurement (after any attack)
    Measurement z_clean;    ///< pre-attack measurement
    double U_meas;
    double phi_meas;
    bool attacked = false;
    std::optional<AttackVector> injected;
};

struct StepRecord {
    double t;
    Vec4 x_hat;
    Vec4 p_diag;
    Vec3 residual;      ///< z - predicted measurement (zero at the init step)
    double norm;
    bool flagged;
    double step_ms;
};

struct EstimatorRun {
    EstimatorKind kind;
    std::vector<StepRecord> steps;
    std::vector<Vec3> residuals;      ///< prediction residuals, from step 1 on
    std::vector<Vec3> r_prime;        ///< standardized residuals (CKF-derived)
    bool diverged = false;
    std::string divergence_message;
    TimingStats timing{0.0, 0.0};
    // metrics per state variable, delta reported in degrees
    double tau1_delta = 0.0, tau1_omega = 0.0;
    double tau2_delta = 0.0, tau2_omega = 0.0;
    int flagged_steps = 0;
    int flagged_in_window = 0;
};

struct SeedRunResult {
    std::uint64_t seed;
    TruthTrajectory truth;
    std::vector<PmuSample> samples;
    std::vector<EstimatorRun> runs;
};

inline const char* estimator_name(EstimatorKind k) {
    return k == EstimatorKind::ckf ? "ckf" : "rckf";
}

/// Synthesizes the measurement and terminal streams for one seed. Attack
/// injection uses its own RNG stream, so the noise realization is invariant
/// under attack-setting changes.
inline std::vector<PmuSample> synthesize_measurements(const ScenarioConfig& cfg,
                                                      const TruthTrajectory& truth,
                                                      std::uint64_t seed) {
    CounterRng meas_rng = make_rng(seed, RngStream::measurement);
    CounterRng term_rng = make_rng(seed, RngStream::terminal);
    AttackInjector injector(cfg.attack, make_rng(seed, RngStream::attack));

    // Fixed-point attackers linearize at the pre-disturbance operating point.
    const MachineState x_fixed = truth.state.front();

    std::vector<PmuSample> samples;
    samples.reserve(truth.size());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        PmuSample s;
        s.z_clean = sample_measurement(truth.t[k], truth.state[k], truth.input[k],
                                       cfg.params, cfg.noise, meas_rng);
        std::tie(s.U_meas, s.phi_meas) =
            sample_terminal_pmu(truth.input[k], cfg.noise, term_rng);

        if (cfg.attack.knowledge == AttackerKnowledge::estimator_feedback) {
            // the attack depends on the running estimate; injected later,
            // inside the estimator loop
            s.z = s.z_clean;
        } else {
            const MachineState& x0 =
                (cfg.attack.knowledge == AttackerKnowledge::fixed_point) ? x_fixed
                                                                         : truth.state[k];
            const Mat34 H = linearize_at(x0, truth.input[k], cfg.params);
            auto [za, av] = injector.apply(s.z_clean, H, truth.t[k]);
            s.z = za;
            s.injected = av;
            s.attacked = av.has_value();
        }
        samples.push_back(s);
    }
    return samples;
}

inline FilterState initial_filter_state(const ScenarioConfig& cfg,
                                        const TruthTrajectory& truth,
                                        const std::vector<PmuSample>& samples,
                                        std::uint64_t seed) {
    FilterState fs;
    fs.P = cfg.p0_diag.asDiagonal();
    if (cfg.init_policy == InitPolicy::truth_perturbed) {
        CounterRng rng = make_rng(seed, RngStream::init);
        Vec4 x = truth.state.front().vec();
        for (int i = 0; i < 4; ++i)
            x[i] += cfg.init_perturbation * std::sqrt(cfg.p0_diag[i]) * rng.normal();
        fs.x_hat = x;
        return fs;
    }
    // from_first_measurement: angle and speed straight from z, EMFs from the
    // steady-state relations at the first terminal phasor.
    const PmuSample& s0 = samples.front();
    const double delta = s0.z.delta_z;
    const double U = s0.U_meas;
    const double phi = s0.phi_meas;
    const double a = delta - phi;
    const GeneratorParams& p = cfg.params;
    const double Ed_p = (p.X_q - p.X_q_p) * U * std::sin(a) / p.X_q;
    double Eq_p;
    if (std::abs(std::sin(a)) > 0.05) {
        const double K = 1.0 / p.X_q_p - 1.0 / p.X_d_p;
        Eq_p = (s0.z.pe_z - 0.5 * U * U * std::sin(2.0 * a) * K +
                U * std::cos(a) * Ed_p / p.X_q_p) *
               p.X_d_p / (U * std::sin(a));
    } else {
        Eq_p = U;
    }
    fs.x_hat = Vec4(delta, s0.z.omega_z, Eq_p, Ed_p);
    return fs;
}

/// Runs one estimator over a synthesized sample stream.
inline EstimatorRun run_estimator(EstimatorKind kind, const ScenarioConfig& cfg,
                                  const TruthTrajectory& truth,
                                  const std::vector<PmuSample>& samples,
                                  std::uint64_t seed) {
    EstimatorRun run;
    run.kind = kind;

    FilterState fs = initial_filter_state(cfg, truth, samples, seed);
    std::optional<AttackInjector> feedback_injector;
    if (cfg.attack.knowledge == AttackerKnowledge::estimator_feedback)
        feedback_injector.emplace(cfg.attack, make_rng(seed, RngStream::attack));
    ResidualStandardizer standardizer;
    const Mat4 Q = cfg.q_diag.asDiagonal();
    std::vector<double> durations_ms;
    durations_ms.reserve(truth.size());

    run.steps.push_back(StepRecord{truth.t[0], fs.x_hat, fs.P.diagonal(), Vec3::Zero(), 0.0,
                                   false, 0.0});

    for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
        const PmuSample& s_next = samples[k + 1];
        const ControlInput u_pred{truth.input[k].T_m, truth.input[k].E_f, samples[k].U_meas,
                                  samples[k].phi_meas};
        const ControlInput u_upd{truth.input[k + 1].T_m, truth.input[k + 1].E_f,
                                 s_next.U_meas, s_next.phi_meas};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            // unlike the truth integrator, prediction only rejects non-finite
            // states: attacked updates may legitimately push points far out
            FilterState pred = ckf_predict(
                fs,
                [&](const Vec4& x) {
                    Vec4 nx = rk4_step_generic(x, cfg.dt_s, [&](const Vec4& v) {
                        return state_derivative(MachineState::from_vec(v), u_pred, cfg.params,
                                                cfg.angle_rate_scale);
                    });
                    if (!nx.allFinite())
                        throw Divergence("filter prediction became non-finite");
                    return nx;
                },
                Q);

            auto h = [&](const Vec4& x) {
                return measurement_fn(MachineState::from_vec(x), u_upd, cfg.params);
            };
            const NoiseCovariance R =
                measurement_noise_cov(MachineState::from_vec(pred.x_hat), u_upd, cfg.params,
                                      cfg.noise);

            Measurement z_recv = s_next.z;
            if (feedback_injector) {
                const Mat34 H = linearize_at(MachineState::from_vec(pred.x_hat), u_upd,
                                             cfg.params);
                auto [za, av] = feedback_injector->apply(s_next.z_clean, H, truth.t[k + 1]);
                z_recv = za;
                (void)av;
            }

            // residual-based bad-data test against the predicted measurement
            MeasurementMoments mm = measurement_moments(pred, h);
            Vec3 r = residual(z_recv, mm.z_hat);
            Vec3 r_test = r;
            if (cfg.detection.standardized_norm)
                r_test = r.cwiseQuotient(R.diag.cwiseSqrt());
            const bool flagged = residual_norm_test(r_test, cfg.detection);

            Vec3 r_prime = Vec3::Zero();
            if (kind == EstimatorKind::rckf) {
                Vec3 R_robust = R.diag;
                if (standardizer.try_push(r, r_prime)) {
                    for (int i = 0; i < 3; ++i) {
                        if (std::abs(r_prime[i]) > cfg.detection.C[i]) {
                            R_robust[i] =
                                (cfg.robust_override == RobustOverride::paper_literal)
                                    ? cfg.detection.C[i]
                                    : R.diag[i] * std::max(1.0, std::abs(r_prime[i]) /
                                                                    cfg.detection.C[i]);
                        }
                    }
                }
                fs = apply_update(pred, mm, z_recv.vec(), Mat3(R_robust.asDiagonal()));
            } else {
                Vec3 ignored;
                standardizer.try_push(r, r_prime); // CKF-derived r' for calibration
                (void)ignored;
                fs = apply_update(pred, mm, z_recv.vec(), R.matrix());
            }
            const auto t1 = std::chrono::steady_clock::now();
            const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            durations_ms.push_back(ms);

            run.residuals.push_back(r);
            run.r_prime.push_back(r_prime);
            run.steps.push_back(StepRecord{truth.t[k + 1], fs.x_hat, fs.P.diagonal(), r,
                                           r_test.norm(), flagged, ms});
            if (flagged) {
                ++run.flagged_steps;
                if (cfg.attack.sigma_c > 0.0 && truth.t[k + 1] >= cfg.attack.t_start &&
                    truth.t[k + 1] <= cfg.attack.t_end)
                    ++run.flagged_in_window;
            }
            if (!fs.x_hat.allFinite())
                throw Divergence("filter state became non-finite");
        } catch (const Divergence& e) {
            run.diverged = true;
            run.divergence_message = e.what();
            break;
        } catch (const NotPSD& e) {
            run.diverged = true;
            run.divergence_message = e.what();
            break;
        } catch (const SingularInnovation& e) {
            run.diverged = true;
            run.divergence_message = e.what();
            break;
        }
    }

    if (!durations_ms.empty()) run.timing = timing_stats(durations_ms);

    // metrics over delta (degrees) and omega (pu), using the received
    // measurement as the reference the indices divide by
    const std::size_t n = run.steps.size();
    std::vector<double> est_d, tru_d, mea_d, est_w, tru_w, mea_w;
    for (std::size_t k = 0; k < n; ++k) {
        est_d.push_back(rad2deg(run.steps[k].x_hat[0]));
        tru_d.push_back(rad2deg(truth.state[k].delta));
        mea_d.push_back(rad2deg(samples[k].z.delta_z));
        est_w.push_back(run.steps[k].x_hat[1]);
        tru_w.push_back(truth.state[k].omega);
        mea_w.push_back(samples[k].z.omega_z);
    }
    try {
        run.tau1_delta = tau1(est_d, tru_d, mea_d);
        run.tau1_omega = tau1(est_w, tru_w, mea_w);
        run.tau2_delta = tau2(est_d, tru_d, mea_d);
        run.tau2_omega = tau2(est_w, tru_w, mea_w);
    } catch (const std::exception&) {
        // degenerate metric inputs (e.g. zero-noise runs) leave metrics at 0
    }
    return run;
}

inline SeedRunResult run_seed(const ScenarioConfig& cfg, std::uint64_t seed) {
    SeedRunResult result;
    result.seed = seed;
    result.truth = cfg.use_trajectory_file ? load_trajectory(cfg.trajectory_path)
                                           : simulate_truth(cfg.truth_config());
    result.samples = synthesize_measurements(cfg, result.truth, seed);
    for (EstimatorKind kind : cfg.estimators)
        result.runs.push_back(run_estimator(kind, cfg, result.truth, result.samples, seed));
    return result;
}

/// CKF-based prior-threshold calibration: collects standardized residuals
/// from a no-attack CKF run and applies the settled-curve rule.
inline Vec3 calibrate_thresholds(const ScenarioConfig& cfg, std::uint64_t seed) {
    if (cfg.attack.sigma_c > 0.0)
        throw CalibrationError("calibrate: requires a no-attack scenario");
    ScenarioConfig c = cfg;
    c.estimators = {EstimatorKind::ckf};
    SeedRunResult r = run_seed(c, seed);
    const auto& residuals = r.runs.front().residuals;
    std::vector<Vec3> r_prime;
    try {
        r_prime = standardized_residual(residuals);
    } catch (const DegenerateScale& e) {
        throw CalibrationError(std::string("calibrate: ") + e.what());
    }
    try {
        return calibrate_prior_threshold(r_prime);
    } catch (const std::exception& e) {
        throw CalibrationError(std::string("calibrate: ") + e.what());
    }
}

} // namespace dselab
