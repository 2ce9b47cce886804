#pragma once

#include "dselab/machine_model.hpp"
#include "dselab/measurement.hpp"
#include "dselab/rng.hpp"

#include <optional>

namespace dselab {

/// Which state the attacker linearizes the measurement model at.
enum class AttackerKnowledge { truth, estimator_feedback, fixed_point };

/// Whether the state-error vector c is redrawn every sample or drawn once
/// at window entry and held.
enum class RedrawPolicy { per_step, hold };

struct AttackCase {
    double sigma_c = 0.0; ///< std of the state-error vector c
    double t_start = 0.0;
    double t_end = 0.0;
    RedrawPolicy redraw = RedrawPolicy::per_step;
    AttackerKnowledge knowledge = AttackerKnowledge::truth;

    bool active_at(double t) const {
        return sigma_c > 0.0 && t >= t_start && t <= t_end;
    }
};

/// Measurement-space injection a = H c together with the state error c that
/// generated it.
struct AttackVector {
    Vec3 a;
    Vec4 c;
};

inline Vec4 draw_error_vector(const AttackCase& ac, CounterRng& rng) {
    Vec4 c;
    for (int i = 0; i < 4; ++i) c[i] = ac.sigma_c * rng.normal();
    return c;
}

inline AttackVector attack_vector(const Mat34& H, const Vec4& c) {
    return AttackVector{H * c, c};
}

/// The attacker's Jacobian. x0 is whichever state the knowledge policy
/// supplies (truth, fed-back estimate, or a fixed operating point).
inline Mat34 linearize_at(const MachineState& x0, const ControlInput& u,
                          const GeneratorParams& p) {
    return measurement_jacobian(x0, u, p);
}

/// Stateful applicator so the hold policy can keep c across a window.
class AttackInjector {
public:
    AttackInjector(const AttackCase& ac, CounterRng rng) : case_(ac), rng_(rng) {}

    /// Inside the window returns z + Hc (and the vector used); outside
    /// returns z untouched.
    std::pair<Measurement, std::optional<AttackVector>> apply(const Measurement& z,
                                                              const Mat34& H, double t) {
        if (!case_.active_at(t)) {
            held_.reset();
            return {z, std::nullopt};
        }
        Vec4 c;
        if (case_.redraw == RedrawPolicy::per_step) {
            c = draw_error_vector(case_, rng_);
        } else {
            if (!held_) held_ = draw_error_vector(case_, rng_);
            c = *held_;
        }
        AttackVector av = attack_vector(H, c);
        return {Measurement::at(z.t, z.vec() + av.a), av};
    }

    const AttackCase& attack_case() const { return case_; }

private:
    AttackCase case_;
    CounterRng rng_;
    std::optional<Vec4> held_;
};

} // namespace dselab
