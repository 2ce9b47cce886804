#pragma once

#include "dselab/attack.hpp"
#include "dselab/detection.hpp"
#include "dselab/dynamics.hpp"
#include "dselab/errors.hpp"
#include "dselab/estimators.hpp"
#include "dselab/measurement.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace dselab {

using json = nlohmann::json;

enum class EstimatorKind { ckf, rckf };
enum class InitPolicy { from_first_measurement, truth_perturbed };

/// Fully-validated scenario description driving one pipeline run.
struct ScenarioConfig {
    GeneratorParams params;

    bool use_trajectory_file = false;
    std::string trajectory_path;
    SmibNetwork network;
    double p_e0 = 0.65;
    double u0 = 1.0;

    NoiseModel noise;
    AttackCase attack;
    std::string attack_label = "none";

    std::vector<EstimatorKind> estimators;
    DetectionConfig detection;
    bool calibrate_c = false;

    Vec4 q_diag = Vec4::Constant(1e-8);
    Vec4 p0_diag = Vec4(1e-2, 1e-4, 1e-2, 1e-2);
    InitPolicy init_policy = InitPolicy::from_first_measurement;
    double init_perturbation = 1.0;
    RobustOverride robust_override = RobustOverride::inflate;
    AngleRateScale angle_rate_scale = AngleRateScale::synchronous;

    double horizon_s = 10.0;
    double dt_s = 0.02;
    int n_sub = 10;

    std::vector<std::uint64_t> seeds = {1};
    std::string out_dir = "out";

    TruthConfig truth_config() const {
        return TruthConfig{params, network, p_e0, u0, horizon_s, dt_s, n_sub,
                           angle_rate_scale};
    }
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(path + ": unknown key '" + it.key() + "'");
}

inline double get_num(const json& obj, const std::string& key, double fallback,
                      const std::string& path) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError(path + "." + key + ": expected a number");
    return obj[key].get<double>();
}

} // namespace detail

/// Parses and fully validates a configuration document. Unknown keys are
/// rejected with their path.
inline ScenarioConfig validate_config(const json& doc) {
    using detail::get_num;
    using detail::reject_unknown_keys;
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown_keys(doc,
                        {"generator", "network", "initial", "noise", "attack", "estimators",
                         "detection", "filter", "horizon_s", "dt_s", "n_sub", "seeds",
                         "out_dir"},
                        "config");

    ScenarioConfig cfg;

    const json gen = doc.value("generator", json::object());
    reject_unknown_keys(gen,
                        {"t_j", "d", "x_d", "x_d_p", "x_q", "x_q_p", "t_d0_p", "t_q0_p",
                         "f_hz"},
                        "generator");
    cfg.params.T_J = get_num(gen, "t_j", 10.0, "generator");
    cfg.params.D = get_num(gen, "d", 3.0, "generator");
    cfg.params.X_d = get_num(gen, "x_d", 1.0, "generator");
    cfg.params.X_d_p = get_num(gen, "x_d_p", 0.4, "generator");
    cfg.params.X_q = get_num(gen, "x_q", 0.8, "generator");
    cfg.params.X_q_p = get_num(gen, "x_q_p", 0.55, "generator");
    cfg.params.T_d0_p = get_num(gen, "t_d0_p", 7.0, "generator");
    cfg.params.T_q0_p = get_num(gen, "t_q0_p", 0.8, "generator");
    cfg.params.omega_s = 2.0 * M_PI * get_num(gen, "f_hz", 50.0, "generator");
    if (!cfg.params.valid()) throw ConfigError("generator: invalid machine constants");

    const json net = doc.value("network", json::object());
    const std::string net_type = net.value("type", std::string("smib"));
    if (net_type == "smib") {
        reject_unknown_keys(net, {"type", "x_e", "v_inf", "faults"}, "network");
        cfg.network.X_e = get_num(net, "x_e", 0.4, "network");
        cfg.network.V_inf = get_num(net, "v_inf", 1.0, "network");
        if (cfg.network.X_e <= 0.0) throw ConfigError("network.x_e: must be positive");
        if (cfg.network.V_inf <= 0.0) throw ConfigError("network.v_inf: must be positive");
        for (const json& f : net.value("faults", json::array())) {
            reject_unknown_keys(f, {"t_start", "t_end", "x_e", "v_inf"}, "network.faults[]");
            SmibNetwork::FaultInterval fi;
            fi.t_start = get_num(f, "t_start", 0.0, "network.faults[]");
            fi.t_end = get_num(f, "t_end", 0.0, "network.faults[]");
            fi.X_e_fault = get_num(f, "x_e", cfg.network.X_e, "network.faults[]");
            fi.V_inf_fault = get_num(f, "v_inf", cfg.network.V_inf, "network.faults[]");
            if (fi.t_end <= fi.t_start)
                throw ConfigError("network.faults[]: t_end must exceed t_start");
            cfg.network.fault_schedule.push_back(fi);
        }
        for (std::size_t i = 1; i < cfg.network.fault_schedule.size(); ++i)
            if (cfg.network.fault_schedule[i].t_start <
                cfg.network.fault_schedule[i - 1].t_end)
                throw ConfigError("network.faults: intervals overlap");
    } else if (net_type == "file") {
        reject_unknown_keys(net, {"type", "path"}, "network");
        if (!net.contains("path")) throw ConfigError("network.path: required for type file");
        cfg.use_trajectory_file = true;
        cfg.trajectory_path = net["path"].get<std::string>();
    } else {
        throw ConfigError("network.type: expected 'smib' or 'file'");
    }

    const json init = doc.value("initial", json::object());
    reject_unknown_keys(init, {"p_e", "u"}, "initial");
    cfg.p_e0 = get_num(init, "p_e", 0.65, "initial");
    cfg.u0 = get_num(init, "u", 1.0, "initial");

    const json noise = doc.value("noise", json::object());
    reject_unknown_keys(noise,
                        {"sigma_delta_deg", "sigma_omega", "sigma_u_rel", "sigma_phi_deg",
                         "model_sigma_u_rel", "model_sigma_phi_deg"},
                        "noise");
    cfg.noise.sigma_delta = deg2rad(get_num(noise, "sigma_delta_deg", 2.0, "noise"));
    cfg.noise.sigma_omega = get_num(noise, "sigma_omega", 1e-3, "noise");
    cfg.noise.sigma_U = get_num(noise, "sigma_u_rel", 0.001, "noise");
    cfg.noise.sigma_phi = deg2rad(get_num(noise, "sigma_phi_deg", 0.1, "noise"));
    cfg.noise.model_sigma_U = get_num(noise, "model_sigma_u_rel", 0.002, "noise");
    cfg.noise.model_sigma_phi = deg2rad(get_num(noise, "model_sigma_phi_deg", 0.2, "noise"));
    if (cfg.noise.sigma_delta < 0 || cfg.noise.sigma_omega < 0 || cfg.noise.sigma_U < 0 ||
        cfg.noise.sigma_phi < 0)
        throw ConfigError("noise: standard deviations must be non-negative");

    cfg.horizon_s = get_num(doc, "horizon_s", 10.0, "config");
    if (cfg.horizon_s <= 0.0) throw ConfigError("horizon_s: must be positive");
    cfg.dt_s = get_num(doc, "dt_s", 0.02, "config");
    if (cfg.dt_s <= 0.0) throw ConfigError("dt_s: must be positive");
    cfg.n_sub = static_cast<int>(get_num(doc, "n_sub", 10, "config"));
    if (cfg.n_sub < 1) throw ConfigError("n_sub: must be at least 1");

    const json att = doc.value("attack", json::object());
    reject_unknown_keys(att, {"case", "sigma", "window", "redraw", "knowledge"}, "attack");
    const std::string case_id = att.value("case", std::string("none"));
    cfg.attack_label = case_id;
    if (case_id == "none")
        cfg.attack.sigma_c = 0.0;
    else if (case_id == "case1")
        cfg.attack.sigma_c = 0.01;
    else if (case_id == "case2")
        cfg.attack.sigma_c = 0.1;
    else if (case_id == "case3")
        cfg.attack.sigma_c = 1.0;
    else if (case_id == "custom") {
        cfg.attack.sigma_c = get_num(att, "sigma", -1.0, "attack");
        if (cfg.attack.sigma_c < 0.0) throw ConfigError("attack.sigma: required for custom");
    } else
        throw ConfigError("attack.case: expected none|case1|case2|case3|custom");
    cfg.attack.t_start = 4.0;
    cfg.attack.t_end = 8.0;
    if (att.contains("window")) {
        const json w = att["window"];
        if (!w.is_array() || w.size() != 2) throw ConfigError("attack.window: expected [t0, t1]");
        cfg.attack.t_start = w[0].get<double>();
        cfg.attack.t_end = w[1].get<double>();
    }
    if (cfg.attack.t_start >= cfg.attack.t_end)
        throw ConfigError("attack.window: start must precede end");
    if (cfg.attack.t_start < 0.0 || cfg.attack.t_end > cfg.horizon_s)
        throw ConfigError("attack.window: must lie within [0, horizon]");
    const std::string redraw = att.value("redraw", std::string("per_step"));
    if (redraw == "per_step")
        cfg.attack.redraw = RedrawPolicy::per_step;
    else if (redraw == "hold")
        cfg.attack.redraw = RedrawPolicy::hold;
    else
        throw ConfigError("attack.redraw: expected per_step|hold");
    const std::string knowledge = att.value("knowledge", std::string("truth"));
    if (knowledge == "truth")
        cfg.attack.knowledge = AttackerKnowledge::truth;
    else if (knowledge == "estimator_feedback")
        cfg.attack.knowledge = AttackerKnowledge::estimator_feedback;
    else if (knowledge == "fixed_point")
        cfg.attack.knowledge = AttackerKnowledge::fixed_point;
    else
        throw ConfigError("attack.knowledge: expected truth|estimator_feedback|fixed_point");

    const json est = doc.value("estimators", json::array({"ckf", "rckf"}));
    if (!est.is_array() || est.empty())
        throw ConfigError("estimators: expected a non-empty list");
    for (const json& e : est) {
        const std::string name = e.get<std::string>();
        if (name == "ckf")
            cfg.estimators.push_back(EstimatorKind::ckf);
        else if (name == "rckf")
            cfg.estimators.push_back(EstimatorKind::rckf);
        else
            throw ConfigError("estimators: expected ckf|rckf");
    }

    const json det = doc.value("detection", json::object());
    reject_unknown_keys(det, {"b_j", "c", "standardized_norm"}, "detection");
    cfg.detection.B_j = get_num(det, "b_j", 2.0, "detection");
    if (cfg.detection.B_j <= 0.0) throw ConfigError("detection.b_j: must be positive");
    if (det.contains("c")) {
        const json c = det["c"];
        if (c.is_string() && c.get<std::string>() == "calibrate") {
            cfg.calibrate_c = true;
        } else if (c.is_array() && c.size() == 3) {
            for (int i = 0; i < 3; ++i) cfg.detection.C[i] = c[i].get<double>();
            if (cfg.detection.C.minCoeff() <= 0.0)
                throw ConfigError("detection.c: thresholds must be positive");
        } else {
            throw ConfigError("detection.c: expected [c1,c2,c3] or \"calibrate\"");
        }
    }
    cfg.detection.standardized_norm = det.value("standardized_norm", false);

    const json filt = doc.value("filter", json::object());
    reject_unknown_keys(filt,
                        {"q_diag", "p0_diag", "init_policy", "init_perturbation",
                         "robust_override", "angle_rate_scale"},
                        "filter");
    if (filt.contains("q_diag")) {
        const json q = filt["q_diag"];
        if (!q.is_array() || q.size() != 4) throw ConfigError("filter.q_diag: expected 4 values");
        for (int i = 0; i < 4; ++i) cfg.q_diag[i] = q[i].get<double>();
    }
    if (filt.contains("p0_diag")) {
        const json p0 = filt["p0_diag"];
        if (!p0.is_array() || p0.size() != 4)
            throw ConfigError("filter.p0_diag: expected 4 values");
        for (int i = 0; i < 4; ++i) cfg.p0_diag[i] = p0[i].get<double>();
    }
    if (cfg.q_diag.minCoeff() < 0.0 || cfg.p0_diag.minCoeff() < 0.0)
        throw ConfigError("filter: covariance diagonals must be non-negative");
    const std::string ip = filt.value("init_policy", std::string("from_first_measurement"));
    if (ip == "from_first_measurement")
        cfg.init_policy = InitPolicy::from_first_measurement;
    else if (ip == "truth_perturbed")
        cfg.init_policy = InitPolicy::truth_perturbed;
    else
        throw ConfigError("filter.init_policy: expected from_first_measurement|truth_perturbed");
    cfg.init_perturbation = get_num(filt, "init_perturbation", 1.0, "filter");
    const std::string ro = filt.value("robust_override", std::string("inflate"));
    if (ro == "inflate")
        cfg.robust_override = RobustOverride::inflate;
    else if (ro == "paper_literal")
        cfg.robust_override = RobustOverride::paper_literal;
    else
        throw ConfigError("filter.robust_override: expected inflate|paper_literal");
    const std::string ars = filt.value("angle_rate_scale", std::string("synchronous"));
    if (ars == "synchronous")
        cfg.angle_rate_scale = AngleRateScale::synchronous;
    else if (ars == "paper_literal")
        cfg.angle_rate_scale = AngleRateScale::paper_literal;
    else
        throw ConfigError("filter.angle_rate_scale: expected synchronous|paper_literal");

    if (doc.contains("seeds")) {
        cfg.seeds.clear();
        for (const json& s : doc["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
        if (cfg.seeds.empty()) throw ConfigError("seeds: expected a non-empty list");
    }
    cfg.out_dir = doc.value("out_dir", std::string("out"));

    return cfg;
}

/// Named configurations for the two published experiment families. Truth
/// dynamics come from the SMIB closure, so these reproduce the published
/// settings (thresholds, windows, attack cases), not the original grid
/// trajectories.
inline json preset_config(const std::string& name) {
    auto base9 = json{
        {"network",
         {{"type", "smib"},
          {"x_e", 0.4},
          {"v_inf", 1.0},
          {"faults", json::array({{{"t_start", 1.2}, {"t_end", 1.3}, {"v_inf", 0.05}}})}}},
        {"horizon_s", 20.0},
        {"detection", {{"b_j", 2.0}, {"c", {1.0, 0.7, 0.7}}}},
        {"attack", {{"case", "none"}, {"window", {4.0, 12.0}}}},
    };
    auto base68 = json{
        {"network",
         {{"type", "smib"},
          {"x_e", 0.4},
          {"v_inf", 1.0},
          {"faults", json::array({{{"t_start", 1.0}, {"t_end", 1.1}, {"v_inf", 0.05}}})}}},
        {"horizon_s", 10.0},
        {"detection", {{"b_j", 1.5}, {"c", {0.67, 0.67, 0.67}}}},
        {"attack", {{"case", "none"}, {"window", {4.0, 8.0}}}},
    };
    auto with_case = [](json base, const std::string& c) {
        base["attack"]["case"] = c;
        return base;
    };
    if (name == "paper_9bus_none") return base9;
    if (name == "paper_9bus_case1") return with_case(base9, "case1");
    if (name == "paper_9bus_case2") return with_case(base9, "case2");
    if (name == "paper_9bus_case3") return with_case(base9, "case3");
    if (name == "paper_68bus_none") return base68;
    if (name == "paper_68bus_case1") return with_case(base68, "case1");
    if (name == "paper_68bus_case2") return with_case(base68, "case2");
    if (name == "paper_68bus_case3") return with_case(base68, "case3");
    throw ConfigError("unknown preset '" + name + "'");
}

} // namespace dselab
