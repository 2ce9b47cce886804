#include <catch2/catch_amalgamated.hpp>

#include "dselab/harness.hpp"

#include <filesystem>
#include <fstream>

using namespace dselab;
namespace fsys = std::filesystem;

namespace {

json small_config(const std::string& out_dir) {
    return json{
        {"network",
         {{"type", "smib"},
          {"faults", json::array({{{"t_start", 0.4}, {"t_end", 0.5}, {"v_inf", 0.05}}})}}},
        {"horizon_s", 3.0},
        {"attack", {{"case", "none"}, {"window", {1.0, 2.0}}}},
        {"seeds", {1}},
        {"out_dir", out_dir},
    };
}

std::string slurp(const fsys::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fsys::path temp_dir(const char* name) {
    fsys::path p = fsys::temp_directory_path() / name;
    fsys::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("preset configurations carry the published settings") {
    ScenarioConfig cfg = validate_config(preset_config("paper_9bus_case1"));
    CHECK(cfg.attack.sigma_c == 0.01);
    CHECK(cfg.attack.t_start == 4.0);
    CHECK(cfg.attack.t_end == 12.0);
    CHECK(cfg.detection.B_j == 2.0);
    CHECK(cfg.detection.C[0] == 1.0);
    CHECK(cfg.detection.C[1] == 0.7);
    CHECK(cfg.detection.C[2] == 0.7);
    CHECK(cfg.horizon_s == 20.0);

    ScenarioConfig c68 = validate_config(preset_config("paper_68bus_case3"));
    CHECK(c68.attack.sigma_c == 1.0);
    CHECK(c68.detection.B_j == 1.5);
    CHECK(c68.detection.C[0] == 0.67);
    CHECK(c68.attack.t_end == 8.0);

    CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("config validation rejects bad documents") {
    CHECK_THROWS_WITH(validate_config(json{{"horizon_s", -1.0}}),
                      Catch::Matchers::ContainsSubstring("horizon"));

    json bad_window = json{{"horizon_s", 5.0}, {"attack", {{"window", {4.0, 12.0}}}}};
    CHECK_THROWS_WITH(validate_config(bad_window),
                      Catch::Matchers::ContainsSubstring("attack.window"));

    CHECK_THROWS_WITH(validate_config(json{{"wat", 1}}),
                      Catch::Matchers::ContainsSubstring("wat"));
    CHECK_THROWS_WITH(validate_config(json{{"generator", {{"x_dd", 1.0}}}}),
                      Catch::Matchers::ContainsSubstring("generator"));
    CHECK_THROWS_AS(validate_config(json{{"attack", {{"case", "case9"}}}}), ConfigError);
    CHECK_THROWS_AS(validate_config(json{{"estimators", json::array()}}), ConfigError);
    CHECK_THROWS_AS(validate_config(json{{"detection", {{"c", {1.0, 0.7}}}}}), ConfigError);
    CHECK_THROWS_AS(
        validate_config(json{{"network", {{"type", "smib"},
                                          {"faults", json::array({{{"t_start", 2.0},
                                                                   {"t_end", 1.0}}})}}}}),
        ConfigError);

    // custom sigma is honored
    ScenarioConfig c = validate_config(
        json{{"attack", {{"case", "custom"}, {"sigma", 0.05}, {"window", {1.0, 2.0}}}},
             {"horizon_s", 3.0}});
    CHECK(c.attack.sigma_c == 0.05);
}

TEST_CASE("seed runs are deterministic") {
    ScenarioConfig cfg = validate_config(small_config("unused"));
    SeedRunResult a = run_seed(cfg, 7);
    SeedRunResult b = run_seed(cfg, 7);
    REQUIRE(a.runs.size() == b.runs.size());
    for (std::size_t r = 0; r < a.runs.size(); ++r) {
        REQUIRE(a.runs[r].steps.size() == b.runs[r].steps.size());
        for (std::size_t k = 0; k < a.runs[r].steps.size(); ++k) {
            CHECK(a.runs[r].steps[k].x_hat == b.runs[r].steps[k].x_hat);
            CHECK(a.runs[r].steps[k].norm == b.runs[r].steps[k].norm);
        }
    }
    CHECK(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k)
        CHECK(a.samples[k].z.vec() == b.samples[k].z.vec());
}

TEST_CASE("zero-sigma attack is bit-identical to no attack") {
    json none = small_config("unused");
    json zero = none;
    zero["attack"]["case"] = "custom";
    zero["attack"]["sigma"] = 0.0;
    SeedRunResult a = run_seed(validate_config(none), 3);
    SeedRunResult b = run_seed(validate_config(zero), 3);
    REQUIRE(a.runs.size() == b.runs.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k)
        CHECK(a.samples[k].z.vec() == b.samples[k].z.vec());
    for (std::size_t r = 0; r < a.runs.size(); ++r)
        for (std::size_t k = 0; k < a.runs[r].steps.size(); ++k)
            CHECK(a.runs[r].steps[k].x_hat == b.runs[r].steps[k].x_hat);
}

TEST_CASE("attack settings never perturb the noise realization") {
    json none = small_config("unused");
    json attacked = none;
    attacked["attack"] = json{{"case", "case2"}, {"window", {1.0, 2.0}}};
    SeedRunResult a = run_seed(validate_config(none), 5);
    SeedRunResult b = run_seed(validate_config(attacked), 5);
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(a.samples[k].z_clean.vec() == b.samples[k].z_clean.vec());
        CHECK(a.samples[k].U_meas == b.samples[k].U_meas);
        CHECK(a.samples[k].phi_meas == b.samples[k].phi_meas);
    }
}

TEST_CASE("run artifacts and aggregation") {
    const fsys::path out = temp_dir("dselab_harness_run");
    json doc = small_config(out.string());
    doc["seeds"] = {1, 2};
    ScenarioConfig cfg = validate_config(doc);
    RunSummary summary = run_scenario(cfg, doc);
    REQUIRE(summary.seeds.size() == 2);

    for (int s : {1, 2}) {
        const fsys::path d = out / ("seed_" + std::to_string(s));
        for (const char* f : {"truth.csv", "measurements.csv", "attack.csv",
                              "estimate_ckf.csv", "estimate_rckf.csv", "detection_ckf.csv",
                              "detection_rckf.csv", "metrics.csv", "timing.json"})
            CHECK(fsys::exists(d / f));
        for (const char* f : {"delta.svg", "omega.svg", "residual_ckf.svg",
                              "residual_rckf.svg"})
            CHECK(fsys::exists(d / "plots" / f));
    }
    CHECK(fsys::exists(out / "manifest.json"));

    // manifest checksums describe the files on disk
    json manifest = json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["tool_version"] == kToolVersion);
    for (auto it = manifest["files"].begin(); it != manifest["files"].end(); ++it)
        CHECK(file_checksum(out / it.key()) == it.value().get<std::uint64_t>());

    // aggregation: two estimators, means bracketed by per-seed values
    auto rows = report(out.string());
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        double lo = 1e300, hi = -1e300;
        for (const auto& seed : summary.seeds)
            for (const auto& run : seed.runs)
                if (estimator_name(run.kind) == row.method) {
                    lo = std::min(lo, run.tau1_delta);
                    hi = std::max(hi, run.tau1_delta);
                }
        CHECK(row.tau1_delta_mean >= lo - 1e-15);
        CHECK(row.tau1_delta_mean <= hi + 1e-15);
    }
    CHECK(fsys::exists(out / "report.csv"));
    CHECK(fsys::exists(out / "report.txt"));

    fsys::remove_all(out);
}

TEST_CASE("single-seed report equals that seed's metrics") {
    const fsys::path out = temp_dir("dselab_harness_single");
    json doc = small_config(out.string());
    ScenarioConfig cfg = validate_config(doc);
    RunSummary summary = run_scenario(cfg, doc);
    auto rows = report(out.string());
    for (const auto& row : rows) {
        for (const auto& run : summary.seeds[0].runs)
            if (estimator_name(run.kind) == row.method) {
                CHECK(row.tau1_delta_mean == Catch::Approx(run.tau1_delta).epsilon(1e-12));
                CHECK(row.tau2_omega_mean == Catch::Approx(run.tau2_omega).epsilon(1e-12));
                CHECK(row.tau1_delta_std == 0.0);
            }
    }
    fsys::remove_all(out);
}

TEST_CASE("identical configs produce byte-identical CSVs") {
    const fsys::path out1 = temp_dir("dselab_det_a");
    const fsys::path out2 = temp_dir("dselab_det_b");
    json d1 = small_config(out1.string());
    json d2 = small_config(out2.string());
    run_scenario(validate_config(d1), d1);
    run_scenario(validate_config(d2), d2);
    for (const auto& entry : fsys::recursive_directory_iterator(out1)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() != ".csv") continue;
        const fsys::path rel = fsys::relative(entry.path(), out1);
        CHECK(slurp(entry.path()) == slurp(out2 / rel));
    }
    fsys::remove_all(out1);
    fsys::remove_all(out2);
}

TEST_CASE("report requires artifacts") {
    CHECK_THROWS_AS(report("/nonexistent/run/dir"), MissingArtifact);
    const fsys::path empty = temp_dir("dselab_empty_run");
    fsys::create_directories(empty);
    CHECK_THROWS_AS(report(empty.string()), MissingArtifact);
    fsys::remove_all(empty);
}

TEST_CASE("prior-threshold calibration on the fault scenario") {
    ScenarioConfig cfg = validate_config(small_config("unused"));
    Vec3 C1 = calibrate_thresholds(cfg, 1);
    Vec3 C2 = calibrate_thresholds(cfg, 1);
    CHECK(C1 == C2);
    for (int i = 0; i < 3; ++i) {
        CHECK(C1[i] > 0.0);
        CHECK(C1[i] < 5.0);
    }

    // attack scenarios are rejected
    json attacked = small_config("unused");
    attacked["attack"] = json{{"case", "case1"}, {"window", {1.0, 2.0}}};
    CHECK_THROWS_AS(calibrate_thresholds(validate_config(attacked), 1), CalibrationError);

    // too short a run leaves fewer than the minimum number of samples
    json tiny = small_config("unused");
    tiny["horizon_s"] = 0.5;
    tiny["network"] = json{{"type", "smib"}};
    tiny["attack"] = json{{"case", "none"}, {"window", {0.1, 0.2}}};
    CHECK_THROWS_AS(calibrate_thresholds(validate_config(tiny), 1), CalibrationError);
}

TEST_CASE("estimator feedback attacks run end to end") {
    json doc = small_config("unused");
    doc["attack"] = json{{"case", "case2"}, {"window", {1.0, 2.0}},
                         {"knowledge", "estimator_feedback"}};
    SeedRunResult r = run_seed(validate_config(doc), 1);
    for (const auto& run : r.runs) CHECK_FALSE(run.diverged);
    // the raw sample stream stays clean; injection happens inside the loop
    for (const auto& s : r.samples) CHECK(s.z.vec() == s.z_clean.vec());
}
