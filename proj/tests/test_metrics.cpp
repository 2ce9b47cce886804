#include <catch2/catch_amalgamated.hpp>

#include "dselab/metrics.hpp"

#include <algorithm>
#include <random>

using namespace dselab;

TEST_CASE("tau1 basics") {
    std::vector<double> truth{1.0, 1.0};
    CHECK(tau1(truth, truth, {2.0, 0.5}) == 0.0);

    CHECK(tau1({1.1}, {1.0}, {1.0}) == Catch::Approx(0.1).epsilon(1e-14));

    // frozen two-sample value: sqrt(((0.1/2)^2 + (-0.1/0.5)^2)/2)
    CHECK(tau1({1.1, 0.9}, {1.0, 1.0}, {2.0, 0.5}) ==
          Catch::Approx(0.14577379737113251).epsilon(1e-14));
}

TEST_CASE("tau1 rejects near-zero measurements and shape errors") {
    CHECK_THROWS_AS(tau1({1.0}, {1.0}, {1e-13}), DegenerateMeasurement);
    CHECK_THROWS_AS(tau1({}, {}, {}), DegenerateMeasurement);
    CHECK_THROWS_AS(tau1({1.0}, {1.0, 2.0}, {1.0}), DegenerateMeasurement);
}

TEST_CASE("tau2 basics") {
    std::vector<double> truth{1.0, 1.0};
    std::vector<double> meas{1.2, 0.8};
    CHECK(tau2(truth, truth, meas) == 0.0);
    CHECK(tau2(meas, truth, meas) == Catch::Approx(1.0).epsilon(1e-14));

    // frozen: sqrt((0.01+0.01)/(0.04+0.04)) = 0.5
    CHECK(tau2({1.1, 0.9}, truth, meas) == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("tau2 rejects a degenerate denominator") {
    std::vector<double> truth{1.0, 2.0};
    CHECK_THROWS_AS(tau2({1.1, 2.1}, truth, truth), DegenerateDenominator);
}

TEST_CASE("tau2 below one means filtering gain") {
    std::vector<double> truth{1.0, 1.0, 1.0};
    std::vector<double> meas{1.3, 0.7, 1.2};
    std::vector<double> close{1.05, 0.95, 1.02}; // smaller summed error than meas
    std::vector<double> far{1.6, 0.2, 1.9};
    CHECK(tau2(close, truth, meas) < 1.0);
    CHECK(tau2(far, truth, meas) > 1.0);
}

TEST_CASE("metrics are permutation invariant") {
    std::mt19937 gen(42);
    std::normal_distribution<double> n(1.0, 0.2);
    std::vector<double> est, truth, meas;
    for (int k = 0; k < 64; ++k) {
        est.push_back(n(gen));
        truth.push_back(n(gen));
        meas.push_back(n(gen) + 1.0); // keep away from zero for tau1
    }
    const double t1 = tau1(est, truth, meas);
    const double t2 = tau2(est, truth, meas);

    std::vector<std::size_t> idx(est.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), gen);
    std::vector<double> e2, t2v, m2;
    for (std::size_t i : idx) {
        e2.push_back(est[i]);
        t2v.push_back(truth[i]);
        m2.push_back(meas[i]);
    }
    CHECK(tau1(e2, t2v, m2) == Catch::Approx(t1).epsilon(1e-13));
    CHECK(tau2(e2, t2v, m2) == Catch::Approx(t2).epsilon(1e-13));
}

TEST_CASE("timing statistics") {
    TimingStats c = timing_stats({1.24, 1.24, 1.24});
    CHECK(c.mean_ms == Catch::Approx(1.24));
    CHECK(c.p95_ms == Catch::Approx(1.24));

    TimingStats t = timing_stats({1.0, 2.0, 3.0});
    CHECK(t.mean_ms == Catch::Approx(2.0));
    CHECK(t.p95_ms == 3.0);

    // nearest-rank on a longer series: p95 of 1..100 is the 95th value
    std::vector<double> v;
    for (int k = 1; k <= 100; ++k) v.push_back(static_cast<double>(k));
    CHECK(timing_stats(v).p95_ms == 95.0);

    CHECK_THROWS_AS(timing_stats({}), DegenerateDenominator);
}
