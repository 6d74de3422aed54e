#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mott/error.hpp"
#include "mott/experiments.hpp"
#include "oracles.hpp"

using namespace mott;

namespace {

EnvModel lattice() { return {DeterministicGap{1.0}, PointMassMark{}, 1.0, Interaction::zero}; }
EnvModel mott_model(double c = 2.0) {
    return {ShiftedExponentialGap{1.0, c}, PowerUniformMark{0.0, 1.0}, 1.0, Interaction::mott};
}

}  // namespace

TEST_CASE("moment classification") {
    CHECK(classify_regime(mott_model(2.0), 0.3).predicted == Regime::ballistic);
    CHECK(classify_regime(mott_model(0.5), 0.3).predicted == Regime::sub_ballistic);
    // c = 1 - lambda sits on the boundary: the moment diverges
    CHECK(classify_regime(mott_model(0.7), 0.3).predicted == Regime::sub_ballistic);
    CHECK(classify_regime(lattice(), 0.9).predicted == Regime::ballistic);

    EnvModel p = mott_model();
    p.gap = ShiftedParetoGap{1.0, 3.0};
    const RegimeVerdict v = classify_regime(p, 0.3);
    CHECK(v.predicted == Regime::sub_ballistic);
    CHECK_FALSE(v.mgf_ballistic.finite());

    const RegimeVerdict b = classify_regime(mott_model(2.0), 0.5);
    CHECK(b.mgf_ballistic.value == doctest::Approx(std::exp(0.5) * 2.0 / 1.5));
    CHECK(b.mgf_subballistic.value == doctest::Approx(b.mgf_ballistic.value * std::exp(-1.5) * 2.0 / 3.5));

    CHECK_THROWS_AS(classify_regime(mott_model(), 0.0), config_error);
    CHECK_THROWS_AS(classify_regime(mott_model(), 1.0), config_error);
    CHECK(to_string(Regime::sub_ballistic) == "sub_ballistic");
}

TEST_CASE("verdicts against measured ratios") {
    const std::vector<double> flat{0.98, 1.01};
    const std::vector<double> falling{0.4, 0.45};
    CHECK(verdict_consistent(Regime::ballistic, flat));
    CHECK_FALSE(verdict_consistent(Regime::ballistic, falling));
    CHECK(verdict_consistent(Regime::sub_ballistic, falling));
    CHECK_FALSE(verdict_consistent(Regime::sub_ballistic, flat));
    CHECK(verdict_consistent(Regime::sub_ballistic, std::vector<double>{0.6}));
    CHECK(verdict_consistent(Regime::indeterminate, flat));
}

TEST_CASE("least squares") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{3, 5, 7, 9};
    const LinearFit f = least_squares(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    const LinearFit g = least_squares(x, std::vector<double>{1, -1, 1, -1});
    CHECK(g.r2 < 0.5);
    CHECK_THROWS_AS(least_squares(std::vector<double>{1}, std::vector<double>{1}), usage_error);
}

TEST_CASE("lattice einstein relation") {
    EinsteinConfig cfg;
    cfg.model = lattice();
    cfg.n_sites = 512;
    cfg.n_envs = 2;
    cfg.eps_tail = 1e-14;
    const EinsteinReport r = einstein_report(cfg);
    REQUIRE(r.envs.size() == 2);
    CHECK(r.hypothesis_ok);
    CHECK(r.mean_d_y == doctest::Approx(oracle::lattice_d_y).epsilon(1e-9));
    CHECK(r.mean_d_x == doctest::Approx(oracle::lattice_d_x).epsilon(1e-9));
    CHECK(r.mean_rel_y < 0.01);
    CHECK(r.mean_rel_x < 0.01);
    CHECK(r.pass);
}

TEST_CASE("random environment einstein relation") {
    EinsteinConfig cfg;
    cfg.model = mott_model();
    cfg.n_sites = 512;
    cfg.n_envs = 3;
    cfg.jobs = 2;
    cfg.continuity_lambdas = {0.0, 0.1, 0.2, 0.3, 0.4};
    const EinsteinReport r = einstein_report(cfg);
    CHECK(r.mean_rel_y < 0.01);
    CHECK(r.mean_rel_x < 0.01);
    CHECK(r.mean_rel_beta < 0.01);
    CHECK(r.continuity.continuous);
    CHECK(r.continuity.v_y.front() == doctest::Approx(0.0).epsilon(1e-12));
    for (std::size_t k = 1; k < r.continuity.v_y.size(); ++k) CHECK(r.continuity.v_y[k] > r.continuity.v_y[k - 1]);
    for (const auto& e : r.envs) CHECK(e.corrector_residual < 1e-8);
    CHECK(r.pass);

    cfg.jobs = 1;
    const EinsteinReport s = einstein_report(cfg);
    CHECK(s.mean_rel_y == r.mean_rel_y);

    const nlohmann::json j = to_json(r);
    CHECK(j.at("environments").size() == 3);
    CHECK(j["pass"].get<bool>());
}

TEST_CASE("heavy tailed gaps violate the moment hypothesis") {
    EinsteinConfig cfg;
    cfg.model = mott_model();
    cfg.model.gap = ShiftedParetoGap{1.0, 3.0};
    cfg.n_sites = 512;
    cfg.n_envs = 1;
    const EinsteinReport r = einstein_report(cfg);
    CHECK_FALSE(r.hypothesis_ok);
    CHECK(to_json(r).contains("warning"));
}

TEST_CASE("arrhenius trend") {
    ArrheniusConfig cfg;
    cfg.model = mott_model();
    cfg.betas = {1, 2, 3};
    cfg.n_sites = 512;
    cfg.n_envs = 2;
    const ArrheniusFit f = arrhenius_sweep(cfg);
    REQUIRE(f.points.size() == 3);
    CHECK(f.strictly_decreasing);
    CHECK(f.slope < 0.0);
    for (const auto& p : f.points) CHECK(p.log_d == doctest::Approx(std::log(p.d_x)));
    CHECK(f.d_beta0 == doctest::Approx(f.d_zero_u).epsilon(1e-12));
    CHECK(f.d_doubled_bound < f.d_at_bound);

    cfg.model.interaction = Interaction::zero;
    CHECK_THROWS_AS(arrhenius_sweep(cfg), config_error);
    cfg.model.interaction = Interaction::mott;
    cfg.n_envs = 1;
    CHECK_THROWS_AS(arrhenius_sweep(cfg), config_error);
}

TEST_CASE("phase sweep splits at the critical rate") {
    PhaseSweepConfig cfg;
    cfg.lambda = 0.5;
    cfg.rates = {2.0, 0.2};
    cfg.base = mott_model();
    cfg.horizons = {1e3, 1e4};
    cfg.n_walkers = 16;
    cfg.options.batches = 8;
    const PhaseSweep s = phase_sweep(cfg);
    CHECK(s.critical_rate == 0.5);
    REQUIRE(s.points.size() == 2);
    CHECK(s.points[0].rate == 0.2);
    CHECK(s.points[0].verdict.predicted == Regime::sub_ballistic);
    CHECK(s.points[1].verdict.predicted == Regime::ballistic);
    CHECK(s.points[0].ratios.size() == 1);
    CHECK(s.points[0].ratios[0] < s.points[1].ratios[0]);
    CHECK(s.points[1].consistent);
}

TEST_CASE("walker and chain solver agree on a torus") {
    OracleConfig cfg;
    cfg.model = mott_model();
    cfg.n_sites = 256;
    cfg.n_envs = 2;
    cfg.steps = 200000;
    cfg.jobs = 2;
    const OracleReport r = oracle_equivalence(cfg);
    REQUIRE(r.envs.size() == 2);
    CHECK(std::abs(r.z_v_y) < 4.0);
    CHECK(std::abs(r.z_v_x) < 4.0);
    CHECK(std::abs(r.z_phi) < 4.0);
    CHECK(std::abs(r.z_holding) < 4.0);
}
