#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mott/chain_solver.hpp"
#include "mott/error.hpp"
#include "mott/walker_sim.hpp"
#include "oracles.hpp"

using namespace mott;

namespace {

EnvModel lattice() { return {DeterministicGap{1.0}, PointMassMark{}, 1.0, Interaction::zero}; }
EnvModel mott_model(double c = 2.0) {
    return {ShiftedExponentialGap{1.0, c}, PowerUniformMark{0.0, 1.0}, 1.0, Interaction::mott};
}

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace

TEST_CASE("batch means") {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
    const Estimate e = batch_means(v, 80);
    CHECK(e.value == 4.5);
    CHECK(e.std_error == doctest::Approx(std::sqrt(6.0 / 8.0)));
    CHECK(e.n_batches == 8);
    CHECK(e.n_samples == 80);
    CHECK_THROWS_AS(batch_means(std::vector<double>(7, 1.0), 7), usage_error);
    const Estimate flat = batch_means_of_samples(std::vector<double>(1000, 2.0));
    CHECK(flat.value == 2.0);
    CHECK(flat.std_error == 0.0);
    CHECK(flat.n_batches == default_batches);
}

TEST_CASE("unbiased lattice walk has zero speed") {
    WalkSpec spec{WalkKind::discrete, {1e6}, Recording::full};
    const Trajectory tr = simulate(lattice(), 0.0, spec, 1, 2);
    CHECK(tr.endpoint().n_jumps == 1000000);
    const Estimate v = trajectory_velocity_y(tr, 0.0);
    CHECK(std::abs(v.value) <= 3 * v.std_error);
    CHECK(v.value == doctest::Approx(tr.endpoint().x / 1e6).epsilon(1e-9));
}

TEST_CASE("positions follow the environment") {
    LazyEnvironment env(mott_model(), 42, 0.3);
    WalkSpec spec{WalkKind::continuous, {500.0}, Recording::full};
    const Trajectory tr = simulate(env, 0.3, spec, 7);
    REQUIRE(tr.times.size() > 10);
    CHECK(tr.times[0] == 0.0);
    for (std::size_t k = 1; k < tr.times.size(); ++k) REQUIRE(tr.times[k] > tr.times[k - 1]);
    for (std::size_t k = 0; k < tr.site_indices.size(); ++k) REQUIRE(tr.displacements[k] == env.x(tr.site_indices[k]));
    CHECK(tr.endpoint().t == 500.0);
    CHECK(tr.times.back() <= 500.0);
}

TEST_CASE("walks are deterministic") {
    WalkSpec spec{WalkKind::continuous, {200.0, 2000.0}, Recording::full};
    const Trajectory a = simulate(mott_model(), 0.4, spec, 3, 4);
    const Trajectory b = simulate(mott_model(), 0.4, spec, 3, 4);
    CHECK(a.site_indices == b.site_indices);
    CHECK(a.times == b.times);
    CHECK(a.displacements == b.displacements);
    const Trajectory c = simulate(mott_model(), 0.4, spec, 3, 5);
    CHECK(c.site_indices != a.site_indices);

    // a tiny cache changes nothing but speed
    LazyEnvironment small(mott_model(), 3, 0.4, default_eps_tail, 8);
    const Trajectory d = simulate(small, 0.4, spec, 4);
    CHECK(d.site_indices == a.site_indices);
    CHECK(d.times == a.times);

    // discrete and continuous walks share the jump sequence
    WalkSpec steps{WalkKind::discrete, {static_cast<double>(a.endpoint().n_jumps)}, Recording::full};
    const Trajectory e = simulate(mott_model(), 0.4, steps, 3, 4);
    CHECK(e.site_indices == a.site_indices);
}

TEST_CASE("ensemble results do not depend on the worker count") {
    const std::vector<double> hs{50.0, 500.0};
    EnsembleOptions one;
    EnsembleOptions four;
    four.jobs = 4;
    const VelocityRun a = velocity_estimate(mott_model(), 0.3, hs, 32, 9, one);
    const VelocityRun b = velocity_estimate(mott_model(), 0.3, hs, 32, 9, four);
    for (std::size_t k = 0; k < hs.size(); ++k) {
        CHECK(a.estimates[k].value == b.estimates[k].value);
        CHECK(a.estimates[k].std_error == b.estimates[k].std_error);
    }
    REQUIRE(a.endpoints.size() == b.endpoints.size());
    for (std::size_t k = 0; k < a.endpoints.size(); ++k) CHECK(a.endpoints[k].final_x == b.endpoints[k].final_x);
}

TEST_CASE("transience to the right") {
    std::vector<double> hs;
    for (int k = 0; k <= 10; ++k) hs.push_back(100.0 * std::pow(2.0, k));
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        WalkSpec spec{WalkKind::discrete, hs, Recording::full};
        const Trajectory tr = simulate(mott_model(), 0.3, spec, seed, seed + 100);
        double running = 0.0;
        std::size_t at = 0;
        std::vector<double> maxima;
        for (const auto& cp : tr.checkpoints) {
            while (at < tr.displacements.size() && static_cast<double>(at) <= cp.horizon) {
                running = std::max(running, tr.displacements[at]);
                ++at;
            }
            maxima.push_back(running);
            CHECK(cp.x > 0.0);
        }
        for (std::size_t k = 1; k < maxima.size(); ++k) CHECK(maxima[k] > maxima[k - 1]);
    }
}

TEST_CASE("zero bias velocity estimate") {
    const std::vector<double> hs{2000.0};
    const VelocityRun r = velocity_estimate(mott_model(), 0.0, hs, 64, 5);
    CHECK(std::abs(r.estimates[0].value) <= 3 * r.estimates[0].std_error);
    CHECK(r.estimates[0].std_error > 0.0);
}

TEST_CASE("ballistic velocity agrees with the chain solver") {
    const double lambda = 0.5;
    const EnvModel m = mott_model();
    // chain values averaged over environments
    std::vector<double> vx;
    for (std::uint64_t s = 0; s < 6; ++s) {
        const EnvWindow w = sample_window(m, {0, 4096}, 1000 + s);
        const FiniteChain c = build_chain(w, 4096, lambda);
        vx.push_back(chain_velocities(c, stationary_distribution(c).pi).v_x);
    }
    double mean = 0.0;
    for (double v : vx) mean += v / 6.0;
    double ss = 0.0;
    for (double v : vx) ss += (v - mean) * (v - mean);
    const double chain_se = std::sqrt(ss / 5.0 / 6.0);
    CHECK(mean > 0.0);

    const std::vector<double> hs{20000.0};
    const VelocityRun r = velocity_estimate(m, lambda, hs, 64, 77);
    CHECK(r.estimates[0].value > 0.0);
    CHECK(std::abs(r.estimates[0].value - mean) <= 3 * combined(r.estimates[0].std_error, chain_se));
}

TEST_CASE("sub-ballistic velocity decays") {
    const std::vector<double> hs{1e4, 1e5};
    const VelocityRun r = velocity_estimate(mott_model(0.3), 0.5, hs, 64, 13);
    CHECK(r.estimates[1].value < 0.5 * r.estimates[0].value);
}

TEST_CASE("lattice mean squared displacement") {
    EnsembleOptions o;
    o.kind = WalkKind::discrete;
    const Estimate dy = msd_diffusion_estimate(lattice(), 0.0, 400.0, 2048, 3, o);
    CHECK(std::abs(dy.value - oracle::lattice_d_y) <= 3 * dy.std_error);
    o.kind = WalkKind::continuous;
    const Estimate dx = msd_diffusion_estimate(lattice(), 0.0, 400.0, 2048, 4, o);
    CHECK(std::abs(dx.value - oracle::lattice_d_x) <= 3 * dx.std_error);
    CHECK(dx.value > 0.0);
    CHECK_THROWS_AS(msd_diffusion_estimate(lattice(), 0.2, 400.0, 64, 3, o), usage_error);
}

TEST_CASE("torus walks against the chain solver") {
    const std::size_t n = 256;
    const EnvModel m = mott_model();
    const EnvWindow w = sample_window(m, {0, static_cast<std::int64_t>(n)}, 5);

    SUBCASE("zero bias diffusion from walkers started at the stationary law") {
        const FiniteChain c = build_chain(w, n, 0.0);
        const auto pi = stationary_distribution(c).pi;
        const double d_y = diffusion_from_corrector(c, pi, solve_corrector(c, pi, c.drift, 0.0).g);
        EnsembleOptions o;
        o.kind = WalkKind::discrete;
        const Estimate e = msd_diffusion_estimate(c, pi, 2000.0, 1024, 8, o);
        CHECK(std::abs(e.value - d_y) <= 3 * e.std_error);
        const double d_x = d_y / mean_holding_time(c, pi);
        o.kind = WalkKind::continuous;
        const Estimate ex = msd_diffusion_estimate(c, pi, 2000.0, 1024, 9, o);
        CHECK(std::abs(ex.value - d_x) <= 3 * ex.std_error);
    }

    SUBCASE("biased occupation measure") {
        const FiniteChain c = build_chain(w, n, 0.3);
        const auto pi = stationary_distribution(c).pi;
        const Velocities v = chain_velocities(c, pi);
        const PeriodicEnvironment env(c);
        CHECK(env.size() == n);
        WalkSpec spec{WalkKind::discrete, {4e5}, Recording::full};
        const Trajectory tr = simulate(env, 0.3, spec, 21);
        const auto phi = [&](std::int64_t s) { return c.drift[static_cast<std::size_t>(s)]; };
        const auto hold = [&](std::int64_t s) { return 1.0 / c.exit_rate[static_cast<std::size_t>(s)]; };
        const Estimate one = occupation_stats(tr, [](std::int64_t) { return 1.0; });
        CHECK(one.value == 1.0);
        CHECK(one.std_error == 0.0);
        const Estimate ephi = occupation_stats(tr, phi);
        const Estimate ehold = occupation_stats(tr, hold);
        const Estimate vy = trajectory_velocity_y(tr);
        const Estimate vx = trajectory_velocity_x(tr);
        CHECK(std::abs(ephi.value - v.v_y) <= 3 * ephi.std_error);
        CHECK(std::abs(ehold.value - mean_holding_time(c, pi)) <= 3 * ehold.std_error);
        CHECK(std::abs(vy.value - v.v_y) <= 3 * vy.std_error);
        CHECK(std::abs(vx.value - v.v_x) <= 3 * vx.std_error);
        // time change: v_X = v_Y / Q[1/exit]
        const double ratio = vy.value / ehold.value;
        const double ratio_se = ratio * std::hypot(vy.std_error / vy.value, ehold.std_error / ehold.value);
        CHECK(std::abs(vx.value - ratio) <= 3 * combined(vx.std_error, ratio_se));
        // site i on the torus sits at x_i modulo the period
        for (std::size_t k = 0; k < tr.site_indices.size(); k += 997) {
            const double laps =
                (tr.displacements[k] + c.positions[0] - c.positions[static_cast<std::size_t>(tr.site_indices[k])]) /
                c.period;
            REQUIRE(std::abs(laps - std::round(laps)) <= 1e-9);
        }
        const Estimate cov = covariance_representation(tr, hold, phi);
        CHECK(std::isfinite(cov.value));
    }
    CHECK_THROWS_AS(simulate(PeriodicEnvironment(build_chain(w, n, 0.0)), 0.0, {WalkKind::discrete, {10.0}}, 1, 300),
                    usage_error);
}

TEST_CASE("invalid walk specifications") {
    CHECK_THROWS_AS(simulate(lattice(), 0.0, {WalkKind::discrete, {}}, 1, 1), usage_error);
    CHECK_THROWS_AS(simulate(lattice(), 0.0, {WalkKind::discrete, {10.0, 5.0}}, 1, 1), usage_error);
    CHECK_THROWS_AS(simulate(lattice(), 1.0, {WalkKind::discrete, {10.0}}, 1, 1), config_error);
    CHECK_THROWS_AS(velocity_estimate(lattice(), 0.0, std::vector<double>{10.0}, 4, 1), usage_error);
    CHECK_THROWS_AS(occupation_stats(simulate(lattice(), 0.0, {WalkKind::discrete, {10.0}}, 1, 1),
                                     [](std::int64_t) { return 1.0; }),
                    usage_error);
}

TEST_CASE("parallel_for visits every index once and rethrows failures") {
    std::vector<int> seen(100, 0);
    parallel_for(100, 3, [&](std::size_t k) { seen[k] += 1; });
    for (int s : seen) CHECK(s == 1);
    CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t k) {
                        if (k == 7) throw usage_error("boom");
                    }),
                    usage_error);
}
