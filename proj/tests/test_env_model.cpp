#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mott/env_model.hpp"
#include "mott/error.hpp"
#include "mott/rng.hpp"
#include "oracles.hpp"

using namespace mott;

namespace {

EnvModel lattice() { return {DeterministicGap{1.0}, PointMassMark{}, 1.0, Interaction::zero}; }
EnvModel exp_model(double d, double c) { return {ShiftedExponentialGap{d, c}, PowerUniformMark{0.0, 1.0}, 1.0, Interaction::mott}; }

}  // namespace

TEST_CASE("lattice window on [-3,3]") {
    const EnvWindow w = sample_window(lattice(), {-3, 3}, 11);
    for (int i = -3; i <= 3; ++i) {
        CHECK(w.x(i) == i);
        CHECK(w.energy(i) == 0.0);
    }
    CHECK(w.model().has_value());
    CHECK(lattice().oracle_only());
    CHECK_FALSE(exp_model(1, 2).oracle_only());
}

TEST_CASE("shifted exponential gaps have mean d + 1/c") {
    const EnvModel m = exp_model(1.0, 2.0);
    const int n = 100000;
    double sum = 0.0;
    double sum2 = 0.0;
    double smallest = 1e300;
    for (int i = 0; i < n; ++i) {
        const double z = m.sample_gap(5, i);
        sum += z;
        sum2 += z * z;
        smallest = std::min(smallest, z);
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.5) <= 3 * se);
    CHECK(smallest >= 1.0);
    CHECK(m.mean_gap() == doctest::Approx(1.5));
}

TEST_CASE("uniform marks on [-1,1]") {
    const EnvModel m = exp_model(1.0, 2.0);
    const int n = 100000;
    double sum = 0.0;
    double biggest = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = m.sample_mark(9, i);
        sum += e;
        biggest = std::max(biggest, std::abs(e));
    }
    CHECK(std::abs(sum / n) <= 3 * std::sqrt(1.0 / 3.0 / n));
    CHECK(biggest <= 1.0);
}

TEST_CASE("power-uniform magnitudes have mean (a+1)/(a+2) A") {
    EnvModel m = exp_model(1.0, 2.0);
    m.mark = PowerUniformMark{2.0, 0.5};
    const int n = 100000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = std::abs(m.sample_mark(3, i));
        sum += a;
        sum2 += a * a;
        REQUIRE(a <= 0.5);
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 0.375) <= 3 * se);
    CHECK(PowerUniformMark{2.0, 0.5}.normalization() == doctest::Approx(3.0 / (2.0 * 0.125)));
    CHECK(PowerUniformMark{0.0, 1.0}.normalization() == doctest::Approx(0.5));
}

TEST_CASE("shifted pareto gaps") {
    EnvModel m = exp_model(1.0, 2.0);
    m.gap = ShiftedParetoGap{1.0, 3.0};
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = m.sample_gap(4, i);
        REQUIRE(z >= 1.0);
        sum += z;
    }
    // variance d^2 a / ((a-1)^2 (a-2)) = 3/4
    CHECK(std::abs(sum / n - 1.5) <= 3 * std::sqrt(0.75 / n));
}

TEST_CASE("invalid parameters are configuration errors") {
    CHECK_THROWS_AS(exp_model(1.0, 0.0).validate(), config_error);
    CHECK_THROWS_AS(exp_model(0.0, 1.0).validate(), config_error);
    CHECK_THROWS_AS(exp_model(-1.0, 1.0).validate(), config_error);
    EnvModel m = exp_model(1.0, 2.0);
    m.mark = PowerUniformMark{0.0, 0.0};
    CHECK_THROWS_AS(m.validate(), config_error);
    m.mark = PowerUniformMark{-0.5, 1.0};
    CHECK_THROWS_AS(m.validate(), config_error);
    m.mark = PointMassMark{};
    m.gap = ShiftedParetoGap{1.0, 1.0};
    CHECK_THROWS_AS(m.validate(), config_error);
    CHECK_THROWS_AS(sample_window(exp_model(1.0, -2.0), {-2, 2}, 1), config_error);
    CHECK_THROWS_AS(sample_window(exp_model(1.0, 2.0), {1, 4}, 1), config_error);
}

TEST_CASE("explicit windows check their invariants") {
    CHECK_NOTHROW(EnvWindow({-1, 1}, {-1.0, 0.0, 2.0}, {0, 0, 0}));
    CHECK_THROWS_AS(EnvWindow({-1, 1}, {-1.0, 0.5, 2.0}, {0, 0, 0}), config_error);
    CHECK_THROWS_AS(EnvWindow({-1, 1}, {0.0, 0.0, 2.0}, {0, 0, 0}), config_error);
    CHECK_THROWS_AS(EnvWindow({0, 2}, {0.0, 1.0}, {0, 0}), config_error);
    const EnvWindow w({-1, 1}, {-1.0, 0.0, 2.0}, {0, 0, 0});
    CHECK_THROWS_AS(w.x(2), std::out_of_range);
    CHECK_THROWS_AS(w.energy(-2), std::out_of_range);
    CHECK_FALSE(w.extensible());
    CHECK_THROWS_AS(extend_window(w, {-2, 2}), usage_error);
}

TEST_CASE("extension is consistent") {
    const EnvModel m = exp_model(1.0, 2.0);
    const EnvWindow small = sample_window(m, {-1, 1}, 77);
    SUBCASE("identity") { CHECK(extend_window(small, {-1, 1}) == small); }
    SUBCASE("extend then restrict") { CHECK(extend_window(small, {-5, 5}).restrict({-1, 1}) == small); }
    SUBCASE("independent extensions agree bit for bit") {
        const EnvWindow a = extend_window(small, {-9, 9});
        const EnvWindow b = extend_window(extend_window(small, {-3, 9}), {-9, 9});
        CHECK(a == b);
        CHECK(a == sample_window(m, {-9, 9}, 77));
    }
    SUBCASE("shrinking is a usage error") { CHECK_THROWS_AS(extend_window(small, {0, 1}), usage_error); }
}

TEST_CASE("windows agree with restrictions of larger windows") {
    const EnvModel m = exp_model(0.5, 1.3);
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const auto lo = -static_cast<std::int64_t>(rng.bits() % 40);
        const auto hi = static_cast<std::int64_t>(rng.bits() % 40);
        const std::uint64_t seed = rng.bits();
        const EnvWindow inner = sample_window(m, {lo, hi}, seed);
        const EnvWindow outer = sample_window(m, {lo - 17, hi + 23}, seed);
        REQUIRE(outer.restrict({lo, hi}) == inner);
        for (std::int64_t i = lo; i < hi; ++i) REQUIRE(inner.gap(i) >= 0.5);
    }
}

TEST_CASE("gap moment generating function") {
    const EnvModel m = exp_model(1.0, 2.0);
    CHECK(gap_mgf(m, 0.0).value == 1.0);
    CHECK(gap_mgf(lattice(), 0.0).value == 1.0);
    CHECK(gap_mgf(m, 1.0).value == doctest::Approx(oracle::shifted_exp_mgf_1_2_at_1).epsilon(1e-14));
    CHECK_FALSE(gap_mgf(exp_model(1.0, 0.5), 0.7).finite());
    CHECK_FALSE(gap_mgf(exp_model(1.0, 0.5), 0.5).finite());
    CHECK(gap_mgf(lattice(), 0.7).value == doctest::Approx(std::exp(0.7)));

    EnvModel p = m;
    p.gap = ShiftedParetoGap{1.0, 3.0};
    CHECK_FALSE(gap_mgf(p, 1e-6).finite());
    const MgfValue q = gap_mgf(p, -1.0);
    CHECK(q.value == doctest::Approx(oracle::pareto_mgf_1_3_at_m1).epsilon(1e-9));
    CHECK(q.abs_error < 1e-8);
    CHECK(gap_mgf(p, -2.0).value == doctest::Approx(oracle::pareto_mgf_1_3_at_m2).epsilon(1e-9));

    for (const EnvModel& law : {m, p, lattice()}) {
        double prev = 0.0;
        for (double s = -3.0; s <= 1.9; s += 0.1) {
            const double v = gap_mgf(law, s).value;
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("serialization round trips") {
    const EnvModel m = exp_model(1.0, 2.0);
    const EnvWindow w = sample_window(m, {-4, 6}, 99);
    CHECK(window_from_descriptor(window_descriptor(w)) == w);
    const nlohmann::json j = to_json(m);
    const EnvModel back = model_from_json(j);
    CHECK(sample_window(back, {-4, 6}, 99) == w);
    std::ostringstream os;
    write_window_csv(os, w);
    const std::string csv = os.str();
    CHECK(csv.rfind("index,x,E\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
    CHECK(csv.find('\r') == std::string::npos);
    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"gap_law", "weibull"}, {"gap_d", 1.0}}), config_error);
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("counter streams are independent of call order") {
    CHECK(counter_uniform(1, 5, 0) == counter_uniform(1, 5, 0));
    CHECK(counter_uniform(1, 5, 0) != counter_uniform(1, 5, 1));
    CHECK(counter_uniform(1, 5, 0) != counter_uniform(2, 5, 0));
    for (int i = 0; i < 1000; ++i) {
        const double u = counter_uniform(3, i, 0);
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
    }
}
