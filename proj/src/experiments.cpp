#include "mott/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "mott/error.hpp"
#include "mott/rng.hpp"

namespace mott {

std::string to_string(Regime r) {
    switch (r) {
        case Regime::ballistic: return "ballistic";
        case Regime::sub_ballistic: return "sub_ballistic";
        case Regime::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

// Regime classification ---------------------------------------------------------------

RegimeVerdict classify_regime(const EnvModel& model, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw config_error("regime classification needs lambda in (0, 1)");
    model.validate();
    RegimeVerdict v;
    v.lambda = lambda;
    v.mgf_ballistic = gap_mgf(model, 1.0 - lambda);
    // gaps are i.i.d., so the two-gap functional factorizes
    const MgfValue left = gap_mgf(model, -(1.0 + lambda));
    v.mgf_subballistic.value = left.value * v.mgf_ballistic.value;
    v.mgf_subballistic.abs_error =
        left.abs_error * v.mgf_ballistic.value + left.value * v.mgf_ballistic.abs_error;
    if (v.mgf_ballistic.finite())
        v.predicted = Regime::ballistic;
    else if (!v.mgf_subballistic.finite())
        v.predicted = Regime::sub_ballistic;
    else
        v.predicted = Regime::indeterminate;
    return v;
}

RegimeVerdict classify_regime(const EnvModel& model, double lambda, std::span<const double> horizons, int n_walkers,
                              std::uint64_t seed, const EnsembleOptions& options) {
    RegimeVerdict v = classify_regime(model, lambda);
    const VelocityRun run = velocity_estimate(model, lambda, horizons, n_walkers, seed, options);
    v.horizons = run.horizons;
    v.measured_velocity = run.estimates;
    return v;
}

bool verdict_consistent(Regime predicted, std::span<const double> ratios) {
    for (double r : ratios) {
        if (predicted == Regime::ballistic && r <= subballistic_decade_ratio) return false;
        if (predicted == Regime::sub_ballistic && r >= ballistic_ratio_band_lo && r <= ballistic_ratio_band_hi)
            return false;
    }
    return true;
}

PhaseSweep phase_sweep(const PhaseSweepConfig& config) {
    if (config.rates.empty()) throw config_error("phase sweep needs a non-empty rate grid");
    if (config.horizons.size() < 2) throw config_error("phase sweep needs at least two horizons");
    PhaseSweep out;
    out.lambda = config.lambda;
    out.critical_rate = 1.0 - config.lambda;
    std::vector<double> rates = config.rates;
    std::sort(rates.begin(), rates.end());
    for (double c : rates) {
        EnvModel m = config.base;
        m.gap = ShiftedExponentialGap{config.min_gap, c};
        PhasePoint p;
        p.rate = c;
        // same seed at every grid point: common random numbers across the sweep
        p.verdict = classify_regime(m, config.lambda, config.horizons, config.n_walkers, config.seed, config.options);
        const auto& est = p.verdict.measured_velocity;
        for (std::size_t k = 1; k < est.size(); ++k) p.ratios.push_back(est[k].value / est[k - 1].value);
        p.consistent = verdict_consistent(p.verdict.predicted, p.ratios);
        out.consistent = out.consistent && p.consistent;
        out.points.push_back(std::move(p));
    }
    return out;
}

// Einstein relation -------------------------------------------------------------------

ContinuityScan continuity_scan(const EnvWindow& window, std::size_t n_sites, std::span<const double> lambdas,
                               double eps_tail, const SolverOptions& solver) {
    ContinuityScan s;
    s.lambdas.assign(lambdas.begin(), lambdas.end());
    double widest = 0.0;
    for (double l : lambdas) widest = std::max(widest, std::abs(l));
    const long radius = chain_radius(window, n_sites, widest, eps_tail);
    for (double l : lambdas) {
        const FiniteChain c = build_chain(window, n_sites, l, eps_tail, radius);
        const Velocities v = chain_velocities(c, stationary_distribution(c, solver).pi);
        s.v_y.push_back(v.v_y);
        s.v_x.push_back(v.v_x);
    }
    auto worst = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        if (n < 3) return 0.0;
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        std::vector<double> d(n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) d[k] = std::abs(v[k + 1] - v[k]);
        double w = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            double trend = 0.0;
            if (k > 0) trend = std::max(trend, d[k - 1]);
            if (k + 1 < d.size()) trend = std::max(trend, d[k + 1]);
            trend = std::max(trend, 1e-12 * scale);
            w = std::max(w, d[k] / trend);
        }
        return w;
    };
    s.worst_jump_ratio = std::max(worst(s.v_y), worst(s.v_x));
    s.continuous = s.worst_jump_ratio <= 3.0;
    return s;
}

EinsteinReport einstein_report(const EinsteinConfig& config) {
    config.model.validate();
    if (config.n_envs < 1) throw config_error("n_environments must be >= 1");
    EinsteinReport r;
    r.n_sites = config.n_sites;
    r.h = config.h;
    r.hypothesis_p = 2.0 * (1.0 + 1e-9);
    r.hypothesis_ok = gap_mgf(config.model, r.hypothesis_p).finite();
    const double beta = config.model.interaction == Interaction::mott && config.model.beta > 0.0 ? config.model.beta : 1.0;

    const auto n = static_cast<std::size_t>(config.n_envs);
    r.envs.resize(n);
    parallel_for(n, config.jobs, [&](std::size_t k) {
        EinsteinEnv& e = r.envs[k];
        e.env_seed = derive_seed(config.seed, seed_tag::environment, k);
        const auto ns = static_cast<std::int64_t>(config.n_sites);
        const EnvWindow w = sample_window(config.model, {0, ns}, e.env_seed);
        const FiniteChain c0 = build_chain(w, config.n_sites, 0.0, config.eps_tail);
        const auto st = stationary_distribution(c0, config.solver);
        const auto corr = solve_corrector(c0, st.pi, c0.drift, 0.0, "phi", config.solver);
        e.corrector_residual = corr.residual;
        e.d_y = diffusion_from_corrector(c0, st.pi, corr.g);
        e.d_x = e.d_y / mean_holding_time(c0, st.pi);
        const Mobility m = mobility_fd(w, config.n_sites, config.h, config.eps_tail, 1.0, config.solver);
        e.mobility_y = m.mobility_y;
        e.mobility_x = m.mobility_x;
        e.rel_y = std::abs(e.mobility_y - e.d_y) / e.d_y;
        e.rel_x = std::abs(e.mobility_x - e.d_x) / e.d_x;
        const Mobility ms = mobility_fd(w, config.n_sites, config.h, config.eps_tail, beta, config.solver);
        e.scaled_mobility_y = ms.mobility_y;
        e.beta_d_y = beta * e.d_y;
        e.rel_beta = std::abs(e.scaled_mobility_y - e.beta_d_y) / e.beta_d_y;
    });
    for (const auto& e : r.envs) {
        r.mean_rel_y += e.rel_y / static_cast<double>(n);
        r.mean_rel_x += e.rel_x / static_cast<double>(n);
        r.mean_rel_beta += e.rel_beta / static_cast<double>(n);
        r.mean_mobility_y += e.mobility_y / static_cast<double>(n);
        r.mean_mobility_x += e.mobility_x / static_cast<double>(n);
        r.mean_d_y += e.d_y / static_cast<double>(n);
        r.mean_d_x += e.d_x / static_cast<double>(n);
    }
    if (!config.continuity_lambdas.empty()) {
        const auto ns = static_cast<std::int64_t>(config.n_sites);
        const EnvWindow w = sample_window(config.model, {0, ns}, r.envs.front().env_seed);
        r.continuity = continuity_scan(w, config.n_sites, config.continuity_lambdas, config.eps_tail, config.solver);
    }
    r.pass = r.mean_rel_y <= einstein_tolerance && r.mean_rel_x <= einstein_tolerance &&
             r.mean_rel_beta <= einstein_tolerance && r.continuity.continuous;
    return r;
}

// Arrhenius sweep -----------------------------------------------------------------

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw usage_error("least squares needs two or more paired points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (!(sxx > 0.0)) throw usage_error("least squares needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

namespace {

struct DiffusionPair {
    double d_y = 0.0;
    double d_x = 0.0;
};

DiffusionPair chain_diffusion(const EnvModel& model, std::size_t n_sites, std::uint64_t env_seed, double eps_tail,
                              const SolverOptions& solver) {
    const EnvWindow w = sample_window(model, {0, static_cast<std::int64_t>(n_sites)}, env_seed);
    const FiniteChain c = build_chain(w, n_sites, 0.0, eps_tail);
    const auto st = stationary_distribution(c, solver);
    const auto corr = solve_corrector(c, st.pi, c.drift, 0.0, "phi", solver);
    DiffusionPair d;
    d.d_y = diffusion_from_corrector(c, st.pi, corr.g);
    d.d_x = d.d_y / mean_holding_time(c, st.pi);
    return d;
}

void mean_and_stderr(const std::vector<double>& v, double& mean, double& se) {
    const auto n = static_cast<double>(v.size());
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace

ArrheniusFit arrhenius_sweep(const ArrheniusConfig& config) {
    config.model.validate();
    if (config.model.interaction != Interaction::mott) throw config_error("arrhenius sweep needs u_kind = mott");
    const auto* marks = std::get_if<PowerUniformMark>(&config.model.mark);
    if (!marks) throw config_error("arrhenius sweep needs mark_law = power_uniform");
    if (config.betas.size() < 2) throw config_error("arrhenius sweep needs at least two beta values");
    if (!gap_mgf(config.model, 1.0).finite()) throw config_error("arrhenius sweep needs E[e^Z] < inf");
    if (config.n_envs < 2) throw config_error("n_environments must be >= 2");

    // tasks: every beta of the grid, then beta = 0 (mott and zero u), then the doubled mark bound
    std::vector<EnvModel> models;
    for (double b : config.betas) {
        EnvModel m = config.model;
        m.beta = b;
        models.push_back(m);
    }
    EnvModel b0 = config.model;
    b0.beta = 0.0;
    models.push_back(b0);
    EnvModel zero_u = config.model;
    zero_u.interaction = Interaction::zero;
    models.push_back(zero_u);
    EnvModel doubled = config.model;
    doubled.beta = config.betas.front();
    doubled.mark = PowerUniformMark{marks->alpha, 2.0 * marks->bound};
    models.push_back(doubled);

    const auto envs = static_cast<std::size_t>(config.n_envs);
    std::vector<DiffusionPair> d(models.size() * envs);
    parallel_for(d.size(), config.jobs, [&](std::size_t t) {
        const std::size_t k = t % envs;
        d[t] = chain_diffusion(models[t / envs], config.n_sites, derive_seed(config.seed, seed_tag::environment, k),
                               config.eps_tail, config.solver);
    });
    auto column = [&](std::size_t m, bool x) {
        std::vector<double> v(envs);
        for (std::size_t k = 0; k < envs; ++k) v[k] = x ? d[m * envs + k].d_x : d[m * envs + k].d_y;
        return v;
    };

    ArrheniusFit f;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t m = 0; m < config.betas.size(); ++m) {
        ArrheniusPoint p;
        p.beta = config.betas[m];
        mean_and_stderr(column(m, true), p.d_x, p.d_x_stderr);
        mean_and_stderr(column(m, false), p.d_y, p.d_y_stderr);
        p.log_d = std::log(p.d_x);
        xs.push_back(p.beta);
        ys.push_back(p.log_d);
        f.points.push_back(p);
    }
    const LinearFit lf = least_squares(xs, ys);
    f.slope = lf.slope;
    f.intercept = lf.intercept;
    f.r2 = lf.r2;
    f.strictly_decreasing = true;
    for (std::size_t k = 1; k < f.points.size(); ++k) {
        const bool later = f.points[k].beta > f.points[k - 1].beta;
        const bool lower = f.points[k].log_d < f.points[k - 1].log_d;
        if (later != lower) f.strictly_decreasing = false;
    }
    double se = 0.0;
    const std::size_t nb = config.betas.size();
    mean_and_stderr(column(nb, true), f.d_beta0, se);
    mean_and_stderr(column(nb + 1, true), f.d_zero_u, se);
    f.doubled_bound_beta = config.betas.front();
    mean_and_stderr(column(nb + 2, true), f.d_doubled_bound, se);
    f.d_at_bound = f.points.front().d_x;
    f.pass = f.r2 >= arrhenius_min_r2 && f.slope < 0.0 && f.strictly_decreasing;
    return f;
}

// Solver against simulator -------------------------------------------------------

OracleReport oracle_equivalence(const OracleConfig& config) {
    config.model.validate();
    if (config.n_envs < 1) throw config_error("n_environments must be >= 1");
    const auto n = static_cast<std::size_t>(config.n_envs);
    OracleReport r;
    r.envs.resize(n);
    parallel_for(n, config.jobs, [&](std::size_t k) {
        OracleComparison& o = r.envs[k];
        o.env_seed = derive_seed(config.seed, seed_tag::environment, k);
        const EnvWindow w = sample_window(config.model, {0, static_cast<std::int64_t>(config.n_sites)}, o.env_seed);
        const FiniteChain c = build_chain(w, config.n_sites, config.lambda, config.eps_tail);
        const auto st = stationary_distribution(c);
        const Velocities v = chain_velocities(c, st.pi);
        o.chain_v_y = v.v_y;
        o.chain_v_x = v.v_x;
        o.chain_holding = mean_holding_time(c, st.pi);

        const PeriodicEnvironment env(c);
        WalkSpec spec{WalkKind::discrete, {static_cast<double>(config.steps)}, Recording::full};
        const Trajectory tr = simulate(env, config.lambda, spec, derive_seed(config.seed, seed_tag::walker, k));
        o.mc_v_y = trajectory_velocity_y(tr, default_burn_in, config.batches);
        o.mc_v_x = trajectory_velocity_x(tr, default_burn_in, config.batches);
        o.mc_phi = occupation_stats(
            tr, [&](std::int64_t s) { return c.drift[static_cast<std::size_t>(s)]; }, default_burn_in, config.batches);
        o.mc_holding = occupation_stats(
            tr, [&](std::int64_t s) { return 1.0 / c.exit_rate[static_cast<std::size_t>(s)]; }, default_burn_in,
            config.batches);
    });
    auto z = [&](auto diff, auto se) {
        double num = 0.0;
        double var = 0.0;
        for (const auto& o : r.envs) {
            num += diff(o);
            var += se(o) * se(o);
        }
        return num / std::sqrt(var);
    };
    r.z_v_y = z([](const auto& o) { return o.mc_v_y.value - o.chain_v_y; }, [](const auto& o) { return o.mc_v_y.std_error; });
    r.z_v_x = z([](const auto& o) { return o.mc_v_x.value - o.chain_v_x; }, [](const auto& o) { return o.mc_v_x.std_error; });
    r.z_phi = z([](const auto& o) { return o.mc_phi.value - o.chain_v_y; }, [](const auto& o) { return o.mc_phi.std_error; });
    r.z_holding = z([](const auto& o) { return o.mc_holding.value - o.chain_holding; },
                    [](const auto& o) { return o.mc_holding.std_error; });
    r.pass = std::abs(r.z_v_y) <= 3.0 && std::abs(r.z_v_x) <= 3.0 && std::abs(r.z_phi) <= 3.0 &&
             std::abs(r.z_holding) <= 3.0;
    return r;
}

// JSON ---------------------------------------------------------------------------

nlohmann::json to_json(const Estimate& e) {
    return {{"value", e.value}, {"stderr", e.std_error}, {"n_batches", e.n_batches}, {"n_samples", e.n_samples}};
}

nlohmann::json to_json(const MgfValue& m) {
    nlohmann::json j;
    if (m.finite())
        j["value"] = m.value;
    else
        j["value"] = "inf";
    j["abs_error"] = m.abs_error;
    return j;
}

nlohmann::json to_json(const RegimeVerdict& v) {
    nlohmann::json j{{"lambda", v.lambda},
                     {"predicted", to_string(v.predicted)},
                     {"mgf_ballistic", to_json(v.mgf_ballistic)},
                     {"mgf_subballistic", to_json(v.mgf_subballistic)}};
    if (!v.horizons.empty()) {
        j["horizons"] = v.horizons;
        auto arr = nlohmann::json::array();
        for (const auto& e : v.measured_velocity) arr.push_back(to_json(e));
        j["measured_velocity"] = arr;
    }
    return j;
}

nlohmann::json to_json(const PhaseSweep& s) {
    auto pts = nlohmann::json::array();
    for (const auto& p : s.points)
        pts.push_back({{"rate", p.rate}, {"verdict", to_json(p.verdict)}, {"ratios", p.ratios}, {"consistent", p.consistent}});
    return {{"lambda", s.lambda},
            {"critical_rate", s.critical_rate},
            {"points", pts},
            {"consistent", s.consistent},
            {"gates",
             {{"ballistic_ratio_band", {ballistic_ratio_band_lo, ballistic_ratio_band_hi}},
              {"subballistic_decade_ratio", subballistic_decade_ratio}}}};
}

nlohmann::json to_json(const EinsteinReport& r) {
    auto envs = nlohmann::json::array();
    for (const auto& e : r.envs)
        envs.push_back({{"env_seed", e.env_seed},
                        {"mobility_Y", e.mobility_y},
                        {"D_Y", e.d_y},
                        {"mobility_X", e.mobility_x},
                        {"D_X", e.d_x},
                        {"rel_Y", e.rel_y},
                        {"rel_X", e.rel_x},
                        {"scaled_mobility_Y", e.scaled_mobility_y},
                        {"beta_D_Y", e.beta_d_y},
                        {"rel_beta", e.rel_beta},
                        {"corrector_residual", e.corrector_residual}});
    nlohmann::json j{{"N", r.n_sites},
                     {"h", r.h},
                     {"hypothesis_ok", r.hypothesis_ok},
                     {"hypothesis_p", r.hypothesis_p},
                     {"environments", envs},
                     {"mean_rel_Y", r.mean_rel_y},
                     {"mean_rel_X", r.mean_rel_x},
                     {"mean_rel_beta", r.mean_rel_beta},
                     {"mean_mobility_Y", r.mean_mobility_y},
                     {"mean_D_Y", r.mean_d_y},
                     {"mean_mobility_X", r.mean_mobility_x},
                     {"mean_D_X", r.mean_d_x},
                     {"tolerance", einstein_tolerance},
                     {"pass", r.pass}};
    if (!r.continuity.lambdas.empty())
        j["continuity"] = {{"lambdas", r.continuity.lambdas},
                           {"v_Y", r.continuity.v_y},
                           {"v_X", r.continuity.v_x},
                           {"worst_jump_ratio", r.continuity.worst_jump_ratio},
                           {"continuous", r.continuity.continuous}};
    if (!r.hypothesis_ok) j["warning"] = "gap law has no finite exponential moment above 2";
    return j;
}

nlohmann::json to_json(const ArrheniusFit& f) {
    auto pts = nlohmann::json::array();
    for (const auto& p : f.points)
        pts.push_back({{"beta", p.beta},
                       {"D_X", p.d_x},
                       {"D_X_stderr", p.d_x_stderr},
                       {"D_Y", p.d_y},
                       {"D_Y_stderr", p.d_y_stderr},
                       {"logD", p.log_d}});
    return {{"points", pts},
            {"slope", f.slope},
            {"intercept", f.intercept},
            {"r2", f.r2},
            {"strictly_decreasing", f.strictly_decreasing},
            {"D_beta0", f.d_beta0},
            {"D_zero_u", f.d_zero_u},
            {"doubled_bound_beta", f.doubled_bound_beta},
            {"D_doubled_bound", f.d_doubled_bound},
            {"D_at_bound", f.d_at_bound},
            {"min_r2", arrhenius_min_r2},
            {"pass", f.pass}};
}

nlohmann::json to_json(const OracleReport& r) {
    auto envs = nlohmann::json::array();
    for (const auto& o : r.envs)
        envs.push_back({{"env_seed", o.env_seed},
                        {"chain_v_Y", o.chain_v_y},
                        {"chain_v_X", o.chain_v_x},
                        {"chain_holding", o.chain_holding},
                        {"mc_v_Y", to_json(o.mc_v_y)},
                        {"mc_v_X", to_json(o.mc_v_x)},
                        {"mc_phi", to_json(o.mc_phi)},
                        {"mc_holding", to_json(o.mc_holding)}});
    return {{"environments", envs},
            {"z_v_Y", r.z_v_y},
            {"z_v_X", r.z_v_x},
            {"z_phi", r.z_phi},
            {"z_holding", r.z_holding},
            {"pass", r.pass}};
}

}  // namespace mott
