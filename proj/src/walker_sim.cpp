#include "mott/walker_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mott/error.hpp"
#include "mott/rng.hpp"

namespace mott {

Estimate batch_means(std::span<const double> batch_values, long n_samples) {
    const auto b = static_cast<long>(batch_values.size());
    if (b < 8) throw usage_error("batch means need at least 8 batches");
    double mean = 0.0;
    for (double v : batch_values) mean += v;
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (double v : batch_values) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(b - 1);
    return {mean, std::sqrt(var / static_cast<double>(b)), b, n_samples};
}

Estimate batch_means_of_samples(std::span<const double> samples, int batches) {
    const std::size_t n = samples.size();
    const auto nb = static_cast<std::size_t>(batches);
    if (n < nb) throw usage_error("fewer samples than batches");
    std::vector<double> means(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = b * n / nb;
        const std::size_t hi = (b + 1) * n / nb;
        double acc = 0.0;
        for (std::size_t k = lo; k < hi; ++k) acc += samples[k];
        means[b] = acc / static_cast<double>(hi - lo);
    }
    return batch_means(means, static_cast<long>(n));
}

// LazyEnvironment -----------------------------------------------------------------

LazyEnvironment::LazyEnvironment(const EnvModel& model, std::uint64_t seed, double lambda, double eps_tail,
                                 std::size_t cache_limit)
    : window_(sample_window(model, {-256, 256}, seed)),
      lambda_(lambda),
      eps_tail_(eps_tail),
      cache_limit_(cache_limit) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw config_error("walk bias lambda must lie in [0, 1)");
}

void LazyEnvironment::ensure(std::int64_t lo, std::int64_t hi) {
    const IndexRange& r = window_.range();
    if (r.contains(IndexRange{lo, hi})) return;
    // grow geometrically so that extension cost stays amortized
    const std::int64_t span = r.size();
    IndexRange next = r;
    if (lo < r.lo) next.lo = std::min(lo, r.lo - span / 2);
    if (hi > r.hi) next.hi = std::max(hi, r.hi + span / 2);
    window_ = extend_window(window_, next);
}

double LazyEnvironment::x(std::int64_t site) {
    ensure(site, site);
    return window_.x(site);
}

const SiteRow& LazyEnvironment::row(std::int64_t site) {
    if (auto it = cache_.find(site); it != cache_.end()) return it->second;
    if (cache_.size() >= cache_limit_) cache_.clear();
    JumpRow jr;
    for (;;) {
        try {
            jr = build_jump_row(window_, site, lambda_, eps_tail_);
            break;
        } catch (const insufficient_window& e) {
            const std::int64_t reach = std::max<std::int64_t>(e.required_radius(), 64) + 1;
            ensure(site - reach, site + reach);
        }
    }
    SiteRow row;
    row.exit_rate = jr.exit_rate;
    row.drift = jr.drift;
    row.target.reserve(jr.targets.size());
    row.dx.reserve(jr.targets.size());
    std::vector<double> probs;
    probs.reserve(jr.targets.size());
    for (const auto& t : jr.targets) {
        row.target.push_back(t.index);
        row.dx.push_back(t.dx);
        probs.push_back(t.prob);
    }
    row.alias = AliasTable(probs);
    return cache_.emplace(site, std::move(row)).first->second;
}

// PeriodicEnvironment ---------------------------------------------------------------

PeriodicEnvironment::PeriodicEnvironment(const FiniteChain& chain) {
    rows_.resize(chain.n_sites);
    const std::size_t w = chain.row_width();
    for (std::size_t i = 0; i < chain.n_sites; ++i) {
        SiteRow& r = rows_[i];
        const std::size_t b = chain.row_begin(i);
        r.target.assign(chain.target.begin() + static_cast<std::ptrdiff_t>(b),
                        chain.target.begin() + static_cast<std::ptrdiff_t>(b + w));
        r.dx.assign(chain.dx.begin() + static_cast<std::ptrdiff_t>(b), chain.dx.begin() + static_cast<std::ptrdiff_t>(b + w));
        r.alias = AliasTable(std::span<const double>(chain.prob.data() + b, w));
        r.exit_rate = chain.exit_rate[i];
        r.drift = chain.drift[i];
    }
}

// Walk loop ----------------------------------------------------------------------

namespace {

template <class Env>
Trajectory run_walk(Env& env, double lambda, const WalkSpec& spec, std::uint64_t walk_seed, std::int64_t start) {
    if (spec.horizons.empty()) throw usage_error("walk needs at least one horizon");
    for (std::size_t k = 0; k < spec.horizons.size(); ++k) {
        if (!(spec.horizons[k] > 0.0)) throw usage_error("horizons must be positive");
        if (k > 0 && !(spec.horizons[k] > spec.horizons[k - 1])) throw usage_error("horizons must be increasing");
    }
    Trajectory tr;
    tr.kind = spec.kind;
    tr.lambda = lambda;
    tr.walk_seed = walk_seed;
    const bool full = spec.record == Recording::full;

    Rng rng(walk_seed);
    std::int64_t site = start;
    double x = 0.0;
    double t = 0.0;
    std::int64_t n = 0;
    auto record = [&]() {
        if (!full) return;
        tr.times.push_back(spec.kind == WalkKind::discrete ? static_cast<double>(n) : t);
        tr.site_indices.push_back(site);
        tr.displacements.push_back(x);
        tr.clock.push_back(t);
    };
    record();

    // Each step draws the holding time first, then the target, for both kinds,
    // so a discrete and a continuous walk with one seed follow the same path.
    const SiteRow* row = &env.row(site);
    double hold = rng.exponential(row->exit_rate);
    auto jump = [&]() {
        const std::size_t k = row->alias.sample(rng.uniform());
        t += hold;
        x += row->dx[k];
        site = row->target[k];
        ++n;
        record();
        row = &env.row(site);
        hold = rng.exponential(row->exit_rate);
    };

    for (double h : spec.horizons) {
        if (spec.kind == WalkKind::discrete) {
            const auto steps = static_cast<std::int64_t>(std::llround(h));
            while (n < steps) jump();
            tr.checkpoints.push_back({h, x, t, n});
        } else {
            while (t + hold <= h) jump();
            tr.checkpoints.push_back({h, x, h, n});
        }
    }
    return tr;
}

}  // namespace

Trajectory simulate(LazyEnvironment& env, double lambda, const WalkSpec& spec, std::uint64_t walk_seed) {
    Trajectory tr = run_walk(env, lambda, spec, walk_seed, 0);
    tr.env_seed = env.window().seed();
    return tr;
}

Trajectory simulate(const EnvModel& model, double lambda, const WalkSpec& spec, std::uint64_t env_seed,
                    std::uint64_t walk_seed, double eps_tail) {
    LazyEnvironment env(model, env_seed, lambda, eps_tail);
    return simulate(env, lambda, spec, walk_seed);
}

Trajectory simulate(const PeriodicEnvironment& env, double lambda, const WalkSpec& spec, std::uint64_t walk_seed,
                    std::int64_t start_site) {
    if (start_site < 0 || static_cast<std::size_t>(start_site) >= env.size()) throw usage_error("start site outside torus");
    return run_walk(env, lambda, spec, walk_seed, start_site);
}

// Parallel map ----------------------------------------------------------------------

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n; k = next++) {
                    try {
                        fn(k);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

// Ensembles ---------------------------------------------------------------------------

namespace {

void check_walkers(int n_walkers, int batches) {
    if (batches < 8) throw usage_error("at least 8 batches are required");
    if (n_walkers < batches) throw usage_error("need at least as many walkers as batches");
}

// Group walker values into contiguous batches.
Estimate walker_batches(std::span<const double> per_walker, int batches) {
    return batch_means_of_samples(per_walker, batches);
}

}  // namespace

VelocityRun velocity_estimate(const EnvModel& model, double lambda, std::span<const double> horizons, int n_walkers,
                              std::uint64_t seed, const EnsembleOptions& options) {
    check_walkers(n_walkers, options.batches);
    WalkSpec spec{options.kind, {horizons.begin(), horizons.end()}, Recording::endpoints};
    const auto n = static_cast<std::size_t>(n_walkers);
    std::vector<Trajectory> runs(n);
    const auto env_seed_of = [&](std::size_t k) {
        return derive_seed(seed, seed_tag::environment, options.averaging == Averaging::annealed ? k : 0);
    };
    parallel_for(n, options.jobs, [&](std::size_t k) {
        runs[k] = simulate(model, lambda, spec, env_seed_of(k), derive_seed(seed, seed_tag::walker, k), options.eps_tail);
    });

    VelocityRun out;
    out.horizons = spec.horizons;
    std::vector<double> vals(n);
    for (std::size_t h = 0; h < spec.horizons.size(); ++h) {
        for (std::size_t k = 0; k < n; ++k) vals[k] = runs[k].checkpoints[h].x / spec.horizons[h];
        Estimate e = walker_batches(vals, options.batches);
        out.estimates.push_back(e);
    }
    for (std::size_t k = 0; k < n; ++k)
        for (const auto& c : runs[k].checkpoints)
            out.endpoints.push_back({runs[k].env_seed, runs[k].walk_seed, lambda, c.horizon, c.x, c.t, c.n_jumps});
    return out;
}

Estimate msd_diffusion_estimate(const EnvModel& model, double lambda, double horizon, int n_walkers, std::uint64_t seed,
                                const EnsembleOptions& options) {
    if (lambda != 0.0) throw usage_error("MSD diffusion is only defined here for the unbiased walk (lambda = 0)");
    check_walkers(n_walkers, options.batches);
    WalkSpec spec{options.kind, {horizon}, Recording::endpoints};
    const auto n = static_cast<std::size_t>(n_walkers);
    std::vector<double> vals(n);
    parallel_for(n, options.jobs, [&](std::size_t k) {
        const std::uint64_t env_seed =
            derive_seed(seed, seed_tag::environment, options.averaging == Averaging::annealed ? k : 0);
        const Trajectory tr = simulate(model, 0.0, spec, env_seed, derive_seed(seed, seed_tag::walker, k), options.eps_tail);
        vals[k] = tr.endpoint().x * tr.endpoint().x / horizon;
    });
    return walker_batches(vals, options.batches);
}

Estimate msd_diffusion_estimate(const FiniteChain& chain, std::span<const double> pi, double horizon, int n_walkers,
                                std::uint64_t seed, const EnsembleOptions& options) {
    if (chain.lambda != 0.0) throw usage_error("MSD diffusion is only defined here for the unbiased walk (lambda = 0)");
    check_walkers(n_walkers, options.batches);
    const PeriodicEnvironment env(chain);
    const AliasTable start(pi);
    WalkSpec spec{options.kind, {horizon}, Recording::endpoints};
    const auto n = static_cast<std::size_t>(n_walkers);
    std::vector<double> vals(n);
    parallel_for(n, options.jobs, [&](std::size_t k) {
        const std::uint64_t ws = derive_seed(seed, seed_tag::walker, k);
        const auto s0 = static_cast<std::int64_t>(start.sample(counter_uniform(ws, 0, 0x7374617274)));
        const Trajectory tr = simulate(env, 0.0, spec, ws, s0);
        vals[k] = tr.endpoint().x * tr.endpoint().x / horizon;
    });
    return walker_batches(vals, options.batches);
}

// Trajectory functionals ------------------------------------------------------------

namespace {

std::size_t burn_start(const Trajectory& tr, double burn_in) {
    if (tr.site_indices.empty()) throw usage_error("trajectory functionals need a fully recorded walk");
    if (!(burn_in >= 0.0 && burn_in < 1.0)) throw usage_error("burn-in fraction must lie in [0, 1)");
    return static_cast<std::size_t>(burn_in * static_cast<double>(tr.site_indices.size() - 1));
}

}  // namespace

Estimate occupation_stats(const Trajectory& tr, const std::function<double(std::int64_t)>& f, double burn_in,
                          int batches) {
    const std::size_t b0 = burn_start(tr, burn_in);
    // sites at steps b0 .. n-1 (the state the walker jumps from)
    const std::size_t n = tr.site_indices.size() - 1;
    std::vector<double> vals;
    vals.reserve(n - b0);
    for (std::size_t k = b0; k < n; ++k) vals.push_back(f(tr.site_indices[k]));
    return batch_means_of_samples(vals, batches);
}

Estimate trajectory_velocity_y(const Trajectory& tr, double burn_in, int batches) {
    const std::size_t b0 = burn_start(tr, burn_in);
    const std::size_t n = tr.site_indices.size() - 1;
    const auto nb = static_cast<std::size_t>(batches);
    std::vector<double> v(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = b0 + b * (n - b0) / nb;
        const std::size_t hi = b0 + (b + 1) * (n - b0) / nb;
        v[b] = (tr.displacements[hi] - tr.displacements[lo]) / static_cast<double>(hi - lo);
    }
    return batch_means(v, static_cast<long>(n - b0));
}

Estimate trajectory_velocity_x(const Trajectory& tr, double burn_in, int batches) {
    const std::size_t b0 = burn_start(tr, burn_in);
    const std::size_t n = tr.site_indices.size() - 1;
    const auto nb = static_cast<std::size_t>(batches);
    if (nb < 8) throw usage_error("batch means need at least 8 batches");
    std::vector<double> dxs(nb);
    std::vector<double> dts(nb);
    double sx = 0.0;
    double st = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = b0 + b * (n - b0) / nb;
        const std::size_t hi = b0 + (b + 1) * (n - b0) / nb;
        dxs[b] = tr.displacements[hi] - tr.displacements[lo];
        dts[b] = tr.clock[hi] - tr.clock[lo];
        sx += dxs[b];
        st += dts[b];
    }
    const double ratio = sx / st;
    const double mean_t = st / static_cast<double>(nb);
    double ss = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        const double d = dxs[b] - ratio * dts[b];
        ss += d * d;
    }
    const double var = ss / static_cast<double>(nb - 1);
    return {ratio, std::sqrt(var / static_cast<double>(nb)) / mean_t, static_cast<long>(nb), static_cast<long>(n - b0)};
}

Estimate covariance_representation(const Trajectory& tr, const std::function<double(std::int64_t)>& f,
                                   const std::function<double(std::int64_t)>& phi, double burn_in, int batches) {
    const std::size_t b0 = burn_start(tr, burn_in);
    const std::size_t n = tr.site_indices.size() - 1;
    const auto nb = static_cast<std::size_t>(batches);
    if (nb < 8) throw usage_error("batch means need at least 8 batches");
    std::vector<double> fs(n - b0);
    std::vector<double> ps(n - b0);
    double mf = 0.0;
    double mp = 0.0;
    for (std::size_t k = b0; k < n; ++k) {
        fs[k - b0] = f(tr.site_indices[k]);
        ps[k - b0] = phi(tr.site_indices[k]);
        mf += fs[k - b0];
        mp += ps[k - b0];
    }
    mf /= static_cast<double>(n - b0);
    mp /= static_cast<double>(n - b0);
    // per-batch estimate of Cov(N^f, N^phi) = lim E[S^f_m S^phi_m] / m
    std::vector<double> prods(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = b * fs.size() / nb;
        const std::size_t hi = (b + 1) * fs.size() / nb;
        double sf = 0.0;
        double sp = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            sf += fs[k] - mf;
            sp += ps[k] - mp;
        }
        prods[b] = -sf * sp / static_cast<double>(hi - lo);
    }
    return batch_means(prods, static_cast<long>(n - b0));
}

}  // namespace mott
