#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mott/chain_solver.hpp"
#include "mott/env_model.hpp"
#include "mott/rate_kernel.hpp"

namespace mott {

enum class WalkKind { discrete, continuous };
enum class Recording { endpoints, full };
enum class Averaging { annealed, quenched };

inline constexpr int default_batches = 16;
inline constexpr double default_burn_in = 0.05;

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long n_batches = 0;
    long n_samples = 0;
};

/// Mean of per-batch values with stderr sd / sqrt(B); needs B >= 8.
Estimate batch_means(std::span<const double> batch_values, long n_samples);

/// Sample values split into `batches` contiguous groups.
Estimate batch_means_of_samples(std::span<const double> samples, int batches = default_batches);

/// Sampling data for one site: targets, displacements and an alias table.
struct SiteRow {
    std::vector<std::int64_t> target;
    std::vector<double> dx;
    AliasTable alias;
    double exit_rate = 0.0;
    double drift = 0.0;
};

/// The infinite environment of one seed, generated lazily around the walker.
/// Rows are memoized; the cache is dropped wholesale when it reaches
/// `cache_limit`, which changes cost but never results.
class LazyEnvironment {
public:
    LazyEnvironment(const EnvModel& model, std::uint64_t seed, double lambda, double eps_tail = default_eps_tail,
                    std::size_t cache_limit = 1 << 16);

    const SiteRow& row(std::int64_t site);
    double x(std::int64_t site);
    const EnvWindow& window() const noexcept { return window_; }

private:
    void ensure(std::int64_t lo, std::int64_t hi);

    EnvWindow window_;
    double lambda_;
    double eps_tail_;
    std::size_t cache_limit_;
    std::unordered_map<std::int64_t, SiteRow> cache_;
};

/// Walk on the N-site torus of a FiniteChain; positions are unwrapped.
class PeriodicEnvironment {
public:
    explicit PeriodicEnvironment(const FiniteChain& chain);

    const SiteRow& row(std::int64_t site) const { return rows_[static_cast<std::size_t>(site)]; }
    std::size_t size() const noexcept { return rows_.size(); }

private:
    std::vector<SiteRow> rows_;
};

struct Checkpoint {
    double horizon = 0.0;  // steps (discrete) or time (continuous)
    double x = 0.0;
    double t = 0.0;
    std::int64_t n_jumps = 0;
};

struct Trajectory {
    WalkKind kind = WalkKind::discrete;
    double lambda = 0.0;
    std::uint64_t env_seed = 0;
    std::uint64_t walk_seed = 0;
    // Full recording only: state after each jump (entry 0 is the start).
    // times are step counts for discrete walks and jump times for continuous ones;
    // clock holds elapsed physical time for both kinds.
    std::vector<double> times;
    std::vector<std::int64_t> site_indices;
    std::vector<double> displacements;
    std::vector<double> clock;
    std::vector<Checkpoint> checkpoints;

    const Checkpoint& endpoint() const { return checkpoints.back(); }
};

struct WalkSpec {
    WalkKind kind = WalkKind::discrete;
    std::vector<double> horizons;  // ascending; the last one ends the walk
    Recording record = Recording::endpoints;
};

/// Walk on the lazily generated environment of `env_seed`, started at site 0.
Trajectory simulate(const EnvModel& model, double lambda, const WalkSpec& spec, std::uint64_t env_seed,
                    std::uint64_t walk_seed, double eps_tail = default_eps_tail);

/// Same, on a given lazy environment (reused across walks of a quenched run).
Trajectory simulate(LazyEnvironment& env, double lambda, const WalkSpec& spec, std::uint64_t walk_seed);

/// Walk on a torus from `start_site`.
Trajectory simulate(const PeriodicEnvironment& env, double lambda, const WalkSpec& spec, std::uint64_t walk_seed,
                    std::int64_t start_site = 0);

struct EndpointRecord {
    std::uint64_t env_seed = 0;
    std::uint64_t walk_seed = 0;
    double lambda = 0.0;
    double horizon = 0.0;
    double final_x = 0.0;
    double final_t = 0.0;
    std::int64_t n_jumps = 0;
};

struct VelocityRun {
    std::vector<double> horizons;
    std::vector<Estimate> estimates;  // X_h / h per horizon
    std::vector<EndpointRecord> endpoints;
};

struct EnsembleOptions {
    WalkKind kind = WalkKind::continuous;
    Averaging averaging = Averaging::annealed;
    int batches = default_batches;
    double eps_tail = default_eps_tail;
    int jobs = 1;
};

/// Endpoint velocity X_h / h (or Y_n / n) over n_walkers walks; annealed runs
/// draw one environment per walker. Walker k uses streams derived from
/// (seed, k), so lambda sweeps share common random numbers.
VelocityRun velocity_estimate(const EnvModel& model, double lambda, std::span<const double> horizons,
                              int n_walkers, std::uint64_t seed, const EnsembleOptions& options = {});

/// Mean squared displacement / horizon at lambda = 0 (usage_error otherwise).
Estimate msd_diffusion_estimate(const EnvModel& model, double lambda, double horizon, int n_walkers,
                                std::uint64_t seed, const EnsembleOptions& options = {});

/// MSD on a torus with walkers started from the chain's stationary measure.
Estimate msd_diffusion_estimate(const FiniteChain& chain, std::span<const double> pi, double horizon,
                                int n_walkers, std::uint64_t seed, const EnsembleOptions& options = {});

/// Time average of f along the sites of a fully recorded walk after burn-in.
Estimate occupation_stats(const Trajectory& trajectory, const std::function<double(std::int64_t)>& f,
                          double burn_in = default_burn_in, int batches = default_batches);

/// Displacement per jump after burn-in, batch means.
Estimate trajectory_velocity_y(const Trajectory& trajectory, double burn_in = default_burn_in,
                               int batches = default_batches);

/// Displacement per unit time after burn-in: ratio estimator with delta-method stderr.
Estimate trajectory_velocity_x(const Trajectory& trajectory, double burn_in = default_burn_in,
                               int batches = default_batches);

/// -Cov(N^f, N^phi) from batch sums of the centered observables along a walk.
Estimate covariance_representation(const Trajectory& trajectory, const std::function<double(std::int64_t)>& f,
                                   const std::function<double(std::int64_t)>& phi, double burn_in = default_burn_in,
                                   int batches = 64);

/// Runs fn(0..n-1) on up to `jobs` threads; fn must only write its own slot.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace mott
