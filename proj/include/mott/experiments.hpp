#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mott/chain_solver.hpp"
#include "mott/env_model.hpp"
#include "mott/walker_sim.hpp"

namespace mott {

enum class Regime { ballistic, sub_ballistic, indeterminate };

std::string to_string(Regime r);

struct RegimeVerdict {
    double lambda = 0.0;
    Regime predicted = Regime::indeterminate;
    MgfValue mgf_ballistic;     // E[e^{(1-lambda) Z}]
    MgfValue mgf_subballistic;  // E[e^{-(1+lambda) Z}] E[e^{(1-lambda) Z}]
    std::vector<double> horizons;
    std::vector<Estimate> measured_velocity;
};

/// Moment test only; lambda must lie in (0, 1).
RegimeVerdict classify_regime(const EnvModel& model, double lambda);

/// Moment test plus X_T/T (or Y_n/n) over `horizons`.
RegimeVerdict classify_regime(const EnvModel& model, double lambda, std::span<const double> horizons, int n_walkers,
                              std::uint64_t seed, const EnsembleOptions& options = {});

// Engineering gates, echoed in every report.
inline constexpr double ballistic_ratio_band_lo = 0.8;
inline constexpr double ballistic_ratio_band_hi = 1.2;
inline constexpr double subballistic_decade_ratio = 0.5;
inline constexpr double einstein_tolerance = 0.05;
inline constexpr double arrhenius_min_r2 = 0.9;

struct PhaseSweepConfig {
    double lambda = 0.5;
    double min_gap = 1.0;
    std::vector<double> rates;  // c-grid of shifted_exponential(min_gap, c)
    EnvModel base;              // marks and interaction; the gap law is replaced per grid point
    std::vector<double> horizons;
    int n_walkers = 32;
    std::uint64_t seed = 1;
    EnsembleOptions options;
};

struct PhasePoint {
    double rate = 0.0;
    RegimeVerdict verdict;
    std::vector<double> ratios;  // v(h_{k+1}) / v(h_k)
    bool consistent = true;
};

struct PhaseSweep {
    double lambda = 0.0;
    double critical_rate = 0.0;  // 1 - lambda
    std::vector<PhasePoint> points;
    bool consistent = true;
};

PhaseSweep phase_sweep(const PhaseSweepConfig& config);

/// A ballistic verdict is contradicted by a ratio <= 0.5, a sub-ballistic one
/// by a ratio inside [0.8, 1.2].
bool verdict_consistent(Regime predicted, std::span<const double> ratios);

struct EinsteinConfig {
    EnvModel model;
    std::size_t n_sites = 4096;
    int n_envs = 8;
    double h = 0.01;
    std::uint64_t seed = 1;
    double eps_tail = default_eps_tail;
    std::vector<double> continuity_lambdas;  // empty: skip the continuity scan
    int jobs = 1;
    SolverOptions solver;
};

struct EinsteinEnv {
    std::uint64_t env_seed = 0;
    double mobility_y = 0.0;
    double d_y = 0.0;
    double mobility_x = 0.0;
    double d_x = 0.0;
    double rel_y = 0.0;
    double rel_x = 0.0;
    double scaled_mobility_y = 0.0;  // tilt beta * lambda
    double beta_d_y = 0.0;
    double rel_beta = 0.0;
    double corrector_residual = 0.0;
};

struct ContinuityScan {
    std::vector<double> lambdas;
    std::vector<double> v_y;
    std::vector<double> v_x;
    double worst_jump_ratio = 0.0;  // largest |jump| / (local trend) over the grid
    bool continuous = true;
};

struct EinsteinReport {
    std::size_t n_sites = 0;
    double h = 0.0;
    bool hypothesis_ok = true;  // E[e^{pZ}] finite for some p > 2
    double hypothesis_p = 0.0;
    std::vector<EinsteinEnv> envs;
    double mean_rel_y = 0.0;
    double mean_rel_x = 0.0;
    double mean_rel_beta = 0.0;
    double mean_mobility_y = 0.0;
    double mean_d_y = 0.0;
    double mean_mobility_x = 0.0;
    double mean_d_x = 0.0;
    ContinuityScan continuity;
    bool pass = false;
};

EinsteinReport einstein_report(const EinsteinConfig& config);

/// Jumps of v over the grid compared with 3x the neighboring increments.
ContinuityScan continuity_scan(const EnvWindow& window, std::size_t n_sites, std::span<const double> lambdas,
                               double eps_tail = default_eps_tail, const SolverOptions& solver = {});

struct ArrheniusConfig {
    EnvModel model;  // u_kind must be mott; beta is overwritten per grid point
    std::vector<double> betas{1, 2, 3, 4, 5};
    std::size_t n_sites = 2048;
    int n_envs = 8;
    std::uint64_t seed = 1;
    double eps_tail = default_eps_tail;
    int jobs = 1;
    SolverOptions solver;
};

struct ArrheniusPoint {
    double beta = 0.0;
    double d_x = 0.0;  // mean over environments
    double d_x_stderr = 0.0;
    double d_y = 0.0;
    double d_y_stderr = 0.0;
    double log_d = 0.0;
};

struct ArrheniusFit {
    std::vector<ArrheniusPoint> points;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool strictly_decreasing = false;
    // beta = 0 against the u = 0 chain, and D at doubled mark bound
    double d_beta0 = 0.0;
    double d_zero_u = 0.0;
    double doubled_bound_beta = 0.0;
    double d_doubled_bound = 0.0;
    double d_at_bound = 0.0;
    bool pass = false;
};

ArrheniusFit arrhenius_sweep(const ArrheniusConfig& config);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Walker on the torus against the chain solver for one environment.
struct OracleComparison {
    std::uint64_t env_seed = 0;
    double chain_v_y = 0.0;
    double chain_v_x = 0.0;
    double chain_holding = 0.0;  // Q[1/exit]
    Estimate mc_v_y;
    Estimate mc_v_x;
    Estimate mc_phi;
    Estimate mc_holding;
};

struct OracleConfig {
    EnvModel model;
    std::size_t n_sites = 2048;
    double lambda = 0.3;
    int n_envs = 8;
    long steps = 2'000'000;
    std::uint64_t seed = 1;
    double eps_tail = default_eps_tail;
    int batches = 32;
    int jobs = 1;
};

struct OracleReport {
    std::vector<OracleComparison> envs;
    // aggregated z-scores: sum of differences over root sum of variances
    double z_v_y = 0.0;
    double z_v_x = 0.0;
    double z_phi = 0.0;
    double z_holding = 0.0;
    bool pass = false;
};

OracleReport oracle_equivalence(const OracleConfig& config);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const MgfValue& m);
nlohmann::json to_json(const RegimeVerdict& v);
nlohmann::json to_json(const PhaseSweep& s);
nlohmann::json to_json(const EinsteinReport& r);
nlohmann::json to_json(const ArrheniusFit& f);
nlohmann::json to_json(const OracleReport& r);

}  // namespace mott
