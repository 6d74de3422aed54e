#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mott/env_model.hpp"
#include "mott/rate_kernel.hpp"

namespace mott {

/// Environment viewed from the walker on an N-site torus built from the first
/// N gaps of a window. Every row holds offsets -R..-1, 1..R (in that order);
/// displacements are taken along the torus, so a jump may wind.
struct FiniteChain {
    std::size_t n_sites = 0;
    double period = 0.0;  // L = sum of the N gaps
    double lambda = 0.0;
    long radius = 0;
    std::vector<double> positions;
    std::vector<double> marks;
    std::vector<double> exit_rate;
    std::vector<double> drift;
    // Row i occupies [i * row_width(), (i+1) * row_width()).
    std::vector<std::uint32_t> target;
    std::vector<double> prob;
    std::vector<double> rate;
    std::vector<double> dx;
    double max_relative_tail = 0.0;

    std::size_t size() const noexcept { return n_sites; }
    std::size_t row_width() const noexcept { return 2 * static_cast<std::size_t>(radius); }
    std::size_t row_begin(std::size_t i) const noexcept { return i * row_width(); }
};

/// Uniform radius so that every row of the chain at this tilt has
/// tail_bound <= eps_tail * exit_rate. Use the largest |lambda| of a family
/// to obtain one target set shared across the family.
long chain_radius(const EnvWindow& window, std::size_t n_sites, double lambda, double eps_tail = default_eps_tail);

/// Throws config_error("chain too small ...") when 2R >= N or a row reaches
/// half the period. `radius` overrides the tail-derived radius.
FiniteChain build_chain(const EnvWindow& window, std::size_t n_sites, double lambda,
                        double eps_tail = default_eps_tail, std::optional<long> radius = std::nullopt);

struct SolverOptions {
    double tolerance = 1e-10;
    int max_refinements = 3;
    /// Above this size the stationary measure is found by accelerated power
    /// iteration instead of sparse LU.
    std::size_t direct_limit = 8192;
    long max_power_iterations = 2'000'000;
    /// lambda = 0 chains are reversible: return exit_rate / sum(exit_rate)
    /// (checked against the residual) instead of solving.
    bool reversible_closed_form = true;
};

struct StationaryDistribution {
    std::vector<double> pi;
    double residual = 0.0;  // || pi P - pi ||_1
    int refinements = 0;
};

StationaryDistribution stationary_distribution(const FiniteChain& chain, const SolverOptions& options = {});

/// Reversible measure for lambda = 0 chains: exit_i / sum_j exit_j.
std::vector<double> reversible_measure(const FiniteChain& chain);

struct Velocities {
    double v_y = 0.0;
    double v_x = 0.0;
};

/// v_Y = sum_i pi_i phi_i, v_X = v_Y / sum_i pi_i / exit_i.
Velocities chain_velocities(const FiniteChain& chain, std::span<const double> pi);

/// sum_i pi_i / exit_i: expected holding time per jump.
double mean_holding_time(const FiniteChain& chain, std::span<const double> pi);

struct CorrectorSolution {
    std::vector<double> g;
    double residual = 0.0;  // pi-weighted 2-norm of the defining equation
    double eps_used = 0.0;
    std::string f_name;
};

/// Factorized (eps - L0) on a lambda = 0 chain; eps = 0 solves the Poisson
/// equation on the pi-mean-zero subspace. Observables are centered under pi
/// before solving, so every solution has pi(g) = 0.
class CorrectorSolver {
public:
    CorrectorSolver(const FiniteChain& chain, std::span<const double> pi, double eps = 0.0,
                    const SolverOptions& options = {});
    ~CorrectorSolver();
    CorrectorSolver(CorrectorSolver&&) noexcept;
    CorrectorSolver& operator=(CorrectorSolver&&) noexcept;

    CorrectorSolution solve(std::span<const double> f, std::string f_name) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

CorrectorSolution solve_corrector(const FiniteChain& chain, std::span<const double> pi,
                                  std::span<const double> f, double eps, std::string f_name = "f",
                                  const SolverOptions& options = {});

/// D_Y = sum_i pi_i sum_j p_ij (dx_ij - phi_i)(dx_ij + g_j - g_i) for the
/// drift corrector g. Throws numeric_error below -1e-10.
double diffusion_from_corrector(const FiniteChain& chain, std::span<const double> pi, std::span<const double> g);

/// sum_i pi_i sum_j p_ij (dx_ij + g_j - g_i)^2: martingale form of D_Y.
double diffusion_martingale_form(const FiniteChain& chain, std::span<const double> pi, std::span<const double> g);

/// sum_i pi_i sum_j p_ij (dx_ij - phi_i)(g_j - g_i) with g the corrector of f.
double derivative_representation(const FiniteChain& chain, std::span<const double> pi, std::span<const double> g);

/// L^2(M) norm of grad(a - b).
double gradient_distance(const FiniteChain& chain, std::span<const double> pi, std::span<const double> a,
                         std::span<const double> b);

/// Stationary measures of the chains at each tilt, sharing one target set.
std::vector<StationaryDistribution> stationary_family(const EnvWindow& window, std::size_t n_sites,
                                                      std::span<const double> lambdas,
                                                      double eps_tail = default_eps_tail,
                                                      const SolverOptions& options = {});

/// Q_lambda(f) = sum_i pi_lambda(i) f_i for a fixed per-site observable.
std::vector<double> q_lambda_expectation(const EnvWindow& window, std::size_t n_sites,
                                         std::span<const double> lambdas, std::span<const double> f,
                                         double eps_tail = default_eps_tail, const SolverOptions& options = {});

struct RnNorms {
    std::vector<double> lambdas;
    std::vector<double> norms;
    double supremum = 0.0;
};

/// (sum_i pi_0(i) (pi_lambda(i) / pi_0(i))^p)^(1/p) for each tilt.
RnNorms rn_derivative_norms(const EnvWindow& window, std::size_t n_sites, std::span<const double> lambdas,
                            double p, double eps_tail = default_eps_tail, const SolverOptions& options = {});

struct Mobility {
    double mobility_y = 0.0;
    double mobility_x = 0.0;
    double h = 0.0;
    double field_scale = 1.0;
};

/// One-sided second-order difference (4 v(sh) - 3 v(0) - v(2sh)) / 2h with
/// the tilt lambda = s * h, s = field_scale.
Mobility mobility_fd(const EnvWindow& window, std::size_t n_sites, double h, double eps_tail = default_eps_tail,
                     double field_scale = 1.0, const SolverOptions& options = {});

/// Everything the `solve` command reports for one environment.
struct ChainSummary {
    std::size_t n_sites = 0;
    double lambda = 0.0;
    double v_y = 0.0;
    double v_x = 0.0;
    double d_y = 0.0;
    double d_x = 0.0;
    double mobility_y = 0.0;
    double mobility_x = 0.0;
    double rn_norm_p2 = 0.0;
    double stationary_residual = 0.0;
    double stationary_residual_lambda = 0.0;
    double corrector_residual = 0.0;
    double max_relative_tail = 0.0;
    std::vector<double> pi0;
    std::vector<double> pi_lambda;
    std::vector<double> corrector;
};

ChainSummary summarize_chain(const EnvWindow& window, std::size_t n_sites, double lambda, double h,
                             double eps_tail = default_eps_tail, const SolverOptions& options = {});

nlohmann::json to_json(const ChainSummary& s);

}  // namespace mott
