#include "mott/chain_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mott/error.hpp"

namespace mott {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

// Unwrapped torus coordinate of site n (n may exceed N by less than N).
struct TorusCoordinates {
    std::vector<double> x;  // x[n] for n in [0, 2N)
    double period = 0.0;

    TorusCoordinates(const EnvWindow& window, std::size_t n_sites) {
        const auto n = static_cast<std::int64_t>(n_sites);
        if (!window.contains(0) || !window.contains(n))
            throw config_error("window must cover sites 0..N to build an N-site chain");
        period = window.x(n);
        x.resize(2 * n_sites);
        for (std::int64_t i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] = window.x(i);
            x[static_cast<std::size_t>(i + n)] = period + window.x(i);
        }
    }

    // Displacement from site i to site i + k, 0 < k < N.
    double forward(std::size_t i, std::size_t k) const { return x[i + k] - x[i]; }
};

double pair_energy(const EnvWindow& window, std::size_t i, std::size_t j) {
    return window.interaction_energy(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
}

void require_small_enough(const FiniteChain& c) {
    const double half = 0.5 * c.period;
    if (2 * static_cast<std::size_t>(c.radius) >= c.n_sites)
        throw config_error("chain too small for requested tail accuracy: need 2R < N (R = " +
                           std::to_string(c.radius) + ", N = " + std::to_string(c.n_sites) + ")");
    for (double d : c.dx)
        if (std::abs(d) >= half)
            throw config_error("chain too small for requested tail accuracy: jump radius reaches half the period");
}

// Entry-wise out = pi P (row vector times matrix).
void left_multiply(const FiniteChain& c, std::span<const double> pi, std::vector<double>& out) {
    out.assign(c.n_sites, 0.0);
    const std::size_t w = c.row_width();
    for (std::size_t i = 0; i < c.n_sites; ++i) {
        const std::size_t b = c.row_begin(i);
        for (std::size_t s = 0; s < w; ++s) out[c.target[b + s]] += pi[i] * c.prob[b + s];
    }
}

// out = P g.
void right_multiply(const FiniteChain& c, std::span<const double> g, std::vector<double>& out) {
    out.resize(c.n_sites);
    const std::size_t w = c.row_width();
    for (std::size_t i = 0; i < c.n_sites; ++i) {
        const std::size_t b = c.row_begin(i);
        double acc = 0.0;
        for (std::size_t s = 0; s < w; ++s) acc += c.prob[b + s] * g[c.target[b + s]];
        out[i] = acc;
    }
}

double stationary_residual(const FiniteChain& c, std::span<const double> pi) {
    std::vector<double> next;
    left_multiply(c, pi, next);
    double r = 0.0;
    for (std::size_t i = 0; i < c.n_sites; ++i) r += std::abs(next[i] - pi[i]);
    return r;
}

// (shift + s_i) on the diagonal minus P, where s_i is the computed row sum of P,
// so rounding in the rows never leaves a defect for the pinned equation.
// Row 0 is replaced by e_0 when pinned; the transposed variant gives the left null vector.
SpMat shifted_operator(const FiniteChain& c, double shift, bool transpose, bool pin) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(c.n_sites * (c.row_width() + 1));
    const std::size_t w = c.row_width();
    for (std::size_t i = 0; i < c.n_sites; ++i) {
        const std::size_t b = c.row_begin(i);
        double row_sum = 0.0;
        for (std::size_t s = 0; s < w; ++s) {
            row_sum += c.prob[b + s];
            const auto j = static_cast<int>(c.target[b + s]);
            const int row = transpose ? j : static_cast<int>(i);
            const int col = transpose ? static_cast<int>(i) : j;
            if (pin && row == 0) continue;
            trips.emplace_back(row, col, -c.prob[b + s]);
        }
        if (!(pin && i == 0)) trips.emplace_back(static_cast<int>(i), static_cast<int>(i), shift + row_sum);
    }
    if (pin) trips.emplace_back(0, 0, 1.0);
    const auto n = static_cast<Eigen::Index>(c.n_sites);
    SpMat m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

void factorize(LU& lu, const SpMat& m) {
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) throw numeric_error("sparse LU factorization failed: " + lu.lastErrorMessage(), 0.0);
}

// Solve with up to `refinements` rounds of iterative refinement.
// Residual accumulated in long double: refinement then converges to working precision componentwise.
Vec extended_residual(const SpMat& m, const Vec& x, const Vec& b) {
    std::vector<long double> acc(static_cast<std::size_t>(b.size()));
    for (Eigen::Index i = 0; i < b.size(); ++i) acc[static_cast<std::size_t>(i)] = b[i];
    for (Eigen::Index col = 0; col < m.outerSize(); ++col)
        for (SpMat::InnerIterator it(m, col); it; ++it)
            acc[static_cast<std::size_t>(it.row())] -= static_cast<long double>(it.value()) * x[it.col()];
    Vec r(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) r[i] = static_cast<double>(acc[static_cast<std::size_t>(i)]);
    return r;
}

Vec refined_solve(const LU& lu, const SpMat& m, const Vec& b, int refinements, double tol, int* used = nullptr) {
    Vec xs = lu.solve(b);
    int k = 0;
    for (; k < refinements; ++k) {
        const Vec r = extended_residual(m, xs, b);
        if (r.lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, b.lpNorm<Eigen::Infinity>()) * 1e-6) break;
        const Vec dx = lu.solve(r);
        xs += dx;
        if (dx.lpNorm<Eigen::Infinity>() <= 1e-16 * xs.lpNorm<Eigen::Infinity>()) {
            ++k;
            break;
        }
    }
    if (used) *used = k;
    return xs;
}

double weighted_mean(std::span<const double> pi, std::span<const double> f) {
    double m = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) m += pi[i] * f[i];
    return m;
}

void normalize(std::vector<double>& pi) {
    const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& p : pi) p /= total;
}

StationaryDistribution power_iteration(const FiniteChain& c, const SolverOptions& o) {
    // lazy chain (I + P) / 2, with a vector Aitken step tried every `sweep` steps
    constexpr long sweep = 64;
    std::vector<double> pi = reversible_measure(c);
    std::vector<double> next;
    std::vector<double> x0;
    std::vector<double> x1;
    const auto lazy_step = [&](std::vector<double>& v) {
        left_multiply(c, v, next);
        for (std::size_t i = 0; i < c.n_sites; ++i) v[i] = 0.5 * (v[i] + next[i]);
    };
    double r = stationary_residual(c, pi);
    for (long it = 0; it < o.max_power_iterations && r > o.tolerance; it += sweep) {
        for (long k = 0; k < sweep - 2; ++k) lazy_step(pi);
        x0 = pi;
        lazy_step(pi);
        x1 = pi;
        lazy_step(pi);
        double d11 = 0.0;
        double d12 = 0.0;
        for (std::size_t i = 0; i < c.n_sites; ++i) {
            const double d1 = x1[i] - x0[i];
            d11 += d1 * d1;
            d12 += d1 * (pi[i] - x1[i]);
        }
        r = stationary_residual(c, pi);
        const double mu = d11 > 0.0 ? d12 / d11 : 0.0;
        if (mu > 0.0 && mu < 1.0) {
            std::vector<double> acc(c.n_sites);
            bool positive = true;
            for (std::size_t i = 0; i < c.n_sites; ++i) {
                acc[i] = pi[i] + mu / (1.0 - mu) * (pi[i] - x1[i]);
                positive = positive && acc[i] > 0.0;
            }
            if (positive) {
                normalize(acc);
                const double ra = stationary_residual(c, acc);
                if (ra < r) {
                    pi = std::move(acc);
                    r = ra;
                }
            }
        }
        normalize(pi);
    }
    if (r > o.tolerance) throw numeric_error("power iteration did not converge", r);
    return {pi, r, 0};
}

}  // namespace

long chain_radius(const EnvWindow& window, std::size_t n_sites, double lambda, double eps_tail) {
    if (!(eps_tail > 0.0)) throw config_error("eps_tail must be positive");
    if (!(std::abs(lambda) < 1.0)) throw config_error("bias lambda must satisfy |lambda| < 1");
    const TorusCoordinates tc(window, n_sites);
    const double d = certified_min_gap(window);
    const long cap = static_cast<long>(n_sites / 2);
    long radius = 1;
    for (std::size_t i = 0; i < n_sites; ++i) {
        double exit = 0.0;
        long k = 0;
        for (;;) {
            ++k;
            if (k >= cap)
                throw config_error("chain too small for requested tail accuracy: radius would reach N/2");
            const std::size_t jr = (i + static_cast<std::size_t>(k)) % n_sites;
            const std::size_t jl = (i + n_sites - static_cast<std::size_t>(k)) % n_sites;
            const double dr = tc.forward(i, static_cast<std::size_t>(k));
            const double dl = tc.forward(jl, static_cast<std::size_t>(k));
            exit += std::exp(-(1.0 - lambda) * dr - pair_energy(window, i, jr));
            exit += std::exp(-(1.0 + lambda) * dl - pair_energy(window, i, jl));
            const double bound = side_tail_bound(lambda, d, k, false) + side_tail_bound(lambda, d, k, true);
            if (bound <= eps_tail * exit) break;
        }
        radius = std::max(radius, k);
    }
    return radius;
}

FiniteChain build_chain(const EnvWindow& window, std::size_t n_sites, double lambda, double eps_tail,
                        std::optional<long> radius) {
    if (n_sites < 3) throw config_error("a chain needs at least 3 sites");
    if (!(std::abs(lambda) < 1.0)) throw config_error("bias lambda must satisfy |lambda| < 1");
    const TorusCoordinates tc(window, n_sites);

    FiniteChain c;
    c.n_sites = n_sites;
    c.period = tc.period;
    c.lambda = lambda;
    c.radius = radius ? *radius : chain_radius(window, n_sites, lambda, eps_tail);
    if (c.radius < 1) throw config_error("chain radius must be >= 1");
    if (2 * static_cast<std::size_t>(c.radius) >= n_sites)
        throw config_error("chain too small for requested tail accuracy: need 2R < N (R = " +
                           std::to_string(c.radius) + ", N = " + std::to_string(n_sites) + ")");
    c.positions.resize(n_sites);
    c.marks.resize(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) {
        c.positions[i] = window.x(static_cast<std::int64_t>(i));
        c.marks[i] = window.energy(static_cast<std::int64_t>(i));
    }

    const std::size_t w = c.row_width();
    const auto r = static_cast<std::size_t>(c.radius);
    c.target.resize(n_sites * w);
    c.prob.resize(n_sites * w);
    c.rate.resize(n_sites * w);
    c.dx.resize(n_sites * w);
    // Slot layout in row i: offset -R..-1 at slots 0..R-1, offset +1..+R at slots R..2R-1.
    auto slot = [&](std::size_t i, long offset) {
        return c.row_begin(i) + (offset < 0 ? static_cast<std::size_t>(offset + c.radius)
                                            : r + static_cast<std::size_t>(offset - 1));
    };
    // Each unordered pair is evaluated once so that dx_ji = -dx_ij and, at
    // lambda = 0, r_ji = r_ij hold bit for bit.
    for (std::size_t i = 0; i < n_sites; ++i) {
        for (long k = 1; k <= c.radius; ++k) {
            const std::size_t j = (i + static_cast<std::size_t>(k)) % n_sites;
            const double d = tc.forward(i, static_cast<std::size_t>(k));
            const double u = pair_energy(window, i, j);
            const std::size_t fwd = slot(i, k);
            const std::size_t bwd = slot(j, -k);
            c.target[fwd] = static_cast<std::uint32_t>(j);
            c.dx[fwd] = d;
            c.rate[fwd] = std::exp(-d + lambda * d - u);
            c.target[bwd] = static_cast<std::uint32_t>(i);
            c.dx[bwd] = -d;
            c.rate[bwd] = std::exp(-d - lambda * d - u);
        }
    }
    require_small_enough(c);

    const double dmin = certified_min_gap(window);
    const double bound = side_tail_bound(lambda, dmin, c.radius, false) + side_tail_bound(lambda, dmin, c.radius, true);
    c.exit_rate.resize(n_sites);
    c.drift.resize(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) {
        const std::size_t b = c.row_begin(i);
        double exit = 0.0;
        for (std::size_t s = 0; s < w; ++s) exit += c.rate[b + s];
        for (std::size_t s = 0; s < w; ++s) c.prob[b + s] = c.rate[b + s] / exit;
        double phi = 0.0;
        for (std::size_t k = r; k >= 1; --k)
            phi += c.prob[b + r - k] * c.dx[b + r - k] + c.prob[b + r + k - 1] * c.dx[b + r + k - 1];
        c.exit_rate[i] = exit;
        c.drift[i] = phi;
        c.max_relative_tail = std::max(c.max_relative_tail, bound / exit);
    }
    return c;
}

std::vector<double> reversible_measure(const FiniteChain& chain) {
    std::vector<double> pi = chain.exit_rate;
    normalize(pi);
    return pi;
}

StationaryDistribution stationary_distribution(const FiniteChain& chain, const SolverOptions& options) {
    if (chain.lambda == 0.0 && options.reversible_closed_form) {
        StationaryDistribution out{reversible_measure(chain), 0.0, 0};
        out.residual = stationary_residual(chain, out.pi);
        if (!(out.residual <= options.tolerance)) throw numeric_error("reversible measure is not stationary", out.residual);
        return out;
    }
    if (chain.n_sites > options.direct_limit) return power_iteration(chain, options);
    const SpMat m = shifted_operator(chain, 0.0, true, true);
    LU lu;
    factorize(lu, m);
    Vec b = Vec::Zero(static_cast<Eigen::Index>(chain.n_sites));
    b[0] = 1.0;
    int used = 0;
    const Vec sol = refined_solve(lu, m, b, options.max_refinements, options.tolerance, &used);
    StationaryDistribution out;
    out.pi.assign(sol.data(), sol.data() + sol.size());
    normalize(out.pi);
    out.refinements = used;
    for (double p : out.pi)
        if (!(p > 0.0)) throw numeric_error("stationary solve produced a non-positive weight", stationary_residual(chain, out.pi));
    out.residual = stationary_residual(chain, out.pi);
    if (!(out.residual <= options.tolerance)) throw numeric_error("stationary solve missed tolerance", out.residual);
    return out;
}

double mean_holding_time(const FiniteChain& chain, std::span<const double> pi) {
    double t = 0.0;
    for (std::size_t i = 0; i < chain.n_sites; ++i) t += pi[i] / chain.exit_rate[i];
    return t;
}

Velocities chain_velocities(const FiniteChain& chain, std::span<const double> pi) {
    Velocities v;
    v.v_y = weighted_mean(pi, chain.drift);
    v.v_x = v.v_y / mean_holding_time(chain, pi);
    return v;
}

// CorrectorSolver ---------------------------------------------------------------

struct CorrectorSolver::Impl {
    const FiniteChain* chain = nullptr;
    std::vector<double> pi;
    double eps = 0.0;
    SolverOptions options;
    SpMat op;
    LU lu;
};

CorrectorSolver::CorrectorSolver(const FiniteChain& chain, std::span<const double> pi, double eps,
                                 const SolverOptions& options)
    : impl_(std::make_unique<Impl>()) {
    if (!(eps >= 0.0)) throw usage_error("resolvent parameter eps must be >= 0");
    impl_->chain = &chain;
    impl_->pi.assign(pi.begin(), pi.end());
    impl_->eps = eps;
    impl_->options = options;
    impl_->op = shifted_operator(chain, eps, false, eps == 0.0);
    factorize(impl_->lu, impl_->op);
}

CorrectorSolver::~CorrectorSolver() = default;
CorrectorSolver::CorrectorSolver(CorrectorSolver&&) noexcept = default;
CorrectorSolver& CorrectorSolver::operator=(CorrectorSolver&&) noexcept = default;

CorrectorSolution CorrectorSolver::solve(std::span<const double> f, std::string f_name) const {
    const FiniteChain& c = *impl_->chain;
    const auto& pi = impl_->pi;
    const std::size_t n = c.n_sites;
    if (f.size() != n) throw usage_error("observable size does not match the chain");
    for (double v : f)
        if (!std::isfinite(v)) throw usage_error("observable must be finite");

    const double mean_f = weighted_mean(pi, f);
    Vec rhs(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) rhs[static_cast<Eigen::Index>(i)] = f[i] - mean_f;
    Vec full_rhs = rhs;
    if (impl_->eps == 0.0) rhs[0] = 0.0;

    const Vec sol = refined_solve(impl_->lu, impl_->op, rhs, impl_->options.max_refinements, impl_->options.tolerance);

    CorrectorSolution out;
    out.eps_used = impl_->eps;
    out.f_name = std::move(f_name);
    out.g.assign(sol.data(), sol.data() + sol.size());
    if (impl_->eps == 0.0) {
        const double mg = weighted_mean(pi, out.g);
        for (double& v : out.g) v -= mg;
    }
    std::vector<double> pg;
    right_multiply(c, out.g, pg);
    double res2 = 0.0;
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lhs = (1.0 + impl_->eps) * out.g[i] - pg[i];
        const double r = lhs - full_rhs[static_cast<Eigen::Index>(i)];
        res2 += pi[i] * r * r;
        norm2 += pi[i] * full_rhs[static_cast<Eigen::Index>(i)] * full_rhs[static_cast<Eigen::Index>(i)];
    }
    out.residual = std::sqrt(res2);
    if (!(out.residual <= 1e-8 * std::max(1.0, std::sqrt(norm2))))
        throw numeric_error("corrector solve missed tolerance", out.residual);
    return out;
}

CorrectorSolution solve_corrector(const FiniteChain& chain, std::span<const double> pi, std::span<const double> f,
                                  double eps, std::string f_name, const SolverOptions& options) {
    return CorrectorSolver(chain, pi, eps, options).solve(f, std::move(f_name));
}

// Functionals -------------------------------------------------------------------

namespace {

template <class Term>
double edge_sum(const FiniteChain& c, std::span<const double> pi, Term term) {
    const std::size_t w = c.row_width();
    double total = 0.0;
    for (std::size_t i = 0; i < c.n_sites; ++i) {
        const std::size_t b = c.row_begin(i);
        double acc = 0.0;
        for (std::size_t s = 0; s < w; ++s) acc += c.prob[b + s] * term(i, b + s, c.target[b + s]);
        total += pi[i] * acc;
    }
    return total;
}

}  // namespace

double diffusion_from_corrector(const FiniteChain& chain, std::span<const double> pi, std::span<const double> g) {
    const double d = edge_sum(chain, pi, [&](std::size_t i, std::size_t e, std::size_t j) {
        return (chain.dx[e] - chain.drift[i]) * (chain.dx[e] + g[j] - g[i]);
    });
    if (d < -1e-10) throw numeric_error("negative diffusion coefficient: corrector is inconsistent", d);
    return d;
}

double diffusion_martingale_form(const FiniteChain& chain, std::span<const double> pi, std::span<const double> g) {
    return edge_sum(chain, pi, [&](std::size_t i, std::size_t e, std::size_t j) {
        const double m = chain.dx[e] + g[j] - g[i];
        return m * m;
    });
}

double derivative_representation(const FiniteChain& chain, std::span<const double> pi, std::span<const double> g) {
    return edge_sum(chain, pi, [&](std::size_t i, std::size_t e, std::size_t j) {
        return (chain.dx[e] - chain.drift[i]) * (g[j] - g[i]);
    });
}

double gradient_distance(const FiniteChain& chain, std::span<const double> pi, std::span<const double> a,
                         std::span<const double> b) {
    return std::sqrt(edge_sum(chain, pi, [&](std::size_t i, std::size_t, std::size_t j) {
        const double diff = (a[j] - a[i]) - (b[j] - b[i]);
        return diff * diff;
    }));
}

std::vector<StationaryDistribution> stationary_family(const EnvWindow& window, std::size_t n_sites,
                                                      std::span<const double> lambdas, double eps_tail,
                                                      const SolverOptions& options) {
    double widest = 0.0;
    for (double l : lambdas) widest = std::max(widest, std::abs(l));
    const long radius = chain_radius(window, n_sites, widest, eps_tail);
    std::vector<StationaryDistribution> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) out.push_back(stationary_distribution(build_chain(window, n_sites, l, eps_tail, radius), options));
    return out;
}

std::vector<double> q_lambda_expectation(const EnvWindow& window, std::size_t n_sites, std::span<const double> lambdas,
                                         std::span<const double> f, double eps_tail, const SolverOptions& options) {
    if (f.size() != n_sites) throw usage_error("observable size does not match the chain");
    const auto family = stationary_family(window, n_sites, lambdas, eps_tail, options);
    std::vector<double> out;
    out.reserve(family.size());
    for (const auto& s : family) out.push_back(weighted_mean(s.pi, f));
    return out;
}

RnNorms rn_derivative_norms(const EnvWindow& window, std::size_t n_sites, std::span<const double> lambdas, double p,
                            double eps_tail, const SolverOptions& options) {
    if (!(p >= 1.0)) throw usage_error("norm exponent p must be >= 1");
    const FiniteChain base = build_chain(window, n_sites, 0.0, eps_tail);
    const StationaryDistribution pi0 = stationary_distribution(base, options);
    const auto family = stationary_family(window, n_sites, lambdas, eps_tail, options);
    RnNorms out;
    out.lambdas.assign(lambdas.begin(), lambdas.end());
    for (std::size_t k = 0; k < family.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_sites; ++i) acc += pi0.pi[i] * std::pow(family[k].pi[i] / pi0.pi[i], p);
        const double norm = lambdas[k] == 0.0 ? 1.0 : std::pow(acc, 1.0 / p);
        out.norms.push_back(norm);
        out.supremum = std::max(out.supremum, norm);
    }
    return out;
}

Mobility mobility_fd(const EnvWindow& window, std::size_t n_sites, double h, double eps_tail, double field_scale,
                     const SolverOptions& options) {
    if (!(h > 0.0 && h <= 0.05)) throw usage_error("mobility step h must lie in (0, 0.05]");
    if (!(field_scale > 0.0)) throw usage_error("field scale must be positive");
    const double tilts[3] = {0.0, field_scale * h, 2.0 * field_scale * h};
    const long radius = chain_radius(window, n_sites, tilts[2], eps_tail);
    double vy[3];
    double vx[3];
    for (int k = 0; k < 3; ++k) {
        const FiniteChain c = build_chain(window, n_sites, tilts[k], eps_tail, radius);
        const auto st = stationary_distribution(c, options);
        const Velocities v = chain_velocities(c, st.pi);
        vy[k] = v.v_y;
        vx[k] = v.v_x;
    }
    Mobility m;
    m.h = h;
    m.field_scale = field_scale;
    m.mobility_y = (4.0 * vy[1] - 3.0 * vy[0] - vy[2]) / (2.0 * h);
    m.mobility_x = (4.0 * vx[1] - 3.0 * vx[0] - vx[2]) / (2.0 * h);
    return m;
}

ChainSummary summarize_chain(const EnvWindow& window, std::size_t n_sites, double lambda, double h, double eps_tail,
                             const SolverOptions& options) {
    ChainSummary s;
    s.n_sites = n_sites;
    s.lambda = lambda;
    const FiniteChain c0 = build_chain(window, n_sites, 0.0, eps_tail);
    const auto st0 = stationary_distribution(c0, options);
    const auto corr = solve_corrector(c0, st0.pi, c0.drift, 0.0, "phi", options);
    s.d_y = diffusion_from_corrector(c0, st0.pi, corr.g);
    s.d_x = s.d_y / mean_holding_time(c0, st0.pi);
    const Mobility mob = mobility_fd(window, n_sites, h, eps_tail, 1.0, options);
    s.mobility_y = mob.mobility_y;
    s.mobility_x = mob.mobility_x;

    const FiniteChain cl = build_chain(window, n_sites, lambda, eps_tail);
    const auto stl = stationary_distribution(cl, options);
    const Velocities v = chain_velocities(cl, stl.pi);
    s.v_y = v.v_y;
    s.v_x = v.v_x;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_sites; ++i) {
        const double ratio = stl.pi[i] / st0.pi[i];
        acc += st0.pi[i] * ratio * ratio;
    }
    s.rn_norm_p2 = lambda == 0.0 ? 1.0 : std::sqrt(acc);
    s.stationary_residual = st0.residual;
    s.stationary_residual_lambda = stl.residual;
    s.corrector_residual = corr.residual;
    s.max_relative_tail = std::max(c0.max_relative_tail, cl.max_relative_tail);
    s.pi0 = st0.pi;
    s.pi_lambda = stl.pi;
    s.corrector = corr.g;
    return s;
}

nlohmann::json to_json(const ChainSummary& s) {
    return {{"N", s.n_sites},
            {"lambda", s.lambda},
            {"v_Y", s.v_y},
            {"v_X", s.v_x},
            {"D_Y", s.d_y},
            {"D_X", s.d_x},
            {"mobility_Y", s.mobility_y},
            {"mobility_X", s.mobility_x},
            {"rn_norm_p2", s.rn_norm_p2},
            {"residuals",
             {{"stationary_lambda0", s.stationary_residual},
              {"stationary_lambda", s.stationary_residual_lambda},
              {"corrector", s.corrector_residual},
              {"max_relative_tail", s.max_relative_tail}}}};
}

}  // namespace mott
