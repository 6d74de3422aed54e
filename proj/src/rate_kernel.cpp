#include "mott/rate_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mott/error.hpp"

namespace mott {

namespace {

void check_lambda(double lambda) {
    if (!(std::abs(lambda) < 1.0)) throw config_error("bias lambda must satisfy |lambda| < 1");
}

// Radius with side_tail_bound <= budget.
long radius_for_budget(double lambda, double d, bool right, double budget) {
    const double a = (right ? 1.0 - lambda : 1.0 + lambda) * d;
    // e^{-a(K+1)} / (1 - e^{-a}) <= budget
    const double k = -std::log(budget * -std::expm1(-a)) / a - 1.0;
    return std::max(0L, static_cast<long>(std::ceil(k)));
}

void finish_row(JumpRow& row) {
    double exit = 0.0;
    for (const auto& t : row.targets) exit += t.rate;
    for (auto& t : row.targets) t.prob = t.rate / exit;
    // Pair offsets -k and +k, far tail first: a mirror-symmetric row has drift exactly 0.
    const auto left = static_cast<std::size_t>(row.radius_left);
    const auto right = static_cast<std::size_t>(row.radius_right);
    double drift = 0.0;
    for (std::size_t k = std::max(left, right); k >= 1; --k) {
        double pair = 0.0;
        if (k <= left) pair += row.targets[left - k].prob * row.targets[left - k].dx;
        if (k <= right) pair += row.targets[left + k - 1].prob * row.targets[left + k - 1].dx;
        drift += pair;
    }
    row.exit_rate = exit;
    row.drift = drift;
}

}  // namespace

double log_jump_rate(const EnvWindow& window, std::int64_t i, std::int64_t j, double lambda) {
    check_lambda(lambda);
    const double dx = window.x(j) - window.x(i);
    return -std::abs(dx) + lambda * dx - window.interaction_energy(i, j);
}

double jump_rate(const EnvWindow& window, std::int64_t i, std::int64_t j, double lambda) {
    (void)window.x(i);
    (void)window.x(j);
    if (i == j) return 0.0;
    return std::exp(log_jump_rate(window, i, j, lambda));
}

double side_tail_bound(double lambda, double min_gap, long radius, bool right_side) {
    const double a = (right_side ? 1.0 - lambda : 1.0 + lambda) * min_gap;
    return std::exp(-a * static_cast<double>(radius + 1)) / -std::expm1(-a);
}

double certified_min_gap(const EnvWindow& window) {
    if (window.model()) return window.model()->min_gap();
    double d = std::numeric_limits<double>::infinity();
    for (std::int64_t i = window.range().lo; i < window.range().hi; ++i) d = std::min(d, window.gap(i));
    return d;
}

JumpRow build_jump_row(const EnvWindow& window, std::int64_t i, double lambda, double eps_tail) {
    check_lambda(lambda);
    if (!(eps_tail > 0.0)) throw config_error("eps_tail must be positive");
    (void)window.x(i);
    const double d = certified_min_gap(window);
    const IndexRange& range = window.range();
    const double* xs = window.positions().data() - range.lo;
    const double* es = window.marks().data() - range.lo;
    const EnvModel& u = window.interaction_model();
    const double xi = xs[i];
    const double ei = es[i];

    // left side is collected nearest first and reversed at the end
    thread_local std::vector<JumpTarget> left_side;
    left_side.clear();
    JumpRow row;
    row.source = i;
    row.lambda = lambda;
    row.targets.reserve(64);
    long left = 0;
    long right = 0;
    double exit = 0.0;
    auto add = [&](std::int64_t j, std::vector<JumpTarget>& side) {
        if (!range.contains(j)) {
            // exit only grows with the radius, so this budget is conservative
            const double budget = 0.5 * eps_tail * exit;
            throw insufficient_window(radius_for_budget(lambda, d, j > i, budget));
        }
        const double dx = xs[j] - xi;
        const double rate = std::exp(-std::abs(dx) + lambda * dx - u.interaction_energy(ei, es[j]));
        side.push_back({j, dx, rate, 0.0});
        exit += rate;
    };
    add(i - 1, left_side);
    add(i + 1, row.targets);
    left = right = 1;
    // side bounds shrink by a constant factor per extra gap
    const double q_left = std::exp(-(1.0 + lambda) * d);
    const double q_right = std::exp(-(1.0 - lambda) * d);
    double bound_left = side_tail_bound(lambda, d, 1, false);
    double bound_right = side_tail_bound(lambda, d, 1, true);
    for (;;) {
        const bool grow_left = bound_left > 0.5 * eps_tail * exit;
        const bool grow_right = bound_right > 0.5 * eps_tail * exit;
        if (!grow_left && !grow_right) break;
        if (grow_left) {
            add(i - ++left, left_side);
            bound_left *= q_left;
        }
        if (grow_right) {
            add(i + ++right, row.targets);
            bound_right *= q_right;
        }
    }
    row.targets.insert(row.targets.begin(), left_side.rbegin(), left_side.rend());
    row.radius_left = left;
    row.radius_right = right;
    row.tail_bound = side_tail_bound(lambda, d, left, false) + side_tail_bound(lambda, d, right, true);
    finish_row(row);
    return row;
}

JumpRow build_jump_row(const EnvWindow& window, std::int64_t i, double lambda, long radius_left,
                       long radius_right) {
    check_lambda(lambda);
    if (radius_left < 1 || radius_right < 1) throw usage_error("row radii must be >= 1");
    const double d = certified_min_gap(window);
    JumpRow row;
    row.source = i;
    row.lambda = lambda;
    row.radius_left = radius_left;
    row.radius_right = radius_right;
    for (std::int64_t j = i - radius_left; j <= i + radius_right; ++j) {
        if (j == i) continue;
        if (!window.contains(j)) throw insufficient_window(std::max(radius_left, radius_right));
        const double dx = window.x(j) - window.x(i);
        row.targets.push_back({j, dx, std::exp(log_jump_rate(window, i, j, lambda)), 0.0});
    }
    row.tail_bound = side_tail_bound(lambda, d, radius_left, false) + side_tail_bound(lambda, d, radius_right, true);
    finish_row(row);
    return row;
}

double drift_derivative_check(const EnvWindow& window, std::int64_t i, double h, double eps_tail) {
    if (!(h > 0.0 && h <= 0.1)) throw usage_error("finite-difference step must lie in (0, 0.1]");
    const JumpRow base = build_jump_row(window, i, 0.0, eps_tail);
    const JumpRow up = build_jump_row(window, i, h, base.radius_left, base.radius_right);
    const JumpRow down = build_jump_row(window, i, -h, base.radius_left, base.radius_right);
    double mismatch = 0.0;
    for (std::size_t k = 0; k < base.targets.size(); ++k) {
        const auto& t = base.targets[k];
        const double analytic = t.prob * (t.dx - base.drift);
        const double fd = (up.targets[k].prob - down.targets[k].prob) / (2.0 * h);
        mismatch = std::max(mismatch, std::abs(analytic - fd));
    }
    return mismatch;
}

void write_row_csv(std::ostream& os, const JumpRow& row, bool header) {
    if (header) os << "source,target,dx,rate,prob\n";
    for (const auto& t : row.targets)
        os << row.source << ',' << t.index << ',' << format_double(t.dx) << ',' << format_double(t.rate) << ','
           << format_double(t.prob) << '\n';
}

// AliasTable -------------------------------------------------------------------

AliasTable::AliasTable(std::span<const double> probs) {
    const std::size_t n = probs.size();
    if (n == 0) throw usage_error("alias table needs at least one outcome");
    double total = 0.0;
    for (double p : probs) total += p;
    cut_.assign(n, 1.0);
    alias_.resize(n);
    thread_local std::vector<double> scaled;
    thread_local std::vector<std::uint32_t> small;
    thread_local std::vector<std::uint32_t> large;
    scaled.resize(n);
    small.clear();
    large.clear();
    for (std::size_t k = 0; k < n; ++k) {
        scaled[k] = probs[k] / total * static_cast<double>(n);
        alias_[k] = static_cast<std::uint32_t>(k);
        (scaled[k] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(k));
    }
    while (!small.empty() && !large.empty()) {
        const auto s = small.back();
        small.pop_back();
        const auto l = large.back();
        cut_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    // leftovers are 1 up to rounding
    for (auto k : small) cut_[k] = 1.0;
    for (auto k : large) cut_[k] = 1.0;
}

double AliasTable::mass(std::size_t k) const {
    const double n = static_cast<double>(cut_.size());
    double m = cut_[k] / n;
    for (std::size_t j = 0; j < cut_.size(); ++j)
        if (alias_[j] == k && j != k) m += (1.0 - cut_[j]) / n;
    return m;
}

}  // namespace mott
