#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "mott/env_model.hpp"

namespace mott {

inline constexpr double default_eps_tail = 1e-10;

/// log r^lambda_{ij} = -|x_i - x_j| + lambda (x_j - x_i) - u(E_i, E_j).
/// The walk itself needs lambda in [0,1); negative tilts are accepted for
/// finite differences around lambda = 0. Throws std::out_of_range for sites
/// outside the window.
double log_jump_rate(const EnvWindow& window, std::int64_t i, std::int64_t j, double lambda);

/// exp(log_jump_rate); zero when i == j.
double jump_rate(const EnvWindow& window, std::int64_t i, std::int64_t j, double lambda);

/// Certified majorant of the rate mass beyond `radius` gaps on one side,
/// sum_{k > radius} exp(-(1 -+ lambda) k d).
double side_tail_bound(double lambda, double min_gap, long radius, bool right_side);

struct JumpTarget {
    std::int64_t index = 0;
    double dx = 0.0;
    double rate = 0.0;
    double prob = 0.0;
};

/// Truncated jump distribution out of one site, targets sorted by index.
struct JumpRow {
    std::int64_t source = 0;
    double lambda = 0.0;
    std::vector<JumpTarget> targets;
    double exit_rate = 0.0;
    double tail_bound = 0.0;
    double drift = 0.0;
    long radius_left = 0;
    long radius_right = 0;
};

/// Smallest radii with tail_bound <= eps_tail * exit_rate. Throws
/// insufficient_window when the window ends before that.
JumpRow build_jump_row(const EnvWindow& window, std::int64_t i, double lambda,
                       double eps_tail = default_eps_tail);

/// Row over a fixed target set i-radius_left .. i+radius_right.
JumpRow build_jump_row(const EnvWindow& window, std::int64_t i, double lambda, long radius_left,
                       long radius_right);

/// max_k |p_k (dx_k - phi) - (p^h_k - p^-h_k) / 2h| on the lambda = 0 target set.
double drift_derivative_check(const EnvWindow& window, std::int64_t i, double h,
                              double eps_tail = default_eps_tail);

/// Smallest gap the tail bound may assume for this window.
double certified_min_gap(const EnvWindow& window);

/// `source,target,dx,rate,prob` rows.
void write_row_csv(std::ostream& os, const JumpRow& row, bool header = true);

/// Walker/Vose alias table: O(n) build, O(1) sampling from one uniform.
class AliasTable {
public:
    AliasTable() = default;
    explicit AliasTable(std::span<const double> probs);

    /// u in (0, 1].
    std::size_t sample(double u) const noexcept {
        const double scaled = (1.0 - u) * static_cast<double>(cut_.size());
        auto k = static_cast<std::size_t>(scaled);
        if (k >= cut_.size()) k = cut_.size() - 1;
        return (scaled - static_cast<double>(k)) < cut_[k] ? k : alias_[k];
    }

    std::size_t size() const noexcept { return cut_.size(); }

    /// Probability mass the table assigns to outcome k (for tests).
    double mass(std::size_t k) const;

private:
    std::vector<double> cut_;
    std::vector<std::uint32_t> alias_;
};

}  // namespace mott
