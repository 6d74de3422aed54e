#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace mott {

// ---------------------------------------------------------------------------
// Gap laws for Z_i = x_{i+1} - x_i. All have a hard minimum gap d > 0.
// ---------------------------------------------------------------------------

/// Z = spacing, always. Lattice oracle; fails aperiodicity so it is oracle-only.
struct DeterministicGap {
    double spacing = 1.0;
};

/// Z = d + Exponential(rate).
struct ShiftedExponentialGap {
    double min_gap = 1.0;
    double rate = 1.0;
};

/// Z = d * U^(-1/tail): Pareto with scale d. Finite mean needs tail > 1.
struct ShiftedParetoGap {
    double min_gap = 1.0;
    double tail = 2.0;
};

using GapLaw = std::variant<DeterministicGap, ShiftedExponentialGap, ShiftedParetoGap>;

// ---------------------------------------------------------------------------
// Mark laws for the energies E_i.
// ---------------------------------------------------------------------------

struct PointMassMark {};

/// Density c|E|^alpha on [-A, A], c = (alpha+1) / (2 A^(alpha+1)).
struct PowerUniformMark {
    double alpha = 0.0;
    double bound = 1.0;

    double normalization() const;
};

using MarkLaw = std::variant<PointMassMark, PowerUniformMark>;

enum class Interaction { zero, mott };

/// Distributional description of the i.i.d. environment {(Z_k, E_k)}.
struct EnvModel {
    GapLaw gap = DeterministicGap{};
    MarkLaw mark = PointMassMark{};
    double beta = 1.0;
    Interaction interaction = Interaction::zero;

    /// Throws config_error on invalid parameters.
    void validate() const;

    double min_gap() const;
    double mean_gap() const;
    double mark_bound() const;

    /// u(E_i, E_j) >= 0, symmetric.
    double interaction_energy(double ei, double ej) const noexcept {
        if (interaction == Interaction::zero) return 0.0;
        return beta * (std::abs(ei) + std::abs(ej) + std::abs(ei - ej));
    }

    /// Deterministic gaps violate the no-periodicity assumption.
    bool oracle_only() const { return std::holds_alternative<DeterministicGap>(gap); }

    /// Gap and mark at index i; a pure function of (model, seed, i).
    double sample_gap(std::uint64_t seed, std::int64_t i) const;
    double sample_mark(std::uint64_t seed, std::int64_t i) const;
};

struct IndexRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;

    std::int64_t size() const noexcept { return hi - lo + 1; }
    bool contains(std::int64_t i) const noexcept { return lo <= i && i <= hi; }
    bool contains(const IndexRange& r) const noexcept { return lo <= r.lo && r.hi <= hi; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Finite contiguous window of the marked point process, x_0 = 0.
class EnvWindow {
public:
    /// Explicit window (not extensible); positions[k] is site range.lo + k.
    /// Pair energies use the interaction settings of `u` (its gap law is ignored).
    EnvWindow(IndexRange range, std::vector<double> positions, std::vector<double> marks,
              const EnvModel& u = {});

    const IndexRange& range() const noexcept { return range_; }
    bool contains(std::int64_t i) const noexcept { return range_.contains(i); }

    double x(std::int64_t i) const { return positions_[offset(i)]; }
    double energy(std::int64_t i) const { return marks_[offset(i)]; }
    double gap(std::int64_t i) const { return x(i + 1) - x(i); }

    const std::vector<double>& positions() const noexcept { return positions_; }
    const std::vector<double>& marks() const noexcept { return marks_; }

    /// Generating model and seed; absent for explicit windows.
    const std::optional<EnvModel>& model() const noexcept { return model_; }
    std::uint64_t seed() const noexcept { return seed_; }
    bool extensible() const noexcept { return model_.has_value(); }

    /// Interaction energy of the pair; zero for explicit windows.
    double interaction_energy(std::int64_t i, std::int64_t j) const {
        return u_.interaction_energy(energy(i), energy(j));
    }
    const EnvModel& interaction_model() const noexcept { return u_; }

    /// Sub-window; requires r inside range().
    EnvWindow restrict(IndexRange r) const;

    friend bool operator==(const EnvWindow& a, const EnvWindow& b) {
        return a.range_ == b.range_ && a.positions_ == b.positions_ && a.marks_ == b.marks_;
    }

private:
    friend EnvWindow sample_window(const EnvModel&, IndexRange, std::uint64_t);
    friend EnvWindow extend_window(const EnvWindow&, IndexRange);

    EnvWindow() = default;

    std::size_t offset(std::int64_t i) const;

    IndexRange range_;
    std::vector<double> positions_;
    std::vector<double> marks_;
    std::optional<EnvModel> model_;
    EnvModel u_{};
    std::uint64_t seed_ = 0;
};

/// Window over `range` (must contain 0) with per-index streams keyed by (seed, i).
EnvWindow sample_window(const EnvModel& model, IndexRange range, std::uint64_t seed);

/// Grow a model-backed window; values on the old range are unchanged bit for bit.
EnvWindow extend_window(const EnvWindow& window, IndexRange new_range);

/// E[exp(s Z_0)] with an absolute error estimate; value is +inf when divergent.
struct MgfValue {
    double value = 0.0;
    double abs_error = 0.0;

    bool finite() const noexcept { return value < std::numeric_limits<double>::infinity(); }
};

MgfValue gap_mgf(const EnvModel& model, double s);

// Serialization ------------------------------------------------------------

nlohmann::json to_json(const EnvModel& model);
EnvModel model_from_json(const nlohmann::json& j);

/// `index,x,E` rows.
void write_window_csv(std::ostream& os, const EnvWindow& window);

/// {model, seed, range}: enough to regenerate the window bit-exactly.
nlohmann::json window_descriptor(const EnvWindow& window);
EnvWindow window_from_descriptor(const nlohmann::json& j);

std::string format_double(double v);

}  // namespace mott
