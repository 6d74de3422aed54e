#include "mott/env_model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "mott/error.hpp"
#include "mott/rng.hpp"

namespace mott {

namespace {

constexpr std::uint64_t gap_stream = 0;
constexpr std::uint64_t mark_magnitude_stream = 1;
constexpr std::uint64_t mark_sign_stream = 2;

constexpr double inf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
    if (!ok) throw config_error(what);
}

}  // namespace

double PowerUniformMark::normalization() const {
    return (alpha + 1.0) / (2.0 * std::pow(bound, alpha + 1.0));
}

void EnvModel::validate() const {
    std::visit(overloaded{
                   [](const DeterministicGap& g) {
                       require(g.spacing > 0.0 && std::isfinite(g.spacing), "deterministic gap needs spacing > 0");
                   },
                   [](const ShiftedExponentialGap& g) {
                       require(g.min_gap > 0.0 && std::isfinite(g.min_gap), "shifted_exponential needs d > 0");
                       require(g.rate > 0.0 && std::isfinite(g.rate), "shifted_exponential needs rate c > 0");
                   },
                   [](const ShiftedParetoGap& g) {
                       require(g.min_gap > 0.0 && std::isfinite(g.min_gap), "shifted_pareto needs d > 0");
                       require(g.tail > 1.0 && std::isfinite(g.tail),
                               "shifted_pareto needs tail exponent > 1 (finite mean gap)");
                   },
               },
               gap);
    std::visit(overloaded{
                   [](const PointMassMark&) {},
                   [](const PowerUniformMark& m) {
                       require(m.alpha >= 0.0 && std::isfinite(m.alpha), "power_uniform needs alpha >= 0");
                       require(m.bound > 0.0 && std::isfinite(m.bound), "power_uniform needs A > 0");
                   },
               },
               mark);
    require(beta >= 0.0 && std::isfinite(beta), "beta must be finite and >= 0");
}

double EnvModel::min_gap() const {
    return std::visit(overloaded{
                          [](const DeterministicGap& g) { return g.spacing; },
                          [](const ShiftedExponentialGap& g) { return g.min_gap; },
                          [](const ShiftedParetoGap& g) { return g.min_gap; },
                      },
                      gap);
}

double EnvModel::mean_gap() const {
    return std::visit(overloaded{
                          [](const DeterministicGap& g) { return g.spacing; },
                          [](const ShiftedExponentialGap& g) { return g.min_gap + 1.0 / g.rate; },
                          [](const ShiftedParetoGap& g) { return g.min_gap * g.tail / (g.tail - 1.0); },
                      },
                      gap);
}

double EnvModel::mark_bound() const {
    return std::visit(overloaded{
                          [](const PointMassMark&) { return 0.0; },
                          [](const PowerUniformMark& m) { return m.bound; },
                      },
                      mark);
}

double EnvModel::sample_gap(std::uint64_t seed, std::int64_t i) const {
    const double u = counter_uniform(seed, i, gap_stream);
    return std::visit(overloaded{
                          [](const DeterministicGap& g) { return g.spacing; },
                          [u](const ShiftedExponentialGap& g) { return g.min_gap - std::log(u) / g.rate; },
                          [u](const ShiftedParetoGap& g) { return g.min_gap * std::pow(u, -1.0 / g.tail); },
                      },
                      gap);
}

double EnvModel::sample_mark(std::uint64_t seed, std::int64_t i) const {
    return std::visit(overloaded{
                          [](const PointMassMark&) { return 0.0; },
                          [&](const PowerUniformMark& m) {
                              // |E| has cdf (e/A)^(alpha+1) on [0, A]
                              const double u = counter_uniform(seed, i, mark_magnitude_stream);
                              const double magnitude = m.bound * std::pow(u, 1.0 / (m.alpha + 1.0));
                              const bool negative = counter_uniform(seed, i, mark_sign_stream) <= 0.5;
                              return negative ? -magnitude : magnitude;
                          },
                      },
                      mark);
}

// EnvWindow ------------------------------------------------------------------

EnvWindow::EnvWindow(IndexRange range, std::vector<double> positions, std::vector<double> marks,
                     const EnvModel& u)
    : range_(range), positions_(std::move(positions)), marks_(std::move(marks)), u_(u) {
    u_.validate();
    if (!range_.contains(0)) throw config_error("window range must contain index 0");
    const auto n = static_cast<std::size_t>(range_.size());
    if (positions_.size() != n || marks_.size() != n)
        throw config_error("window positions/marks do not match its index range");
    if (x(0) != 0.0) throw config_error("window must have x_0 = 0");
    for (std::size_t k = 0; k + 1 < n; ++k)
        if (!(positions_[k + 1] > positions_[k])) throw config_error("window positions must be strictly increasing");
    for (double e : marks_)
        if (!std::isfinite(e)) throw config_error("window marks must be finite");
}

std::size_t EnvWindow::offset(std::int64_t i) const {
    if (!range_.contains(i))
        throw std::out_of_range("site index " + std::to_string(i) + " outside window [" +
                                std::to_string(range_.lo) + ", " + std::to_string(range_.hi) + "]");
    return static_cast<std::size_t>(i - range_.lo);
}

EnvWindow EnvWindow::restrict(IndexRange r) const {
    if (!range_.contains(r) || !r.contains(0)) throw usage_error("restriction range must lie inside the window and contain 0");
    EnvWindow out = *this;
    out.range_ = r;
    const auto first = positions_.begin() + static_cast<std::ptrdiff_t>(r.lo - range_.lo);
    const auto mfirst = marks_.begin() + static_cast<std::ptrdiff_t>(r.lo - range_.lo);
    out.positions_.assign(first, first + r.size());
    out.marks_.assign(mfirst, mfirst + r.size());
    return out;
}

EnvWindow sample_window(const EnvModel& model, IndexRange range, std::uint64_t seed) {
    model.validate();
    if (!range.contains(0)) throw config_error("window range must contain index 0");
    EnvWindow w;
    w.model_ = model;
    w.u_ = model;
    w.seed_ = seed;
    w.range_ = {0, 0};
    w.positions_ = {0.0};
    w.marks_ = {model.sample_mark(seed, 0)};
    return extend_window(w, range);
}

EnvWindow extend_window(const EnvWindow& window, IndexRange new_range) {
    if (!new_range.contains(window.range_)) throw usage_error("extend_window cannot shrink the window");
    if (new_range == window.range_) return window;
    if (!window.model_) throw usage_error("explicit windows cannot be extended");
    const EnvModel& m = *window.model_;
    const std::uint64_t seed = window.seed_;

    const auto left = static_cast<std::size_t>(window.range_.lo - new_range.lo);
    const auto right = static_cast<std::size_t>(new_range.hi - window.range_.hi);
    EnvWindow w = window;
    w.range_ = new_range;
    w.positions_.assign(left, 0.0);
    w.marks_.assign(left, 0.0);
    w.positions_.insert(w.positions_.end(), window.positions_.begin(), window.positions_.end());
    w.marks_.insert(w.marks_.end(), window.marks_.begin(), window.marks_.end());
    w.positions_.resize(w.positions_.size() + right);
    w.marks_.resize(w.marks_.size() + right);

    // Positions accumulate outward from x_0 = 0 in a fixed order, so values do
    // not depend on how the window was grown.
    for (std::int64_t i = window.range_.hi + 1; i <= new_range.hi; ++i) {
        const auto k = static_cast<std::size_t>(i - new_range.lo);
        w.positions_[k] = w.positions_[k - 1] + m.sample_gap(seed, i - 1);
        w.marks_[k] = m.sample_mark(seed, i);
    }
    for (std::int64_t i = window.range_.lo - 1; i >= new_range.lo; --i) {
        const auto k = static_cast<std::size_t>(i - new_range.lo);
        w.positions_[k] = w.positions_[k + 1] - m.sample_gap(seed, i);
        w.marks_[k] = m.sample_mark(seed, i);
    }
    return w;
}

// Moments ----------------------------------------------------------------------

MgfValue gap_mgf(const EnvModel& model, double s) {
    model.validate();
    if (s == 0.0) return {1.0, 0.0};
    return std::visit(overloaded{
                          [s](const DeterministicGap& g) { return MgfValue{std::exp(s * g.spacing), 0.0}; },
                          [s](const ShiftedExponentialGap& g) {
                              if (s >= g.rate) return MgfValue{inf, 0.0};
                              return MgfValue{std::exp(s * g.min_gap) * g.rate / (g.rate - s), 0.0};
                          },
                          [s](const ShiftedParetoGap& g) {
                              if (s > 0.0) return MgfValue{inf, 0.0};
                              // E[e^{sZ}] = int_0^inf e^{s(d+t)} a d^a (d+t)^{-a-1} dt
                              const double a = g.tail;
                              const double d = g.min_gap;
                              auto integrand = [=](double t) {
                                  const double z = d + t;
                                  return std::exp(s * z + std::log(a) + a * std::log(d) - (a + 1.0) * std::log(z));
                              };
                              boost::math::quadrature::exp_sinh<double> quad;
                              double err = 0.0;
                              const double value = quad.integrate(integrand, 0.0, inf, 1e-13, &err);
                              return MgfValue{value, err * std::max(1.0, std::abs(value))};
                          },
                      },
                      model.gap);
}

// Serialization ----------------------------------------------------------------

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json to_json(const EnvModel& model) {
    nlohmann::json j;
    std::visit(overloaded{
                   [&](const DeterministicGap& g) {
                       j["gap_law"] = "deterministic";
                       j["gap_d"] = g.spacing;
                   },
                   [&](const ShiftedExponentialGap& g) {
                       j["gap_law"] = "shifted_exponential";
                       j["gap_d"] = g.min_gap;
                       j["gap_rate"] = g.rate;
                   },
                   [&](const ShiftedParetoGap& g) {
                       j["gap_law"] = "shifted_pareto";
                       j["gap_d"] = g.min_gap;
                       j["gap_tail"] = g.tail;
                   },
               },
               model.gap);
    std::visit(overloaded{
                   [&](const PointMassMark&) { j["mark_law"] = "point_mass"; },
                   [&](const PowerUniformMark& m) {
                       j["mark_law"] = "power_uniform";
                       j["mark_alpha"] = m.alpha;
                       j["mark_A"] = m.bound;
                   },
               },
               model.mark);
    j["beta"] = model.beta;
    j["u_kind"] = model.interaction == Interaction::zero ? "zero" : "mott";
    return j;
}

EnvModel model_from_json(const nlohmann::json& j) {
    EnvModel m;
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_number()) throw config_error(std::string("model key '") + key + "' missing or not a number");
        return j.at(key).get<double>();
    };
    const std::string gap = j.value("gap_law", std::string("deterministic"));
    if (gap == "deterministic")
        m.gap = DeterministicGap{num("gap_d")};
    else if (gap == "shifted_exponential")
        m.gap = ShiftedExponentialGap{num("gap_d"), num("gap_rate")};
    else if (gap == "shifted_pareto")
        m.gap = ShiftedParetoGap{num("gap_d"), num("gap_tail")};
    else
        throw config_error("unknown gap_law '" + gap + "'");

    const std::string mark = j.value("mark_law", std::string("point_mass"));
    if (mark == "point_mass")
        m.mark = PointMassMark{};
    else if (mark == "power_uniform")
        m.mark = PowerUniformMark{num("mark_alpha"), num("mark_A")};
    else
        throw config_error("unknown mark_law '" + mark + "'");

    m.beta = j.contains("beta") ? num("beta") : 1.0;
    const std::string u = j.value("u_kind", std::string("zero"));
    if (u == "zero")
        m.interaction = Interaction::zero;
    else if (u == "mott")
        m.interaction = Interaction::mott;
    else
        throw config_error("unknown u_kind '" + u + "'");
    m.validate();
    return m;
}

void write_window_csv(std::ostream& os, const EnvWindow& window) {
    os << "index,x,E\n";
    for (std::int64_t i = window.range().lo; i <= window.range().hi; ++i)
        os << i << ',' << format_double(window.x(i)) << ',' << format_double(window.energy(i)) << '\n';
}

nlohmann::json window_descriptor(const EnvWindow& window) {
    if (!window.model()) throw usage_error("explicit windows have no generating descriptor");
    return {{"model", to_json(*window.model())},
            {"seed", window.seed()},
            {"range", {window.range().lo, window.range().hi}}};
}

EnvWindow window_from_descriptor(const nlohmann::json& j) {
    const EnvModel m = model_from_json(j.at("model"));
    const auto& r = j.at("range");
    return sample_window(m, {r.at(0).get<std::int64_t>(), r.at(1).get<std::int64_t>()}, j.at("seed").get<std::uint64_t>());
}

}  // namespace mott
