#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "lbrc/error.hpp"

namespace lbrc {

// Right-continuous piecewise-constant function.
//
// values[i] holds on [jump_times[i], jump_times[i+1]); initial_value holds on
// (-inf, jump_times[0]). Left limits are computed on demand.
class StepFunction {
public:
    StepFunction() = default;
    explicit StepFunction(double initial_value) : initial_(initial_value) {}

    StepFunction(double initial_value, std::vector<double> jump_times, std::vector<double> values)
        : initial_(initial_value), times_(std::move(jump_times)), values_(std::move(values)) {
        if (times_.size() != values_.size())
            throw InputError("StepFunction: jump_times and values differ in length");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i - 1] < times_[i]))
                throw InputError("StepFunction: jump_times must be strictly increasing");
    }

    // Builds from (time, increment) pairs in any order; increments at equal
    // times accumulate into a single jump.
    static StepFunction from_increments(double initial_value,
                                        std::vector<std::pair<double, double>> jumps) {
        std::sort(jumps.begin(), jumps.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        std::vector<double> times;
        std::vector<double> values;
        double level = initial_value;
        for (std::size_t i = 0; i < jumps.size();) {
            const double t = jumps[i].first;
            double inc = 0.0;
            for (; i < jumps.size() && jumps[i].first == t; ++i) inc += jumps[i].second;
            level += inc;
            times.push_back(t);
            values.push_back(level);
        }
        return StepFunction(initial_value, std::move(times), std::move(values));
    }

    double operator()(double t) const {
        const auto it = std::upper_bound(times_.begin(), times_.end(), t);
        return it == times_.begin() ? initial_ : values_[static_cast<std::size_t>(it - times_.begin()) - 1];
    }

    double left_limit(double t) const {
        const auto it = std::lower_bound(times_.begin(), times_.end(), t);
        return it == times_.begin() ? initial_ : values_[static_cast<std::size_t>(it - times_.begin()) - 1];
    }

    // Size of the jump at t (0 when t is not a jump time).
    double jump_at(double t) const { return (*this)(t) - left_limit(t); }

    double initial_value() const noexcept { return initial_; }
    double final_value() const noexcept { return values_.empty() ? initial_ : values_.back(); }
    const std::vector<double>& jump_times() const noexcept { return times_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return times_.size(); }

    StepFunction negated() const {
        std::vector<double> v(values_.size());
        std::transform(values_.begin(), values_.end(), v.begin(), [](double x) { return -x; });
        return StepFunction(-initial_, times_, std::move(v));
    }

private:
    double initial_ = 0.0;
    std::vector<double> times_;
    std::vector<double> values_;
};

inline double eval_at(const StepFunction& f, double t) { return f(t); }
inline double left_limit_at(const StepFunction& f, double t) { return f.left_limit(t); }

// Sum of a right-continuous part and a left-continuous part.
//
// Needed for quantities that count closed-interval memberships, e.g. the
// at-risk proportion n^-1 #{a_i <= t <= y_i}: entries are right-continuous,
// exits happen just after y_i. The left-continuous part is stored as a
// right-continuous StepFunction whose left limits are used.
class TwoSidedStep {
public:
    TwoSidedStep() = default;
    TwoSidedStep(StepFunction right_part, StepFunction left_part)
        : right_(std::move(right_part)), left_(std::move(left_part)) {}

    double operator()(double t) const { return right_(t) + left_.left_limit(t); }
    double left_limit(double t) const { return right_.left_limit(t) + left_.left_limit(t); }
    double right_limit(double t) const { return right_(t) + left_(t); }

    const StepFunction& right_part() const noexcept { return right_; }
    const StepFunction& left_part() const noexcept { return left_; }

    std::vector<double> breakpoints() const {
        std::vector<double> out;
        out.reserve(right_.size() + left_.size());
        std::merge(right_.jump_times().begin(), right_.jump_times().end(), left_.jump_times().begin(),
                   left_.jump_times().end(), std::back_inserter(out));
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    StepFunction right_;
    StepFunction left_;
};

// Evaluation points inside the window [lower, b].
struct EvalGrid {
    std::vector<double> points;
    double lower = 0.0;
    double b = 0.0;

    static EvalGrid make(std::vector<double> points, double lower, double b) {
        if (points.empty()) throw InputError("EvalGrid: no evaluation points");
        std::sort(points.begin(), points.end());
        if (!(points.front() > 0.0)) throw InputError("EvalGrid: points must be > 0");
        if (points.back() > b) throw InputError("EvalGrid: points must not exceed b");
        if (lower < 0.0 || lower > points.front())
            throw InputError("EvalGrid: lower endpoint must lie in [0, min(points)]");
        return EvalGrid{std::move(points), lower, b};
    }

    // Window spanned by the points themselves.
    static EvalGrid make(std::vector<double> points) {
        if (points.empty()) throw InputError("EvalGrid: no evaluation points");
        std::sort(points.begin(), points.end());
        const double lo = points.front();
        const double hi = points.back();
        return make(std::move(points), lo, hi);
    }

    // n points spaced evenly over [lo, hi].
    static EvalGrid linspace(double lo, double hi, std::size_t n) {
        if (n == 0) throw InputError("EvalGrid: no evaluation points");
        std::vector<double> pts(n);
        for (std::size_t i = 0; i < n; ++i)
            pts[i] = n == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        pts.back() = hi;
        return make(std::move(pts), lo, hi);
    }
};

namespace detail {

// Times at which a step function can attain its sup distance on the window:
// the grid points, each jump inside [lower, b], and the left side of each
// jump in (lower, b]. second == true means "left limit".
inline std::vector<std::pair<double, bool>> probe_points(const EvalGrid& grid,
                                                         std::span<const double> jumps) {
    std::vector<std::pair<double, bool>> probes;
    probes.reserve(grid.points.size() + 2 * jumps.size());
    for (double t : grid.points) probes.emplace_back(t, false);
    for (double t : jumps) {
        if (t < grid.lower || t > grid.b) continue;
        probes.emplace_back(t, false);
        if (t > grid.lower) probes.emplace_back(t, true);
    }
    return probes;
}

}  // namespace detail

// max |f - g| over the grid points and on both sides of every jump of f or g
// inside the grid window.
inline double sup_norm_diff(const StepFunction& f, const StepFunction& g, const EvalGrid& grid) {
    if (grid.points.empty()) throw InputError("sup_norm_diff: empty grid");
    std::vector<double> jumps;
    std::merge(f.jump_times().begin(), f.jump_times().end(), g.jump_times().begin(),
               g.jump_times().end(), std::back_inserter(jumps));
    double sup = 0.0;
    for (const auto& [t, left] : detail::probe_points(grid, jumps)) {
        const double d = left ? f.left_limit(t) - g.left_limit(t) : f(t) - g(t);
        sup = std::max(sup, std::abs(d));
    }
    return sup;
}

// Same probing against a continuous reference function. For a monotone
// reference this is the exact sup over the window.
template <class Fn>
double sup_norm_diff(const StepFunction& f, Fn&& reference, const EvalGrid& grid) {
    if (grid.points.empty()) throw InputError("sup_norm_diff: empty grid");
    double sup = 0.0;
    for (const auto& [t, left] : detail::probe_points(grid, f.jump_times())) {
        const double v = left ? f.left_limit(t) : f(t);
        sup = std::max(sup, std::abs(v - reference(t)));
    }
    return sup;
}

}  // namespace lbrc
