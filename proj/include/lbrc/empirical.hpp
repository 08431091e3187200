#pragma once

#include <algorithm>
#include <vector>

#include "lbrc/dataset.hpp"
#include "lbrc/step_function.hpp"

namespace lbrc {

namespace detail {

// #{x in xs : x <= t} / divisor.
inline StepFunction count_at_or_below(std::vector<double> xs, double divisor) {
    std::sort(xs.begin(), xs.end());
    std::vector<double> times;
    std::vector<double> values;
    for (std::size_t i = 0; i < xs.size();) {
        const double t = xs[i];
        while (i < xs.size() && xs[i] == t) ++i;
        times.push_back(t);
        values.push_back(static_cast<double>(i) / divisor);
    }
    return StepFunction(0.0, std::move(times), std::move(values));
}

// #{x in xs : x > t} / divisor. Its left limit at t is #{x >= t} / divisor.
inline StepFunction count_above(std::vector<double> xs, double divisor) {
    std::sort(xs.begin(), xs.end());
    const double m = static_cast<double>(xs.size());
    std::vector<double> times;
    std::vector<double> values;
    for (std::size_t i = 0; i < xs.size();) {
        const double t = xs[i];
        while (i < xs.size() && xs[i] == t) ++i;
        times.push_back(t);
        values.push_back((m - static_cast<double>(i)) / divisor);
    }
    return StepFunction(m / divisor, std::move(times), std::move(values));
}

}  // namespace detail

// Raw empirical processes of one dataset. All are proportions (divided by n).
//
//   n_bar  N(t)  = #{delta_i = 1, y_i <= t}
//   r_bar  R(t)  = #{a_i <= t <= y_i}
//   q_tilde = q1 + q2,  q1(t) = #{a_i <= t},  q2(t) = #{delta_i = 1, v_i <= t}
//   k_tilde = k1 + k2,  k1(t) = #{a_i >= t},  k2(t) = #{v_i >= t}
struct EmpiricalBundle {
    std::size_t n = 0;
    StepFunction n_bar;
    TwoSidedStep r_bar;
    StepFunction q1_tilde;
    StepFunction q2_tilde;
    StepFunction q_tilde;
    TwoSidedStep k1_tilde;
    TwoSidedStep k2_tilde;
    TwoSidedStep k_tilde;
};

inline StepFunction build_n_bar(const Dataset& d) {
    std::vector<double> ev;
    for (const auto& o : d)
        if (o.delta == 1) ev.push_back(o.y);
    return detail::count_at_or_below(std::move(ev), static_cast<double>(d.n()));
}

inline TwoSidedStep build_r_bar(const Dataset& d) {
    std::vector<double> as;
    std::vector<double> ys;
    for (const auto& o : d) {
        as.push_back(o.a);
        ys.push_back(o.y);
    }
    const double n = static_cast<double>(d.n());
    return TwoSidedStep(detail::count_at_or_below(std::move(as), n),
                        detail::count_at_or_below(std::move(ys), n).negated());
}

// Fills the Q/K parts of a bundle (n_bar and r_bar are left default).
inline EmpiricalBundle build_q_k(const Dataset& d) {
    const double n = static_cast<double>(d.n());
    std::vector<double> as;
    std::vector<double> vs;
    std::vector<double> v_events;
    for (const auto& o : d) {
        as.push_back(o.a);
        vs.push_back(o.v);
        if (o.delta == 1) v_events.push_back(o.v);
    }
    std::vector<double> pooled_q = as;
    pooled_q.insert(pooled_q.end(), v_events.begin(), v_events.end());
    std::vector<double> pooled_k = as;
    pooled_k.insert(pooled_k.end(), vs.begin(), vs.end());

    EmpiricalBundle e;
    e.n = d.n();
    e.q1_tilde = detail::count_at_or_below(as, n);
    e.q2_tilde = detail::count_at_or_below(v_events, n);
    e.q_tilde = detail::count_at_or_below(std::move(pooled_q), n);
    e.k1_tilde = TwoSidedStep(StepFunction(0.0), detail::count_above(std::move(as), n));
    e.k2_tilde = TwoSidedStep(StepFunction(0.0), detail::count_above(std::move(vs), n));
    e.k_tilde = TwoSidedStep(StepFunction(0.0), detail::count_above(std::move(pooled_k), n));
    return e;
}

inline EmpiricalBundle build_empirical(const Dataset& d) {
    EmpiricalBundle e = build_q_k(d);
    e.n_bar = build_n_bar(d);
    e.r_bar = build_r_bar(d);
    return e;
}

}  // namespace lbrc
