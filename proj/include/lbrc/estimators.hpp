#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lbrc/dataset.hpp"
#include "lbrc/empirical.hpp"
#include "lbrc/step_function.hpp"

namespace lbrc {

// Every fitted curve for one dataset.
struct EstimatorBundle {
    EmpiricalBundle empirical;
    StepFunction s_a_tilde;       // pooled Kaplan-Meier survival of the truncation time
    TwoSidedStep r_tilde;         // pooled risk estimate  #{y >= t}/n - s_a_tilde(t)
    StepFunction lambda_hat;      // classical cumulative hazard, risk set r_bar
    StepFunction lambda_tilde;    // cumulative hazard with risk set r_tilde
    StepFunction lambda_a_tilde;  // cumulative hazard of the truncation time
    StepFunction f_tjw;           // Tsai-Jewell-Wang product-limit distribution
    StepFunction f_tilde;         // product-limit distribution from lambda_tilde
    StepFunction f_bar;           // safeguarded variant, factors 1 - 1/(n r_tilde + 1)
};

namespace detail {

inline double count_of(double proportion, std::size_t n) {
    return std::round(proportion * static_cast<double>(n));
}

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

// Sorted distinct event times with their multiplicities.
struct EventTimes {
    std::vector<double> times;
    std::vector<int> counts;
};

inline EventTimes distinct_events(const Dataset& d) {
    std::vector<double> ys;
    for (const auto& o : d)
        if (o.delta == 1) ys.push_back(o.y);
    std::sort(ys.begin(), ys.end());
    EventTimes ev;
    for (std::size_t i = 0; i < ys.size();) {
        const double t = ys[i];
        int c = 0;
        for (; i < ys.size() && ys[i] == t; ++i) ++c;
        ev.times.push_back(t);
        ev.counts.push_back(c);
    }
    return ev;
}

inline StepFunction distribution_from_survival_factors(const std::vector<double>& times,
                                                       const std::vector<double>& factors) {
    std::vector<double> values(times.size());
    double s = 1.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        s *= clamp_unit(factors[i]);
        values[i] = 1.0 - s;
    }
    return StepFunction(0.0, times, std::move(values));
}

}  // namespace detail

// Kaplan-Meier estimator of S_A from the pooled sample {a_i} u {v_i}: every
// a_i is an event, v_i is an event iff delta_i = 1. Factor 1 - dQ(u)/K(u)
// at each jump of Q, with 0/0 = 0.
inline StepFunction estimate_s_a_tilde(const EmpiricalBundle& e) {
    const auto& times = e.q_tilde.jump_times();
    std::vector<double> values(times.size());
    double s = 1.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double u = times[i];
        const double events = detail::count_of(e.q_tilde.jump_at(u), e.n);
        const double at_risk = detail::count_of(e.k_tilde(u), e.n);
        if (at_risk > 0.0) s *= 1.0 - events / at_risk;
        values[i] = detail::clamp_unit(s);
    }
    return StepFunction(1.0, times, std::move(values));
}

// Cumulative hazard of A: sum of dQ(u)/K(u).
inline StepFunction estimate_lambda_a_tilde(const EmpiricalBundle& e) {
    const auto& times = e.q_tilde.jump_times();
    std::vector<double> values(times.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double u = times[i];
        const double events = detail::count_of(e.q_tilde.jump_at(u), e.n);
        const double at_risk = detail::count_of(e.k_tilde(u), e.n);
        if (at_risk > 0.0) acc += events / at_risk;
        values[i] = acc;
    }
    return StepFunction(0.0, times, std::move(values));
}

// R~(t) = n^-1 #{y_j >= t} - S~_A(t). May be negative in finite samples.
inline TwoSidedStep estimate_r_tilde(const Dataset& d, const StepFunction& s_a) {
    std::vector<double> ys;
    for (const auto& o : d) ys.push_back(o.y);
    return TwoSidedStep(s_a.negated(), detail::count_above(std::move(ys), static_cast<double>(d.n())));
}

namespace detail {

template <class Risk>
StepFunction integrate_events_over_risk(const StepFunction& n_bar, const Risk& risk, std::size_t n) {
    const double floor = 1.0 / static_cast<double>(n);
    const auto& times = n_bar.jump_times();
    std::vector<double> values(times.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double u = times[i];
        acc += n_bar.jump_at(u) / std::max(risk(u), floor);
        values[i] = acc;
    }
    return StepFunction(0.0, times, std::move(values));
}

}  // namespace detail

// Integral of dN(u) / max(R~(u), 1/n) over [0, t].
inline StepFunction estimate_lambda_tilde(const EmpiricalBundle& e, const TwoSidedStep& r_tilde) {
    return detail::integrate_events_over_risk(e.n_bar, r_tilde, e.n);
}

// Integral of dN(u) / max(R(u), 1/n) over [0, t].
inline StepFunction estimate_lambda_hat(const EmpiricalBundle& e) {
    return detail::integrate_events_over_risk(e.n_bar, e.r_bar, e.n);
}

// F(t) = 1 - prod_{u <= t} (1 - dLambda(u)), factors clamped to [0, 1].
inline StepFunction product_limit_from_hazard(const StepFunction& lambda) {
    const auto& times = lambda.jump_times();
    std::vector<double> factors(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) factors[i] = 1.0 - lambda.jump_at(times[i]);
    return detail::distribution_from_survival_factors(times, factors);
}

// Tsai-Jewell-Wang estimator: 1 - F(x) = prod_{y_i <= x} [1 - 1/(n R(y_i))]^delta_i.
// Reduces to Lynden-Bell without censoring and to Kaplan-Meier when every
// a_i precedes all y_j.
inline StepFunction estimate_tjw(const Dataset& d) {
    std::vector<double> as;
    std::vector<double> ys;
    for (const auto& o : d) {
        as.push_back(o.a);
        ys.push_back(o.y);
    }
    std::sort(as.begin(), as.end());
    std::sort(ys.begin(), ys.end());
    const auto ev = detail::distinct_events(d);
    std::vector<double> factors(ev.times.size());
    for (std::size_t i = 0; i < ev.times.size(); ++i) {
        const double u = ev.times[i];
        const auto entered = std::upper_bound(as.begin(), as.end(), u) - as.begin();
        const auto exited = std::lower_bound(ys.begin(), ys.end(), u) - ys.begin();
        const double at_risk = static_cast<double>(entered - exited);
        const double f = 1.0 - 1.0 / at_risk;
        double prod = 1.0;
        for (int k = 0; k < ev.counts[i]; ++k) prod *= f;
        factors[i] = prod;
    }
    return detail::distribution_from_survival_factors(ev.times, factors);
}

// 1 - F~(t) = prod_{u <= t} {1 - dN(u) / max(R~(u), 1/n)}; same curve as
// product_limit_from_hazard(estimate_lambda_tilde(...)) computed directly.
inline StepFunction estimate_f_tilde(const Dataset& d, const TwoSidedStep& r_tilde) {
    const double n = static_cast<double>(d.n());
    const auto ev = detail::distinct_events(d);
    std::vector<double> factors(ev.times.size());
    for (std::size_t i = 0; i < ev.times.size(); ++i) {
        const double risk = std::max(r_tilde(ev.times[i]), 1.0 / n);
        factors[i] = 1.0 - (ev.counts[i] / n) / risk;
    }
    return detail::distribution_from_survival_factors(ev.times, factors);
}

// 1 - F_bar(x) = prod_{y_i <= x} [1 - 1/(n R~(y_i) + 1)]^delta_i, with
// n R~ floored at 0 so the denominator stays >= 1.
inline StepFunction estimate_f_bar(const Dataset& d, const TwoSidedStep& r_tilde) {
    const double n = static_cast<double>(d.n());
    const auto ev = detail::distinct_events(d);
    std::vector<double> factors(ev.times.size());
    for (std::size_t i = 0; i < ev.times.size(); ++i) {
        const double scaled_risk = std::max(n * r_tilde(ev.times[i]), 0.0);
        const double f = 1.0 - 1.0 / (scaled_risk + 1.0);
        double prod = 1.0;
        for (int k = 0; k < ev.counts[i]; ++k) prod *= f;
        factors[i] = prod;
    }
    return detail::distribution_from_survival_factors(ev.times, factors);
}

inline EstimatorBundle fit(const Dataset& d) {
    EstimatorBundle b;
    b.empirical = build_empirical(d);
    b.s_a_tilde = estimate_s_a_tilde(b.empirical);
    b.lambda_a_tilde = estimate_lambda_a_tilde(b.empirical);
    b.r_tilde = estimate_r_tilde(d, b.s_a_tilde);
    b.lambda_hat = estimate_lambda_hat(b.empirical);
    b.lambda_tilde = estimate_lambda_tilde(b.empirical, b.r_tilde);
    b.f_tjw = estimate_tjw(d);
    b.f_tilde = product_limit_from_hazard(b.lambda_tilde);
    b.f_bar = estimate_f_bar(d, b.r_tilde);
    return b;
}

}  // namespace lbrc
