#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "lbrc/error.hpp"
#include "lbrc/quadrature.hpp"
#include "lbrc/step_function.hpp"

namespace lbrc {

enum class Family { exponential, weibull };

inline std::string to_string(Family f) { return f == Family::exponential ? "exponential" : "weibull"; }

// Population functions consumed by the oracle influence context. Densities
// are with respect to Lebesgue measure.
struct PopulationFunctions {
    std::function<double(double)> s_a;       // survival of the truncation time A
    std::function<double(double)> k;         // K(t) = P(A >= t) + P(V~ >= t)
    std::function<double(double)> q_density; // dQ/dt
    std::function<double(double)> r;         // R(t) = P(A <= t <= Y)
    std::function<double(double)> fu_density;// dF^u/dt
    std::function<double(double)> f;         // distribution of the unbiased survival time
    std::function<double(double)> lambda;    // cumulative hazard of the unbiased survival time
};

// Parametric length-biased right-censored scenario with known population
// functions. T0 is exponential(rate) or Weibull(shape, scale); the residual
// censoring time C is exponential(censor_rate) independent of (A, V), or
// absent.
//
// Length-biased sampling under stationary incidence gives the joint density
// f(t)/mu on 0 < a < t, so (A, V) has density f(a + v)/mu and
//   S_A(t)  = int_t^inf S(u) du / mu
//   R(t)    = S(t) c(t) / mu,          c(t) = int_0^t S_C(u) du
//   dF^u/dt = f(t) c(t) / mu
//   K(t)    = S_A(t) (1 + S_C(t))
class TruthModel {
public:
    static TruthModel exponential(double rate, std::optional<double> censor_rate) {
        TruthModel m;
        m.family_ = Family::exponential;
        m.shape_ = 1.0;
        m.scale_ = 1.0 / rate;
        m.censor_rate_ = censor_rate;
        if (!(rate > 0.0) || !std::isfinite(rate)) throw InputError("exponential rate must be > 0");
        m.check_censoring();
        return m;
    }

    static TruthModel weibull(double shape, double scale, std::optional<double> censor_rate) {
        TruthModel m;
        m.family_ = Family::weibull;
        m.shape_ = shape;
        m.scale_ = scale;
        m.censor_rate_ = censor_rate;
        if (!(shape > 0.0) || !std::isfinite(shape)) throw InputError("weibull shape must be > 0");
        if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("weibull scale must be > 0");
        m.check_censoring();
        return m;
    }

    Family family() const noexcept { return family_; }
    double rate() const noexcept { return 1.0 / scale_; }
    double shape() const noexcept { return shape_; }
    double scale() const noexcept { return scale_; }
    std::optional<double> censor_rate() const noexcept { return censor_rate_; }
    bool censored() const noexcept { return censor_rate_.has_value(); }

    double mu() const { return scale_ * std::tgamma(1.0 + 1.0 / shape_); }
    // P(Y >= A); equals 1 because Y = A + V~ by construction.
    double alpha() const noexcept { return 1.0; }
    double b_h() const noexcept { return std::numeric_limits<double>::infinity(); }

    double cumulative_hazard(double t) const { return t <= 0.0 ? 0.0 : std::pow(t / scale_, shape_); }
    double survival(double t) const { return std::exp(-cumulative_hazard(t)); }
    double distribution(double t) const { return -std::expm1(-cumulative_hazard(t)); }
    double density(double t) const {
        if (t <= 0.0) return 0.0;
        if (family_ == Family::exponential) return rate() * std::exp(-t * rate());
        const double z = t / scale_;
        return shape_ / scale_ * std::pow(z, shape_ - 1.0) * std::exp(-std::pow(z, shape_));
    }

    double censor_survival(double t) const {
        if (!censor_rate_ || t <= 0.0) return 1.0;
        return std::exp(-*censor_rate_ * t);
    }

    // int_0^t S_C(u) du
    double censor_window(double t) const {
        if (t <= 0.0) return 0.0;
        if (!censor_rate_) return t;
        return -std::expm1(-*censor_rate_ * t) / *censor_rate_;
    }

    double s_a(double t) const {
        if (t <= 0.0) return 1.0;
        if (family_ == Family::exponential) return std::exp(-t * rate());
        return boost::math::gamma_q(1.0 / shape_, cumulative_hazard(t));
    }
    double f_a(double t) const { return t <= 0.0 ? 0.0 : survival(t) / mu(); }
    double k1(double t) const { return s_a(t); }
    double k2(double t) const { return s_a(t) * censor_survival(t); }
    double k(double t) const { return s_a(t) * (1.0 + censor_survival(t)); }
    double q_density(double t) const { return t <= 0.0 ? 0.0 : survival(t) * (1.0 + censor_survival(t)) / mu(); }
    double q1(double t) const { return 1.0 - s_a(t); }

    double q2(double t) const {
        if (t <= 0.0) return 0.0;
        if (family_ == Family::exponential) {
            const double total = rate() + censor_rate_.value_or(0.0);
            return rate() / total * -std::expm1(-total * t);
        }
        return integrate_adaptive([this](double u) { return survival(u) * censor_survival(u) / mu(); }, 0.0, t);
    }
    double q(double t) const { return q1(t) + q2(t); }

    double r(double t) const { return t <= 0.0 ? 0.0 : survival(t) * censor_window(t) / mu(); }
    double fu_density(double t) const { return t <= 0.0 ? 0.0 : density(t) * censor_window(t) / mu(); }

    double fu(double t) const {
        if (t <= 0.0) return 0.0;
        if (family_ == Family::exponential) {
            const double lam = rate();
            if (!censor_rate_) return -std::expm1(-lam * t) - lam * t * std::exp(-lam * t);
            const double c = *censor_rate_;
            return lam * lam / c * (-std::expm1(-lam * t) / lam + std::expm1(-(lam + c) * t) / (lam + c));
        }
        return integrate_adaptive([this](double u) { return fu_density(u); }, 0.0, t);
    }

    // P(Delta = 1)
    double event_probability() const {
        if (family_ == Family::exponential) return rate() / (rate() + censor_rate_.value_or(0.0));
        return integrate_adaptive([this](double u) { return fu_density(u); }, 0.0,
                                  std::numeric_limits<double>::infinity());
    }

    // Distribution of Y = A + V~. P(Y >= t) = R(t) + S_A(t).
    double h(double t) const { return t <= 0.0 ? 0.0 : 1.0 - r(t) - s_a(t); }

    double quantile_f(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw InputError("quantile level must lie in (0, 1)");
        return scale_ * std::pow(-std::log1p(-p), 1.0 / shape_);
    }

    double quantile_h(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw InputError("quantile level must lie in (0, 1)");
        double hi = quantile_f(p);
        while (h(hi) < p) hi *= 2.0;
        std::uintmax_t iters = 200;
        const auto root = boost::math::tools::toms748_solve([&](double t) { return h(t) - p; }, 0.0, hi,
                                                            boost::math::tools::eps_tolerance<double>(50), iters);
        return 0.5 * (root.first + root.second);
    }

    PopulationFunctions population() const {
        PopulationFunctions pf;
        pf.s_a = [m = *this](double t) { return m.s_a(t); };
        pf.k = [m = *this](double t) { return m.k(t); };
        pf.q_density = [m = *this](double t) { return m.q_density(t); };
        pf.r = [m = *this](double t) { return m.r(t); };
        pf.fu_density = [m = *this](double t) { return m.fu_density(t); };
        pf.f = [m = *this](double t) { return m.distribution(t); };
        pf.lambda = [m = *this](double t) { return m.cumulative_hazard(t); };
        return pf;
    }

    // `count` points at equally spaced F-quantile levels in [p_low, p_high];
    // the window is [F^-1(p_low), F^-1(p_high)].
    EvalGrid quantile_grid(std::size_t count = 25, double p_low = 0.1, double p_high = 0.9) const {
        if (count == 0) throw InputError("grid needs at least one point");
        std::vector<double> pts(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double p = count == 1 ? p_high
                                        : p_low + (p_high - p_low) * static_cast<double>(i) /
                                                      static_cast<double>(count - 1);
            pts[i] = quantile_f(p);
        }
        const double lo = pts.front();
        const double hi = pts.back();
        return EvalGrid::make(std::move(pts), lo, hi);
    }

private:
    void check_censoring() const {
        if (censor_rate_ && (!(*censor_rate_ > 0.0) || !std::isfinite(*censor_rate_)))
            throw InputError("censor rate must be > 0 (use none for no censoring)");
    }

    Family family_ = Family::exponential;
    double shape_ = 1.0;
    double scale_ = 1.0;
    std::optional<double> censor_rate_;
};

}  // namespace lbrc
