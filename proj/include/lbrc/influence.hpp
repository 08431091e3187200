#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbrc/dataset.hpp"
#include "lbrc/estimators.hpp"
#include "lbrc/quadrature.hpp"
#include "lbrc/step_function.hpp"
#include "lbrc/truth.hpp"

namespace lbrc {

enum class ContextMode { oracle, plugin };

// Cumulative integrals against the event measure dF^u weighted by
// w = R^-2, over [0, x) or [0, x]:
//   w     int w dF^u
//   ws    int w S_A dF^u
//   wsj   int w S_A J dF^u
//   head  int w (1 - S_A (1 + 2 J)) dF^u
// with J(x) = int_[0,x] K^-2 dQ. Only differences are meaningful for w and
// ws in oracle mode (they may diverge at 0); head is anchored at 0.
struct EventMoments {
    double w = 0.0;
    double ws = 0.0;
    double wsj = 0.0;
    double head = 0.0;
};

// Population (oracle) or estimated (plugin) versions of S_A, K, Q, R, F^u
// and F used by the influence functions. Immutable after construction.
class InfluenceContext {
public:
    virtual ~InfluenceContext() = default;

    virtual ContextMode mode() const = 0;
    virtual double s_a(double t) const = 0;
    virtual double k(double t) const = 0;
    virtual double r(double t) const = 0;
    virtual double distribution(double t) const = 0;
    virtual double cumulative_hazard(double t) const = 0;
    // J(x) = int_[0,x] K^-2 dQ
    virtual double pooled_weight(double x) const = 0;
    virtual EventMoments moments(double x, bool inclusive) const = 0;
    // int_[lo,hi] g dF^u
    virtual double integrate_events(const std::function<double(double)>& g, double lo, double hi) const = 0;
    // Largest t the context can be evaluated at.
    virtual double upper_limit() const = 0;
};

// Population functions with tabulated antiderivatives on (0, hi].
class OracleContext final : public InfluenceContext {
public:
    OracleContext(PopulationFunctions pf, double hi) : pf_(std::move(pf)), hi_(hi) {
        const auto w = [this](double u) {
            const double r = pf_.r(u);
            return r > 0.0 ? pf_.fu_density(u) / r / r : 0.0;
        };
        j_ = CumulativeIntegral(
            [this](double u) {
                const double k = pf_.k(u);
                return pf_.q_density(u) / (k * k);
            },
            hi);
        w_ = CumulativeIntegral(w, hi);
        ws_ = CumulativeIntegral([&](double u) { return w(u) * pf_.s_a(u); }, hi);
        wsj_ = CumulativeIntegral([&](double u) { return w(u) * pf_.s_a(u) * j_(u); }, hi);
        head_ = CumulativeIntegral(
            [&](double u) { return w(u) * (1.0 - pf_.s_a(u) * (1.0 + 2.0 * j_(u))); }, hi);
    }

    OracleContext(const TruthModel& m, double hi) : OracleContext(m.population(), hi) {}

    ContextMode mode() const override { return ContextMode::oracle; }
    double s_a(double t) const override { return pf_.s_a(t); }
    double k(double t) const override { return pf_.k(t); }
    double r(double t) const override { return pf_.r(t); }
    double distribution(double t) const override { return pf_.f(t); }
    double cumulative_hazard(double t) const override { return pf_.lambda(t); }
    double pooled_weight(double x) const override { return j_(x); }

    EventMoments moments(double x, bool) const override { return {w_(x), ws_(x), wsj_(x), head_(x)}; }

    double integrate_events(const std::function<double(double)>& g, double lo, double hi) const override {
        return integrate_adaptive([&](double u) { return g(u) * pf_.fu_density(u); }, lo, hi, 1e-11);
    }

    double upper_limit() const override { return hi_; }
    const PopulationFunctions& population() const noexcept { return pf_; }

private:
    PopulationFunctions pf_;
    double hi_;
    CumulativeIntegral j_;
    CumulativeIntegral w_;
    CumulativeIntegral ws_;
    CumulativeIntegral wsj_;
    CumulativeIntegral head_;
};

// Estimated context: (S~_A, K~, Q~, max(R~, 1/n), N, F~_n) replace the
// population functions. Every integral is a finite sum.
class PluginContext final : public InfluenceContext {
public:
    explicit PluginContext(const Dataset& d) : PluginContext(d, fit(d)) {}

    PluginContext(const Dataset& d, EstimatorBundle bundle) : b_(std::move(bundle)), n_(static_cast<double>(d.n())) {
        // J~(x) = sum over jumps s <= x of dQ~(s) / K~(s)^2
        const auto& qt = b_.empirical.q_tilde.jump_times();
        std::vector<double> jv(qt.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < qt.size(); ++i) {
            const double k = b_.empirical.k_tilde(qt[i]);
            if (k > 0.0) acc += b_.empirical.q_tilde.jump_at(qt[i]) / (k * k);
            jv[i] = acc;
        }
        j_ = StepFunction(0.0, qt, std::move(jv));

        const auto& et = b_.empirical.n_bar.jump_times();
        times_ = et;
        prefix_.assign(et.size() + 1, EventMoments{});
        for (std::size_t i = 0; i < et.size(); ++i) {
            const double u = et[i];
            const double rr = r(u);
            const double w = b_.empirical.n_bar.jump_at(u) / (rr * rr);
            const double s = b_.s_a_tilde(u);
            const double j = j_(u);
            prefix_[i + 1] = {prefix_[i].w + w, prefix_[i].ws + w * s, prefix_[i].wsj + w * s * j,
                              prefix_[i].head + w * (1.0 - s * (1.0 + 2.0 * j))};
        }
    }

    ContextMode mode() const override { return ContextMode::plugin; }
    double s_a(double t) const override { return b_.s_a_tilde(t); }
    double k(double t) const override { return b_.empirical.k_tilde(t); }
    double r(double t) const override { return std::max(b_.r_tilde(t), 1.0 / n_); }
    double distribution(double t) const override { return b_.f_tilde(t); }
    double cumulative_hazard(double t) const override { return b_.lambda_tilde(t); }
    double pooled_weight(double x) const override { return j_(x); }

    EventMoments moments(double x, bool inclusive) const override {
        const auto it = inclusive ? std::upper_bound(times_.begin(), times_.end(), x)
                                  : std::lower_bound(times_.begin(), times_.end(), x);
        return prefix_[static_cast<std::size_t>(it - times_.begin())];
    }

    double integrate_events(const std::function<double(double)>& g, double lo, double hi) const override {
        double acc = 0.0;
        for (double u : times_)
            if (u >= lo && u <= hi) acc += b_.empirical.n_bar.jump_at(u) * g(u);
        return acc;
    }

    double upper_limit() const override { return std::numeric_limits<double>::infinity(); }
    const EstimatorBundle& bundle() const noexcept { return b_; }

private:
    EstimatorBundle b_;
    double n_;
    StepFunction j_;
    std::vector<double> times_;
    std::vector<EventMoments> prefix_;
};

// Context-dependent quantities at one evaluation point t, shared by all
// subjects.
struct PointTerms {
    double t = 0.0;
    double j = 0.0;
    EventMoments at;  // inclusive of t
};

inline PointTerms point_terms(const InfluenceContext& ctx, double t) {
    if (t > ctx.upper_limit())
        throw InputError("evaluation point " + std::to_string(t) + " beyond context range " +
                         std::to_string(ctx.upper_limit()));
    return {t, ctx.pooled_weight(t), ctx.moments(t, true)};
}

// Per-subject influence functions
//
//   phi(t)  = int_0^t K^-2 {I(a >= u) + I(v >= u)} dQ - I(a <= t)/K(a) - delta I(v <= t)/K(v)
//   psi1(t) = int_0^t R^-2 I(a <= u <= y) dF^u - delta I(y <= t)/R(y)
//   psi2(t) = int_0^t R^-2 {I(a > u) - S_A(u) - S_A(u) phi(u)} dF^u
//
// evaluated in O(1) per t from cached moments. On each stretch between a
// and v the bracket of psi2 has the form beta - S_A(u)(gamma + kappa J(u)),
// so its integral is a combination of the w / ws / wsj moments; below
// min(a, v) it equals 1 - S_A(1 + 2J), the head moment.
class SubjectTerms {
public:
    SubjectTerms(const LbrcObservation& o, const InfluenceContext& ctx) : obs_(o) {
        const double hi = ctx.upper_limit();
        const auto clip = [hi](double x) { return std::min(x, hi); };
        j_a_ = ctx.pooled_weight(clip(o.a));
        j_v_ = ctx.pooled_weight(clip(o.v));
        inv_k_a_ = inverse_or_zero(1.0, ctx.k(o.a));
        inv_k_v_ = inverse_or_zero(o.delta, ctx.k(o.v));
        inv_r_y_ = inverse_or_zero(o.delta, ctx.r(o.y));
        m_a_ = ctx.moments(clip(o.a), false);
        m_v_ = ctx.moments(clip(o.v), false);
        m_y_ = ctx.moments(clip(o.y), true);
    }

    double phi(const PointTerms& p) const {
        const double t = p.t;
        double val = (obs_.a <= t ? j_a_ : p.j) + (obs_.v <= t ? j_v_ : p.j);
        if (obs_.a <= t) val -= inv_k_a_;
        if (obs_.v <= t) val -= inv_k_v_;
        return checked(val, "phi");
    }

    double psi1(const PointTerms& p) const {
        const double t = p.t;
        double val = 0.0;
        if (obs_.a <= t) val += (obs_.y <= t ? m_y_.w : p.at.w) - m_a_.w;
        if (obs_.y <= t) val -= inv_r_y_;
        return checked(val, "psi1");
    }

    double psi2(const PointTerms& p) const {
        const double t = p.t;
        const bool a_first = obs_.a <= obs_.v;
        const double m = a_first ? obs_.a : obs_.v;
        const double big = a_first ? obs_.v : obs_.a;
        const EventMoments& mm = a_first ? m_a_ : m_v_;
        const EventMoments& mb = a_first ? m_v_ : m_a_;
        if (t < m) return checked(p.at.head, "psi2");

        double val = mm.head;
        // [m, big): one of the two indicators has switched
        const double beta = a_first ? 0.0 : 1.0;
        const double gamma = a_first ? 1.0 + j_a_ - inv_k_a_ : 1.0 + j_v_ - inv_k_v_;
        const EventMoments& mid_end = t < big ? p.at : mb;
        val += segment(mm, mid_end, beta, gamma, 1.0);
        if (t >= big) {
            // [big, t]: phi frozen
            const double gamma_tail = 1.0 + j_a_ + j_v_ - inv_k_a_ - inv_k_v_;
            val += segment(mb, p.at, 0.0, gamma_tail, 0.0);
        }
        return checked(val, "psi2");
    }

private:
    static double segment(const EventMoments& from, const EventMoments& to, double beta, double gamma,
                          double kappa) {
        return beta * (to.w - from.w) - gamma * (to.ws - from.ws) - kappa * (to.wsj - from.wsj);
    }

    static double inverse_or_zero(double num, double den) {
        if (num == 0.0) return 0.0;
        return num / den;
    }

    static double checked(double v, const char* what) {
        if (!std::isfinite(v))
            throw ComputeError(std::string(what) + ": non-finite value (risk or pooled-risk function vanishes "
                                                   "where it is needed)");
        return v;
    }

    LbrcObservation obs_;
    double j_a_ = 0.0;
    double j_v_ = 0.0;
    double inv_k_a_ = 0.0;
    double inv_k_v_ = 0.0;
    double inv_r_y_ = 0.0;
    EventMoments m_a_;
    EventMoments m_v_;
    EventMoments m_y_;
};

inline double phi_i(const LbrcObservation& o, double t, const InfluenceContext& ctx) {
    return SubjectTerms(o, ctx).phi(point_terms(ctx, t));
}

inline double psi_1i(const LbrcObservation& o, double t, const InfluenceContext& ctx) {
    return SubjectTerms(o, ctx).psi1(point_terms(ctx, t));
}

inline double psi_2i(const LbrcObservation& o, double t, const InfluenceContext& ctx) {
    return SubjectTerms(o, ctx).psi2(point_terms(ctx, t));
}

// Sample means n^-1 sum_i of phi, psi1, psi2 on a grid.
struct InfluenceMeans {
    std::vector<double> phi;
    std::vector<double> psi1;
    std::vector<double> psi2;
};

// Subject-by-subject route: O(n) per grid point.
inline InfluenceMeans influence_means_by_subject(const Dataset& d, const InfluenceContext& ctx,
                                                 std::span<const double> ts) {
    std::vector<PointTerms> pts;
    for (double t : ts) pts.push_back(point_terms(ctx, t));
    InfluenceMeans out{std::vector<double>(ts.size()), std::vector<double>(ts.size()),
                       std::vector<double>(ts.size())};
    for (const auto& o : d) {
        const SubjectTerms s(o, ctx);
        for (std::size_t g = 0; g < pts.size(); ++g) {
            out.phi[g] += s.phi(pts[g]);
            out.psi1[g] += s.psi1(pts[g]);
            out.psi2[g] += s.psi2(pts[g]);
        }
    }
    const double n = static_cast<double>(d.n());
    for (std::size_t g = 0; g < pts.size(); ++g) {
        out.phi[g] /= n;
        out.psi1[g] /= n;
        out.psi2[g] /= n;
    }
    return out;
}

// Aggregated route for oracle contexts, through the identities
//   n^-1 sum phi(t)  = int_0^t K~/K^2 dQ - int_0^t K^-1 dQ~
//   n^-1 sum psi1(t) = int_0^t R_bar/R^2 dF^u - int_0^t R^-1 dN
//   n^-1 sum psi2(t) = int_0^t R^-2 {S^_A - S_A - S_A n^-1 sum phi} dF^u
// where S^_A(u) = n^-1 #{a_i > u}. Integrands are piecewise smooth between
// the pooled points {a_i} u {v_i}, so the integrals reduce to moment
// differences. O(n log n + grid).
inline InfluenceMeans influence_means(const Dataset& d, const InfluenceContext& ctx, std::span<const double> ts) {
    if (ctx.mode() != ContextMode::oracle)
        throw InputError("aggregated influence means require an oracle context");
    const double n = static_cast<double>(d.n());
    const double hi = ctx.upper_limit();
    std::vector<double> grid(ts.begin(), ts.end());
    if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("grid must be sorted");
    for (double t : grid)
        if (t > hi) throw InputError("evaluation point beyond context range");

    struct Pooled {
        double x;
        int is_a;
        int delta;
    };
    std::vector<Pooled> pooled;
    pooled.reserve(2 * d.n());
    for (const auto& o : d) {
        pooled.push_back({o.a, 1, 1});
        pooled.push_back({o.v, 0, o.delta});
    }
    std::sort(pooled.begin(), pooled.end(), [](const Pooled& x, const Pooled& y) { return x.x < y.x; });

    InfluenceMeans out{std::vector<double>(grid.size()), std::vector<double>(grid.size()),
                       std::vector<double>(grid.size())};

    // phi and psi2: walk the pooled pieces.
    {
        double a_above = n;       // #{a > u} on the current piece
        double pooled_above = 2 * n;
        double integral_part = 0.0;  // int_0^{p} K~/K^2 dQ at the piece start p
        double jump_part = 0.0;      // n^-1 sum of jump terms at or before p
        double psi2_acc = 0.0;       // psi2 mean integral up to p
        double p = 0.0;
        double j_p = 0.0;
        EventMoments m_p{};
        bool at_origin = true;
        std::size_t idx = 0;
        std::size_t g = 0;

        const auto piece_value = [&](double j_end, const EventMoments& m_end, double& phi_val, double& psi2_val) {
            const double ktil = pooled_above / n;
            phi_val = integral_part + ktil * (j_end - j_p) - jump_part;
            if (at_origin) {
                psi2_val = m_end.head;
            } else {
                const double beta = a_above / n;
                const double gamma = 1.0 + integral_part - jump_part - ktil * j_p;
                psi2_val = psi2_acc + beta * (m_end.w - m_p.w) - gamma * (m_end.ws - m_p.ws) -
                           ktil * (m_end.wsj - m_p.wsj);
            }
        };

        while (g < grid.size()) {
            const double next = idx < pooled.size() ? pooled[idx].x : std::numeric_limits<double>::infinity();
            if (grid[g] < next) {
                const double t = grid[g];
                double phi_val = 0.0;
                double psi2_val = 0.0;
                piece_value(ctx.pooled_weight(t), ctx.moments(t, true), phi_val, psi2_val);
                out.phi[g] = phi_val;
                out.psi2[g] = psi2_val;
                ++g;
                continue;
            }
            // close the piece at `next`, then absorb every pooled point equal to it
            const double j_next = ctx.pooled_weight(next);
            const EventMoments m_next = ctx.moments(next, false);
            double phi_end = 0.0;
            double psi2_end = 0.0;
            piece_value(j_next, m_next, phi_end, psi2_end);
            integral_part = phi_end + jump_part;
            psi2_acc = psi2_end;
            at_origin = false;
            for (; idx < pooled.size() && pooled[idx].x == next; ++idx) {
                pooled_above -= 1.0;
                if (pooled[idx].is_a) {
                    a_above -= 1.0;
                    jump_part += 1.0 / (n * ctx.k(next));
                } else if (pooled[idx].delta == 1) {
                    jump_part += 1.0 / (n * ctx.k(next));
                }
            }
            p = next;
            j_p = j_next;
            m_p = m_next;
        }
        (void)p;
    }

    // psi1: walk the pieces of R_bar and the event times.
    {
        struct Mark {
            double x;
            int kind;  // 0 = entry a, 1 = exit y
            int delta;
        };
        std::vector<Mark> marks;
        marks.reserve(2 * d.n());
        for (const auto& o : d) {
            marks.push_back({o.a, 0, 0});
            marks.push_back({o.y, 1, o.delta});
        }
        std::sort(marks.begin(), marks.end(), [](const Mark& x, const Mark& y) { return x.x < y.x; });
        double at_risk = 0.0;     // n * R_bar on the open piece after the last mark
        double integral = 0.0;    // int R_bar/R^2 dF^u up to the last mark
        double event_sum = 0.0;   // n^-1 sum delta/R(y) up to the last mark
        double w_p = 0.0;
        bool started = false;
        std::size_t idx = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double t = grid[g];
            while (idx < marks.size() && marks[idx].x <= t) {
                const double x = marks[idx].x;
                const double w_x = ctx.moments(x, false).w;
                if (started) integral += at_risk / n * (w_x - w_p);
                for (; idx < marks.size() && marks[idx].x == x; ++idx) {
                    if (marks[idx].kind == 0) {
                        at_risk += 1.0;
                    } else {
                        at_risk -= 1.0;
                        if (marks[idx].delta == 1) event_sum += 1.0 / (n * ctx.r(x));
                    }
                }
                w_p = w_x;
                started = true;
            }
            double val = integral - event_sum;
            if (started) val += at_risk / n * (ctx.moments(t, true).w - w_p);
            out.psi1[g] = val;
        }
    }
    return out;
}

enum class Representation { rn1, rn2, rn3 };

inline std::string to_string(Representation r) {
    switch (r) {
        case Representation::rn1: return "Rn1";
        case Representation::rn2: return "Rn2";
        case Representation::rn3: return "Rn3";
    }
    return "?";
}

// Remainder of an i.i.d. representation on a grid.
//
// For Rn2 the expansion is evaluated under both signs of the influence sum:
// `residuals` uses F~ - F = +(1 - F) n^-1 sum psi + R and
// `alternative_residuals` uses F~ - F = -(1 - F) n^-1 sum psi + R.
struct RepresentationReport {
    Representation which = Representation::rn1;
    EvalGrid grid;
    std::vector<double> influence_mean;  // n^-1 sum psi (Rn1, Rn2) or n^-1 sum phi (Rn3)
    std::vector<double> residuals;
    double residual_sup = 0.0;
    std::vector<double> alternative_residuals;
    std::optional<double> alternative_sup;
};

namespace detail {

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline void require_oracle(const InfluenceContext& ctx, const char* what) {
    if (ctx.mode() != ContextMode::oracle)
        throw InputError(std::string(what) + " needs an oracle context (population functions)");
}

}  // namespace detail

inline RepresentationReport residual_rn1(const Dataset& d, const EstimatorBundle& b, const InfluenceContext& ctx,
                                         const EvalGrid& grid) {
    detail::require_oracle(ctx, "residual_rn1");
    const auto means = influence_means(d, ctx, grid.points);
    RepresentationReport rep{Representation::rn1, grid, {}, {}, 0.0, {}, std::nullopt};
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
        const double t = grid.points[g];
        const double psi = means.psi1[g] + means.psi2[g];
        rep.influence_mean.push_back(psi);
        rep.residuals.push_back(b.lambda_tilde(t) - ctx.cumulative_hazard(t) + psi);
    }
    rep.residual_sup = detail::max_abs(rep.residuals);
    return rep;
}

inline RepresentationReport residual_rn2(const Dataset& d, const EstimatorBundle& b, const InfluenceContext& ctx,
                                         const EvalGrid& grid) {
    detail::require_oracle(ctx, "residual_rn2");
    const auto means = influence_means(d, ctx, grid.points);
    RepresentationReport rep{Representation::rn2, grid, {}, {}, 0.0, {}, std::nullopt};
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
        const double t = grid.points[g];
        const double psi = means.psi1[g] + means.psi2[g];
        const double f = ctx.distribution(t);
        const double err = b.f_tilde(t) - f;
        rep.influence_mean.push_back(psi);
        rep.residuals.push_back(err - (1.0 - f) * psi);
        rep.alternative_residuals.push_back(err + (1.0 - f) * psi);
    }
    rep.residual_sup = detail::max_abs(rep.residuals);
    rep.alternative_sup = detail::max_abs(rep.alternative_residuals);
    return rep;
}

inline RepresentationReport residual_rn3(const Dataset& d, const EstimatorBundle& b, const InfluenceContext& ctx,
                                         const EvalGrid& grid) {
    detail::require_oracle(ctx, "residual_rn3");
    const auto means = influence_means(d, ctx, grid.points);
    RepresentationReport rep{Representation::rn3, grid, {}, {}, 0.0, {}, std::nullopt};
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
        const double t = grid.points[g];
        const double sa = ctx.s_a(t);
        rep.influence_mean.push_back(means.phi[g]);
        rep.residuals.push_back(b.s_a_tilde(t) - sa - sa * means.phi[g]);
    }
    rep.residual_sup = detail::max_abs(rep.residuals);
    return rep;
}

inline RepresentationReport residual_rn1(const Dataset& d, const InfluenceContext& ctx, const EvalGrid& grid) {
    return residual_rn1(d, fit(d), ctx, grid);
}
inline RepresentationReport residual_rn2(const Dataset& d, const InfluenceContext& ctx, const EvalGrid& grid) {
    return residual_rn2(d, fit(d), ctx, grid);
}
inline RepresentationReport residual_rn3(const Dataset& d, const InfluenceContext& ctx, const EvalGrid& grid) {
    return residual_rn3(d, fit(d), ctx, grid);
}

// Law-of-the-iterated-logarithm scale on a grid:
//   d(t) = int_{lower}^t R^-2 dF^u,  v(t) = sqrt((1 - F(t)) d(t)),
// plus the variant with (1 - F)^2 in place of (1 - F). A divergent integral
// is reported as +inf.
struct LilQuantities {
    std::vector<double> d;
    std::vector<double> v;
    std::vector<double> v_squared_factor;
};

inline LilQuantities lil_quantities(const InfluenceContext& ctx, const EvalGrid& grid) {
    LilQuantities out;
    const auto inv_r2 = [&ctx](double u) {
        const double r = ctx.r(u);
        return 1.0 / (r * r);
    };
    double acc = 0.0;
    double prev = grid.lower;
    for (double t : grid.points) {
        if (ctx.mode() == ContextMode::plugin) {
            // sums over atoms are closed on both ends, so restart from the window start
            acc = ctx.integrate_events(inv_r2, grid.lower, t);
        } else if (std::isfinite(acc)) {
            try {
                acc += ctx.integrate_events(inv_r2, prev, t);
            } catch (const ComputeError&) {
                acc = std::numeric_limits<double>::infinity();
            }
        }
        prev = t;
        const double surv = 1.0 - ctx.distribution(t);
        out.d.push_back(acc);
        out.v.push_back(std::sqrt(surv * acc));
        out.v_squared_factor.push_back(surv * std::sqrt(acc));
    }
    return out;
}

// Pointwise variance of F~_n(t): n^-1 times the empirical variance of
// (1 - F~_n(t)) psi_i(t), with psi evaluated in a plugin context.
inline std::vector<double> plugin_variance(const Dataset& d, const EvalGrid& grid) {
    const PluginContext ctx(d);
    std::vector<PointTerms> pts;
    for (double t : grid.points) pts.push_back(point_terms(ctx, t));
    const std::size_t m = pts.size();
    std::vector<double> sum(m, 0.0);
    std::vector<double> sum_sq(m, 0.0);
    std::vector<std::vector<double>> vals(m, std::vector<double>(d.n()));
    for (std::size_t i = 0; i < d.n(); ++i) {
        const SubjectTerms s(d[i], ctx);
        for (std::size_t g = 0; g < m; ++g) vals[g][i] = s.psi1(pts[g]) + s.psi2(pts[g]);
    }
    const double n = static_cast<double>(d.n());
    std::vector<double> out(m);
    for (std::size_t g = 0; g < m; ++g) {
        const double surv = 1.0 - ctx.distribution(pts[g].t);
        double mean = 0.0;
        for (double x : vals[g]) mean += surv * x;
        mean /= n;
        double ss = 0.0;
        for (double x : vals[g]) ss += (surv * x - mean) * (surv * x - mean);
        out[g] = ss / n / n;
    }
    return out;
}

inline constexpr double kDefaultAssumption3Cap = 1e4;

class WindowTooWide : public InputError {
public:
    WindowTooWide(double value, double cap)
        : InputError("window too wide: int dF^u/R^3 = " + std::to_string(value) + " exceeds cap " +
                     std::to_string(cap)),
          value_(value) {}
    double value() const noexcept { return value_; }

private:
    double value_;
};

// int_{lower}^b R^-3 dF^u. Throws WindowTooWide when the value exceeds the
// cap or the integral diverges.
inline double assumption3_diagnostic(const InfluenceContext& ctx, double b, double lower = 0.0,
                                     double cap = kDefaultAssumption3Cap) {
    double value = 0.0;
    try {
        value = ctx.integrate_events(
            [&ctx](double u) {
                const double r = ctx.r(u);
                return 1.0 / (r * r * r);
            },
            lower, b);
    } catch (const ComputeError&) {
        value = std::numeric_limits<double>::infinity();
    }
    if (!(value <= cap)) throw WindowTooWide(value, cap);
    return value;
}

}  // namespace lbrc
