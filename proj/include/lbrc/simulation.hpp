#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "lbrc/dataset.hpp"
#include "lbrc/estimators.hpp"
#include "lbrc/influence.hpp"
#include "lbrc/step_function.hpp"
#include "lbrc/truth.hpp"

namespace lbrc {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform on the open interval (0, 1) from the top 53 bits.
inline double open_uniform(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

// Seed of replication `rep` at size index `size_index`.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t size_index, std::uint64_t rep) {
    return detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ size_index) ^ rep);
}

struct LatentSample {
    Dataset data;
    std::vector<double> latent_t;  // length-biased T behind each row
};

// Draws n subjects: T from the length-biased density t f(t)/mu, A | T
// uniform on (0, T), V = T - A, V~ = min(V, C), delta = I(V <= C).
inline LatentSample sample_lbrc_with_latent(const TruthModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("sample size n must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<LbrcObservation> obs;
    std::vector<double> latent;
    obs.reserve(n);
    latent.reserve(n);
    const double lam = model.rate();
    for (std::size_t i = 0; i < n; ++i) {
        double t = 0.0;
        if (model.family() == Family::exponential) {
            // Gamma(2, rate)
            t = -(std::log(detail::open_uniform(rng)) + std::log(detail::open_uniform(rng))) / lam;
        } else {
            // (T/scale)^k ~ Gamma(1 + 1/k, 1)
            const double g = boost::math::gamma_p_inv(1.0 + 1.0 / model.shape(), detail::open_uniform(rng));
            t = model.scale() * std::pow(g, 1.0 / model.shape());
        }
        const double a = detail::open_uniform(rng) * t;
        const double v = t - a;
        double vt = v;
        int delta = 1;
        if (model.censored()) {
            const double c = -std::log(detail::open_uniform(rng)) / *model.censor_rate();
            if (c < v) {
                vt = c;
                delta = 0;
            }
        }
        obs.push_back(LbrcObservation::make(a, vt, delta));
        latent.push_back(t);
    }
    return {Dataset(std::move(obs)), std::move(latent)};
}

inline Dataset sample_lbrc(const TruthModel& model, std::size_t n, std::uint64_t seed) {
    return sample_lbrc_with_latent(model, n, seed).data;
}

enum class RateTarget { rn1, rn2, rn3, lemma35, lemma33, lemma37 };

inline std::string to_string(RateTarget w) {
    switch (w) {
        case RateTarget::rn1: return "Rn1";
        case RateTarget::rn2: return "Rn2";
        case RateTarget::rn3: return "Rn3";
        case RateTarget::lemma35: return "Lemma35";
        case RateTarget::lemma33: return "Lemma33";
        case RateTarget::lemma37: return "Lemma37";
    }
    return "?";
}

inline RateTarget parse_rate_target(const std::string& s) {
    for (auto w : {RateTarget::rn1, RateTarget::rn2, RateTarget::rn3, RateTarget::lemma35, RateTarget::lemma33,
                   RateTarget::lemma37})
        if (to_string(w) == s) return w;
    throw InputError("unknown target '" + s + "' (expected Rn1, Rn2, Rn3, Lemma35, Lemma33 or Lemma37)");
}

// Nominal exponent of the sup-norm quantity in n (log factors dropped).
inline double target_exponent(RateTarget w) {
    switch (w) {
        case RateTarget::rn1:
        case RateTarget::rn2:
        case RateTarget::rn3: return -0.75;
        case RateTarget::lemma35: return -1.0;
        case RateTarget::lemma33:
        case RateTarget::lemma37: return -0.5;
    }
    return 0.0;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw InputError("median of an empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

// Ordinary least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("slope fit needs >= 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline double log_log_slope(const std::vector<std::size_t>& sizes, const std::vector<double>& medians) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        lx.push_back(std::log(static_cast<double>(sizes[i])));
        ly.push_back(std::log(medians[i]));
    }
    return ols_slope(lx, ly);
}

// Per-size sup-norm samples and the fitted rate.
//
// For Rn2 both sign conventions of the influence term are tracked; `slope`
// and `sup_residuals` refer to the one that decays faster and
// `alternative_*` to the other.
struct RateReport {
    RateTarget which = RateTarget::rn1;
    std::vector<std::size_t> sample_sizes;
    std::vector<std::vector<double>> sup_residuals;
    std::vector<double> medians;
    double slope = 0.0;
    double target_exponent = 0.0;
    std::string convention;  // Rn2 only: "plus" or "minus"
    std::vector<std::vector<double>> alternative_sup_residuals;
    std::vector<double> alternative_medians;
    std::optional<double> alternative_slope;
};

struct RateConfig {
    std::vector<std::size_t> sizes;
    std::size_t reps = 200;
    RateTarget which = RateTarget::rn1;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = hardware concurrency
    double divergence_cap = kDefaultAssumption3Cap;
};

namespace detail {

// Runs task(i) for i in [0, count) on `threads` workers. Results must be
// written to preallocated slots, so the schedule never affects output. The
// exception of the lowest failing index is rethrown.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::size_t first_index = count;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < first_index) {
                    first_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

inline void check_window(const TruthModel& model, const EvalGrid& grid, const InfluenceContext& ctx, double cap) {
    const double b_max = model.quantile_h(0.95);
    if (grid.b > b_max)
        throw InputError("window too wide: b = " + std::to_string(grid.b) +
                         " exceeds the 95th percentile of H (" + std::to_string(b_max) + ")");
    assumption3_diagnostic(ctx, grid.b, grid.lower, cap);
}

}  // namespace detail

inline RateReport rate_experiment(const TruthModel& model, const RateConfig& cfg, const EvalGrid& grid) {
    if (cfg.sizes.size() < 2) throw InputError("need ≥ 2 sizes");
    for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
        if (cfg.sizes[i] < 2) throw InputError("sizes must be >= 2");
        if (i > 0 && cfg.sizes[i] <= cfg.sizes[i - 1]) throw InputError("sizes must be strictly increasing");
    }
    if (cfg.reps < 50) throw InputError("reps must be >= 50");

    const OracleContext ctx(model, grid.b);
    detail::check_window(model, grid, ctx, cfg.divergence_cap);

    const std::size_t n_sizes = cfg.sizes.size();
    const bool two_sided = cfg.which == RateTarget::rn2;
    std::vector<std::vector<double>> sups(n_sizes, std::vector<double>(cfg.reps));
    std::vector<std::vector<double>> alt(two_sided ? n_sizes : 0, std::vector<double>(cfg.reps));

    const auto task = [&](std::size_t job) {
        const std::size_t si = job / cfg.reps;
        const std::size_t rep = job % cfg.reps;
        const std::uint64_t s = child_seed(cfg.seed, si, rep);
        const Dataset d = sample_lbrc(model, cfg.sizes[si], s);
        const EstimatorBundle b = fit(d);
        double value = 0.0;
        double alt_value = 0.0;
        switch (cfg.which) {
            case RateTarget::rn1: value = residual_rn1(d, b, ctx, grid).residual_sup; break;
            case RateTarget::rn2: {
                const auto rep2 = residual_rn2(d, b, ctx, grid);
                value = rep2.residual_sup;
                alt_value = *rep2.alternative_sup;
                break;
            }
            case RateTarget::rn3: value = residual_rn3(d, b, ctx, grid).residual_sup; break;
            case RateTarget::lemma35: value = sup_norm_diff(b.f_bar, b.f_tilde, grid); break;
            case RateTarget::lemma33:
                value = sup_norm_diff(b.lambda_a_tilde, [&](double t) { return -std::log(model.s_a(t)); }, grid);
                break;
            case RateTarget::lemma37:
                value = sup_norm_diff(b.lambda_tilde, [&](double t) { return model.cumulative_hazard(t); }, grid);
                break;
        }
        if (!std::isfinite(value) || !std::isfinite(alt_value))
            throw NonFiniteResidual("non-finite " + to_string(cfg.which) + " at n = " +
                                        std::to_string(cfg.sizes[si]) + ", rep " + std::to_string(rep),
                                    s);
        sups[si][rep] = value;
        if (two_sided) alt[si][rep] = alt_value;
    };
    detail::parallel_for(n_sizes * cfg.reps, cfg.threads, task);

    RateReport rep;
    rep.which = cfg.which;
    rep.sample_sizes = cfg.sizes;
    rep.target_exponent = target_exponent(cfg.which);
    for (const auto& v : sups) rep.medians.push_back(median(v));
    rep.slope = log_log_slope(rep.sample_sizes, rep.medians);
    rep.sup_residuals = std::move(sups);
    if (two_sided) {
        std::vector<double> alt_medians;
        for (const auto& v : alt) alt_medians.push_back(median(v));
        double alt_slope = log_log_slope(rep.sample_sizes, alt_medians);
        rep.convention = "plus";
        if (alt_slope < rep.slope) {
            std::swap(rep.slope, alt_slope);
            std::swap(rep.medians, alt_medians);
            std::swap(rep.sup_residuals, alt);
            rep.convention = "minus";
        }
        rep.alternative_slope = alt_slope;
        rep.alternative_medians = std::move(alt_medians);
        rep.alternative_sup_residuals = std::move(alt);
    }
    return rep;
}

struct ConsistencySummary {
    double median_sup_f = 0.0;       // median of sup |F~ - F|
    double median_sup_lambda = 0.0;  // median of sup |Lambda~ - Lambda|
};

inline ConsistencySummary consistency_check(const TruthModel& model, std::size_t n, std::size_t reps,
                                            const EvalGrid& grid, std::uint64_t seed, unsigned threads = 0) {
    if (n < 2) throw InputError("n must be >= 2");
    if (reps == 0) throw InputError("reps must be >= 1");
    std::vector<double> sup_f(reps);
    std::vector<double> sup_l(reps);
    detail::parallel_for(reps, threads, [&](std::size_t rep) {
        const Dataset d = sample_lbrc(model, n, child_seed(seed, 0, rep));
        const EstimatorBundle b = fit(d);
        sup_f[rep] = sup_norm_diff(b.f_tilde, [&](double t) { return model.distribution(t); }, grid);
        sup_l[rep] = sup_norm_diff(b.lambda_tilde, [&](double t) { return model.cumulative_hazard(t); }, grid);
    });
    return {median(sup_f), median(sup_l)};
}

}  // namespace lbrc
