#include <cmath>
#include <set>

#include "catch_amalgamated.hpp"
#include "lbrc/simulation.hpp"

using namespace lbrc;

namespace {
const TruthModel kModel = TruthModel::exponential(1.0, 0.5);

// Asymptotic Kolmogorov tail P(sqrt(n) D > x).
double kolmogorov_tail(double x) {
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
    return s;
}
}  // namespace

TEST_CASE("sampling is deterministic in the seed") {
    CHECK(sample_lbrc(kModel, 500, 42) == sample_lbrc(kModel, 500, 42));
    CHECK_FALSE(sample_lbrc(kModel, 500, 42) == sample_lbrc(kModel, 500, 43));
    CHECK_THROWS_AS(sample_lbrc(kModel, 0, 1), InputError);
}

TEST_CASE("sampled observations respect the sampling structure") {
    for (const auto& m : {kModel, TruthModel::weibull(1.5, 2.0, 0.3)}) {
        const auto s = sample_lbrc_with_latent(m, 2000, 5);
        for (std::size_t i = 0; i < s.data.n(); ++i) {
            const auto& o = s.data[i];
            CHECK(o.a > 0.0);
            CHECK(o.a < o.y);
            CHECK(o.a < s.latent_t[i]);
            CHECK(o.y <= s.latent_t[i] * (1.0 + 1e-15));
            if (o.delta == 1) CHECK(std::abs(o.y - s.latent_t[i]) <= 1e-14 * s.latent_t[i]);
        }
    }
}

TEST_CASE("without censoring every subject is an event observed at T") {
    const auto m = TruthModel::exponential(1.0, std::nullopt);
    const auto s = sample_lbrc_with_latent(m, 1000, 3);
    for (std::size_t i = 0; i < s.data.n(); ++i) {
        CHECK(s.data[i].delta == 1);
        CHECK(std::abs(s.data[i].y - s.latent_t[i]) <= 1e-14 * s.latent_t[i]);
    }
}

TEST_CASE("truncation times are exponential under an exponential model") {
    const auto d = sample_lbrc(kModel, 100000, 2024);
    std::vector<double> a;
    for (const auto& o : d) a.push_back(o.a);
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double f = 1.0 - std::exp(-a[i]);
        ks = std::max({ks, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    const double p = kolmogorov_tail(std::sqrt(n) * ks);
    CHECK(p > 0.01);
}

TEST_CASE("censoring fraction matches its integral") {
    for (const auto& m : {kModel, TruthModel::weibull(2.0, 1.0, 0.8)}) {
        const auto d = sample_lbrc(m, 100000, 8);
        const double n = static_cast<double>(d.n());
        const double frac = 1.0 - static_cast<double>(d.event_count()) / n;
        // P(delta = 0) = int f_C(c) P(V > c) dc, P(V > c) = S_A(c)
        const double lc = *m.censor_rate();
        const double p = integrate_adaptive([&](double c) { return lc * std::exp(-lc * c) * m.s_a(c); }, 0.0, INFINITY);
        const double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(frac - p) < 3.0 * se);
    }
}

TEST_CASE("mean of Y matches its integral") {
    const auto d = sample_lbrc(kModel, 100000, 99);
    double s = 0.0;
    double ss = 0.0;
    for (const auto& o : d) {
        s += o.y;
        ss += o.y * o.y;
    }
    const double n = static_cast<double>(d.n());
    const double mean = s / n;
    const double se = std::sqrt((ss / n - mean * mean) / n);
    // E[Y] = int_0^inf P(Y > t) dt = int (R + S_A)
    const double ey = integrate_adaptive([&](double t) { return 1.0 - kModel.h(t); }, 0.0, INFINITY);
    CHECK(std::abs(mean - ey) < 3.0 * se);
}

TEST_CASE("child seeds are distinct") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 5; ++s)
        for (std::uint64_t r = 0; r < 200; ++r) seen.insert(child_seed(7, s, r));
    CHECK(seen.size() == 1000);
}

TEST_CASE("median and slope helpers") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(std::abs(ols_slope({0, 1, 2}, {1, 3, 5}) - 2.0) < 1e-15);
    CHECK(std::abs(log_log_slope({10, 100, 1000}, {1.0, 0.1, 0.01}) + 1.0) < 1e-12);
}

TEST_CASE("rate experiment preconditions") {
    const auto grid = kModel.quantile_grid();
    RateConfig cfg;
    cfg.sizes = {100};
    cfg.reps = 50;
    CHECK_THROWS_WITH(rate_experiment(kModel, cfg, grid), "need ≥ 2 sizes");
    cfg.sizes = {200, 100};
    CHECK_THROWS_AS(rate_experiment(kModel, cfg, grid), InputError);
    cfg.sizes = {100, 200};
    cfg.reps = 10;
    CHECK_THROWS_AS(rate_experiment(kModel, cfg, grid), InputError);
    cfg.reps = 50;
    const auto wide = EvalGrid::make({1.0, kModel.quantile_h(0.99)});
    CHECK_THROWS_AS(rate_experiment(kModel, cfg, wide), InputError);
}

TEST_CASE("rate experiment is reproducible and thread-count independent") {
    const auto grid = kModel.quantile_grid();
    RateConfig cfg;
    cfg.sizes = {100, 200};
    cfg.reps = 50;
    cfg.which = RateTarget::rn2;
    cfg.seed = 11;
    cfg.threads = 1;
    const auto a = rate_experiment(kModel, cfg, grid);
    cfg.threads = 3;
    const auto b = rate_experiment(kModel, cfg, grid);
    CHECK(a.sup_residuals == b.sup_residuals);
    CHECK(a.alternative_sup_residuals == b.alternative_sup_residuals);
    CHECK(a.slope == b.slope);
    CHECK(a.convention == b.convention);
    CHECK(a.alternative_slope.has_value());
    for (const auto& v : a.sup_residuals)
        for (double x : v) CHECK(x >= 0.0);
}

TEST_CASE("every rate target runs") {
    const auto grid = kModel.quantile_grid();
    for (auto w : {RateTarget::rn1, RateTarget::rn3, RateTarget::lemma35, RateTarget::lemma33, RateTarget::lemma37}) {
        RateConfig cfg;
        cfg.sizes = {100, 400};
        cfg.reps = 50;
        cfg.which = w;
        const auto r = rate_experiment(kModel, cfg, grid);
        CHECK(std::isfinite(r.slope));
        CHECK(r.medians.size() == 2);
        CHECK(r.target_exponent == target_exponent(w));
    }
}

TEST_CASE("consistency check") {
    const auto grid = kModel.quantile_grid();
    const auto s1 = consistency_check(kModel, 500, 60, grid, 3);
    const auto s2 = consistency_check(kModel, 1000, 60, grid, 3);
    CHECK(s1.median_sup_f > s2.median_sup_f);
    CHECK(s2.median_sup_f < 0.1);
    CHECK_THROWS_AS(consistency_check(kModel, 500, 0, grid, 3), InputError);
}
