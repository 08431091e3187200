#include <random>

#include "catch_amalgamated.hpp"
#include "lbrc/empirical.hpp"
#include "oracles.hpp"

using namespace lbrc;

namespace {
Dataset one(double a, double v, int delta) { return Dataset({LbrcObservation::make(a, v, delta)}); }
}  // namespace

TEST_CASE("n_bar examples") {
    const auto f = build_n_bar(one(1.0, 2.0, 1));
    CHECK(f(2.9) == 0.0);
    CHECK(f(3.0) == 1.0);
    CHECK(build_n_bar(one(1.0, 2.0, 0)).final_value() == 0.0);
    const Dataset two({LbrcObservation::make(1.0, 1.0, 1), LbrcObservation::make(1.0, 3.0, 1)});
    const auto g = build_n_bar(two);
    CHECK(g(2.0) == 0.5);
    CHECK(g(4.0) == 1.0);
}

TEST_CASE("r_bar examples") {
    const auto r = build_r_bar(one(1.0, 2.0, 1));
    CHECK(r(0.5) == 0.0);
    CHECK(r(1.0) == 1.0);
    CHECK(r(3.0) == 1.0);
    CHECK(r(3.1) == 0.0);
    const Dataset two({LbrcObservation::make(1.0, 2.0, 1), LbrcObservation::make(2.0, 3.0, 0)});
    CHECK(build_r_bar(two)(2.5) == 1.0);
    CHECK(build_r_bar(two)(9.0) == 0.0);
}

TEST_CASE("q and k examples") {
    const auto e = build_q_k(one(1.0, 2.0, 1));
    CHECK(e.q_tilde(1.0) == 1.0);
    CHECK(e.q_tilde(2.0) == 2.0);
    CHECK(e.k_tilde(1.0) == 2.0);
    CHECK(e.k_tilde(2.0) == 1.0);
    CHECK(e.k_tilde(2.1) == 0.0);

    const auto c = build_q_k(one(1.0, 2.0, 0));
    CHECK(c.q2_tilde.final_value() == 0.0);
    CHECK(c.k2_tilde(2.0) == 1.0);

    const Dataset two({LbrcObservation::make(1.0, 5.0, 1), LbrcObservation::make(2.0, 6.0, 1)});
    CHECK(build_q_k(two).k_tilde(1.5) == 1.5);
}

TEST_CASE("empirical processes equal direct counting") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 60; ++rep) {
        const auto d = oracle::random_dataset(rng, 1 + rep % 50, rep % 3 == 0);
        const auto e = build_empirical(d);
        for (double t : oracle::probe_points(d)) {
            CHECK(e.n_bar(t) == Catch::Approx(oracle::n_bar(d, t)).margin(1e-15));
            CHECK(e.r_bar(t) == Catch::Approx(oracle::r_bar(d, t)).margin(1e-15));
            CHECK(e.q_tilde(t) == Catch::Approx(oracle::q_tilde(d, t)).margin(1e-15));
            CHECK(e.k_tilde(t) == Catch::Approx(oracle::k_tilde(d, t)).margin(1e-15));
            CHECK(e.q_tilde(t) == Catch::Approx(e.q1_tilde(t) + e.q2_tilde(t)).margin(1e-15));
            CHECK(e.k_tilde(t) == Catch::Approx(e.k1_tilde(t) + e.k2_tilde(t)).margin(1e-15));
        }
    }
}

TEST_CASE("empirical process invariants") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 30; ++rep) {
        const auto d = oracle::random_dataset(rng, 40);
        const auto e = build_empirical(d);
        const double n = static_cast<double>(d.n());
        CHECK(e.n_bar.final_value() == static_cast<double>(d.event_count()) / n);
        CHECK(e.q_tilde.final_value() == Catch::Approx(1.0 + static_cast<double>(d.event_count()) / n));
        CHECK(e.k_tilde(1e-12) == 2.0);
        double prev_q = 0.0;
        double prev_k = 2.0;
        for (double t = 0.0; t < 7.0; t += 0.01) {
            CHECK(e.q_tilde(t) >= prev_q);
            CHECK(e.k_tilde(t) <= prev_k);
            CHECK(e.r_bar(t) >= 0.0);
            CHECK(e.r_bar(t) <= 1.0);
            prev_q = e.q_tilde(t);
            prev_k = e.k_tilde(t);
        }
    }
}
