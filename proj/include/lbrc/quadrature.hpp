#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lbrc/error.hpp"

namespace lbrc {

// Adaptive Gauss-Kronrod integral of g over [a, b] (b may be +inf).
// Throws ComputeError when the error estimate misses the tolerance by a wide
// margin, which in practice signals a non-integrable singularity.
template <class Fn>
double integrate_adaptive(Fn&& g, double a, double b, double tol = 1e-11, unsigned max_depth = 20) {
    if (!(b > a)) return 0.0;
    double err = 0.0;
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, max_depth, tol,
                                                                                  &err, &l1);
    if (!std::isfinite(v) || err > 1e3 * tol * std::max(1.0, l1))
        throw ComputeError("quadrature did not converge on [" + std::to_string(a) + ", " + std::to_string(b) +
                           "]");
    return v;
}

// Tabulated antiderivative G(x) = integral of g over [eps, x] for x in (0, hi].
//
// The range is cut into panels: geometric (ratio 2) from eps = h * 2^-1000 up
// to h = hi / uniform_panels, then uniform of width h. On each panel g is
// replaced by its degree-N Chebyshev interpolant, integrated exactly. The
// geometric part keeps integrands behaving like 1/u near 0 resolved to
// rounding level, so differences G(x) - G(y) are accurate even when the
// integral from 0 diverges. Points below eps are treated as eps.
class CumulativeIntegral {
public:
    static constexpr int kDegree = 24;

    CumulativeIntegral() = default;

    template <class Fn>
    CumulativeIntegral(Fn&& g, double hi, int uniform_panels = 64, int geometric_levels = 1000) : hi_(hi) {
        if (!(hi > 0.0) || !std::isfinite(hi)) throw InputError("CumulativeIntegral: hi must be finite and > 0");
        const double h = hi / uniform_panels;
        for (int k = geometric_levels; k >= 1; --k) edges_.push_back(std::ldexp(h, -k));
        for (int k = 1; k <= uniform_panels; ++k) edges_.push_back(k == uniform_panels ? hi : h * k);
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

        const std::size_t panels = edges_.size() - 1;
        coef_.resize(panels * (kDegree + 1));
        offset_.resize(panels);
        cum_.resize(panels + 1);
        cum_[0] = 0.0;

        std::array<double, kDegree> samples{};
        std::array<double, kDegree + 2> c{};
        for (std::size_t p = 0; p < panels; ++p) {
            const double l = edges_[p];
            const double r = edges_[p + 1];
            for (int j = 0; j < kDegree; ++j) {
                const double s = std::cos(std::numbers::pi * (j + 0.5) / kDegree);
                samples[j] = g(0.5 * (l + r) + 0.5 * (r - l) * s);
            }
            c.fill(0.0);
            for (int k = 0; k < kDegree; ++k) {
                double acc = 0.0;
                for (int j = 0; j < kDegree; ++j)
                    acc += samples[j] * std::cos(std::numbers::pi * k * (j + 0.5) / kDegree);
                c[k] = 2.0 * acc / kDegree;
            }
            double* C = &coef_[p * (kDegree + 1)];
            C[0] = 0.0;
            const double scale = 0.5 * (r - l);
            for (int k = 1; k <= kDegree; ++k) C[k] = scale * (c[k - 1] - c[k + 1]) / (2.0 * k);
            double at_minus_one = 0.0;
            for (int k = 1; k <= kDegree; ++k) at_minus_one += (k % 2 ? -C[k] : C[k]);
            offset_[p] = at_minus_one;
            cum_[p + 1] = cum_[p] + series(C, 1.0) - at_minus_one;
        }
    }

    double operator()(double x) const {
        if (x > hi_ * (1.0 + 1e-12))
            throw InputError("CumulativeIntegral: point " + std::to_string(x) + " beyond tabulated range " +
                             std::to_string(hi_));
        if (x <= edges_.front()) return 0.0;
        if (x >= hi_) return cum_.back();
        const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
        const std::size_t p = static_cast<std::size_t>(it - edges_.begin()) - 1;
        const double l = edges_[p];
        const double r = edges_[p + 1];
        const double s = (2.0 * x - l - r) / (r - l);
        return cum_[p] + series(&coef_[p * (kDegree + 1)], s) - offset_[p];
    }

    double hi() const noexcept { return hi_; }

private:
    // Clenshaw evaluation of sum_{k=1..N} C[k] T_k(s).
    static double series(const double* C, double s) {
        double b1 = 0.0;
        double b2 = 0.0;
        for (int k = kDegree; k >= 1; --k) {
            const double b0 = 2.0 * s * b1 - b2 + C[k];
            b2 = b1;
            b1 = b0;
        }
        return b1 * s - b2;
    }

    double hi_ = 0.0;
    std::vector<double> edges_;
    std::vector<double> coef_;
    std::vector<double> offset_;
    std::vector<double> cum_;
};

}  // namespace lbrc
