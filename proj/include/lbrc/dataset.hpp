#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lbrc/error.hpp"

namespace lbrc {

// One subject of a length-biased, right-censored sample.
//   a      truncation time (onset to enrollment), > 0
//   v      observed residual time min(V, C), >= 0
//   delta  1 if the residual time is an observed failure
//   y      total observed time a + v
struct LbrcObservation {
    double a = 0.0;
    double v = 0.0;
    int delta = 0;
    double y = 0.0;

    static LbrcObservation make(double a, double v, int delta) {
        if (!std::isfinite(a) || !(a > 0.0)) throw InputError("observation: a must be finite and > 0");
        if (!std::isfinite(v) || v < 0.0) throw InputError("observation: v must be finite and >= 0");
        if (delta != 0 && delta != 1) throw InputError("observation: delta must be 0 or 1");
        return LbrcObservation{a, v, delta, a + v};
    }

    friend bool operator==(const LbrcObservation&, const LbrcObservation&) = default;
};

class Dataset {
public:
    explicit Dataset(std::vector<LbrcObservation> observations) : obs_(std::move(observations)) {
        if (obs_.empty()) throw InputError("no observations");
    }

    std::size_t n() const noexcept { return obs_.size(); }
    const std::vector<LbrcObservation>& observations() const noexcept { return obs_; }
    const LbrcObservation& operator[](std::size_t i) const { return obs_[i]; }
    auto begin() const noexcept { return obs_.begin(); }
    auto end() const noexcept { return obs_.end(); }

    std::size_t event_count() const noexcept {
        std::size_t k = 0;
        for (const auto& o : obs_) k += static_cast<std::size_t>(o.delta);
        return k;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<LbrcObservation> obs_;
};

}  // namespace lbrc
