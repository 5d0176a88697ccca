#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "v2hg/autodiff.hpp"
#include "v2hg/errors.hpp"

namespace v2hg {

/// Piecewise-linear table y(x) on a closed interval.
class PiecewiseLinearCurve {
public:
    PiecewiseLinearCurve() = default;

    PiecewiseLinearCurve(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        if (x_.size() != y_.size())
            throw ValidationError("curve: knot and value counts differ");
        if (x_.size() < 2)
            throw ValidationError("curve: at least two knots required");
        for (std::size_t i = 1; i < x_.size(); ++i) {
            if (!(x_[i] > x_[i - 1]))
                throw ValidationError("curve: knots must be strictly increasing");
        }
        for (double v : y_) {
            if (!std::isfinite(v)) throw ValidationError("curve: non-finite value");
        }
    }

    std::span<const double> knots() const { return x_; }
    std::span<const double> values() const { return y_; }
    bool empty() const { return x_.empty(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

    bool nondecreasing() const {
        return std::is_sorted(y_.begin(), y_.end());
    }

    bool covers_unit_interval() const {
        return !x_.empty() && x_.front() <= 0.0 && x_.back() >= 1.0;
    }

    /// Linear interpolation; works for plain doubles and dual numbers.
    /// Outside the knot range the caller is expected to have validated x.
    template <typename S>
    S operator()(const S& x) const {
        const double xv = value_of(x);
        auto it = std::upper_bound(x_.begin(), x_.end(), xv);
        std::size_t hi = static_cast<std::size_t>(it - x_.begin());
        hi = std::clamp<std::size_t>(hi, 1, x_.size() - 1);
        const std::size_t lo = hi - 1;
        const double slope = (y_[hi] - y_[lo]) / (x_[hi] - x_[lo]);
        if (xv >= x_[hi]) return (x - x_[hi]) * slope + y_[hi];
        return (x - x_[lo]) * slope + y_[lo];
    }

    /// Same table with each interior knot rounded by a softplus of the given
    /// width, so the first and second derivatives are continuous. width <= 0
    /// falls back to plain interpolation.
    template <typename S>
    S smoothed(const S& x, double width) const {
        using std::exp;
        using std::log;
        if (!(width > 0.0)) return (*this)(x);
        auto slope = [this](std::size_t i) { return (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]); };
        S y = (x - x_[0]) * slope(0) + y_[0];
        for (std::size_t i = 1; i + 1 < x_.size(); ++i) {
            const double ds = slope(i) - slope(i - 1);
            const double z = (value_of(x) - x_[i]) / width;
            if (z < -40.0) continue;
            if (z > 40.0) {
                y += ds * (x - x_[i]);
                continue;
            }
            const S u = (x - x_[i]) / width;
            // softplus(u), written to avoid overflow on either side
            const S sp = z > 0.0 ? u + log(1.0 + exp(-u)) : log(1.0 + exp(u));
            y += ds * width * sp;
        }
        return y;
    }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

} // namespace v2hg
