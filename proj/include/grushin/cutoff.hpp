#pragma once

#include <cmath>

#include "error.hpp"

namespace grushin {

/// C^inf step: 0 for s <= 0, 1 for s >= 1, glued from e^{-1/t}.
inline double smooth_step(double s)
{
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / s);
    const double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

/// Littlewood-Paley profile chi(rho) = theta(rho) - theta(2 rho), where theta
/// is 1 on [0, flat_end] and vanishes from support_end on. Dyadic dilates
/// telescope to an exact partition of unity; chi == 1 exactly on
/// [support_end/2, flat_end] and supp chi = [flat_end/2, support_end].
class DyadicCutoff {
public:
    explicit DyadicCutoff(double flat_end = 1.25, double support_end = 2.0)
        : flat_end_(flat_end), support_end_(support_end)
    {
        detail::require(flat_end > 0.0 && support_end > flat_end, "cutoff: need 0 < flat_end < support_end");
        detail::require(support_end <= 2.0 * flat_end, "cutoff: plateau of chi would be empty");
        detail::require(support_end <= 2.0 && flat_end >= 1.0, "cutoff: plateau of chi must contain 1");
    }

    double theta(double rho) const { return smooth_step((support_end_ - rho) / (support_end_ - flat_end_)); }

    double operator()(double rho) const
    {
        if (rho <= 0.0) return 0.0;
        return theta(rho) - theta(2.0 * rho);
    }

    double support_lo() const { return 0.5 * flat_end_; }
    double support_hi() const { return support_end_; }
    double plateau_lo() const { return 0.5 * support_end_; }
    double plateau_hi() const { return flat_end_; }

private:
    double flat_end_;
    double support_end_;
};

/// Bump equal to 1 on [flat_lo, flat_hi] and 0 outside (lo, hi).
class BumpCutoff {
public:
    BumpCutoff(double lo, double flat_lo, double flat_hi, double hi)
        : lo_(lo), flat_lo_(flat_lo), flat_hi_(flat_hi), hi_(hi)
    {
        detail::require(0.0 <= lo && lo < flat_lo && flat_lo <= flat_hi && flat_hi < hi, "bump cutoff: bad breakpoints");
    }

    double operator()(double rho) const
    {
        if (rho <= lo_ || rho >= hi_) return 0.0;
        if (rho < flat_lo_) return smooth_step((rho - lo_) / (flat_lo_ - lo_));
        if (rho > flat_hi_) return smooth_step((hi_ - rho) / (hi_ - flat_hi_));
        return 1.0;
    }

    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }

private:
    double lo_, flat_lo_, flat_hi_, hi_;
};

} // namespace grushin
