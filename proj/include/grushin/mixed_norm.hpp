#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "admissibility.hpp"
#include "error.hpp"
#include "spectral_field.hpp"

namespace grushin {

struct MixedNormSpec {
    Exponent p = Exponent::infinity();
    Exponent q = Exponent::finite(2.0);
    Exponent r = Exponent::finite(2.0);
    std::vector<double> times;  // strictly increasing
};

namespace detail {

inline double lp_accumulate(double a, Exponent e)
{
    if (e.reciprocal() == 0.5) return a * a;
    if (e.reciprocal() == 1.0) return a;
    return std::pow(a, e.value());
}

inline double lp_finish(double s, Exponent e)
{
    if (e.reciprocal() == 0.5) return std::sqrt(s);
    if (e.reciprocal() == 1.0) return s;
    return std::pow(s, e.reciprocal());
}

inline double check_finite(double v, const char* where)
{
    if (!std::isfinite(v)) throw NumericalFailure(std::string("overflow: non-finite value in ") + where);
    return v;
}

} // namespace detail

/// ||u||_{L^q_x L^r_y} of grid samples: periodic trapezoid in y, then the
/// Lebesgue-weighted Gauss-Hermite rule in x; inf exponents are maxima.
inline double slice_norm(const GridField& g, Exponent q, Exponent r)
{
    const FieldSpace& sp = *g.space;
    const std::size_t ny = sp.y_size(), nx = sp.x_size();
    const auto& xw = sp.x_weights();
    const double yw = sp.y_weight();
    double outer = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const cd* row = g.values.data() + i * ny;
        double inner = 0.0;
        if (r.is_infinite()) {
            for (std::size_t j = 0; j < ny; ++j) inner = std::max(inner, std::abs(row[j]));
        } else if (r.reciprocal() == 0.5) {
            for (std::size_t j = 0; j < ny; ++j) inner += std::norm(row[j]);
            inner = std::sqrt(inner * yw);
        } else {
            const double half = 0.5 * r.value();
            const int k = static_cast<int>(std::lround(half));
            if (std::abs(half - k) < 1e-12 && k <= 8) {
                for (std::size_t j = 0; j < ny; ++j) {
                    const double a = std::norm(row[j]);
                    double v = a;
                    for (int e = 1; e < k; ++e) v *= a;
                    inner += v;
                }
            } else {
                for (std::size_t j = 0; j < ny; ++j) inner += std::pow(std::norm(row[j]), half);
            }
            inner = std::pow(inner * yw, r.reciprocal());
        }
        if (q.is_infinite())
            outer = std::max(outer, inner);
        else
            outer += xw[i] * detail::lp_accumulate(inner, q);
    }
    const double v = q.is_infinite() ? outer : detail::lp_finish(outer, q);
    return detail::check_finite(v, "slice norm");
}

/// L^p over a time grid (trapezoid) of per-slice norms; p = inf is the maximum.
inline double time_norm(std::span<const double> values, std::span<const double> times, Exponent p)
{
    detail::require(values.size() == times.size() && !times.empty(), "time norm: grid and values differ in length");
    for (std::size_t n = 1; n < times.size(); ++n)
        detail::require(times[n] > times[n - 1], "time norm: time grid must be strictly increasing");
    if (p.is_infinite()) {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return detail::check_finite(m, "time norm");
    }
    double s = 0.0;
    for (std::size_t n = 1; n < times.size(); ++n) {
        const double h = times[n] - times[n - 1];
        s += 0.5 * h * (detail::lp_accumulate(values[n - 1], p) + detail::lp_accumulate(values[n], p));
    }
    return detail::check_finite(detail::lp_finish(s, p), "time norm");
}

/// ||u||_{L^p_T L^q_x L^r_y} of a trajectory sampled on spec.times.
inline double mixed_norm(std::span<const SpectralField> series, const MixedNormSpec& spec)
{
    detail::require(series.size() == spec.times.size(), "mixed norm: one field per time sample required");
    detail::require(!series.empty(), "mixed norm: empty trajectory");
    for (const auto& u : series) series.front().check_same(u);
    std::vector<double> slices(series.size());
    for (std::size_t n = 0; n < series.size(); ++n) slices[n] = slice_norm(synthesize(series[n]), spec.q, spec.r);
    return time_norm(slices, spec.times, spec.p);
}

} // namespace grushin
