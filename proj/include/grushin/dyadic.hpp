#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "cutoff.hpp"
#include "error.hpp"

namespace grushin {

/// Largest power of two <= v (v > 0, exact for doubles).
inline double dyadic_floor(double v)
{
    int e = 0;
    std::frexp(v, &e);  // v = f 2^e, f in [0.5, 1)
    return std::ldexp(1.0, e - 1);
}

inline bool is_power_of_two(double a)
{
    if (!(a > 0.0) || !std::isfinite(a)) return false;
    int e = 0;
    return std::frexp(a, &e) == 0.5;
}

/// The unique A in 2^N with A <= 1 + (2m+d1) I < 2A.
inline double block_of(int m, double I, int d1) { return dyadic_floor(1.0 + (2.0 * m + d1) * I); }

/// Weight of coefficient (m, |eta|) in block A: sum of chi(|eta|/I) over the
/// dyadic I whose pair (m, I) belongs to A. The zero fiber sits in A = 1.
inline double block_weight(int m, double eta_norm, double A, int d1, const DyadicCutoff& chi = DyadicCutoff())
{
    if (eta_norm == 0.0) return A == 1.0 ? 1.0 : 0.0;
    // chi(eta/I) != 0 needs I in (eta / hi, eta / lo).
    int e_lo = 0, e_hi = 0;
    std::frexp(eta_norm / chi.support_hi(), &e_lo);
    std::frexp(eta_norm / chi.support_lo(), &e_hi);
    double w = 0.0;
    for (int e = e_lo - 1; e <= e_hi; ++e) {
        const double I = std::ldexp(1.0, e);
        const double c = chi(eta_norm / I);
        if (c != 0.0 && block_of(m, I, d1) == A) w += c;
    }
    return w;
}

/// Index set {(m, I) : A <= 1 + (2m+d1) I < 2A} restricted to m <= m_max
/// and I in [I_min, I_max].
struct DyadicBlock {
    double A = 1.0;
    std::vector<std::pair<int, double>> members;

    static DyadicBlock build(double A, int d1, int m_max, double I_min, double I_max)
    {
        detail::require(is_power_of_two(A) && A >= 1.0, "dyadic block: A must be a power of two >= 1");
        DyadicBlock b;
        b.A = A;
        double first = dyadic_floor(I_min);
        if (first < I_min) first *= 2.0;
        for (int m = 0; m <= m_max; ++m) {
            for (double I = first; I <= I_max; I *= 2.0) {
                if (block_of(m, I, d1) == A) b.members.emplace_back(m, I);
            }
        }
        return b;
    }
};

} // namespace grushin
