#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace grushin {

/// Lebesgue exponent in [1, inf], stored by its reciprocal so that inf is
/// exact (reciprocal 0) and Hoelder conjugation is 1 - 1/p.
class Exponent {
public:
    Exponent() = default;

    static Exponent finite(double p)
    {
        detail::require(std::isfinite(p) && p >= 1.0, "exponent must lie in [1, inf]");
        return Exponent(1.0 / p);
    }
    static Exponent infinity() { return Exponent(0.0); }
    static Exponent from_reciprocal(double inv)
    {
        detail::require(inv >= 0.0 && inv <= 1.0, "exponent reciprocal must lie in [0, 1]");
        return Exponent(inv);
    }

    /// "inf", "infinity", an integer, a decimal or a ratio "a/b".
    static Exponent parse(const std::string& text)
    {
        if (text == "inf" || text == "infinity" || text == "Inf") return infinity();
        const auto slash = text.find('/');
        char* end = nullptr;
        if (slash != std::string::npos) {
            const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
            const double num = std::strtod(a.c_str(), &end);
            if (end == a.c_str() || *end) throw InvalidInput("bad exponent '" + text + "'");
            const double den = std::strtod(b.c_str(), &end);
            if (end == b.c_str() || *end || den == 0.0) throw InvalidInput("bad exponent '" + text + "'");
            return finite(num / den);
        }
        const double v = std::strtod(text.c_str(), &end);
        if (end == text.c_str() || *end) throw InvalidInput("bad exponent '" + text + "'");
        return finite(v);
    }

    bool is_infinite() const { return inv_ == 0.0; }
    double reciprocal() const { return inv_; }
    double value() const { return inv_ == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / inv_; }
    Exponent conjugate() const { return Exponent(1.0 - inv_); }

    std::string str() const
    {
        if (is_infinite()) return "inf";
        std::ostringstream os;
        os.precision(17);
        os << value();
        return os.str();
    }

    bool operator==(const Exponent& o) const { return inv_ == o.inv_; }

private:
    explicit Exponent(double inv) : inv_(inv) {}
    double inv_ = 0.5;
};

enum class GeometryCase { euclidean, compact };

inline const char* to_string(GeometryCase c) { return c == GeometryCase::compact ? "compact" : "euclidean"; }

namespace detail {

inline constexpr double scaling_tol = 1e-9;
inline constexpr double window_margin = 1e-12;

inline double deficit(Exponent e) { return 0.5 - e.reciprocal(); }

} // namespace detail

/// Strichartz loss gamma_{q,r}: (d2+1)(1/2-1/r) + d1(1/2-1/q) at sigma = 1,
/// d2(2-sigma)(1/2-1/r) + d1(1/2-1/q) for sigma > 1.
inline double gamma(Exponent q, Exponent r, double sigma, int d1, int d2)
{
    detail::require(q.reciprocal() <= 0.5 && r.reciprocal() <= 0.5, "gamma: q and r must lie in [2, inf]");
    detail::require(sigma >= 1.0 && sigma <= 2.0, "gamma: sigma must lie in [1, 2]");
    const double a = detail::deficit(r), b = detail::deficit(q);
    if (sigma == 1.0) return (d2 + 1) * a + d1 * b;
    return d2 * (2.0 - sigma) * a + d1 * b;
}

struct AdmissibleTriple {
    Exponent p = Exponent::infinity();
    Exponent q = Exponent::finite(2.0);
    Exponent r = Exponent::finite(2.0);
    double sigma = 1.0;
    int d1 = 1;
    int d2 = 2;
    GeometryCase gcase = GeometryCase::euclidean;

    double gamma() const { return grushin::gamma(q, r, sigma, d1, d2); }

    /// Derivative loss of the estimate; the compact sigma > 1 case pays 2(sigma-1)/p more.
    double sobolev_loss() const
    {
        double g = gamma();
        if (gcase == GeometryCase::compact && sigma > 1.0) g += 2.0 * (sigma - 1.0) * p.reciprocal();
        return g;
    }

    bool is_sentinel() const
    {
        return p.is_infinite() && q.reciprocal() == 0.5 && r.reciprocal() == 0.5;
    }

    std::string str() const { return "(" + p.str() + "," + q.str() + "," + r.str() + ")"; }
};

struct AdmissibilityVerdict {
    bool admissible = false;
    std::string reason;
    explicit operator bool() const { return admissible; }
};

/// Scaling identity 2 sigma/p + d1/q + 2 d2/r = (d1+2d2)/2 - gamma plus the
/// strict (p, r) window of the geometry case.
inline AdmissibilityVerdict is_admissible(const AdmissibleTriple& t)
{
    if (t.sigma < 1.0 || t.sigma > 2.0) return {false, "sigma outside [1, 2]"};
    if (t.d1 < 1 || t.d2 < 1) return {false, "dimensions must be >= 1"};
    for (Exponent e : {t.p, t.q, t.r})
        if (e.reciprocal() > 0.5) return {false, "exponent below 2"};
    if (t.is_sentinel()) return {true, "sentinel triple (inf,2,2)"};
    if (t.sigma == 1.0 && t.d2 == 1) return {false, "non-dispersive case excluded"};
    const double lhs = 2.0 * t.sigma * t.p.reciprocal() + t.d1 * t.q.reciprocal() + 2.0 * t.d2 * t.r.reciprocal();
    const double rhs = 0.5 * (t.d1 + 2.0 * t.d2) - t.gamma();
    if (std::abs(lhs - rhs) > detail::scaling_tol) {
        std::ostringstream os;
        os.precision(12);
        os << "scaling identity violated: " << lhs << " != " << rhs;
        return {false, os.str()};
    }
    const double a = detail::deficit(t.r);
    const double upper = t.sigma == 1.0 ? 1.0 / (t.d2 - 1.0) : 1.0 / t.d2;
    double lower = 1.0 / (2.0 * t.d2);
    if (t.gcase == GeometryCase::compact) lower += t.p.reciprocal() / t.d2;
    if (!(a < upper - detail::window_margin)) return {false, "window violated: 1/2 - 1/r >= upper bound"};
    if (!(a > lower + detail::window_margin)) return {false, "window violated: 1/2 - 1/r <= lower bound"};
    return {true, "admissible"};
}

/// p solving the scaling identity for given (q, r), if it lies in [2, inf].
inline std::optional<Exponent> time_exponent(Exponent q, Exponent r, double sigma, int d1, int d2)
{
    const double g = gamma(q, r, sigma, d1, d2);
    const double inv_p = (0.5 * (d1 + 2.0 * d2) - g - d1 * q.reciprocal() - 2.0 * d2 * r.reciprocal()) / (2.0 * sigma);
    if (inv_p < -detail::scaling_tol || inv_p > 0.5 + detail::scaling_tol) return std::nullopt;
    return Exponent::from_reciprocal(std::clamp(inv_p, 0.0, 0.5));
}

struct SobolevGap {
    double gamma_sob = 0.0;
    double gamma_stri = 0.0;
    double gap = 0.0;
};

/// Loss of the plain Sobolev embedding against the Strichartz loss.
inline SobolevGap sobolev_gap(Exponent q, Exponent r, double sigma, int d1, int d2)
{
    SobolevGap g;
    g.gamma_sob = 2.0 * d2 * detail::deficit(r) + d1 * detail::deficit(q);
    g.gamma_stri = gamma(q, r, sigma, d1, d2);
    g.gap = g.gamma_sob - g.gamma_stri;
    return g;
}

struct AdmissibilityRow {
    Exponent r, q, p;
    double gamma = 0.0, gamma_sob = 0.0, gap = 0.0;
};

/// Sweeps r over the integers 2..r_max and inf for each q, keeping the
/// admissible triples obtained from the scaling identity.
inline std::vector<AdmissibilityRow> admissibility_table(int d1, int d2, double sigma, GeometryCase gcase,
                                                         const std::vector<Exponent>& qs, int r_max = 64)
{
    std::vector<Exponent> rs;
    for (int r = 2; r <= r_max; ++r) rs.push_back(Exponent::finite(r));
    rs.push_back(Exponent::infinity());
    std::vector<AdmissibilityRow> rows;
    for (Exponent q : qs) {
        for (Exponent r : rs) {
            auto p = time_exponent(q, r, sigma, d1, d2);
            if (!p) continue;
            AdmissibleTriple t{*p, q, r, sigma, d1, d2, gcase};
            if (t.is_sentinel() || !is_admissible(t)) continue;
            auto gap = sobolev_gap(q, r, sigma, d1, d2);
            rows.push_back({r, q, *p, gap.gamma_stri, gap.gamma_sob, gap.gap});
        }
    }
    return rows;
}

} // namespace grushin
