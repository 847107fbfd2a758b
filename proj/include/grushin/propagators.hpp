#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "dyadic.hpp"
#include "error.hpp"
#include "spectral_field.hpp"

namespace grushin {

/// schrodinger: i u_t + Delta_G u = 0, multiplier e^{-i t lambda^sigma}.
/// fractional:  i u_t + (-Delta_G)^sigma u = 0, multiplier e^{+i t lambda^sigma}.
enum class Flow { schrodinger, fractional };

inline double flow_sign(Flow f) { return f == Flow::schrodinger ? -1.0 : 1.0; }

struct PropagatorSpec {
    double sigma = 1.0;
    double t = 0.0;
    std::optional<int> frozen_mode;  // modewise flow on ((2m+d1)|D_y|)^sigma
    Flow flow = Flow::schrodinger;

    void validate(int m_max) const
    {
        detail::require(sigma >= 1.0 && sigma <= 2.0, "propagator: sigma must lie in [1, 2]");
        detail::require(std::isfinite(t), "propagator: time must be finite");
        if (frozen_mode) {
            detail::require(*frozen_mode >= 0 && *frozen_mode <= m_max, "propagator: frozen mode exceeds m_max");
        }
    }
};

/// Phase rates lambda^sigma per stored coefficient; the zero fiber has rate 0.
inline std::vector<double> symbol_rates(const FieldSpace& sp, double sigma, std::optional<int> frozen = std::nullopt)
{
    std::vector<double> w(sp.coefficient_count());
    const HermiteBasis& b = sp.basis();
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        const double eta = sp.eta_norm(p);
        for (std::size_t q = 0; q < sp.slot_count(); ++q) {
            const int m = frozen ? *frozen : b.slot_mode(q);
            w[p * sp.slot_count() + q] = std::pow(b.lambda(m) * eta, sigma);
        }
    }
    return w;
}

/// Precomputed multiplier for repeated evolution on one field space.
class LinearFlow {
public:
    LinearFlow(const FieldSpace& sp, double sigma, Flow flow, std::optional<int> frozen = std::nullopt)
        : rates_(symbol_rates(sp, sigma, frozen)), sign_(flow_sign(flow))
    {
        PropagatorSpec{sigma, 0.0, frozen, flow}.validate(sp.m_max());
    }

    void apply(const SpectralField& u, double t, SpectralField& out) const
    {
        if (&out != &u) out = u;
        auto& c = out.data();
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i] == cd(0)) continue;
            c[i] *= std::polar(1.0, sign_ * t * rates_[i]);
        }
    }

    SpectralField operator()(const SpectralField& u, double t) const
    {
        SpectralField out = u;
        apply(u, t, out);
        return out;
    }

    const std::vector<double>& rates() const { return rates_; }
    double sign() const { return sign_; }

    double max_rate(const SpectralField& u) const
    {
        double r = 0.0;
        for (std::size_t i = 0; i < rates_.size(); ++i)
            if (u.data()[i] != cd(0)) r = std::max(r, rates_[i]);
        return r;
    }

private:
    std::vector<double> rates_;
    double sign_;
};

inline SpectralField evolve(const SpectralField& u, const PropagatorSpec& spec)
{
    spec.validate(u.space().m_max());
    return LinearFlow(u.space(), spec.sigma, spec.flow, spec.frozen_mode)(u, spec.t);
}

struct CheckedEvolution {
    SpectralField field;       // exact multiplier
    SpectralField integrated;  // classical RK4 on the coefficient ODEs
    double defect = 0.0;       // max coefficient discrepancy
    int steps = 0;
};

/// Exact evolution plus an independent RK4 integration of
/// f' = i sign lambda^sigma f with step <= dt_ref.
inline CheckedEvolution evolve_checked(const SpectralField& u, const PropagatorSpec& spec, double dt_ref)
{
    detail::require(dt_ref > 0.0, "evolve_checked: dt_ref must be positive");
    spec.validate(u.space().m_max());
    CheckedEvolution r;
    r.field = evolve(u, spec);
    const auto rates = symbol_rates(u.space(), spec.sigma, spec.frozen_mode);
    const double sign = flow_sign(spec.flow);
    r.steps = std::max(1, static_cast<int>(std::ceil(std::abs(spec.t) / dt_ref - 1e-12)));
    const double h = spec.t / r.steps;
    std::vector<cd> f = u.data();
    std::vector<cd> k1(f.size()), k2(f.size()), k3(f.size()), k4(f.size()), tmp(f.size());
    auto rhs = [&](const std::vector<cd>& x, std::vector<cd>& out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = cd(0, sign * rates[i]) * x[i];
    };
    for (int n = 0; n < r.steps; ++n) {
        rhs(f, k1);
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    r.integrated = SpectralField(u.space_ptr());
    r.integrated.data() = f;
    for (std::size_t i = 0; i < f.size(); ++i) r.defect = std::max(r.defect, std::abs(f[i] - r.field.data()[i]));
    return r;
}

/// Window length c / ((m+1) A^{sigma-1}) on which the compact-case modewise
/// estimate is glued.
inline double modewise_timescale(int m, double A, double sigma, double c)
{
    detail::require(m >= 0, "modewise_timescale: m must be >= 0");
    detail::require(is_power_of_two(A) && A >= 1.0, "modewise_timescale: A must be a power of two >= 1");
    detail::require(sigma >= 1.0 && c > 0.0, "modewise_timescale: need sigma >= 1 and c > 0");
    return c / ((m + 1.0) * std::pow(A, sigma - 1.0));
}

} // namespace grushin
