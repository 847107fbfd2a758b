#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "admissibility.hpp"
#include "mixed_norm.hpp"
#include "propagators.hpp"
#include "random.hpp"
#include "spectral_ops.hpp"

namespace grushin {

// i u_t = -s (-Delta_G)^sigma u + c |u|^{kappa-1} u with s the flow sign and c
// the coupling. s = -1 is i u_t + Delta_G u = F(u) at sigma = 1.

enum class Solver { picard, splitting };

/// Nonlinear substep of the splitting: implicit midpoint on the projected
/// equation i v_t = c P F(v) (mass exact), or the pointwise exact phase
/// followed by the projection (modulus exact on the grid, mass lost at O(dt)).
enum class NonlinearStep { midpoint, phase };

inline const char* to_string(Solver s) { return s == Solver::picard ? "picard" : "splitting"; }

struct CauchyProblem {
    SpectralField u0;
    double sigma = 1.0;
    int kappa = 5;
    double s = 2.1;  // regularity of the H^s / X^s diagnostics
    double T = 0.05;
    Solver solver = Solver::splitting;
    double dt = 1e-3;
    int picard_depth = 30;
    double picard_tol = 1e-8;  // relative to ||u0||_{H^s}
    int max_halvings = 6;
    Flow flow = Flow::schrodinger;
    double coupling = 1.0;   // 0 switches the nonlinearity off
    double epsilon = 0.1;    // loss in the X^s proxy weights
    NonlinearStep nonlinear_step = NonlinearStep::midpoint;
    bool enforce_headroom = true;  // m_max >= kappa * (top mode of u0)

    void validate() const
    {
        detail::require(u0.size() > 0, "cauchy problem: empty initial datum");
        detail::require(sigma >= 1.0 && sigma <= 2.0, "cauchy problem: sigma must lie in [1, 2]");
        detail::require(kappa == 3 || kappa == 5, "cauchy problem: kappa must be 3 or 5");
        detail::require(T > 0.0 && std::isfinite(T), "cauchy problem: horizon must be positive");
        detail::require(dt > 0.0 && dt <= T, "cauchy problem: need 0 < dt <= T");
        detail::require(picard_depth >= 1 && picard_tol > 0.0, "cauchy problem: bad Picard controls");
        detail::require(max_halvings >= 0, "cauchy problem: max_halvings must be >= 0");
        detail::require(std::isfinite(coupling) && std::isfinite(s), "cauchy problem: coupling and s must be finite");
    }

    GeometryCase gcase() const
    {
        return u0.space().geometry().ycase == YCase::torus ? GeometryCase::compact : GeometryCase::euclidean;
    }

    /// Whether (kappa, sigma, s) sits in the regime covered by the local theory.
    bool backed() const
    {
        if (kappa == 5 && sigma == 1.0) return s > 2.0;
        if (kappa == 3 && sigma > 1.0 && sigma < 2.0)
            return gcase() == GeometryCase::compact ? s > 2.0 : s > 2.5 - sigma;
        return false;
    }

    std::string regime() const { return backed() ? "local theory" : "outside the local theory"; }

    /// Conserved energy: 1/2 <(-Delta_G)^sigma u, u> + nu/(kappa+1) ||u||^{kappa+1}_{kappa+1}.
    double energy_sign() const { return -flow_sign(flow) * coupling; }
};

/// Field space for the nonlinear problem: y grid padded to (kappa+1) K_max + 1
/// points per axis, x grid resolving (kappa+1) m_max / 2 modes, zero fiber excluded.
inline std::shared_ptr<const FieldSpace> nls_space(Geometry g, int m_max, int kappa, double max_defect = 1e-10)
{
    detail::require(kappa >= 1 && kappa % 2 == 1, "nls_space: kappa must be an odd integer");
    g.y_points = std::max(g.y_points, (kappa + 1) * g.K_max + 1);
    g.x.resolve_zero_fiber = false;
    if (g.x.nodes == 0) {
        std::vector<double> scales;
        for (std::size_t p = 0; p < g.lattice_size(); ++p)
            if (p != g.zero_index()) scales.push_back(g.eta_norm(p));
        const int m_pad = ((kappa + 1) * m_max + 1) / 2;
        XGrid picked = choose_x_grid(m_pad, scales, max_defect);
        g.x.nodes = picked.nodes;
        if (g.x.scale == 0.0) g.x.scale = picked.scale;
    }
    g.x.max_defect = max_defect;
    return FieldSpace::make(g, m_max);
}

inline int top_mode(const SpectralField& u)
{
    const FieldSpace& sp = u.space();
    int top = -1;
    for (std::size_t p = 0; p < sp.lattice_size(); ++p)
        for (std::size_t q = 0; q < sp.slot_count(); ++q)
            if (u(p, q) != cd(0)) top = std::max(top, sp.basis().slot_mode(q));
    return top;
}

/// Refuses grids on which |u|^{kappa-1} u aliases back onto the lattice.
inline void check_dealiasing(const FieldSpace& sp, int kappa)
{
    const Geometry& g = sp.geometry();
    const int need_y = (kappa + 1) * g.K_max + 1;
    const int need_x = ((kappa + 1) * sp.m_max()) / 2 + 1;
    const int have_x = static_cast<int>(sp.x_nodes().size());
    if (g.y_points < need_y || have_x < need_x) {
        throw NumericalFailure("aliasing budget exceeded for kappa = " + std::to_string(kappa) + ": need >= " +
                               std::to_string(need_y) + " y points per axis (have " + std::to_string(g.y_points) +
                               ") and >= " + std::to_string(need_x) + " x nodes per axis (have " +
                               std::to_string(have_x) + ")");
    }
}

namespace detail {

inline double abs_pow(const cd& v, int e)  // |v|^e for even e
{
    const double a2 = std::norm(v);
    double r = 1.0;
    for (int i = 0; i < e / 2; ++i) r *= a2;
    return r;
}

} // namespace detail

/// In place: v <- |v|^{kappa-1} v.
inline void grid_power(GridField& g, int kappa)
{
    detail::require(kappa >= 1 && kappa % 2 == 1, "nonlinearity: kappa must be an odd integer");
    for (cd& v : g.values) v *= detail::abs_pow(v, kappa - 1);
}

/// F(u) = |u|^{kappa-1} u, projected back onto the field space.
inline SpectralField nonlinearity(const SpectralField& u, int kappa)
{
    check_dealiasing(u.space(), kappa);
    GridField g = synthesize(u);
    grid_power(g, kappa);
    return analyze(g);
}

/// Exact flow of i u_t = c |u|^{kappa-1} u over time h: u <- e^{-i c h |u|^{kappa-1}} u.
inline SpectralField nonlinear_phase(const SpectralField& u, int kappa, double c, double h)
{
    check_dealiasing(u.space(), kappa);
    GridField g = synthesize(u);
    for (cd& v : g.values) v *= std::polar(1.0, -c * h * detail::abs_pow(v, kappa - 1));
    return analyze(g);
}

/// One implicit-midpoint step of i v_t = c P F(v), solved by fixed-point sweeps.
inline SpectralField nonlinear_midpoint(const SpectralField& v0, int kappa, double c, double h, int max_sweeps = 60)
{
    check_dealiasing(v0.space(), kappa);
    const double scale = v0.l2_norm();
    if (scale == 0.0) return v0;
    const cd a(0.0, -c * h);
    SpectralField w = v0;
    for (int it = 0; it < max_sweeps; ++it) {
        SpectralField mid = w;
        auto& m = mid.data();
        const auto& z = v0.data();
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (m[i] + z[i]);
        SpectralField next = nonlinearity(mid, kappa);
        next *= a;
        next += v0;
        const double d = distance(next, w);
        w = std::move(next);
        if (d <= 1e-15 * scale) return w;
    }
    throw NumericalFailure("nonlinear substep: midpoint sweeps did not converge (step too large for the data)");
}

/// int |u|^{kappa+1} dx dy by the grid quadrature (exact once dealiased).
inline double potential_integral(const SpectralField& u, int kappa)
{
    const FieldSpace& sp = u.space();
    GridField g = synthesize(u);
    const auto& xw = sp.x_weights();
    const std::size_t ny = sp.y_size();
    double s = 0.0;
    for (std::size_t i = 0; i < sp.x_size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < ny; ++j) row += detail::abs_pow(g.values[i * ny + j], kappa + 1);
        s += xw[i] * row;
    }
    return s * sp.y_weight();
}

inline double energy(const SpectralField& u, const CauchyProblem& pb)
{
    const double kin = std::pow(sobolev_norm(u, pb.sigma, SymbolKind::homogeneous), 2.0);
    return 0.5 * kin + pb.energy_sign() / (pb.kappa + 1.0) * potential_integral(u, pb.kappa);
}

struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralField> states;
};

namespace detail {

inline double top_rate(const LinearFlow& L)
{
    double r = 0.0;
    for (double v : L.rates()) r = std::max(r, v);
    return r;
}

inline int step_count(double T, double dt) { return std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9))); }

inline void check_step(double h, double rate)
{
    if (h * rate > std::numbers::pi / 4.0 + 1e-12) {
        std::ostringstream os;
        os.precision(6);
        os << "step too large: dt * lambda_top = " << h * rate << " > pi/4 (need dt <= " << std::numbers::pi / 4.0 / rate
           << ")";
        throw InvalidInput(os.str());
    }
}

inline void preflight(const CauchyProblem& pb)
{
    pb.validate();
    check_dealiasing(pb.u0.space(), pb.kappa);
    for (std::size_t p = 0; p < pb.u0.space().lattice_size(); ++p) {
        if (pb.u0.space().is_zero_fiber(p) && !fiber_is_empty(pb.u0, p))
            throw InvalidInput("cauchy problem: initial datum has eta = 0 content, which the solver space excludes");
    }
    const int top = top_mode(pb.u0);
    if (pb.enforce_headroom && pb.coupling != 0.0 && top >= 0 && pb.u0.space().m_max() < pb.kappa * top) {
        throw NumericalFailure("aliasing budget exceeded: Hermite headroom needs m_max >= " +
                               std::to_string(pb.kappa * top) + " for top mode " + std::to_string(top) + " (have " +
                               std::to_string(pb.u0.space().m_max()) + ")");
    }
}

} // namespace detail

/// Strang splitting: half linear step, exact nonlinear phase, half linear step.
inline Trajectory splitting_solve(const CauchyProblem& pb, int record_every = 1)
{
    detail::preflight(pb);
    detail::require(record_every >= 1, "splitting: record_every must be >= 1");
    const LinearFlow L(pb.u0.space(), pb.sigma, pb.flow);
    const int N = detail::step_count(pb.T, pb.dt);
    const double h = pb.T / N;
    detail::check_step(h, detail::top_rate(L));
    Trajectory tr;
    SpectralField u = pb.u0;
    tr.times.push_back(0.0);
    tr.states.push_back(u);
    for (int n = 1; n <= N; ++n) {
        L.apply(u, 0.5 * h, u);
        if (pb.coupling != 0.0) {
            u = pb.nonlinear_step == NonlinearStep::midpoint ? nonlinear_midpoint(u, pb.kappa, pb.coupling, h)
                                                              : nonlinear_phase(u, pb.kappa, pb.coupling, h);
        }
        L.apply(u, 0.5 * h, u);
        if (n % record_every == 0 || n == N) {
            tr.times.push_back(n == N ? pb.T : n * h);
            tr.states.push_back(u);
        }
    }
    return tr;
}

struct PicardReport {
    std::vector<double> increments;   // max_n ||u^{k+1}_n - u^k_n||_{H^s} / ||u0||_{H^s}
    std::vector<double> contraction;  // ratios of successive increments
    int iterations = 0;
    int halvings = 0;
    double T_used = 0.0;
    double residual = 0.0;            // ||Phi(u*) - u*|| relative, one extra sweep
    double first_correction = 0.0;    // ||Phi(u^0) - u^0|| on [0, T_used], relative
    double first_correction_half = 0.0;
    double theta = std::numeric_limits<double>::quiet_NaN();  // log2 of the ratio above
    double max_contraction = 0.0;
};

struct PicardSolution {
    Trajectory trajectory;
    PicardReport report;
};

namespace detail {

/// Cumulative int_0^{t_n} G on a uniform grid, fourth order: interior
/// panels (-1, 13, 13, -1)/24, end panels (9, 19, -5, 1)/24 and mirror.
inline std::vector<SpectralField> cumulative_integral(const std::vector<SpectralField>& G, double h)
{
    const int N = static_cast<int>(G.size()) - 1;
    require(N >= 3, "cumulative integral: need >= 3 intervals");
    std::vector<SpectralField> C;
    C.reserve(G.size());
    C.push_back(SpectralField(G[0].space_ptr()));
    const std::size_t n_c = G[0].size();
    for (int n = 0; n < N; ++n) {
        int base;
        double w[4];
        if (n == 0) {
            base = 0;
            w[0] = 9; w[1] = 19; w[2] = -5; w[3] = 1;
        } else if (n == N - 1) {
            base = N - 3;
            w[0] = 1; w[1] = -5; w[2] = 19; w[3] = 9;
        } else {
            base = n - 1;
            w[0] = -1; w[1] = 13; w[2] = 13; w[3] = -1;
        }
        SpectralField next = C.back();
        auto& out = next.data();
        for (int j = 0; j < 4; ++j) {
            const auto& g = G[static_cast<std::size_t>(base + j)].data();
            const double a = h * w[j] / 24.0;
            for (std::size_t i = 0; i < n_c; ++i) out[i] += a * g[i];
        }
        C.push_back(std::move(next));
    }
    return C;
}

/// One application of the Duhamel map on the grid t_n = n h.
inline std::vector<SpectralField> duhamel_map(const CauchyProblem& pb, const LinearFlow& L,
                                              const std::vector<SpectralField>& u, double h)
{
    const std::size_t n_t = u.size();
    std::vector<SpectralField> G(n_t);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(n_t); ++n) {
        SpectralField f = nonlinearity(u[static_cast<std::size_t>(n)], pb.kappa);
        L.apply(f, -static_cast<double>(n) * h, f);
        G[static_cast<std::size_t>(n)] = std::move(f);
    }
    auto C = cumulative_integral(G, h);
    std::vector<SpectralField> out(n_t);
    const cd mi(0.0, -pb.coupling);
    for (std::size_t n = 0; n < n_t; ++n) {
        SpectralField v = pb.u0;
        auto& d = v.data();
        const auto& c = C[n].data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += mi * c[i];
        L.apply(v, static_cast<double>(n) * h, v);
        out[n] = std::move(v);
    }
    return out;
}

inline double sup_hs_distance(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b, double s)
{
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, sobolev_norm(a[n] - b[n], s));
    return m;
}

inline std::vector<SpectralField> linear_trajectory(const SpectralField& u0, const LinearFlow& L, int N, double h)
{
    std::vector<SpectralField> u;
    u.reserve(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n) u.push_back(L(u0, n * h));
    return u;
}

inline double first_correction(const CauchyProblem& pb, const LinearFlow& L, int N, double h, double scale)
{
    auto u = linear_trajectory(pb.u0, L, N, h);
    return sup_hs_distance(duhamel_map(pb, L, u, h), u, pb.s) / scale;
}

} // namespace detail

/// Picard iteration of the Duhamel map in discrete C^0_T H^s. Halves T
/// (keeping dt) when the iterates stop contracting.
inline PicardSolution picard_solve(const CauchyProblem& pb)
{
    detail::preflight(pb);
    const LinearFlow L(pb.u0.space(), pb.sigma, pb.flow);
    int N = detail::step_count(pb.T, pb.dt);
    const double h = pb.T / N;
    detail::check_step(h, detail::top_rate(L));
    const double norm0 = sobolev_norm(pb.u0, pb.s);
    const double scale = norm0 > 0.0 ? norm0 : 1.0;
    std::string history;

    for (int halving = 0; halving <= pb.max_halvings; ++halving) {
        if (N < 3) break;
        PicardSolution sol;
        PicardReport& rep = sol.report;
        rep.halvings = halving;
        rep.T_used = N * h;
        auto u = detail::linear_trajectory(pb.u0, L, N, h);
        bool failed = false;
        bool converged = pb.coupling == 0.0 || norm0 == 0.0;
        for (int k = 0; k < pb.picard_depth && !converged; ++k) {
            auto next = detail::duhamel_map(pb, L, u, h);
            const double inc = detail::sup_hs_distance(next, u, pb.s) / scale;
            if (!std::isfinite(inc)) throw NumericalFailure("picard: non-finite iterate");
            rep.increments.push_back(inc);
            if (rep.increments.size() >= 2) {
                const double c = inc / rep.increments[rep.increments.size() - 2];
                rep.contraction.push_back(c);
                rep.max_contraction = std::max(rep.max_contraction, c);
                if (c >= 1.0 && inc > pb.picard_tol) failed = true;
            }
            u = std::move(next);
            ++rep.iterations;
            if (inc <= pb.picard_tol) converged = true;
            if (failed) break;
        }
        if (converged) {
            if (pb.coupling != 0.0 && norm0 > 0.0) {
                rep.residual = detail::sup_hs_distance(detail::duhamel_map(pb, L, u, h), u, pb.s) / scale;
                rep.first_correction = detail::first_correction(pb, L, N, h, scale);
                const int Nh = (N + 1) / 2;
                if (Nh >= 3) {
                    rep.first_correction_half = detail::first_correction(pb, L, Nh, 0.5 * N * h / Nh, scale);
                    if (rep.first_correction_half > 0.0)
                        rep.theta = std::log2(rep.first_correction / rep.first_correction_half);
                }
            }
            for (int n = 0; n <= N; ++n) sol.trajectory.times.push_back(n * h);
            sol.trajectory.states = std::move(u);
            return sol;
        }
        std::ostringstream os;
        os.precision(4);
        os << " [T = " << N * h << ": " << rep.iterations << " iterates, last increment "
           << (rep.increments.empty() ? 0.0 : rep.increments.back()) << ", max factor " << rep.max_contraction << "]";
        history += os.str();
        N /= 2;
    }
    throw NumericalFailure("picard: no contraction down to the horizon floor;" + history);
}

/// Admissible triples standing in for the X^s_T intersection: the sentinel
/// plus two interior points of the q = 2 window. When the geometry's own
/// window is empty (compact, sigma > 1) the Euclidean window is used.
struct ProxySet {
    std::vector<AdmissibleTriple> triples;
    std::string note;
};

inline ProxySet xs_proxy_triples(double sigma, int d1, int d2, GeometryCase gcase)
{
    ProxySet out;
    out.triples.push_back({Exponent::infinity(), Exponent::finite(2), Exponent::finite(2), sigma, d1, d2, gcase});
    auto scan = [&](GeometryCase c) {
        std::vector<AdmissibleTriple> found;
        for (double r : {5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 24.0, 32.0}) {
            auto p = time_exponent(Exponent::finite(2), Exponent::finite(r), sigma, d1, d2);
            if (!p) continue;
            AdmissibleTriple t{*p, Exponent::finite(2), Exponent::finite(r), sigma, d1, d2, c};
            if (!t.is_sentinel() && is_admissible(t)) found.push_back(t);
            if (found.size() == 2) break;
        }
        return found;
    };
    auto found = scan(gcase);
    if (found.size() < 2 && gcase == GeometryCase::compact) {
        found = scan(GeometryCase::euclidean);
        out.note = "compact window empty; euclidean-window proxies";
    }
    for (auto& t : found) out.triples.push_back(t);
    return out;
}

struct ConservationLedger {
    std::vector<double> times, mass, energy, hs_norm, hsigma_ratio, linf_ratio;
    double mass_drift = 0.0;    // max |M(t) - M(0)| / M(0)
    double energy_drift = 0.0;  // max |E(t) - E(0)| / |E(0)|
    double hsigma_constant = 0.0;  // fitted c in ||u||_{H^sigma}^2 <= c (M + E + E^2)
    double hsigma_spread = 0.0;    // max/min of that ratio
    std::vector<std::pair<AdmissibleTriple, double>> xs_proxy;
    std::string proxy_note;
};

inline ConservationLedger conservation_report(const Trajectory& tr, const CauchyProblem& pb, bool with_proxies = true)
{
    detail::require(tr.times.size() == tr.states.size() && !tr.times.empty(), "conservation: malformed trajectory");
    for (std::size_t n = 1; n < tr.times.size(); ++n)
        detail::require(tr.times[n] > tr.times[n - 1], "conservation: times must increase strictly");
    ConservationLedger led;
    led.times = tr.times;
    double rmin = std::numeric_limits<double>::infinity();
    for (const auto& u : tr.states) {
        const double M = u.norm2();
        const double E = energy(u, pb);
        const double Hs = sobolev_norm(u, pb.s);
        const double Hsig2 = std::pow(sobolev_norm(u, pb.sigma), 2.0);
        if (!std::isfinite(M) || !std::isfinite(E) || !std::isfinite(Hs))
            throw NumericalFailure("conservation: non-finite ledger entry");
        led.mass.push_back(M);
        led.energy.push_back(E);
        led.hs_norm.push_back(Hs);
        const double ctl = M + std::abs(E) + E * E;
        const double ratio = ctl > 0.0 ? Hsig2 / ctl : 0.0;
        led.hsigma_ratio.push_back(ratio);
        led.hsigma_constant = std::max(led.hsigma_constant, ratio);
        if (ctl > 0.0) rmin = std::min(rmin, ratio);
        led.linf_ratio.push_back(Hs > 0.0 ? grid_linf_norm(synthesize(u)) / Hs : 0.0);
    }
    for (std::size_t n = 0; n < led.mass.size(); ++n) {
        if (led.mass[0] > 0.0) led.mass_drift = std::max(led.mass_drift, std::abs(led.mass[n] - led.mass[0]) / led.mass[0]);
        if (led.energy[0] != 0.0)
            led.energy_drift = std::max(led.energy_drift, std::abs(led.energy[n] - led.energy[0]) / std::abs(led.energy[0]));
    }
    led.hsigma_spread = std::isfinite(rmin) && rmin > 0.0 ? led.hsigma_constant / rmin : 1.0;

    if (with_proxies && tr.states.size() >= 2 && tr.states[0].norm2() > 0.0) {
        const FieldSpace& sp = tr.states[0].space();
        auto proxies = xs_proxy_triples(pb.sigma, sp.d1(), sp.d2(), pb.gcase());
        led.proxy_note = proxies.note;
        for (const auto& t : proxies.triples) {
            std::vector<SpectralField> w;
            w.reserve(tr.states.size());
            for (const auto& u : tr.states) w.push_back(fractional_symbol(u, pb.s - t.sobolev_loss() - (t.is_sentinel() ? 0.0 : pb.epsilon)));
            led.xs_proxy.emplace_back(t, mixed_norm(w, MixedNormSpec{t.p, t.q, t.r, tr.times}));
        }
    }
    return led;
}

/// Random datum on modes <= m_top and lattice points 0 < |k|_inf <= K0,
/// scaled to ||u0||_{H^s} = amplitude.
inline SpectralField nls_datum(std::shared_ptr<const FieldSpace> sp, int m_top, int K0, double amplitude, double s,
                               std::uint64_t seed)
{
    detail::require(m_top >= 0 && m_top <= sp->m_max(), "nls datum: m_top outside the basis");
    detail::require(K0 >= 1 && K0 <= sp->geometry().K_max, "nls datum: K0 outside the lattice");
    Rng rng(seed);
    const Geometry& g = sp->geometry();
    SpectralField u = random_field(sp, rng, [&](std::size_t p, std::size_t q) {
        if (sp->is_zero_fiber(p) || sp->basis().slot_mode(q) > m_top) return false;
        for (int k : g.lattice_point(p))
            if (std::abs(k) > K0) return false;
        return true;
    });
    u *= cd(amplitude / sobolev_norm(u, s));
    u.seed = seed;
    return u;
}

struct ConvergenceStudy {
    std::vector<double> dts;
    std::vector<double> errors;          // max_n ||u_dt - u_ref|| / ||u0|| at common times, ref = dt/8
    std::vector<double> energy_drifts;
    std::vector<double> mass_drifts;
    double order = 0.0;                  // log2(errors[0] / errors[1])
    double richardson_order = 0.0;       // from successive differences, reference free
    double energy_order = 0.0;           // log2 of successive energy-drift ratios (mean)
};

/// Splitting runs at dt, dt/2, dt/4 against a dt/8 reference.
inline ConvergenceStudy splitting_convergence(CauchyProblem pb)
{
    pb.validate();
    const double dt0 = pb.T / detail::step_count(pb.T, pb.dt);
    const double norm0 = pb.u0.l2_norm();
    detail::require(norm0 > 0.0, "convergence: zero datum");
    std::vector<Trajectory> runs;
    for (int j = 0; j < 4; ++j) {
        CauchyProblem q = pb;
        q.dt = dt0 / (1 << j);
        runs.push_back(splitting_solve(q, 1 << j));  // recorded on the coarse grid
    }
    auto gap = [&](const Trajectory& a, const Trajectory& b) {
        double e = 0.0;
        for (std::size_t n = 0; n < a.states.size(); ++n) e = std::max(e, distance(a.states[n], b.states[n]) / norm0);
        return e;
    };
    ConvergenceStudy st;
    for (int j = 0; j < 3; ++j) {
        const auto led = conservation_report(runs[j], pb, false);
        st.dts.push_back(dt0 / (1 << j));
        st.errors.push_back(gap(runs[j], runs[3]));
        st.energy_drifts.push_back(led.energy_drift);
        st.mass_drifts.push_back(led.mass_drift);
    }
    st.order = std::log2(st.errors[0] / st.errors[1]);
    const double d0 = gap(runs[0], runs[1]), d1 = gap(runs[1], runs[2]), d2 = gap(runs[2], runs[3]);
    st.richardson_order = 0.5 * (std::log2(d0 / d1) + std::log2(d1 / d2));
    st.energy_order = 0.5 * (std::log2(st.energy_drifts[0] / st.energy_drifts[1]) +
                             std::log2(st.energy_drifts[1] / st.energy_drifts[2]));
    return st;
}

struct CrossCheck {
    double max_difference = 0.0;  // max_n ||u_picard - u_split|| / ||u0||
    double nonlinear_effect = 0.0;  // max_n ||u - e^{tL} u0|| / ||u0||
    double T = 0.0;
};

/// Picard against splitting on the Picard grid; the splitting run uses
/// dt / refine and is sampled at the common times.
inline CrossCheck cross_validate(const CauchyProblem& pb, const PicardSolution& pic, int refine = 4)
{
    CauchyProblem q = pb;
    q.T = pic.report.T_used;
    const int N = static_cast<int>(pic.trajectory.states.size()) - 1;
    q.dt = q.T / (N * refine);
    const Trajectory S = splitting_solve(q, refine);
    detail::require(S.states.size() == pic.trajectory.states.size(), "cross check: grids do not line up");
    const LinearFlow L(pb.u0.space(), pb.sigma, pb.flow);
    const double norm0 = pb.u0.l2_norm();
    CrossCheck c;
    c.T = q.T;
    for (std::size_t n = 0; n < S.states.size(); ++n) {
        c.max_difference = std::max(c.max_difference, distance(S.states[n], pic.trajectory.states[n]) / norm0);
        c.nonlinear_effect =
            std::max(c.nonlinear_effect, distance(S.states[n], L(pb.u0, pic.trajectory.times[n])) / norm0);
    }
    return c;
}

struct PersistenceCheck {
    double horizon = 0.0;
    double max_hsigma_ratio = 0.0;  // max_t ||u(t)||_{H^sigma} / ||u0||_{H^sigma}
    bool finite = true;
};

/// Runs the splitting solver to factor * T and tracks the H^sigma norm.
inline PersistenceCheck persistence_check(CauchyProblem pb, double factor = 10.0, int record_every = 8)
{
    detail::require(factor >= 1.0, "persistence: factor must be >= 1");
    pb.T *= factor;
    const Trajectory tr = splitting_solve(pb, record_every);
    PersistenceCheck out;
    out.horizon = pb.T;
    const double h0 = sobolev_norm(pb.u0, pb.sigma);
    for (const auto& u : tr.states) {
        const double v = sobolev_norm(u, pb.sigma);
        if (!std::isfinite(v)) out.finite = false;
        out.max_hsigma_ratio = std::max(out.max_hsigma_ratio, h0 > 0.0 ? v / h0 : 0.0);
    }
    return out;
}

} // namespace grushin
