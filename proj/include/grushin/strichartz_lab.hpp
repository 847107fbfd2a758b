#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "admissibility.hpp"
#include "dispersion_probe.hpp"
#include "dyadic.hpp"
#include "error.hpp"
#include "mixed_norm.hpp"
#include "propagators.hpp"
#include "random.hpp"
#include "spectral_ops.hpp"

namespace grushin {

/// e^{it Delta_G} for sigma = 1, e^{it (-Delta_G)^sigma} otherwise.
inline Flow default_flow(double sigma) { return sigma > 1.0 ? Flow::fractional : Flow::schrodinger; }

struct TimeSampling {
    int per_period = 64;   // samples per period of the fastest phase
    int min_samples = 16;  // intervals, not points
};

/// n + 1 equispaced times on [0, T].
inline std::vector<double> uniform_times(double T, int n)
{
    detail::require(T > 0.0 && n >= 1, "time grid: need T > 0 and n >= 1");
    std::vector<double> t(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) t[i] = T * i / n;
    return t;
}

inline int time_intervals(double T, double max_rate, const TimeSampling& ts)
{
    const double periods = T * max_rate / (2.0 * std::numbers::pi);
    return std::max(ts.min_samples, static_cast<int>(std::ceil(ts.per_period * periods)));
}

/// ||e^{...} u(t)||_{L^q_x L^r_y} at each time.
inline std::vector<double> slice_norms(const SpectralField& u0, const LinearFlow& flow, const std::vector<double>& times,
                                       Exponent q, Exponent r)
{
    std::vector<double> out(times.size());
    SpectralField ut(u0.space_ptr());
    for (std::size_t n = 0; n < times.size(); ++n) {
        flow.apply(u0, times[n], ut);
        out[n] = slice_norm(synthesize(ut), q, r);
    }
    return out;
}

struct QuotientParts {
    double numerator = 0.0;
    double denominator = 0.0;
    double quotient = 0.0;
    int time_intervals = 0;
};

/// ||e^{it Delta_G} u0||_{L^p_T L^q_x L^r_y} / ||u0||_{H^{gamma+eps}}.
inline QuotientParts strichartz_quotient(const SpectralField& u0, const AdmissibleTriple& triple, double epsilon, double T,
                                         SymbolKind kind = SymbolKind::inhomogeneous, const TimeSampling& ts = {})
{
    detail::require(u0.space().d1() == triple.d1 && u0.space().d2() == triple.d2, "quotient: triple dimensions differ from the field");
    QuotientParts out;
    out.denominator = sobolev_norm(u0, triple.gamma() + epsilon, kind);
    if (!(out.denominator > 0.0)) throw InvalidInput("quotient: zero denominator (u0 vanishes)");
    LinearFlow flow(u0.space(), triple.sigma, default_flow(triple.sigma));
    out.time_intervals = time_intervals(T, flow.max_rate(u0), ts);
    const auto times = uniform_times(T, out.time_intervals);
    out.numerator = time_norm(slice_norms(u0, flow, times, triple.q, triple.r), times, triple.p);
    out.quotient = out.numerator / out.denominator;
    return out;
}

// ---------------------------------------------------------------- blocks

struct BlockExperiment {
    AdmissibleTriple triple{Exponent::finite(6), Exponent::finite(2), Exponent::finite(6), 1.0, 1, 2};
    double epsilon = 0.1;
    int A_max_exp = 8;
    int samples = 32;
    std::uint64_t seed = 1;
    double T = 0.125;
    int K_cap = 24;
    double base_step = 1.0 / 12.0;  // block A uses lattice step A * base_step
    int m_cap = 8;
    double control_shift = 0.5;     // negative control weight gamma - shift
    TimeSampling sampling{};

    void validate() const
    {
        auto v = is_admissible(triple);
        if (!v) throw InvalidInput("block experiment: triple " + triple.str() + " not admissible: " + v.reason);
        detail::require(triple.gcase == GeometryCase::euclidean, "block experiment: only the Euclidean case uses scaled boxes");
        detail::require(samples >= 1 && A_max_exp >= 1 && A_max_exp <= 12, "block experiment: need samples >= 1, 1 <= A_max_exp <= 12");
        detail::require(T > 0.0 && K_cap >= 2 && base_step > 0.0 && m_cap >= 0, "block experiment: bad resolution parameters");
    }
};

struct BlockSample {
    double A = 1.0;
    int sample = 0;
    double numerator = 0.0;
    double l2 = 0.0;
    double sobolev = 0.0;          // ||u||_{H^{gamma+eps}}
    double control_sobolev = 0.0;  // ||u||_{H^{gamma-shift+eps}}
    double quotient = 0.0;
    double control = 0.0;
    double localized = 0.0;        // numerator / (A^{gamma/2+eps/4} ||u||_2)
};

struct BlockSummary {
    double A = 1.0;
    double sup_quotient = 0.0;
    double sup_control = 0.0;
    double sup_localized = 0.0;
    int time_intervals = 0;
};

struct BlockReport {
    std::vector<BlockSample> samples;
    std::vector<BlockSummary> blocks;
    double ratio = 0.0;          // max/min of per-block sup quotients
    double control_slope = 0.0;  // log-log slope of sup control in A
    double localized_ratio = 0.0;
};

inline std::shared_ptr<const FieldSpace> block_space(const BlockExperiment& cfg, double A)
{
    XGrid xg;
    xg.resolve_zero_fiber = false;
    const double L = 2.0 * std::numbers::pi / (A * cfg.base_step);
    return FieldSpace::make(Geometry::box(cfg.triple.d1, cfg.triple.d2, L, cfg.K_cap, xg), cfg.m_cap);
}

/// White noise away from the zero fiber, projected to block A.
inline SpectralField block_datum(std::shared_ptr<const FieldSpace> sp, double A, std::uint64_t seed)
{
    Rng rng(seed);
    const FieldSpace& s = *sp;
    SpectralField u = random_field(sp, rng, [&](std::size_t p, std::size_t) { return !s.is_zero_fiber(p); });
    SpectralField b = project_block(u, A);
    b.seed = seed;
    return b;
}

inline BlockReport run_block_experiment(const BlockExperiment& cfg)
{
    cfg.validate();
    const auto& tr = cfg.triple;
    const double s_main = tr.gamma() + cfg.epsilon;
    const double s_ctrl = tr.gamma() - cfg.control_shift + cfg.epsilon;
    BlockReport rep;
    for (int e = 0; e <= cfg.A_max_exp; ++e) {
        const double A = std::ldexp(1.0, e);
        auto sp = block_space(cfg, A);
        LinearFlow flow(*sp, tr.sigma, default_flow(tr.sigma));
        BlockSummary sum;
        sum.A = A;
        for (int k = 0; k < cfg.samples; ++k) {
            SpectralField u = block_datum(sp, A, derive_seed(cfg.seed, static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(k)));
            if (u.l2_norm() == 0.0) throw NumericalFailure("block experiment: block " + std::to_string(A) + " holds no lattice content");
            const int n = time_intervals(cfg.T, flow.max_rate(u), cfg.sampling);
            const auto times = uniform_times(cfg.T, n);
            BlockSample row;
            row.A = A;
            row.sample = k;
            row.numerator = time_norm(slice_norms(u, flow, times, tr.q, tr.r), times, tr.p);
            row.l2 = u.l2_norm();
            row.sobolev = sobolev_norm(u, s_main);
            row.control_sobolev = sobolev_norm(u, s_ctrl);
            row.quotient = row.numerator / row.sobolev;
            row.control = row.numerator / row.control_sobolev;
            row.localized = row.numerator / (std::pow(A, 0.5 * tr.gamma() + 0.25 * cfg.epsilon) * row.l2);
            sum.sup_quotient = std::max(sum.sup_quotient, row.quotient);
            sum.sup_control = std::max(sum.sup_control, row.control);
            sum.sup_localized = std::max(sum.sup_localized, row.localized);
            sum.time_intervals = std::max(sum.time_intervals, n);
            rep.samples.push_back(row);
        }
        rep.blocks.push_back(sum);
    }
    double lo = 1e300, hi = 0.0, llo = 1e300, lhi = 0.0;
    std::vector<double> As, ctrl;
    for (const auto& b : rep.blocks) {
        lo = std::min(lo, b.sup_quotient);
        hi = std::max(hi, b.sup_quotient);
        llo = std::min(llo, b.sup_localized);
        lhi = std::max(lhi, b.sup_localized);
        As.push_back(b.A);
        ctrl.push_back(b.sup_control);
    }
    rep.ratio = hi / lo;
    rep.localized_ratio = lhi / llo;
    rep.control_slope = loglog_fit(As, ctrl).first;
    return rep;
}

// ---------------------------------------------------------------- scaling

/// Datum u_lambda(x, y) = u(lambda x, lambda^2 y) on the same box, up to the
/// constant lambda^{-d1/2}: coefficient at k moves to lambda^2 k.
inline SpectralField rescale_datum(const SpectralField& u, double lambda)
{
    const FieldSpace& sp = u.space();
    const Geometry& g = sp.geometry();
    detail::require(is_power_of_two(lambda) || is_power_of_two(1.0 / lambda), "rescale: lambda must be a power of two");
    const double l2 = lambda * lambda;
    SpectralField out(u.space_ptr());
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        if (detail::fiber_is_empty(u, p)) continue;
        auto k = g.lattice_point(p);
        for (int& v : k) {
            const double w = v * l2;
            if (w != std::round(w))
                throw InvalidInput("rescaled datum exits resolution budget: frequency not on the common lattice");
            v = static_cast<int>(w);
        }
        if (!g.in_lattice(k)) throw InvalidInput("rescaled datum exits resolution budget: frequency beyond K_max");
        const std::size_t q = g.lattice_index(k);
        for (std::size_t s = 0; s < sp.slot_count(); ++s) out.at(q, s) = u(p, s);
    }
    out.label = u.label;
    out.seed = u.seed;
    return out;
}

struct ScalingResult {
    double lambda = 1.0;
    double quotient = 0.0;         // u on [0, T]
    double quotient_scaled = 0.0;  // u_lambda on [0, T / lambda^{2 sigma}], cell corrected
    double cell_factor = 1.0;      // lambda^{2 d2 (1/r - 1/2)} removed from the raw box quotient
    double deviation = 0.0;        // |scaled / plain - 1|
    // scaling identity broken by p -> p + 1
    double broken_observed = 0.0;  // scaled / plain
    double broken_predicted = 0.0; // lambda^{2 sigma (1/p - 1/(p+1))}
    double broken_deviation = 0.0; // |observed / predicted - 1|
};

/// Homogeneous-weight quotients of u and u_lambda over matching horizons.
/// The rescaled datum lives on the same box, where it is lambda^{2 d2}-fold
/// periodic; the resulting cell factor is divided out.
inline ScalingResult scaling_check(const SpectralField& u0, double lambda, const AdmissibleTriple& triple, double T,
                                   const TimeSampling& ts = {})
{
    detail::require(!triple.p.is_infinite(), "scaling check: needs finite p for the broken control");
    ScalingResult res;
    res.lambda = lambda;
    const SpectralField ul = rescale_datum(u0, lambda);
    const double s = triple.gamma();
    LinearFlow flow(u0.space(), triple.sigma, default_flow(triple.sigma));
    const int n = time_intervals(T, flow.max_rate(u0), ts);
    const double Tl = T / std::pow(lambda, 2.0 * triple.sigma);
    const auto t0 = uniform_times(T, n);
    const auto tl = uniform_times(Tl, n);
    const auto g0 = slice_norms(u0, flow, t0, triple.q, triple.r);
    const auto gl = slice_norms(ul, flow, tl, triple.q, triple.r);
    const double d0 = sobolev_norm(u0, s, SymbolKind::homogeneous);
    const double dl = sobolev_norm(ul, s, SymbolKind::homogeneous);
    if (!(d0 > 0.0)) throw InvalidInput("scaling check: zero denominator");
    res.cell_factor = std::pow(lambda, 2.0 * triple.d2 * (triple.r.reciprocal() - 0.5));
    res.quotient = time_norm(g0, t0, triple.p) / d0;
    res.quotient_scaled = time_norm(gl, tl, triple.p) / dl / res.cell_factor;
    res.deviation = std::abs(res.quotient_scaled / res.quotient - 1.0);
    const Exponent pb = Exponent::finite(triple.p.value() + 1.0);
    const double qb = time_norm(g0, t0, pb) / d0;
    const double qbl = time_norm(gl, tl, pb) / dl / res.cell_factor;
    res.broken_observed = qbl / qb;
    res.broken_predicted = std::pow(lambda, 2.0 * triple.sigma * (triple.p.reciprocal() - pb.reciprocal()));
    res.broken_deviation = std::abs(res.broken_observed / res.broken_predicted - 1.0);
    return res;
}

/// Random datum on |k|_inf <= K0 (k != 0), Hermite modes m <= m0.
inline SpectralField scaling_datum(std::shared_ptr<const FieldSpace> sp, int K0, int m0, std::uint64_t seed)
{
    Rng rng(seed);
    const FieldSpace& s = *sp;
    const Geometry& g = s.geometry();
    auto keep = [&](std::size_t p, std::size_t slot) {
        if (s.is_zero_fiber(p) || s.basis().slot_mode(slot) > m0) return false;
        for (int v : g.lattice_point(p))
            if (std::abs(v) > K0) return false;
        return true;
    };
    SpectralField u = random_field(sp, rng, keep);
    u.seed = seed;
    return u;
}

// ---------------------------------------------------------------- d2 = 1

struct CounterexampleConfig {
    double N = 8.0;
    double T = 1.0;
    int K = 0;           // lattice cutoff; 0 picks ceil(12 N^2)
    int time_samples = 16;
    int x_nodes = 0;     // 0: automatic
};

struct CounterexampleRow {
    double t = 0.0;
    double translation_error = 0.0;  // relative to ||u0||_2
    double l4 = 0.0;
    double linf = 0.0;
};

struct CounterexampleReport {
    std::vector<CounterexampleRow> rows;
    double max_translation_error = 0.0;
    double l4_ratio_min = 1.0, l4_ratio_max = 1.0;
    double linf_drift = 0.0;
    int K = 0;
    std::string verdict;
};

/// Lattice form of N^{-1/2} int_0^inf e^{i y eta - eta x^2 / 2 - eta / N^2} d eta
/// on the 2 pi torus: sum over k = 1..K. Each term is the ground Hermite
/// state of fiber k, so the flow translates it in y at unit speed.
inline std::complex<double> counterexample_profile(double N, int K, double x, double y)
{
    const cd z = std::exp(cd(-0.5 * x * x - 1.0 / (N * N), y));
    const cd zk = std::pow(z, K);
    return z * (1.0 - zk) / (1.0 - z) / std::sqrt(N);
}

inline CounterexampleReport counterexample_d2_1(const CounterexampleConfig& cfg)
{
    detail::require(cfg.N >= 2.0, "counterexample: need N >= 2");
    detail::require(cfg.T > 0.0 && cfg.time_samples >= 1, "counterexample: need T > 0 and time samples >= 1");
    if (cfg.T >= std::numbers::pi)
        throw InvalidInput("counterexample: horizon wraps around the 2 pi torus (need T < L/2 = pi)");
    CounterexampleReport rep;
    rep.K = cfg.K > 0 ? cfg.K : static_cast<int>(std::ceil(12.0 * cfg.N * cfg.N));
    XGrid xg;
    xg.nodes = cfg.x_nodes;
    xg.resolve_zero_fiber = false;
    auto sp = FieldSpace::make(Geometry::torus(1, 1, rep.K, xg, 4 * rep.K + 2), 0);
    // u0 coefficients: fiber k carries N^{-1/2} e^{-k/N^2} e^{-k x^2/2}; with
    // the normalized ground state (k/pi)^{1/4} e^{-k x^2/2} and field scaling
    // |B|^{-1/2} the coefficient is N^{-1/2} e^{-k/N^2} (pi/k)^{1/4} sqrt(2 pi).
    SpectralField u0(sp);
    const Geometry& g = sp->geometry();
    for (std::size_t p = 0; p < sp->lattice_size(); ++p) {
        const int k = g.lattice_point(p)[0];
        if (k < 1) continue;
        u0.at(p, 0) = std::exp(-k / (cfg.N * cfg.N)) * std::pow(std::numbers::pi / k, 0.25) *
                      std::sqrt(2.0 * std::numbers::pi) / std::sqrt(cfg.N);
    }
    LinearFlow flow(*sp, 1.0, Flow::schrodinger);
    const double n0 = u0.l2_norm();
    const auto& xs = sp->x_nodes();
    const auto ys = g.y_nodes();
    const std::size_t ny = ys.size();
    double l4_0 = 0.0, linf_0 = 0.0;
    for (int n = 0; n <= cfg.time_samples; ++n) {
        const double t = cfg.T * n / cfg.time_samples;
        const GridField grid = synthesize(flow(u0, t));
        GridField diff = grid;
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = 0; j < ny; ++j)
                diff.values[i * ny + j] -= counterexample_profile(cfg.N, rep.K, xs[i], ys[j] - t);
        CounterexampleRow row;
        row.t = t;
        row.translation_error = grid_l2_norm(diff) / n0;
        row.l4 = slice_norm(grid, Exponent::finite(4), Exponent::finite(4));
        row.linf = grid_linf_norm(grid);
        if (n == 0) {
            l4_0 = row.l4;
            linf_0 = row.linf;
        }
        rep.max_translation_error = std::max(rep.max_translation_error, row.translation_error);
        rep.l4_ratio_min = std::min(rep.l4_ratio_min, row.l4 / l4_0);
        rep.l4_ratio_max = std::max(rep.l4_ratio_max, row.l4 / l4_0);
        rep.linf_drift = std::max(rep.linf_drift, std::abs(row.linf / linf_0 - 1.0));
        rep.rows.push_back(row);
    }
    const bool ok = rep.max_translation_error <= 1e-3 && rep.l4_ratio_min >= 0.99 && rep.l4_ratio_max <= 1.01;
    rep.verdict = ok ? "non-dispersive confirmed" : "translation identity not reproduced";
    return rep;
}

// ---------------------------------------------------------------- modes

struct ModewiseCheck {
    int m = 0;
    double I = 1.0;
    AdmissibleTriple triple{Exponent::finite(6), Exponent::finite(2), Exponent::finite(6), 1.0, 1, 2};
    double epsilon = 0.0;    // x-derivative loss; only needed at q = inf
    int samples = 16;
    std::uint64_t seed = 1;
    double T = 0.25;         // Euclidean horizon
    double window_c = 1.0;   // compact horizon c / ((m+1) A^{sigma-1})
    int K_cap = 16;
    TimeSampling sampling{};
};

struct ModewiseReport {
    double A = 1.0;
    double T = 0.0;
    double constant = 0.0;            // C'(A, m)
    std::vector<double> quotients;    // numerator / weighted norm
    std::vector<double> running_sup;  // sup over the first 2^j samples
    double sup_quotient = 0.0;
    double sup_over_constant = 0.0;
    double growth_slope = 0.0;        // slope of running sup vs log2(count)
    bool flagged = false;
};

inline std::shared_ptr<const FieldSpace> modewise_space(const ModewiseCheck& c)
{
    XGrid xg;
    xg.resolve_zero_fiber = false;
    const int d1 = c.triple.d1, d2 = c.triple.d2;
    if (c.triple.gcase == GeometryCase::compact) {
        const int K = static_cast<int>(std::ceil(DyadicCutoff().support_hi() * c.I)) + 1;
        detail::require(K <= 96, "modewise check: I too large for the torus lattice budget");
        return FieldSpace::make(Geometry::torus(d1, d2, K, xg), c.m);
    }
    // chi(|eta| / I) support sits on |k| in [5, 16] when the step is I / 8
    const double L = 2.0 * std::numbers::pi / (c.I / 8.0);
    return FieldSpace::make(Geometry::box(d1, d2, L, c.K_cap, xg), c.m);
}

inline ModewiseReport modewise_strichartz_check(const ModewiseCheck& c)
{
    auto v = is_admissible(c.triple);
    if (!v) throw InvalidInput("modewise check: triple " + c.triple.str() + " not admissible: " + v.reason);
    detail::require(c.m >= 0 && c.I > 0.0 && is_power_of_two(c.I) && c.samples >= 1, "modewise check: bad (m, I, samples)");
    const auto& tr = c.triple;
    ModewiseReport rep;
    rep.A = block_of(c.m, c.I, tr.d1);
    ModeConstantSpec ms{tr.sigma, tr.d1, tr.d2, tr.p, tr.q, tr.r, tr.gcase, c.epsilon};
    rep.constant = modewise_constant_prime(rep.A, c.m, ms);
    rep.T = tr.gcase == GeometryCase::compact ? modewise_timescale(c.m, rep.A, tr.sigma, c.window_c) : c.T;
    auto sp = modewise_space(c);
    LinearFlow flow(*sp, tr.sigma, Flow::fractional, c.m);
    const DyadicCutoff chi;
    const double sx = (tr.d1 + c.epsilon) * (0.5 - tr.q.reciprocal());
    for (int k = 0; k < c.samples; ++k) {
        Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(c.m), static_cast<std::uint64_t>(k)));
        const FieldSpace& s = *sp;
        SpectralField um = random_field(sp, rng, [&](std::size_t p, std::size_t slot) {
            return s.basis().slot_mode(slot) == c.m && chi(s.eta_norm(p) / c.I) > 0.0;
        });
        const SpectralField cut = apply_cutoff(um, c.m, c.I, chi);
        const int n = time_intervals(rep.T, flow.max_rate(cut), c.sampling);
        const auto times = uniform_times(rep.T, n);
        const double num = time_norm(slice_norms(cut, flow, times, tr.q, tr.r), times, tr.p);
        const double den = x_sobolev_norm(um, sx);
        rep.quotients.push_back(num / den);
        rep.sup_quotient = std::max(rep.sup_quotient, num / den);
        if (((k + 1) & k) == 0) rep.running_sup.push_back(rep.sup_quotient);
    }
    rep.sup_over_constant = rep.sup_quotient / rep.constant;
    if (rep.running_sup.size() >= 2) {
        std::vector<double> cnt, sup;
        for (std::size_t j = 0; j < rep.running_sup.size(); ++j) {
            cnt.push_back(std::ldexp(1.0, static_cast<int>(j)));
            sup.push_back(rep.running_sup[j]);
        }
        rep.growth_slope = loglog_fit(cnt, sup).first;
        // bounded quantities stop growing; a persistent power law is flagged
        rep.flagged = rep.growth_slope > 0.1 && rep.running_sup.back() > 1.1 * rep.running_sup[rep.running_sup.size() / 2];
    }
    return rep;
}

struct GluingReport {
    int windows = 0;
    double full_norm = 0.0;
    std::vector<double> window_norms;
    double glued = 0.0;          // (sum window^p)^{1/p}
    double triangle_bound = 0.0; // sum of window norms
};

/// L^p_t over [0, T_total] against the windows of length <= T_window that
/// tile it, on one shared time grid.
inline GluingReport gluing_check(const SpectralField& u0, const AdmissibleTriple& tr, double T_total, double T_window,
                                 int intervals_per_window, std::optional<int> frozen = std::nullopt)
{
    detail::require(T_total > 0.0 && T_window > 0.0 && intervals_per_window >= 1, "gluing: bad horizons");
    detail::require(!tr.p.is_infinite(), "gluing: needs finite p");
    GluingReport rep;
    rep.windows = static_cast<int>(std::ceil(T_total / T_window - 1e-12));
    LinearFlow flow(u0.space(), tr.sigma, Flow::fractional, frozen);
    const int n = rep.windows * intervals_per_window;
    const auto times = uniform_times(T_total, n);
    const auto g = slice_norms(u0, flow, times, tr.q, tr.r);
    rep.full_norm = time_norm(g, times, tr.p);
    double acc = 0.0;
    for (int w = 0; w < rep.windows; ++w) {
        const auto b = static_cast<std::ptrdiff_t>(w * intervals_per_window);
        const auto e = b + intervals_per_window + 1;
        std::vector<double> tw(times.begin() + b, times.begin() + e), gw(g.begin() + b, g.begin() + e);
        const double nw = time_norm(gw, tw, tr.p);
        rep.window_norms.push_back(nw);
        rep.triangle_bound += nw;
        acc += std::pow(nw, tr.p.value());
    }
    rep.glued = std::pow(acc, tr.p.reciprocal());
    return rep;
}

} // namespace grushin
