#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>

#include "admissibility.hpp"
#include "cutoff.hpp"
#include "error.hpp"

namespace grushin {

using cd = std::complex<double>;

/// K(t, Y) = int e^{-i Y.eta + i t |eta|^sigma} chi(|eta|) d eta over R^d.
struct KernelQuery {
    int d = 1;
    double sigma = 2.0;
    double t = 0.0;
    std::vector<double> Y;  // empty means the origin
    DyadicCutoff chi{};

    void validate() const
    {
        detail::require(d >= 1, "kernel: dimension must be >= 1");
        detail::require(sigma >= 1.0 && sigma <= 2.0, "kernel: sigma must lie in [1, 2]");
        detail::require(t >= 0.0 && std::isfinite(t), "kernel: t must be finite and >= 0");
        detail::require(Y.empty() || static_cast<int>(Y.size()) == d, "kernel: offset has wrong dimension");
        detail::require(chi.support_lo() >= 0.5 && chi.support_hi() <= 2.5, "kernel: cutoff must live in [1/2, 5/2]");
    }

    double offset_norm() const
    {
        double s = 0.0;
        for (double v : Y) s += v * v;
        return std::sqrt(s);
    }
};

struct KernelValue {
    cd value;
    double error = 0.0;   // |T_n - T_{n/2}|
    long nodes = 0;
};

struct KernelOptions {
    double rel_tol = 1e-6;
    double abs_floor = 1e-12;  // roundoff floor for nearly vanishing kernels
    long max_nodes = 1L << 22;
};

/// Fourier transform of the unit sphere's surface measure in R^d at radius s.
inline double sphere_transform(int d, double s)
{
    detail::require(d >= 1, "sphere transform: dimension must be >= 1");
    s = std::abs(s);
    if (d == 1) return 2.0 * std::cos(s);
    if (d == 3) return s < 1e-8 ? 4.0 * std::numbers::pi * (1.0 - s * s / 6.0) : 4.0 * std::numbers::pi * std::sin(s) / s;
    const double nu = 0.5 * d - 1.0;
    if (s < 1e-8) return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
    return std::pow(2.0 * std::numbers::pi, 0.5 * d) * std::pow(s, -nu) * boost::math::cyl_bessel_j(nu, s);
}

struct LegendreRule {
    std::vector<double> nodes, weights;
};

/// Gauss-Legendre rule on [-1, 1]: Newton on the three-term recurrence
/// from Chebyshev-like initial guesses, O(n^2).
inline LegendreRule gauss_legendre(int n)
{
    detail::require(n >= 1, "gauss_legendre: need n >= 1");
    LegendreRule r;
    r.nodes.assign(n, 0.0);
    r.weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

/// Same transform by direct quadrature over the sphere:
/// |S^{d-2}| int_0^pi e^{-i s cos a} sin^{d-2} a da, Gauss-Legendre in a.
inline double sphere_transform_quadrature(int d, double s)
{
    detail::require(d >= 2, "sphere quadrature: dimension must be >= 2");
    const int n = 64 * (2 + static_cast<int>(std::abs(s) / 32.0));
    thread_local std::map<int, LegendreRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
    const LegendreRule& rule = it->second;
    const double pi = std::numbers::pi;
    const double area = 2.0 * std::pow(pi, 0.5 * (d - 1)) / std::tgamma(0.5 * (d - 1));
    cd acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = 0.5 * pi * (rule.nodes[i] + 1.0);
        acc += rule.weights[i] * std::exp(cd(0.0, -s * std::cos(a))) * std::pow(std::sin(a), d - 2);
    }
    // the imaginary part cancels by symmetry a -> pi - a
    return area * 0.5 * pi * acc.real();
}

namespace detail {

inline long kernel_start_nodes(const KernelQuery& q)
{
    const double lo = q.chi.support_lo(), hi = q.chi.support_hi();
    const double rate = q.sigma * q.t * std::pow(hi, q.sigma - 1.0) + q.offset_norm();
    const double n = std::max(40.0 * (1.0 + q.t * hi), 8.0 * rate * (hi - lo) + 64.0);
    long m = 64;
    while (m < n) m *= 2;
    return m;
}

inline cd radial_trapezoid(const KernelQuery& q, long n, cd* half)
{
    const double lo = q.chi.support_lo(), hi = q.chi.support_hi();
    const double h = (hi - lo) / static_cast<double>(n);
    const double s = q.offset_norm();
    cd full = 0.0, even = 0.0;
    for (long j = 1; j < n; ++j) {
        const double rho = lo + h * static_cast<double>(j);
        const double w = q.chi(rho);
        if (w == 0.0) continue;
        const double amp = std::pow(rho, q.d - 1) * w * sphere_transform(q.d, rho * s);
        const double phase = q.t * (q.sigma == 2.0 ? rho * rho : q.sigma == 1.0 ? rho : std::pow(rho, q.sigma));
        const cd f = amp * cd(std::cos(phase), std::sin(phase));
        full += f;
        if (j % 2 == 0) even += f;
    }
    *half = 2.0 * h * even;
    return h * full;
}

} // namespace detail

/// Radial reduction of K(t, Y): int rho^{d-1} e^{i t rho^sigma} chi(rho)
/// sphere_transform(rho |Y|) d rho, trapezoid with node doubling.
inline KernelValue kernel(const KernelQuery& q, const KernelOptions& opt = {})
{
    q.validate();
    long n = detail::kernel_start_nodes(q);
    double last_err = 0.0;
    while (n <= opt.max_nodes) {
        cd half;
        const cd full = detail::radial_trapezoid(q, n, &half);
        const double err = std::abs(full - half);
        if (err <= std::max(opt.rel_tol * std::abs(full), opt.abs_floor)) return {full, err, n};
        last_err = err;
        n *= 2;
    }
    throw NumericalFailure("kernel underresolved: error estimate " + std::to_string(last_err) + " at " +
                           std::to_string(n / 2) + " nodes (t = " + std::to_string(q.t) + ")");
}

namespace detail {

inline double kernel_abs_at(KernelQuery q, double s, const KernelOptions& opt)
{
    q.Y.assign(q.d, 0.0);
    q.Y[0] = s;
    return std::abs(kernel(q, opt).value);
}

} // namespace detail

/// Direct tensor-product trapezoid over the box [-c, c]^d, n nodes per axis.
/// Independent of the radial reduction; practical for d <= 2 and small t.
inline cd kernel_tensor(const KernelQuery& q, int n)
{
    q.validate();
    detail::require(n >= 2, "kernel_tensor: need n >= 2");
    const double c = q.chi.support_hi();
    const double h = 2.0 * c / n;
    std::vector<double> Y = q.Y.empty() ? std::vector<double>(q.d, 0.0) : q.Y;
    long total = 1;
    for (int a = 0; a < q.d; ++a) total *= n;
    cd acc = 0.0;
    for (long flat = 0; flat < total; ++flat) {
        long rest = flat;
        double r2 = 0.0, dot = 0.0;
        for (int a = 0; a < q.d; ++a) {
            const double eta = -c + h * static_cast<double>(rest % n);
            rest /= n;
            r2 += eta * eta;
            dot += eta * Y[a];
        }
        const double rho = std::sqrt(r2);
        const double w = q.chi(rho);
        if (w == 0.0) continue;
        acc += w * std::exp(cd(0.0, q.t * std::pow(rho, q.sigma) - dot));
    }
    return acc * std::pow(h, q.d);
}

struct SupResult {
    double sup = 0.0;
    double offset = 0.0;  // |Y| where the sup was found
    int evaluations = 0;
};

/// sup over |Y| <= 4t of |K(t, Y)| (the kernel is radial in Y): candidates
/// at the critical radii sigma t rho^{sigma-1} plus a coarse grid, then
/// nested local sampling around the best few.
inline SupResult kernel_sup(int d, double sigma, double t, const DyadicCutoff& chi = DyadicCutoff(), int density = 1,
                            const KernelOptions& opt = {})
{
    detail::require(density >= 1, "kernel_sup: density must be >= 1");
    const KernelQuery q{d, sigma, t, std::vector<double>(d, 0.0), chi};
    const double s_max = 4.0 * t;
    std::vector<double> cand{0.0};
    const int n_crit = 24 * density, n_grid = 32 * density;
    for (int k = 0; k <= n_crit; ++k) {
        const double rho = chi.support_lo() + (chi.support_hi() - chi.support_lo()) * k / n_crit;
        cand.push_back(std::min(s_max, sigma * t * std::pow(rho, sigma - 1.0)));
    }
    for (int k = 1; k <= n_grid; ++k) cand.push_back(s_max * k / n_grid);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               cand.end());

    std::vector<double> val(cand.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(cand.size()); ++i) val[i] = detail::kernel_abs_at(q, cand[i], opt);

    SupResult res;
    res.evaluations = static_cast<int>(cand.size());
    std::vector<std::size_t> order(cand.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] > val[b]; });
    res.sup = val[order[0]];
    res.offset = cand[order[0]];

    const int keep = std::min<int>(2, static_cast<int>(order.size()));
    for (int c = 0; c < keep; ++c) {
        const std::size_t i = order[c];
        double center = cand[i], best = val[i];
        double h = 1.0;
        if (i > 0) h = std::max(h, center - cand[i - 1]);
        if (i + 1 < cand.size()) h = std::max(h, cand[i + 1] - center);
        h = std::min(h, s_max > 0 ? s_max / 4 : 1.0);
        while (h > 0.1) {
            const int m = 12;
            std::vector<double> ss, vv(m + 1);
            for (int k = 0; k <= m; ++k) ss.push_back(std::clamp(center - h + 2.0 * h * k / m, 0.0, s_max));
#pragma omp parallel for schedule(dynamic)
            for (int k = 0; k <= m; ++k) vv[k] = detail::kernel_abs_at(q, ss[k], opt);
            res.evaluations += m + 1;
            for (int k = 0; k <= m; ++k) {
                if (vv[k] > best) {
                    best = vv[k];
                    center = ss[k];
                }
            }
            h /= 4.0;
        }
        if (best > res.sup) {
            res.sup = best;
            res.offset = center;
        }
    }
    return res;
}

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> t;
    std::vector<double> sup;
    bool monotone = true;  // envelope nonincreasing within 5%
    int widened = 0;       // number of t values re-searched on a denser grid
};

/// Least-squares slope of log y against log x.
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    detail::require(x.size() == y.size() && x.size() >= 2, "loglog fit: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        detail::require(x[i] > 0 && y[i] > 0, "loglog fit: values must be positive");
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

inline std::vector<double> log_grid(double lo, double hi, int points)
{
    detail::require(lo > 0 && hi > lo && points >= 2, "log grid: need 0 < lo < hi and >= 2 points");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    return g;
}

/// Fitted exponent of sup_Y |K(t, Y)| over t_grid. Points with t <= 10 are
/// transient and dropped from the fit. A non-monotone envelope triggers one denser search.
inline DecayFit fit_decay(double sigma, int d, const std::vector<double>& t_grid, const DyadicCutoff& chi = DyadicCutoff())
{
    detail::require(t_grid.size() >= 2 && t_grid.back() / t_grid.front() >= 99.9,
                    "fit_decay: time grid must span two decades");
    DecayFit fit;
    for (double t : t_grid)
        if (t > 10.0) fit.t.push_back(t);
    detail::require(fit.t.size() >= 2, "fit_decay: need >= 2 times above 10");
    for (double t : fit.t) fit.sup.push_back(kernel_sup(d, sigma, t, chi).sup);
    for (std::size_t i = 1; i < fit.sup.size(); ++i) {
        if (fit.sup[i] > 1.05 * fit.sup[i - 1]) {
            fit.sup[i - 1] = std::max(fit.sup[i - 1], kernel_sup(d, sigma, fit.t[i - 1], chi, 3).sup);
            ++fit.widened;
        }
    }
    for (std::size_t i = 1; i < fit.sup.size(); ++i)
        if (fit.sup[i] > 1.05 * fit.sup[i - 1]) fit.monotone = false;
    auto [s, c] = loglog_fit(fit.t, fit.sup);
    fit.slope = s;
    fit.intercept = c;
    return fit;
}

/// Predicted decay exponent of the kernel: -d/2 for sigma > 1, -(d-1)/2 at sigma = 1.
inline double predicted_decay(double sigma, int d) { return sigma > 1.0 ? -0.5 * d : -0.5 * (d - 1); }

/// |det Hess(-|eta|^sigma)| by central differences with step h.
inline double phase_hessian_det_fd(const std::vector<double>& eta, double sigma, double h = 1e-4)
{
    const int d = static_cast<int>(eta.size());
    auto phi = [&](const std::vector<double>& v) {
        double r2 = 0.0;
        for (double a : v) r2 += a * a;
        return -std::pow(r2, 0.5 * sigma);
    };
    Eigen::MatrixXd H(d, d);
    std::vector<double> v = eta;
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            auto at = [&](double di, double dj) {
                v = eta;
                v[i] += di;
                v[j] += dj;
                return phi(v);
            };
            double val;
            if (i == j)
                val = (at(h, 0) - 2.0 * phi(eta) + at(-h, 0)) / (h * h);
            else
                val = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
            H(i, j) = H(j, i) = val;
        }
    }
    return std::abs(H.determinant());
}

inline double phase_hessian_det_formula(const std::vector<double>& eta, double sigma)
{
    double r2 = 0.0;
    for (double a : eta) r2 += a * a;
    const int d = static_cast<int>(eta.size());
    return std::pow(sigma, d) * (sigma - 1.0) * std::pow(r2, 0.5 * d * (sigma - 2.0));
}

/// Decay exponent of the envelope max_{[s, s+2 pi]} |sphere transform|,
/// the transform computed by direct quadrature over the sphere.
inline DecayFit fit_surface_decay(int d, const std::vector<double>& s_grid)
{
    DecayFit fit;
    fit.t = s_grid;
    for (double s : s_grid) {
        double env = 0.0;
        for (int k = 0; k <= 64; ++k)
            env = std::max(env, std::abs(sphere_transform_quadrature(d, s + 2.0 * std::numbers::pi * k / 64)));
        fit.sup.push_back(env);
    }
    auto [a, b] = loglog_fit(fit.t, fit.sup);
    fit.slope = a;
    fit.intercept = b;
    return fit;
}

/// Inputs of the mode-wise constants.
struct ModeConstantSpec {
    double sigma = 1.0;
    int d1 = 1;
    int d2 = 2;
    Exponent p = Exponent::finite(6.0);
    Exponent q = Exponent::finite(2.0);
    Exponent r = Exponent::finite(6.0);
    GeometryCase gcase = GeometryCase::euclidean;
    double epsilon = 0.1;
};

/// C(A, m): A^{gamma/2 + eps/4} / (m+1)^{d2(1/2-1/r)} (Euclidean); the
/// compact case adds (sigma-1)/p to the A power and subtracts 1/p from the m power.
inline double modewise_constant(double A, int m, const ModeConstantSpec& s)
{
    detail::require(A >= 1.0 && m >= 0, "modewise constant: need A >= 1, m >= 0");
    const double g = gamma(s.q, s.r, s.sigma, s.d1, s.d2);
    const double a = s.d2 * (0.5 - s.r.reciprocal());
    double ap = 0.5 * g + 0.25 * s.epsilon, mp = a;
    if (s.gcase == GeometryCase::compact) {
        ap += (s.sigma - 1.0) * s.p.reciprocal();
        mp -= s.p.reciprocal();
    }
    return std::pow(A, ap) / std::pow(m + 1.0, mp);
}

/// C'(A, m) of the mode-wise estimate; sigma = 1 requires d2 >= 2.
inline double modewise_constant_prime(double A, int m, const ModeConstantSpec& s)
{
    detail::require(A >= 1.0 && m >= 0, "modewise constant: need A >= 1, m >= 0");
    const double a = 0.5 - s.r.reciprocal();
    double base;
    if (s.sigma == 1.0) {
        detail::require(s.d2 >= 2, "modewise constant: sigma = 1 needs d2 >= 2");
        base = std::pow(A, 0.5 * (s.d2 + 1)) / std::pow(m + 1.0, s.d2);
    } else {
        base = std::pow(A, 0.5 * s.d2 * (2.0 - s.sigma)) / std::pow(m + 1.0, s.d2);
    }
    return std::pow(base, a);
}

struct ModeSum {
    double partial = 0.0;     // sum over m < terms
    double tail_bound = 0.0;  // integral bound on the rest
    double total() const { return partial + tail_bound; }
    double reference = 0.0;   // A^{loss + eps/2}
    double ratio() const { return total() / reference; }
};

/// sum_m C(A, m)^2 by partial sum plus the integral tail bound; reference is
/// A^{gamma + eps/2}, with the compact loss 2(sigma-1)/p added in that case.
inline ModeSum mode_constant_sum(double A, const ModeConstantSpec& s, int terms = 4096)
{
    const double a = s.d2 * (0.5 - s.r.reciprocal()) - (s.gcase == GeometryCase::compact ? s.p.reciprocal() : 0.0);
    if (!(2.0 * a > 1.0)) throw InvalidInput("mode sum diverges: 2 (m power) = " + std::to_string(2.0 * a) + " <= 1");
    ModeSum out;
    for (int m = 0; m < terms; ++m) {
        const double c = modewise_constant(A, m, s);
        out.partial += c * c;
    }
    const double c0 = modewise_constant(A, 0, s);
    // sum_{m >= terms} (m+1)^{-2a} <= int_{terms}^inf x^{-2a} dx
    out.tail_bound = c0 * c0 * std::pow(static_cast<double>(terms), 1.0 - 2.0 * a) / (2.0 * a - 1.0);
    double loss = gamma(s.q, s.r, s.sigma, s.d1, s.d2);
    if (s.gcase == GeometryCase::compact) loss += 2.0 * (s.sigma - 1.0) * s.p.reciprocal();
    out.reference = std::pow(A, loss + 0.5 * s.epsilon);
    return out;
}

} // namespace grushin
