#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cutoff.hpp"
#include "dyadic.hpp"
#include "error.hpp"
#include "random.hpp"
#include "spectral_field.hpp"

namespace grushin {

enum class SymbolKind { inhomogeneous, homogeneous };

/// u_m: keep Hermite mode m only.
inline SpectralField project_mode(const SpectralField& u, int m)
{
    const FieldSpace& sp = u.space();
    detail::require(m >= 0 && m <= sp.m_max(), "project_mode: m out of range");
    SpectralField out(u.space_ptr());
    const HermiteBasis& b = sp.basis();
    for (std::size_t p = 0; p < sp.lattice_size(); ++p)
        for (std::size_t s = b.slot_begin(m); s < b.slot_end(m); ++s) out.at(p, s) = u(p, s);
    return out;
}

/// chi(|D_y| / I) u_m for any radial profile.
template <class Profile>
SpectralField apply_cutoff(const SpectralField& u, int m, double I, const Profile& profile)
{
    const FieldSpace& sp = u.space();
    detail::require(m >= 0 && m <= sp.m_max(), "apply_cutoff: m out of range");
    detail::require(I > 0.0, "apply_cutoff: dyadic scale must be positive");
    SpectralField out(u.space_ptr());
    const HermiteBasis& b = sp.basis();
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        const double w = profile(sp.eta_norm(p) / I);
        if (w == 0.0) continue;
        for (std::size_t s = b.slot_begin(m); s < b.slot_end(m); ++s) out.at(p, s) = w * u(p, s);
    }
    return out;
}

/// u_A = sum over (m, I) in block A of chi(|D_y|/I) u_m.
inline SpectralField project_block(const SpectralField& u, double A, const DyadicCutoff& chi = DyadicCutoff())
{
    detail::require(is_power_of_two(A) && A >= 1.0, "project_block: A must be a power of two >= 1");
    const FieldSpace& sp = u.space();
    const HermiteBasis& b = sp.basis();
    SpectralField out(u.space_ptr());
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        const double eta = sp.eta_norm(p);
        for (int m = 0; m <= sp.m_max(); ++m) {
            const double w = block_weight(m, eta, A, sp.d1(), chi);
            if (w == 0.0) continue;
            for (std::size_t s = b.slot_begin(m); s < b.slot_end(m); ++s) out.at(p, s) = w * u(p, s);
        }
    }
    return out;
}

/// Blocks A that can carry content of this field space.
inline std::vector<double> representable_blocks(const FieldSpace& sp, const DyadicCutoff& chi = DyadicCutoff())
{
    double top = 0.0;
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) top = std::max(top, sp.eta_norm(p));
    const double I_max = top / chi.support_lo();
    const double A_max = block_of(sp.m_max(), I_max, sp.d1());
    std::vector<double> out;
    for (double A = 1.0; A <= A_max; A *= 2.0) out.push_back(A);
    return out;
}

namespace detail {

inline double symbol_power(double lambda, double s, SymbolKind kind, bool zero_fiber)
{
    if (kind == SymbolKind::inhomogeneous) return std::pow(1.0 + lambda, s);
    if (zero_fiber && s < 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(lambda, s);
}

} // namespace detail

/// ||u||_{H^s}: sqrt(sum (1 + (2m+d1)|eta|)^s |f|^2), or the homogeneous
/// version, which ignores the zero fiber for s > 0.
inline double sobolev_norm(const SpectralField& u, double s, SymbolKind kind = SymbolKind::inhomogeneous)
{
    const FieldSpace& sp = u.space();
    const std::size_t ns = sp.slot_count();
    double total = 0.0;
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        const bool zf = sp.is_zero_fiber(p);
        for (std::size_t q = 0; q < ns; ++q) {
            const double a = std::norm(u(p, q));
            if (a == 0.0) continue;
            if (kind == SymbolKind::homogeneous && zf) {
                if (s < 0.0) throw NumericalFailure("singular fiber: homogeneous negative power on eta = 0 content");
                if (s > 0.0) continue;
            }
            total += detail::symbol_power(sp.symbol(p, q), s, kind, zf) * a;
        }
    }
    return std::sqrt(total);
}

/// Multiplies by (1 + (2m+d1)|eta|)^{s/2} or ((2m+d1)|eta|)^{s/2}.
inline SpectralField fractional_symbol(const SpectralField& u, double s, SymbolKind kind = SymbolKind::inhomogeneous)
{
    const FieldSpace& sp = u.space();
    const std::size_t ns = sp.slot_count();
    SpectralField out(u.space_ptr());
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        const bool zf = sp.is_zero_fiber(p);
        for (std::size_t q = 0; q < ns; ++q) {
            const cd v = u(p, q);
            if (v == cd(0)) continue;
            if (kind == SymbolKind::homogeneous && zf && s < 0.0)
                throw NumericalFailure("singular fiber: homogeneous negative power on eta = 0 content");
            out.at(p, q) = detail::symbol_power(sp.symbol(p, q), 0.5 * s, kind, zf) * v;
        }
    }
    out.label = u.label;
    out.seed = u.seed;
    return out;
}

/// d/dy_axis: multiplication by i eta_axis.
inline SpectralField d_dy(const SpectralField& u, int axis)
{
    const FieldSpace& sp = u.space();
    detail::require(axis >= 0 && axis < sp.d2(), "d_dy: axis out of range");
    SpectralField out(u.space_ptr());
    const double step = sp.geometry().lattice_step();
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        const double eta = step * sp.geometry().lattice_point(p)[static_cast<std::size_t>(axis)];
        for (std::size_t q = 0; q < sp.slot_count(); ++q) out.at(p, q) = cd(0, eta) * u(p, q);
    }
    return out;
}

namespace detail {

// Ladder action on x_axis inside each fiber: lowering and raising weights are
// sqrt(a/2) and sign * sqrt((a+1)/2), times scale^{power}.
inline SpectralField x_ladder(const SpectralField& u, int axis, double sign, double power, const char* what)
{
    const FieldSpace& sp = u.space();
    detail::require(axis >= 0 && axis < sp.d1(), std::string(what) + ": axis out of range");
    const HermiteBasis& b = sp.basis();
    SpectralField out(u.space_ptr());
    const auto ax = static_cast<std::size_t>(axis);
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        const double f = std::pow(sp.fiber(p).scale, power);
        for (std::size_t q = 0; q < sp.slot_count(); ++q) {
            const cd v = u(p, q);
            if (v == cd(0)) continue;
            MultiIndex a = b.multi_index(q);
            const int n = a[ax];
            if (n > 0) {
                a[ax] = n - 1;
                out.at(p, *b.find_slot(a)) += f * std::sqrt(0.5 * n) * v;
            }
            a[ax] = n + 1;
            auto up = b.find_slot(a);
            if (!up) throw NumericalFailure(std::string(what) + ": mode overflow beyond m_max");
            out.at(p, *up) += sign * f * std::sqrt(0.5 * (n + 1)) * v;
        }
    }
    return out;
}

} // namespace detail

/// d/dx_axis, exact in coefficient space.
inline SpectralField d_dx(const SpectralField& u, int axis) { return detail::x_ladder(u, axis, -1.0, 0.5, "d_dx"); }

/// Multiplication by x_axis, exact in coefficient space.
inline SpectralField mul_x(const SpectralField& u, int axis) { return detail::x_ladder(u, axis, 1.0, -0.5, "mul_x"); }

/// Complex conjugate: the coefficient at -eta is conj f(eta).
inline SpectralField conjugate(const SpectralField& u)
{
    const FieldSpace& sp = u.space();
    const Geometry& g = sp.geometry();
    SpectralField out(u.space_ptr());
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        auto k = g.lattice_point(p);
        for (int& v : k) v = -v;
        const std::size_t mp = g.lattice_index(k);
        for (std::size_t q = 0; q < sp.slot_count(); ++q) out.at(mp, q) = std::conj(u(p, q));
    }
    return out;
}

/// ||u||_{L^2_y H^s_x}: the Bessel potential (1 - Delta_x)^{s/2} applied
/// fiberwise, with -Delta_x represented on a padded Hermite space.
inline double x_sobolev_norm(const SpectralField& u, double s, int pad = -1)
{
    const FieldSpace& sp = u.space();
    const HermiteBasis& b = sp.basis();
    const int d1 = sp.d1();
    if (pad < 0) pad = d1 == 1 ? 64 : (d1 == 2 ? 24 : 8);
    const int N = sp.m_max() + 1 + pad;
    // -d^2/dxi^2 restricted to h_0..h_{N-1}: D^T D with D the (N+1) x N ladder.
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N + 1, N);
    for (int n = 0; n < N; ++n) {
        if (n > 0) D(n - 1, n) = std::sqrt(0.5 * n);
        D(n + 1, n) = -std::sqrt(0.5 * (n + 1));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D.transpose() * D);
    const Eigen::MatrixXd Qt = eig.eigenvectors().transpose();
    const Eigen::VectorXd lam = eig.eigenvalues();
    const std::size_t side = static_cast<std::size_t>(N);
    double total = 0.0;
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        if (detail::fiber_is_empty(u, p)) continue;
        const double scale = sp.fiber(p).scale;
        std::vector<cd> box(detail::ipow(side, d1), cd(0));
        for (std::size_t q = 0; q < sp.slot_count(); ++q) {
            std::size_t idx = 0;
            for (int a : b.multi_index(q)) idx = idx * side + static_cast<std::size_t>(a);
            box[idx] = u(p, q);
        }
        auto g = detail::apply_each_axis(box, d1, Qt);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i] == cd(0)) continue;
            double ev = 0.0;
            std::size_t rest = i;
            for (int j = 0; j < d1; ++j) {
                ev += lam(static_cast<Eigen::Index>(rest % side));
                rest /= side;
            }
            total += std::pow(1.0 + scale * ev, s) * std::norm(g[i]);
        }
    }
    return std::sqrt(total);
}

/// (-Delta_G u, u) = sum (2m+d1)|eta| |f|^2.
inline double grushin_energy(const SpectralField& u) { return std::pow(sobolev_norm(u, 1.0, SymbolKind::homogeneous), 2.0); }

/// I.i.d. complex Gaussian coefficients on the coefficients selected by keep(p, slot).
inline SpectralField random_field(std::shared_ptr<const FieldSpace> space, Rng& rng,
                                  const std::function<bool(std::size_t, std::size_t)>& keep = {})
{
    SpectralField u(std::move(space));
    const FieldSpace& sp = u.space();
    for (std::size_t p = 0; p < sp.lattice_size(); ++p)
        for (std::size_t q = 0; q < sp.slot_count(); ++q)
            if (!keep || keep(p, q)) u.at(p, q) = complex_gaussian(rng);
    return u;
}

} // namespace grushin

namespace grushin {

/// Empirical sup over random fields of ||u||_{L^inf} / ||u||_{H^s} (grid max).
inline double sobolev_embedding_constant(std::shared_ptr<const FieldSpace> space, double s, int samples, std::uint64_t seed)
{
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        SpectralField u = random_field(space, rng);
        best = std::max(best, grid_linf_norm(synthesize(u)) / sobolev_norm(u, s));
    }
    return best;
}

} // namespace grushin
