#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "field_space.hpp"

namespace grushin {

/// u(x,y) = |B|^{-1/2} sum_{eta} sum_{m,k} f_{m,k}(eta) h~_{m,k}(x;eta) e^{i eta.y},
/// stored densely as coefficients[lattice * slots + slot].
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(std::shared_ptr<const FieldSpace> space)
        : space_(std::move(space)), c_(space_ ? space_->coefficient_count() : 0, cd(0))
    {
        detail::require(space_ != nullptr, "spectral field: null field space");
    }

    const FieldSpace& space() const { return *space_; }
    const std::shared_ptr<const FieldSpace>& space_ptr() const { return space_; }

    std::size_t index(std::size_t lattice, std::size_t slot) const { return lattice * space_->slot_count() + slot; }
    cd operator()(std::size_t lattice, std::size_t slot) const { return c_[index(lattice, slot)]; }
    cd& at(std::size_t lattice, std::size_t slot) { return c_[index(lattice, slot)]; }

    std::vector<cd>& data() { return c_; }
    const std::vector<cd>& data() const { return c_; }
    std::size_t size() const { return c_.size(); }

    std::size_t nonzero_count() const
    {
        std::size_t n = 0;
        for (const cd& v : c_) n += (v != cd(0)) ? 1 : 0;
        return n;
    }

    double norm2() const
    {
        double s = 0.0;
        for (const cd& v : c_) s += std::norm(v);
        return s;
    }
    double l2_norm() const { return std::sqrt(norm2()); }

    SpectralField& operator+=(const SpectralField& o)
    {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o)
    {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    SpectralField& operator*=(cd a)
    {
        for (cd& v : c_) v *= a;
        return *this;
    }

    void check_same(const SpectralField& o) const
    {
        if (!space_ || !o.space_ || !space_->compatible(*o.space_))
            throw InvalidInput("spectral field: operands live on different geometries");
    }

    std::string label;
    std::uint64_t seed = 0;

private:
    std::shared_ptr<const FieldSpace> space_;
    std::vector<cd> c_;
};

inline SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
inline SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
inline SpectralField operator*(cd s, SpectralField a) { return a *= s; }

inline double distance(const SpectralField& a, const SpectralField& b)
{
    a.check_same(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a.data()[i] - b.data()[i]);
    return std::sqrt(s);
}

inline cd inner(const SpectralField& a, const SpectralField& b)
{
    a.check_same(b);
    cd s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a.data()[i]) * b.data()[i];
    return s;
}

/// Samples on (x nodes)^{d1} x (uniform y grid)^{d2}, values[x * y_size + y].
struct GridField {
    std::shared_ptr<const FieldSpace> space;
    std::vector<cd> values;

    GridField() = default;
    explicit GridField(std::shared_ptr<const FieldSpace> s) : space(std::move(s)), values(space->grid_size(), cd(0)) {}
};

/// Discrete L^2_{x,y} norm of grid samples.
inline double grid_l2_norm(const GridField& g)
{
    const FieldSpace& sp = *g.space;
    const auto& xw = sp.x_weights();
    const std::size_t ny = sp.y_size();
    double s = 0.0;
    for (std::size_t i = 0; i < sp.x_size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < ny; ++j) row += std::norm(g.values[i * ny + j]);
        s += xw[i] * row;
    }
    return std::sqrt(s * sp.y_weight());
}

inline double grid_linf_norm(const GridField& g)
{
    double m = 0.0;
    for (const cd& v : g.values) m = std::max(m, std::abs(v));
    return m;
}

namespace detail {

inline bool fiber_is_empty(const SpectralField& u, std::size_t p)
{
    const std::size_t ns = u.space().slot_count();
    const cd* c = u.data().data() + p * ns;
    for (std::size_t s = 0; s < ns; ++s)
        if (c[s] != cd(0)) return false;
    return true;
}

// x profile of one fiber on the tensor x grid.
inline std::vector<cd> fiber_profile(const SpectralField& u, std::size_t p)
{
    const FieldSpace& sp = u.space();
    const HermiteBasis& b = sp.basis();
    const std::size_t ns = sp.slot_count();
    const cd* c = u.data().data() + p * ns;
    const Eigen::MatrixXd& S = sp.fiber(p).synth;
    if (sp.d1() == 1) {
        std::vector<cd> prof(static_cast<std::size_t>(S.rows()), cd(0));
        for (std::size_t s = 0; s < ns; ++s) {
            if (c[s] == cd(0)) continue;
            const double* col = S.data() + static_cast<std::ptrdiff_t>(s) * S.rows();
            for (std::size_t i = 0; i < prof.size(); ++i) prof[i] += col[i] * c[s];
        }
        return prof;
    }
    std::vector<cd> box(b.box_size(), cd(0));
    for (std::size_t s = 0; s < ns; ++s) box[b.box_index(s)] = c[s];
    return apply_each_axis(box, sp.d1(), S);
}

} // namespace detail

/// Coefficients to grid samples.
inline GridField synthesize(const SpectralField& u)
{
    const FieldSpace& sp = u.space();
    GridField g(u.space_ptr());
    const std::size_t ny = sp.y_size();
    const std::size_t nl = sp.lattice_size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(nl); ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        if (detail::fiber_is_empty(u, p)) continue;
        auto prof = detail::fiber_profile(u, p);
        const std::size_t ys = sp.y_slot(p);
        for (std::size_t i = 0; i < prof.size(); ++i) g.values[i * ny + ys] = prof[i];
    }
    sp.dft().backward(g.values.data());
    const double scale = 1.0 / std::sqrt(sp.geometry().box_volume());
    for (cd& v : g.values) v *= scale;
    return g;
}

/// Grid samples to coefficients (fiberwise weighted least squares in x).
/// Unresolved zero fibers are left empty.
inline SpectralField analyze(const GridField& g)
{
    detail::require(g.space != nullptr, "analyze: grid without geometry");
    const FieldSpace& sp = *g.space;
    if (g.values.size() != sp.grid_size()) {
        throw InvalidInput("analyze: grid has " + std::to_string(g.values.size()) + " samples, geometry expects " +
                           std::to_string(sp.grid_size()));
    }
    std::vector<cd> buf = g.values;
    sp.dft().forward(buf.data());
    const double scale = std::sqrt(sp.geometry().box_volume()) / static_cast<double>(sp.y_size());
    SpectralField u(g.space);
    const HermiteBasis& b = sp.basis();
    const std::size_t ny = sp.y_size(), nx = sp.x_size(), ns = sp.slot_count();
    const std::size_t nl = sp.lattice_size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(nl); ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        if (sp.is_zero_fiber(p) && !sp.geometry().x.resolve_zero_fiber) continue;
        const std::size_t ys = sp.y_slot(p);
        std::vector<cd> prof(nx);
        bool any = false;
        for (std::size_t i = 0; i < nx; ++i) {
            prof[i] = scale * buf[i * ny + ys];
            any = any || prof[i] != cd(0);
        }
        if (!any) continue;
        const Eigen::MatrixXd& P = sp.fiber(p).analysis;
        cd* out = u.data().data() + p * ns;
        if (sp.d1() == 1) {
            for (std::size_t s = 0; s < ns; ++s) {
                cd acc = 0.0;
                for (std::size_t i = 0; i < nx; ++i) acc += P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) * prof[i];
                out[s] = acc;
            }
        } else {
            auto box = detail::apply_each_axis(prof, sp.d1(), P);
            for (std::size_t s = 0; s < ns; ++s) out[s] = box[b.box_index(s)];
        }
    }
    return u;
}

} // namespace grushin
