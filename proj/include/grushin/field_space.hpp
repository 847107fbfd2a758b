#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "error.hpp"
#include "fft.hpp"
#include "geometry.hpp"
#include "hermite_basis.hpp"

namespace grushin {

/// x-direction operators of one |eta| fiber on the physical x grid (1D; the
/// d1-dimensional versions are tensor products).
struct FiberOps {
    double scale = 1.0;        // |eta|, or 1 on the zero fiber
    Eigen::MatrixXd synth;     // n_x x (m_max+1): scale^{1/4} h_a(scale^{1/2} x_i)
    Eigen::MatrixXd analysis;  // (m_max+1) x n_x: weighted least squares inverse
    double defect = 0.0;       // max |Gram - I|
};

namespace detail {

inline FiberOps make_fiber(const std::vector<double>& x, const std::vector<double>& w, double scale, int m_max)
{
    const int n = static_cast<int>(x.size());
    FiberOps f;
    f.scale = scale;
    f.synth.resize(n, m_max + 1);
    std::vector<double> h(static_cast<std::size_t>(m_max) + 1);
    const double root = std::sqrt(scale), pref = std::pow(scale, 0.25);
    for (int i = 0; i < n; ++i) {
        hermite_functions(root * x[static_cast<std::size_t>(i)], m_max, h.data());
        for (int a = 0; a <= m_max; ++a) f.synth(i, a) = pref * h[static_cast<std::size_t>(a)];
    }
    Eigen::MatrixXd sw = f.synth.transpose() * Eigen::Map<const Eigen::VectorXd>(w.data(), n).asDiagonal();
    Eigen::MatrixXd gram = sw * f.synth;
    f.defect = (gram - Eigen::MatrixXd::Identity(m_max + 1, m_max + 1)).cwiseAbs().maxCoeff();
    f.analysis = gram.ldlt().solve(sw);
    return f;
}

struct XRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // Lebesgue weights
};

inline XRule physical_rule(int n, double scale)
{
    auto r = gauss_hermite(n);
    const double s = 1.0 / std::sqrt(scale);
    XRule out;
    out.nodes.resize(r.nodes.size());
    out.weights.resize(r.nodes.size());
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        out.nodes[i] = r.nodes[i] * s;
        out.weights[i] = r.weights[i] * s;
    }
    return out;
}

} // namespace detail

/// Worst Gram defect of an x grid over a set of fiber scales.
inline double x_grid_defect(int nodes, double grid_scale, int m_max, const std::vector<double>& fiber_scales)
{
    auto rule = detail::physical_rule(nodes, grid_scale);
    double worst = 0.0;
    for (double s : fiber_scales) worst = std::max(worst, detail::make_fiber(rule.nodes, rule.weights, s, m_max).defect);
    return worst;
}

/// Smallest node count (growing geometrically) whose Gram defect over the
/// given scales is below tol, for an x grid of scale sqrt(min * max).
inline XGrid choose_x_grid(int m_max, std::vector<double> fiber_scales, double tol = 1e-10, int max_nodes = 4000)
{
    detail::require(!fiber_scales.empty(), "choose_x_grid: no fiber scales");
    std::sort(fiber_scales.begin(), fiber_scales.end());
    fiber_scales.erase(std::unique(fiber_scales.begin(), fiber_scales.end()), fiber_scales.end());
    const double lo = fiber_scales.front(), hi = fiber_scales.back();
    std::vector<double> probe;
    if (fiber_scales.size() <= 12) {
        probe = fiber_scales;
    } else {
        for (int j = 0; j <= 10; ++j) probe.push_back(lo * std::pow(hi / lo, j / 10.0));
    }
    XGrid g;
    g.scale = std::sqrt(lo * hi);
    g.max_defect = tol;
    int n = std::max(2 * (m_max + 1), 8);
    while (n <= max_nodes) {
        if (x_grid_defect(n, g.scale, m_max, probe) <= 0.1 * tol) {
            g.nodes = n;
            return g;
        }
        n = std::max(n + 2, static_cast<int>(std::ceil(n * 1.15)));
    }
    throw NumericalFailure("x-grid underresolved: no grid with <= " + std::to_string(max_nodes) +
                           " nodes reaches Gram defect " + std::to_string(tol));
}

/// Everything fixed by (geometry, m_max): basis, x quadrature, per-fiber
/// operators and DFT plans. Immutable after construction.
class FieldSpace {
public:
    FieldSpace(Geometry geometry, int m_max, int quad_order = 0)
        : geo_(std::move(geometry)), basis_(geo_.d1, m_max, quad_order)
    {
        geo_.validate();
        // Distinct fibers, keyed by |k|^2.
        std::map<std::int64_t, std::size_t> key;
        fiber_of_.resize(geo_.lattice_size());
        std::vector<std::int64_t> norms(geo_.lattice_size());
        for (std::size_t p = 0; p < geo_.lattice_size(); ++p) {
            norms[p] = geo_.k_norm2(p);
            key.emplace(norms[p], 0);
        }
        std::vector<double> scales;
        for (auto& [k2, idx] : key) {
            if (k2 == 0 && !geo_.x.resolve_zero_fiber) continue;
            scales.push_back(k2 == 0 ? 1.0 : geo_.lattice_step() * std::sqrt(static_cast<double>(k2)));
        }
        if (geo_.x.nodes == 0 || geo_.x.scale == 0.0) {
            XGrid picked = choose_x_grid(m_max, scales, geo_.x.max_defect);
            if (geo_.x.scale == 0.0) geo_.x.scale = picked.scale;
            if (geo_.x.nodes == 0) geo_.x.nodes = picked.nodes;
        }
        rule_ = detail::physical_rule(geo_.x.nodes, geo_.x.scale);
        for (auto& [k2, idx] : key) {
            idx = fibers_.size();
            const double s = k2 == 0 ? 1.0 : geo_.lattice_step() * std::sqrt(static_cast<double>(k2));
            fibers_.push_back(detail::make_fiber(rule_.nodes, rule_.weights, s, m_max));
            if (k2 == 0 && !geo_.x.resolve_zero_fiber) continue;
            defect_ = std::max(defect_, fibers_.back().defect);
        }
        for (std::size_t p = 0; p < geo_.lattice_size(); ++p) fiber_of_[p] = key.at(norms[p]);
        if (!(defect_ <= geo_.x.max_defect)) {
            throw NumericalFailure("x-grid underresolved: Gram defect " + std::to_string(defect_) + " with " +
                                   std::to_string(geo_.x.nodes) + " nodes exceeds " + std::to_string(geo_.x.max_defect));
        }
        y_slot_.resize(geo_.lattice_size());
        for (std::size_t p = 0; p < geo_.lattice_size(); ++p) y_slot_[p] = geo_.y_slot(p);
        std::vector<int> dims(static_cast<std::size_t>(geo_.d2), geo_.y_points);
        dft_ = std::make_shared<detail::BatchedDft>(dims, static_cast<int>(x_size()));
        // Tensor x weights.
        xw_.assign(x_size(), 1.0);
        const std::size_t n = rule_.nodes.size();
        for (std::size_t i = 0; i < x_size(); ++i) {
            std::size_t rest = i;
            for (int j = 0; j < geo_.d1; ++j) {
                xw_[i] *= rule_.weights[rest % n];
                rest /= n;
            }
        }
    }

    static std::shared_ptr<const FieldSpace> make(Geometry g, int m_max, int quad_order = 0)
    {
        return std::make_shared<const FieldSpace>(std::move(g), m_max, quad_order);
    }

    const Geometry& geometry() const { return geo_; }
    const HermiteBasis& basis() const { return basis_; }
    int m_max() const { return basis_.m_max(); }
    int d1() const { return geo_.d1; }
    int d2() const { return geo_.d2; }

    std::size_t lattice_size() const { return geo_.lattice_size(); }
    std::size_t slot_count() const { return basis_.mode_count(); }
    std::size_t coefficient_count() const { return lattice_size() * slot_count(); }

    double eta_norm(std::size_t p) const { return fibers_[fiber_of_[p]].scale * (p == geo_.zero_index() ? 0.0 : 1.0); }
    bool is_zero_fiber(std::size_t p) const { return p == geo_.zero_index(); }
    const FiberOps& fiber(std::size_t p) const { return fibers_[fiber_of_[p]]; }
    std::size_t fiber_id(std::size_t p) const { return fiber_of_[p]; }
    std::size_t fiber_count() const { return fibers_.size(); }
    const FiberOps& fiber_by_id(std::size_t id) const { return fibers_[id]; }
    std::size_t y_slot(std::size_t p) const { return y_slot_[p]; }

    /// Symbol (2m+d1)|eta| of a coefficient.
    double symbol(std::size_t p, std::size_t slot) const { return basis_.lambda(basis_.slot_mode(slot)) * eta_norm(p); }

    const std::vector<double>& x_nodes() const { return rule_.nodes; }
    const std::vector<double>& x_weights_1d() const { return rule_.weights; }
    /// Lebesgue weights of the tensor x grid (row-major, axis 0 slowest).
    const std::vector<double>& x_weights() const { return xw_; }
    std::size_t x_size() const { return detail::ipow(rule_.nodes.size(), geo_.d1); }
    std::size_t y_size() const { return geo_.y_size(); }
    std::size_t grid_size() const { return x_size() * y_size(); }
    double y_weight() const { return geo_.box_volume() / static_cast<double>(y_size()); }
    double x_grid_defect() const { return defect_; }

    const detail::BatchedDft& dft() const { return *dft_; }

    bool compatible(const FieldSpace& o) const { return this == &o || (geo_ == o.geo_ && m_max() == o.m_max()); }

private:
    Geometry geo_;
    HermiteBasis basis_;
    detail::XRule rule_;
    std::vector<FiberOps> fibers_;
    std::vector<std::size_t> fiber_of_;
    std::vector<std::size_t> y_slot_;
    std::vector<double> xw_;
    double defect_ = 0.0;
    std::shared_ptr<detail::BatchedDft> dft_;
};

} // namespace grushin
