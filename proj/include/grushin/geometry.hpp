#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "tensor.hpp"

namespace grushin {

enum class YCase { euclidean_box, torus };

inline const char* to_string(YCase c) { return c == YCase::torus ? "torus" : "euclidean_box"; }

/// Physical x grid: Gauss-Hermite nodes of count `nodes` divided by
/// sqrt(scale). nodes == 0 asks the field space to pick a count.
struct XGrid {
    int nodes = 0;
    double scale = 0.0;           // 0: geometric mean of the fiber scales
    double max_defect = 1e-10;    // Gram defect accepted per fiber
    bool resolve_zero_fiber = true;
};

/// R^{d1} x (periodic box of side L)^{d2} with frequency lattice
/// eta = (2 pi / L) k, |k|_inf <= K_max, sampled on y_points per axis.
struct Geometry {
    int d1 = 1;
    int d2 = 1;
    YCase ycase = YCase::torus;
    double L = 2.0 * std::numbers::pi;
    int K_max = 1;
    XGrid x{};
    int y_points = 0;

    static Geometry torus(int d1, int d2, int K_max, XGrid x = {}, int y_points = 0)
    {
        Geometry g;
        g.d1 = d1;
        g.d2 = d2;
        g.ycase = YCase::torus;
        g.L = 2.0 * std::numbers::pi;
        g.K_max = K_max;
        g.x = x;
        g.y_points = y_points > 0 ? y_points : 2 * K_max + 2;
        g.validate();
        return g;
    }

    static Geometry box(int d1, int d2, double L, int K_max, XGrid x = {}, int y_points = 0)
    {
        Geometry g;
        g.d1 = d1;
        g.d2 = d2;
        g.ycase = YCase::euclidean_box;
        g.L = L;
        g.K_max = K_max;
        g.x = x;
        g.y_points = y_points > 0 ? y_points : 2 * K_max + 2;
        g.validate();
        return g;
    }

    void validate() const
    {
        detail::require(d1 >= 1 && d2 >= 1, "geometry: dimensions must be >= 1");
        detail::require(L > 0.0 && std::isfinite(L), "geometry: L must be positive");
        detail::require(K_max >= 1, "geometry: K_max must be >= 1");
        if (ycase == YCase::torus) {
            detail::require(std::abs(L - 2.0 * std::numbers::pi) < 1e-12, "geometry: torus case forces L = 2 pi");
        }
        if (y_points < 2 * K_max + 1) {
            throw InvalidInput("aliasing: y grid of " + std::to_string(y_points) + " points per axis cannot carry K_max = " +
                               std::to_string(K_max) + " (need >= " + std::to_string(2 * K_max + 1) + ")");
        }
        detail::require(x.nodes >= 0 && x.scale >= 0.0, "geometry: bad x-grid spec");
    }

    double lattice_step() const { return 2.0 * std::numbers::pi / L; }
    double box_volume() const { return std::pow(L, d2); }
    std::size_t lattice_side() const { return static_cast<std::size_t>(2 * K_max + 1); }
    std::size_t lattice_size() const { return detail::ipow(lattice_side(), d2); }
    std::size_t y_size() const { return detail::ipow(static_cast<std::size_t>(y_points), d2); }

    std::vector<int> lattice_point(std::size_t flat) const
    {
        std::vector<int> k(static_cast<std::size_t>(d2));
        for (int j = d2 - 1; j >= 0; --j) {
            k[static_cast<std::size_t>(j)] = static_cast<int>(flat % lattice_side()) - K_max;
            flat /= lattice_side();
        }
        return k;
    }

    bool in_lattice(std::span<const int> k) const
    {
        if (static_cast<int>(k.size()) != d2) return false;
        for (int v : k)
            if (v < -K_max || v > K_max) return false;
        return true;
    }

    std::size_t lattice_index(std::span<const int> k) const
    {
        if (!in_lattice(k)) throw InvalidInput("geometry: lattice point outside the cutoff");
        std::size_t flat = 0;
        for (int v : k) flat = flat * lattice_side() + static_cast<std::size_t>(v + K_max);
        return flat;
    }

    std::size_t zero_index() const { return (lattice_size() - 1) / 2; }

    std::int64_t k_norm2(std::size_t flat) const
    {
        std::int64_t s = 0;
        for (int v : lattice_point(flat)) s += static_cast<std::int64_t>(v) * v;
        return s;
    }

    double eta_norm(std::size_t flat) const { return lattice_step() * std::sqrt(static_cast<double>(k_norm2(flat))); }

    /// Position of lattice point `flat` in the row-major y-grid DFT array.
    std::size_t y_slot(std::size_t flat) const
    {
        std::size_t idx = 0;
        for (int v : lattice_point(flat)) {
            const int n = y_points;
            idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(((v % n) + n) % n);
        }
        return idx;
    }

    std::vector<double> y_nodes() const
    {
        std::vector<double> y(static_cast<std::size_t>(y_points));
        for (int j = 0; j < y_points; ++j) y[static_cast<std::size_t>(j)] = L * j / y_points;
        return y;
    }

    bool operator==(const Geometry& o) const
    {
        return d1 == o.d1 && d2 == o.d2 && ycase == o.ycase && L == o.L && K_max == o.K_max && x.nodes == o.x.nodes &&
               x.scale == o.x.scale && y_points == o.y_points;
    }
};

} // namespace grushin
