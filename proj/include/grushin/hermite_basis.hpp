#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "error.hpp"
#include "tensor.hpp"

namespace grushin {

using cd = std::complex<double>;
using MultiIndex = std::vector<int>;

namespace detail {

// Mantissas are renormalised by this factor whenever they grow past it,
// so h_n(x) is available for any n and |x| without overflow.
inline constexpr double rescale_step = 1e150;

} // namespace detail

/// Normalised Hermite functions h_0..h_{n_max} at x, written to out[0..n_max].
/// Values below the double range underflow to zero individually.
inline void hermite_functions(double x, int n_max, double* out)
{
    double log_scale = -0.5 * x * x - 0.25 * std::log(std::numbers::pi);
    double factor = std::exp(log_scale);
    double prev = 0.0, cur = 1.0;
    out[0] = factor;
    for (int n = 0; n < n_max; ++n) {
        const double next = std::sqrt(2.0 / (n + 1)) * x * cur - std::sqrt(double(n) / (n + 1)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > detail::rescale_step) {
            prev /= detail::rescale_step;
            cur /= detail::rescale_step;
            log_scale += std::log(detail::rescale_step);
            factor = std::exp(log_scale);
        }
        out[n + 1] = cur * factor;
    }
}

inline std::vector<double> hermite_functions(double x, int n_max)
{
    std::vector<double> v(static_cast<std::size_t>(n_max) + 1);
    hermite_functions(x, n_max, v.data());
    return v;
}

namespace detail {

// 1 / sum_{k<n} h_k(x)^2, evaluated in scaled arithmetic.
inline double christoffel_weight(double x, int n)
{
    double log_scale = -0.5 * x * x - 0.25 * std::log(std::numbers::pi);
    double prev = 0.0, cur = 1.0, sum = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(double(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > rescale_step) {
            prev /= rescale_step;
            cur /= rescale_step;
            sum /= rescale_step * rescale_step;
            log_scale += std::log(rescale_step);
        }
        sum += cur * cur;
    }
    return std::exp(-2.0 * log_scale) / sum;
}

// Ratio h_n(x) / h_{n-1}(x) and the Newton step for a root of h_n.
inline double hermite_newton_step(double x, int n)
{
    double prev = 0.0, cur = 1.0;
    for (int k = 0; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(double(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > rescale_step) {
            prev /= rescale_step;
            cur /= rescale_step;
        }
    }
    // h_n' = sqrt(2n) h_{n-1} - x h_n
    const double deriv = std::sqrt(2.0 * n) * prev - x * cur;
    return cur / deriv;
}

} // namespace detail

/// Gauss-Hermite rule whose weights are folded into function values:
/// sum_i W_i f(x_i) ~ int f(x) dx for f = (polynomial) * e^{-x^2}.
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(int n)
{
    detail::require(n >= 1, "gauss_hermite: node count must be positive");
    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = detail::christoffel_weight(0.0, 1);
        return rule;
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalFailure("gauss_hermite: eigensolver failed");
    std::vector<double> x(eig.eigenvalues().data(), eig.eigenvalues().data() + n);
    std::sort(x.begin(), x.end());
    for (double& xi : x) {
        for (int it = 0; it < 3; ++it) xi -= detail::hermite_newton_step(xi, n);
    }
    for (int i = 0; i < n; ++i) {
        const double a = 0.5 * (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(n - 1 - i)]);
        rule.nodes[static_cast<std::size_t>(i)] = a;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    for (int i = 0; i < n; ++i) {
        rule.weights[static_cast<std::size_t>(i)] = detail::christoffel_weight(rule.nodes[static_cast<std::size_t>(i)], n);
    }
    return rule;
}

/// Number of multi-indices alpha in N^d with |alpha| = m.
inline std::size_t multi_index_count(int m, int d)
{
    if (m < 0 || d < 1) return 0;
    // binomial(m + d - 1, d - 1)
    std::size_t r = 1;
    for (int j = 1; j < d; ++j) r = r * static_cast<std::size_t>(m + j) / static_cast<std::size_t>(j);
    return r;
}

/// Multi-indices with |alpha| = m in ascending lexicographic order.
inline std::vector<MultiIndex> multi_indices(int m, int d)
{
    std::vector<MultiIndex> out;
    MultiIndex cur(static_cast<std::size_t>(d), 0);
    auto rec = [&](auto&& self, int axis, int left) -> void {
        if (axis == d - 1) {
            cur[static_cast<std::size_t>(axis)] = left;
            out.push_back(cur);
            return;
        }
        for (int a = 0; a <= left; ++a) {
            cur[static_cast<std::size_t>(axis)] = a;
            self(self, axis + 1, left - a);
        }
    };
    if (m >= 0 && d >= 1) rec(rec, 0, m);
    return out;
}

/// Modal d/dx for unit-scale expansions: input coefficients c_0..c_{N-1},
/// output has N+1 entries.
inline std::vector<cd> hermite_derivative(std::span<const cd> c)
{
    std::vector<cd> out(c.size() + 1, cd(0));
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (n > 0) out[n - 1] += std::sqrt(0.5 * double(n)) * c[n];
        out[n + 1] -= std::sqrt(0.5 * double(n + 1)) * c[n];
    }
    return out;
}

/// Modal multiplication by x, same shape convention as hermite_derivative.
inline std::vector<cd> hermite_position(std::span<const cd> c)
{
    std::vector<cd> out(c.size() + 1, cd(0));
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (n > 0) out[n - 1] += std::sqrt(0.5 * double(n)) * c[n];
        out[n + 1] += std::sqrt(0.5 * double(n + 1)) * c[n];
    }
    return out;
}

/// Eigenbasis of the d1-dimensional harmonic oscillator truncated at total
/// mode m_max, with the Gauss-Hermite grid used to move between samples and
/// coefficients. Coefficients are stored in "slots": modes m = 0..m_max, and
/// inside each mode the multi-indices in lexicographic order.
class HermiteBasis {
public:
    HermiteBasis(int d1, int m_max, int quad_order = 0)
        : d1_(d1), m_max_(m_max), quad_order_(quad_order > 0 ? quad_order : 4 * (m_max + 1))
    {
        detail::require(d1 >= 1, "hermite_basis: d1 must be >= 1");
        detail::require(m_max >= 0, "hermite_basis: m_max must be >= 0");
        if (quad_order_ < 2 * (m_max + 1)) {
            throw NumericalFailure("quadrature underresolved: quad_order " + std::to_string(quad_order_) +
                                   " < 2(m_max+1) = " + std::to_string(2 * (m_max + 1)));
        }
        rule_ = gauss_hermite(quad_order_);
        table_.resize(quad_order_, m_max_ + 1);
        std::vector<double> h(static_cast<std::size_t>(m_max_) + 1);
        for (int i = 0; i < quad_order_; ++i) {
            hermite_functions(rule_.nodes[static_cast<std::size_t>(i)], m_max_, h.data());
            for (int n = 0; n <= m_max_; ++n) table_(i, n) = h[static_cast<std::size_t>(n)];
        }
        const std::size_t side = static_cast<std::size_t>(m_max_) + 1;
        for (int m = 0; m <= m_max_; ++m) {
            offsets_.push_back(slots_.size());
            for (auto& a : multi_indices(m, d1_)) {
                std::size_t box = 0;
                for (int v : a) box = box * side + static_cast<std::size_t>(v);
                slot_of_box_[box] = slots_.size();
                box_.push_back(box);
                mode_.push_back(m);
                slots_.push_back(std::move(a));
            }
        }
        offsets_.push_back(slots_.size());
    }

    int d1() const { return d1_; }
    int m_max() const { return m_max_; }
    int quad_order() const { return quad_order_; }

    double lambda(int m) const { return 2.0 * m + d1_; }
    std::size_t multiplicity(int m) const { return multi_index_count(m, d1_); }

    std::size_t mode_count() const { return slots_.size(); }
    std::size_t slot(int m, std::size_t k) const
    {
        detail::require(m >= 0 && m <= m_max_, "hermite_basis: mode out of range");
        detail::require(k < multiplicity(m), "hermite_basis: multi-index position out of range");
        return offsets_[static_cast<std::size_t>(m)] + k;
    }
    int slot_mode(std::size_t s) const { return mode_[s]; }
    const MultiIndex& multi_index(std::size_t s) const { return slots_[s]; }
    std::size_t box_index(std::size_t s) const { return box_[s]; }
    std::size_t box_side() const { return static_cast<std::size_t>(m_max_) + 1; }
    std::size_t box_size() const { return detail::ipow(box_side(), d1_); }
    std::optional<std::size_t> find_slot(const MultiIndex& a) const
    {
        if (static_cast<int>(a.size()) != d1_) return std::nullopt;
        int total = 0;
        std::size_t box = 0;
        for (int v : a) {
            if (v < 0) return std::nullopt;
            total += v;
            box = box * box_side() + static_cast<std::size_t>(v);
        }
        if (total > m_max_) return std::nullopt;
        return slot_of_box_.at(box);
    }
    std::size_t slot_begin(int m) const { return offsets_[static_cast<std::size_t>(m)]; }
    std::size_t slot_end(int m) const { return offsets_[static_cast<std::size_t>(m) + 1]; }

    const std::vector<double>& nodes() const { return rule_.nodes; }
    const std::vector<double>& weights() const { return rule_.weights; }
    /// h_n(node_i), shape quad_order x (m_max+1).
    const Eigen::MatrixXd& node_values() const { return table_; }

    std::size_t sample_count() const { return detail::ipow(static_cast<std::size_t>(quad_order_), d1_); }

    /// 1D nodes rescaled to frequency |eta|: node / |eta|^{1/2}.
    std::vector<double> scaled_nodes(double eta_norm) const
    {
        check_eta(eta_norm);
        std::vector<double> out(rule_.nodes);
        const double s = 1.0 / std::sqrt(eta_norm);
        for (double& v : out) v *= s;
        return out;
    }

    /// |eta|^{d1/4} h_alpha(|eta|^{1/2} x) at points given as a flat list of
    /// d1-tuples.
    std::vector<double> eval_scaled(int m, std::size_t k, double eta_norm, std::span<const double> points) const
    {
        check_eta(eta_norm);
        detail::require(points.size() % static_cast<std::size_t>(d1_) == 0,
                        "eval_scaled: point list length is not a multiple of d1");
        const MultiIndex& a = slots_[slot(m, k)];
        const double root = std::sqrt(eta_norm);
        const double pref = std::pow(eta_norm, 0.25 * d1_);
        const std::size_t npts = points.size() / static_cast<std::size_t>(d1_);
        std::vector<double> out(npts);
        std::vector<double> h(static_cast<std::size_t>(m) + 1);
        for (std::size_t p = 0; p < npts; ++p) {
            double v = pref;
            for (int j = 0; j < d1_; ++j) {
                hermite_functions(root * points[p * static_cast<std::size_t>(d1_) + static_cast<std::size_t>(j)],
                                  a[static_cast<std::size_t>(j)], h.data());
                v *= h[static_cast<std::size_t>(a[static_cast<std::size_t>(j)])];
            }
            out[p] = v;
        }
        return out;
    }

    std::vector<double> eval_scaled(int m, std::size_t k, std::span<const double> eta, std::span<const double> points) const
    {
        double s = 0.0;
        for (double e : eta) s += e * e;
        return eval_scaled(m, k, std::sqrt(s), points);
    }

    /// Samples on the rescaled tensor grid (row-major, axis 0 slowest) to slot
    /// coefficients.
    std::vector<cd> transform(std::span<const cd> samples, double eta_norm) const
    {
        check_eta(eta_norm);
        if (samples.size() != sample_count()) {
            throw InvalidInput("hermite_transform: expected " + std::to_string(sample_count()) + " samples, got " +
                               std::to_string(samples.size()));
        }
        Eigen::MatrixXd fwd(m_max_ + 1, quad_order_);
        for (int i = 0; i < quad_order_; ++i)
            for (int n = 0; n <= m_max_; ++n) fwd(n, i) = rule_.weights[static_cast<std::size_t>(i)] * table_(i, n);
        auto box = detail::apply_each_axis(std::vector<cd>(samples.begin(), samples.end()), d1_, fwd);
        const double scale = std::pow(eta_norm, -0.25 * d1_);
        std::vector<cd> out(mode_count());
        for (std::size_t s = 0; s < out.size(); ++s) out[s] = scale * box[box_[s]];
        return out;
    }

    std::vector<cd> inverse_transform(std::span<const cd> coeffs, double eta_norm) const
    {
        check_eta(eta_norm);
        if (coeffs.size() != mode_count()) {
            throw InvalidInput("hermite_transform: expected " + std::to_string(mode_count()) + " coefficients, got " +
                               std::to_string(coeffs.size()));
        }
        std::vector<cd> box(box_size(), cd(0));
        const double scale = std::pow(eta_norm, 0.25 * d1_);
        for (std::size_t s = 0; s < coeffs.size(); ++s) box[box_[s]] = scale * coeffs[s];
        return detail::apply_each_axis(box, d1_, table_);
    }

    /// max |<h_alpha, h_beta> - delta| over all slots, under the tensor rule.
    double orthonormality_error() const
    {
        Eigen::MatrixXd gram = table_.transpose() * Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                                         rule_.weights.data(), quad_order_))
                                                        .asDiagonal() *
                               table_;
        double err = 0.0;
        for (std::size_t a = 0; a < slots_.size(); ++a) {
            for (std::size_t b = a; b < slots_.size(); ++b) {
                double g = 1.0;
                for (int j = 0; j < d1_; ++j) g *= gram(slots_[a][static_cast<std::size_t>(j)], slots_[b][static_cast<std::size_t>(j)]);
                err = std::max(err, std::abs(g - (a == b ? 1.0 : 0.0)));
            }
        }
        return err;
    }

private:
    static void check_eta(double eta_norm)
    {
        if (!(eta_norm > 0.0)) throw InvalidInput("degenerate frequency: |eta| must be > 0");
    }

    int d1_;
    int m_max_;
    int quad_order_;
    GaussHermiteRule rule_;
    Eigen::MatrixXd table_;
    std::vector<MultiIndex> slots_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> box_;
    std::vector<int> mode_;
    std::map<std::size_t, std::size_t> slot_of_box_;
};

} // namespace grushin
