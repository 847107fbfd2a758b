#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "grushin/hermite_basis.hpp"

using namespace grushin;

namespace {

// Independent oracle: physicists' polynomials from <cmath>.
double oracle_h(int n, double x)
{
    double norm = std::sqrt(std::pow(2.0, n) * std::tgamma(n + 1.0) * std::sqrt(std::numbers::pi));
    return std::hermite(static_cast<unsigned>(n), x) * std::exp(-0.5 * x * x) / norm;
}

} // namespace

TEST(HermiteFunctions, GroundStateAtOrigin)
{
    auto h = hermite_functions(0.0, 0);
    EXPECT_NEAR(h[0], 0.751125544464942, 1e-14);
}

TEST(HermiteFunctions, MatchesPolynomialOracle)
{
    for (double x : {-3.7, -1.0, 0.0, 0.4, 2.5, 5.0}) {
        auto h = hermite_functions(x, 30);
        for (int n = 0; n <= 30; ++n) EXPECT_NEAR(h[n], oracle_h(n, x), 1e-12) << "n=" << n << " x=" << x;
    }
}

TEST(HermiteFunctions, NoOverflowForLargeDegree)
{
    // Near the turning point sqrt(2n+1) the function is O(n^{-1/12}), far from under/overflow.
    const int n = 1200;
    const double x = std::sqrt(2.0 * n + 1.0) - 1.0;
    auto h = hermite_functions(x, n);
    for (double v : h) ASSERT_TRUE(std::isfinite(v));
    EXPECT_GT(std::abs(h[n]), 1e-3);
    EXPECT_LT(std::abs(h[n]), 1.0);
}

TEST(GaussHermite, ThreePointRule)
{
    auto r = gauss_hermite(3);
    const double sp = std::sqrt(std::numbers::pi);
    EXPECT_NEAR(r.nodes[0], -std::sqrt(1.5), 1e-15);
    EXPECT_EQ(r.nodes[1], 0.0);
    EXPECT_NEAR(r.nodes[2], std::sqrt(1.5), 1e-15);
    EXPECT_NEAR(r.weights[1], 2.0 * sp / 3.0, 1e-14);
    EXPECT_NEAR(r.weights[0], sp / 6.0 * std::exp(1.5), 1e-13);
}

TEST(GaussHermite, IntegratesGaussianMoments)
{
    auto r = gauss_hermite(40);
    // int x^4 e^{-x^2} dx = 3 sqrt(pi) / 4, with the weight folded into values.
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        const double x = r.nodes[i];
        s += r.weights[i] * std::pow(x, 4) * std::exp(-x * x);
    }
    EXPECT_NEAR(s, 0.75 * std::sqrt(std::numbers::pi), 1e-13);
}

TEST(HermiteBasis, EigenvalueLaw)
{
    HermiteBasis b(1, 5);
    EXPECT_EQ(b.lambda(3), 7.0);
    HermiteBasis b2(2, 5);
    for (int m = 0; m <= 5; ++m) EXPECT_EQ(b2.lambda(m), 2.0 * m + 2.0);
}

TEST(HermiteBasis, MultiplicityTwoDimensions)
{
    HermiteBasis b(2, 4);
    EXPECT_EQ(b.multiplicity(3), 4u);
    auto idx = multi_indices(3, 2);
    ASSERT_EQ(idx.size(), 4u);
    EXPECT_EQ(idx.front(), (MultiIndex{0, 3}));
    EXPECT_EQ(idx.back(), (MultiIndex{3, 0}));
}

TEST(HermiteBasis, MultiplicityMatchesBruteForce)
{
    for (int d = 1; d <= 3; ++d) {
        for (int m = 0; m <= 20; ++m) {
            std::size_t brute = 0;
            for (int a = 0; a <= m; ++a)
                for (int b = 0; b <= (d >= 2 ? m : 0); ++b)
                    for (int c = 0; c <= (d >= 3 ? m : 0); ++c)
                        if (a + b + c == m) ++brute;
            EXPECT_EQ(multi_index_count(m, d), brute);
            EXPECT_EQ(multi_indices(m, d).size(), brute);
        }
    }
}

TEST(HermiteBasis, RejectsUnderresolvedQuadrature)
{
    EXPECT_THROW(HermiteBasis(1, 10, 21), NumericalFailure);
    EXPECT_NO_THROW(HermiteBasis(1, 10, 22));
    EXPECT_THROW(HermiteBasis(0, 3), InvalidInput);
}

TEST(HermiteBasis, Orthonormality)
{
    EXPECT_LE(HermiteBasis(1, 64).orthonormality_error(), 1e-10);
    EXPECT_LE(HermiteBasis(2, 32).orthonormality_error(), 1e-10);
    EXPECT_LE(HermiteBasis(3, 10).orthonormality_error(), 1e-10);
}

TEST(HermiteBasis, EvalScaled)
{
    HermiteBasis b(1, 4);
    const double x0[] = {0.0};
    EXPECT_NEAR(b.eval_scaled(0, 0, 1.0, x0)[0], 0.751125544464942, 1e-14);
    EXPECT_NEAR(b.eval_scaled(0, 0, 4.0, x0)[0], 1.062251932027197, 1e-14);
    const double eta_vec[] = {0.0, 4.0};
    EXPECT_NEAR(b.eval_scaled(0, 0, eta_vec, x0)[0], 1.062251932027197, 1e-14);
    EXPECT_THROW(b.eval_scaled(0, 0, 0.0, x0), InvalidInput);
}

TEST(HermiteBasis, ScaledFunctionsAreNormalised)
{
    for (int d1 : {1, 2}) {
        HermiteBasis b(d1, 6);
        for (double eta : {0.01, 1.0, 37.5}) {
            auto nodes = b.scaled_nodes(eta);
            // Build the tensor point list.
            std::vector<double> pts;
            const std::size_t n = nodes.size();
            for (std::size_t i = 0; i < detail::ipow(n, d1); ++i) {
                std::size_t rest = i;
                std::vector<double> p(d1);
                for (int j = d1 - 1; j >= 0; --j) {
                    p[j] = nodes[rest % n];
                    rest /= n;
                }
                pts.insert(pts.end(), p.begin(), p.end());
            }
            for (int m = 0; m <= 6; ++m) {
                for (std::size_t k = 0; k < b.multiplicity(m); ++k) {
                    auto v = b.eval_scaled(m, k, eta, pts);
                    double s = 0.0;
                    for (std::size_t i = 0; i < v.size(); ++i) {
                        double w = 1.0;
                        std::size_t rest = i;
                        for (int j = 0; j < d1; ++j) {
                            w *= b.weights()[rest % n] / std::sqrt(eta);
                            rest /= n;
                        }
                        s += w * v[i] * v[i];
                    }
                    EXPECT_NEAR(s, 1.0, 1e-8) << "d1=" << d1 << " eta=" << eta << " m=" << m;
                }
            }
        }
    }
}

TEST(HermiteTransform, UnitVectorAndZero)
{
    HermiteBasis b(1, 6);
    const double eta = 2.5;
    auto nodes = b.scaled_nodes(eta);
    auto v = b.eval_scaled(2, 0, eta, nodes);
    std::vector<cd> samples(v.begin(), v.end());
    auto c = b.transform(samples, eta);
    for (std::size_t s = 0; s < c.size(); ++s) EXPECT_NEAR(std::abs(c[s] - (s == b.slot(2, 0) ? 1.0 : 0.0)), 0.0, 1e-8);
    auto z = b.transform(std::vector<cd>(samples.size(), 0.0), eta);
    for (auto x : z) EXPECT_EQ(x, cd(0));
}

TEST(HermiteTransform, Linearity)
{
    HermiteBasis b(1, 6);
    const double eta = 0.3;
    auto nodes = b.scaled_nodes(eta);
    auto h0 = b.eval_scaled(0, 0, eta, nodes);
    auto h1 = b.eval_scaled(1, 0, eta, nodes);
    std::vector<cd> samples(h0.size());
    for (std::size_t i = 0; i < h0.size(); ++i) samples[i] = h0[i] + 0.5 * h1[i];
    auto c = b.transform(samples, eta);
    EXPECT_NEAR(std::abs(c[0] - 1.0), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(c[1] - 0.5), 0.0, 1e-8);
    for (std::size_t s = 2; s < c.size(); ++s) EXPECT_NEAR(std::abs(c[s]), 0.0, 1e-8);
}

TEST(HermiteTransform, RoundTrip)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int d1 : {1, 2, 3}) {
        HermiteBasis b(d1, d1 == 3 ? 5 : 12);
        for (double eta : {0.05, 1.0, 20.0}) {
            std::vector<cd> c(b.mode_count());
            for (auto& x : c) x = {g(rng), g(rng)};
            auto back = b.transform(b.inverse_transform(c, eta), eta);
            double num = 0, den = 0;
            for (std::size_t s = 0; s < c.size(); ++s) {
                num += std::norm(back[s] - c[s]);
                den += std::norm(c[s]);
            }
            EXPECT_LE(std::sqrt(num / den), 1e-8);
        }
    }
}

TEST(HermiteTransform, SizeMismatch)
{
    HermiteBasis b(1, 3);
    EXPECT_THROW(b.transform(std::vector<cd>(3), 1.0), InvalidInput);
    EXPECT_THROW(b.inverse_transform(std::vector<cd>(2), 1.0), InvalidInput);
}

TEST(HermiteBasis, EigenRelationBySpectralDifferentiation)
{
    // (-d^2/dx^2 + eta^2 x^2) htilde_m = eta (2m+1) htilde_m, checked in the
    // unit-scale variable xi = eta^{1/2} x where the operator is eta(-D^2 + X^2).
    HermiteBasis b(1, 40);
    const int n = b.quad_order();
    for (double eta : {0.2, 3.0}) {
        auto nodes = b.scaled_nodes(eta);
        for (int m = 0; m <= 20; ++m) {
            auto v = b.eval_scaled(m, 0, eta, nodes);
            // Full interpolating modal expansion on the unit grid.
            std::vector<cd> modal(n, 0.0);
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                auto hk_nodes = b.nodes();
                for (int i = 0; i < n; ++i) {
                    auto h = hermite_functions(hk_nodes[i], k);
                    s += b.weights()[i] * h[k] * v[i] * std::pow(eta, -0.25);
                }
                modal[k] = s;
            }
            auto d2 = hermite_derivative(hermite_derivative(modal));
            auto x2 = hermite_position(hermite_position(modal));
            std::vector<cd> op(d2.size());
            for (std::size_t k = 0; k < op.size(); ++k) op[k] = eta * (x2[k] - d2[k]);
            double num = 0, den = 0;
            for (std::size_t k = 0; k < op.size(); ++k) {
                cd expect = k < modal.size() ? eta * (2.0 * m + 1.0) * modal[k] : cd(0);
                num += std::norm(op[k] - expect);
                den += std::norm(expect);
            }
            EXPECT_LE(std::sqrt(num / den), 1e-6) << "m=" << m;
        }
    }
}
