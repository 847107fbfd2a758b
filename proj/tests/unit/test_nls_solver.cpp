#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "grushin/nls_solver.hpp"

using namespace grushin;

namespace {

std::shared_ptr<const FieldSpace> small_space(int kappa, int K = 2, int m_max = 6)
{
    return nls_space(Geometry::torus(1, 2, K), m_max, kappa);
}

CauchyProblem problem(std::shared_ptr<const FieldSpace> sp, int kappa, double sigma, double amp, double T,
                      std::uint64_t seed = 3)
{
    CauchyProblem pb;
    pb.kappa = kappa;
    pb.sigma = sigma;
    pb.s = 2.1;
    pb.T = T;
    pb.u0 = nls_datum(sp, 1, 2, amp, pb.s, seed);
    LinearFlow L(*sp, sigma, pb.flow);
    double rate = 0;
    for (double r : L.rates()) rate = std::max(rate, r);
    pb.dt = 0.1 / rate;
    return pb;
}

// Exact sup of |u| / ||u||_{H^s} over the field space (Cauchy-Schwarz).
double embedding_bound(const FieldSpace& sp, double s)
{
    const double vol = sp.geometry().box_volume();
    double best = 0.0;
    for (std::size_t i = 0; i < sp.x_size(); ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
            if (sp.is_zero_fiber(p)) continue;
            const auto& S = sp.fiber(p).synth;
            for (std::size_t q = 0; q < sp.slot_count(); ++q) {
                const double v = S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
                acc += v * v / vol / std::pow(1.0 + sp.symbol(p, q), s);
            }
        }
        best = std::max(best, acc);
    }
    return std::sqrt(best);
}

} // namespace

TEST(Nonlinearity, ZeroMapsToZero)
{
    auto sp = small_space(3);
    EXPECT_EQ(nonlinearity(SpectralField(sp), 3).l2_norm(), 0.0);
}

TEST(Nonlinearity, PointwisePowerOnTheGrid)
{
    auto sp = small_space(5);
    GridField g(sp);
    const cd c(0.3, -0.4);
    for (auto& v : g.values) v = c;
    grid_power(g, 5);
    const cd expect = std::pow(std::abs(c), 4) * c;
    for (const auto& v : g.values) EXPECT_NEAR(std::abs(v - expect), 0.0, 1e-15);
}

TEST(Nonlinearity, CubeMatchesDirectEvaluation)
{
    auto sp = small_space(3);
    SpectralField u(sp);
    const Geometry& g = sp->geometry();
    const std::size_t p = g.lattice_index(std::vector<int>{1, 0});
    const std::size_t mp = g.lattice_index(std::vector<int>{-1, 0});
    u.at(p, 0) = 0.7;
    u.at(mp, 0) = 0.7;  // real, even in y1: u = 2 * 0.7 h~_0(x) cos(y1) / (2 pi)
    auto grid = synthesize(u);
    const auto ys = g.y_nodes();
    const auto& xs = sp->x_nodes();
    const std::size_t ny = sp->y_size(), n1 = static_cast<std::size_t>(g.y_points);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double h0 = std::exp(-0.5 * xs[i] * xs[i]) / std::pow(std::numbers::pi, 0.25);
        for (std::size_t j = 0; j < ny; ++j) {
            const double y1 = ys[j / n1];
            const double direct = 1.4 * h0 * std::cos(y1) / (2.0 * std::numbers::pi);
            worst = std::max(worst, std::abs(grid.values[i * ny + j] - cd(direct)));
        }
    }
    ASSERT_LE(worst, 1e-13);
    // the projection of u^3 onto the (k = 1, m = 0) coefficient by direct quadrature
    const double pi = std::numbers::pi;
    auto F = nonlinearity(u, 3);
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double h0 = std::exp(-0.5 * xs[i] * xs[i]) / std::pow(pi, 0.25);
        acc += sp->x_weights()[i] * std::pow(1.4 * h0 / (2 * pi), 3) * h0;
    }
    // int cos^3(y1) e^{-i y1} dy1 dy2 / (2 pi) = (3/4) pi * 2 pi / (2 pi)
    const double expect = acc * 0.75 * pi;
    EXPECT_NEAR(F(p, 0).real(), expect, 1e-9 * std::abs(expect));
    EXPECT_NEAR(F(p, 0).imag(), 0.0, 1e-14);
}

TEST(Nonlinearity, AliasingIsRefused)
{
    auto sp = FieldSpace::make(Geometry::torus(1, 2, 2, XGrid{0, 0.0, 1e-10, false}), 4);
    Rng rng(1);
    auto u = random_field(sp, rng);
    try {
        nonlinearity(u, 3);
        FAIL() << "expected refusal";
    } catch (const NumericalFailure& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("aliasing budget"), std::string::npos);
        EXPECT_NE(msg.find("need >= 9 y points"), std::string::npos) << msg;
    }
}

TEST(Nonlinearity, HermiteHeadroomIsChecked)
{
    auto sp = small_space(5, 2, 6);
    CauchyProblem pb = problem(sp, 5, 1.0, 1.0, 0.01);
    pb.u0 = nls_datum(sp, 2, 2, 1.0, pb.s, 1);  // 5 * 2 > 6
    EXPECT_THROW(splitting_solve(pb), NumericalFailure);
}

TEST(Cumulative, FourthOrderWeightsIntegrateCubicsExactly)
{
    auto sp = small_space(3);
    SpectralField one(sp);
    one.at(1, 0) = 1.0;
    const int N = 7;
    const double h = 0.3;
    std::vector<SpectralField> G;
    for (int n = 0; n <= N; ++n) {
        const double t = n * h;
        G.push_back(cd(1.0 - 2.0 * t + 3.0 * t * t * t) * one);
    }
    auto C = detail::cumulative_integral(G, h);
    for (int n = 0; n <= N; ++n) {
        const double t = n * h;
        EXPECT_NEAR(C[n](1, 0).real(), t - t * t + 0.75 * t * t * t * t, 1e-12);
    }
}

TEST(Solvers, LinearLimit)
{
    auto sp = small_space(3);
    CauchyProblem pb = problem(sp, 3, 1.5, 2.0, 0.02);
    pb.coupling = 0.0;
    LinearFlow L(*sp, pb.sigma, pb.flow);
    auto tr = splitting_solve(pb);
    for (std::size_t n = 0; n < tr.states.size(); ++n)
        EXPECT_LE(distance(tr.states[n], L(pb.u0, tr.times[n])), 1e-10 * pb.u0.l2_norm());
    auto pic = picard_solve(pb);
    EXPECT_EQ(pic.report.iterations, 0);
    for (std::size_t n = 0; n < pic.trajectory.states.size(); ++n)
        EXPECT_EQ(distance(pic.trajectory.states[n], L(pb.u0, pic.trajectory.times[n])), 0.0);
}

TEST(Solvers, GaugeCovariance)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 15.0, 0.02);
    CauchyProblem rot = pb;
    const cd phase = std::polar(1.0, 0.7);
    rot.u0 *= phase;
    auto a = splitting_solve(pb), b = splitting_solve(rot);
    for (std::size_t n = 0; n < a.states.size(); ++n)
        EXPECT_LE(distance(phase * a.states[n], b.states[n]), 1e-13 * pb.u0.l2_norm());
    auto pa = picard_solve(pb), pbb = picard_solve(rot);
    for (std::size_t n = 0; n < pa.trajectory.states.size(); ++n)
        EXPECT_LE(distance(phase * pa.trajectory.states[n], pbb.trajectory.states[n]), 1e-12 * pb.u0.l2_norm());
}

TEST(Solvers, TimeReversal)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 20.0, 0.05);
    auto fwd = splitting_solve(pb, 1000000);
    CauchyProblem back = pb;
    back.u0 = conjugate(fwd.states.back());
    back.enforce_headroom = false;  // the evolved state fills every mode
    auto ret = splitting_solve(back, 1000000);
    EXPECT_LE(distance(conjugate(ret.states.back()), pb.u0), 1e-5 * pb.u0.l2_norm());
}

TEST(Picard, SmallDataContractsQuickly)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 1e-3, 0.05);
    ASSERT_TRUE(pb.backed());
    auto sol = picard_solve(pb);
    EXPECT_LE(sol.report.iterations, 3);
    EXPECT_LE(sol.report.residual, 1e-7);
    EXPECT_LT(sol.report.max_contraction, 1.0);
    EXPECT_EQ(sol.report.halvings, 0);
}

TEST(Picard, ModerateDataContractionAndTheta)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 20.0, 0.05);
    auto sol = picard_solve(pb);
    EXPECT_GE(sol.report.iterations, 3);
    EXPECT_LT(sol.report.max_contraction, 1.0);
    EXPECT_LE(sol.report.residual, 1e-7);
    EXPECT_GT(sol.report.theta, 0.0);
    EXPECT_GT(sol.report.first_correction, sol.report.first_correction_half);
    auto cc = cross_validate(pb, sol);
    EXPECT_LE(cc.max_difference, 1e-5);
    EXPECT_GT(cc.nonlinear_effect, 1e-4);
}

TEST(Picard, NonContractionShrinksTheHorizonOrFails)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 70.0, 0.2);
    pb.max_halvings = 0;
    try {
        picard_solve(pb);
        FAIL() << "expected failure";
    } catch (const NumericalFailure& e) {
        EXPECT_NE(std::string(e.what()).find("no contraction"), std::string::npos);
    }
    pb.max_halvings = 8;
    auto sol = picard_solve(pb);
    EXPECT_GT(sol.report.halvings, 0);
    EXPECT_LT(sol.report.T_used, pb.T);
}

TEST(Splitting, StepTooLargeIsRejected)
{
    auto sp = small_space(3);
    CauchyProblem pb = problem(sp, 3, 1.0, 1.0, 0.5);
    pb.dt = 0.5;
    EXPECT_THROW(splitting_solve(pb), InvalidInput);
}

TEST(Splitting, PhaseSubstepLosesMassAtFirstOrder)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 20.0, 0.05);
    pb.nonlinear_step = NonlinearStep::phase;
    auto a = conservation_report(splitting_solve(pb), pb, false);
    pb.dt /= 2;
    auto b = conservation_report(splitting_solve(pb), pb, false);
    EXPECT_GT(a.mass_drift, 1e-12);
    EXPECT_NEAR(std::log2(a.mass_drift / b.mass_drift), 1.0, 0.3);
    pb.nonlinear_step = NonlinearStep::midpoint;
    EXPECT_LE(conservation_report(splitting_solve(pb), pb, false).mass_drift, 1e-13);
}

TEST(Conservation, ZeroSolution)
{
    auto sp = small_space(3);
    CauchyProblem pb = problem(sp, 3, 1.5, 1.0, 0.01);
    pb.u0 = SpectralField(sp);
    auto led = conservation_report(splitting_solve(pb), pb);
    for (std::size_t n = 0; n < led.times.size(); ++n) {
        EXPECT_EQ(led.mass[n], 0.0);
        EXPECT_EQ(led.energy[n], 0.0);
    }
}

TEST(Conservation, CubicFractionalRun)
{
    auto sp = small_space(3);
    CauchyProblem pb = problem(sp, 3, 1.5, 20.0, 0.02);
    ASSERT_TRUE(pb.backed());
    auto led = conservation_report(splitting_solve(pb), pb);
    EXPECT_LE(led.mass_drift, 1e-6);
    EXPECT_LE(led.energy_drift, 1e-5);
    EXPECT_LE(led.hsigma_spread, 1.5);
    ASSERT_EQ(led.xs_proxy.size(), 3u);
    EXPECT_FALSE(led.proxy_note.empty());  // the torus window is empty for sigma > 1
    const double sup_hs = *std::max_element(led.hs_norm.begin(), led.hs_norm.end());
    EXPECT_NEAR(led.xs_proxy[0].second, sup_hs, 1e-12 * sup_hs);
    // the opposite flow sign conserves the energy with the other potential sign
    pb.flow = Flow::fractional;
    EXPECT_LE(conservation_report(splitting_solve(pb), pb, false).energy_drift, 1e-5);
}

TEST(Conservation, EmbeddingBoundHoldsAlongTrajectory)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 20.0, 0.02);
    pb.s = 3.0;
    const double C = embedding_bound(*sp, pb.s);
    auto led = conservation_report(splitting_solve(pb), pb, false);
    for (double r : led.linf_ratio) EXPECT_LE(r, C * (1 + 1e-9));
}

TEST(Conservation, ProxyTriplesAreAdmissible)
{
    auto eu = xs_proxy_triples(1.0, 1, 2, GeometryCase::euclidean);
    ASSERT_EQ(eu.triples.size(), 3u);
    EXPECT_TRUE(eu.triples[0].is_sentinel());
    for (const auto& t : eu.triples) EXPECT_TRUE(is_admissible(t)) << t.str();
    EXPECT_TRUE(eu.note.empty());
    auto torus = xs_proxy_triples(1.0, 1, 2, GeometryCase::compact);
    for (const auto& t : torus.triples) EXPECT_TRUE(is_admissible(t)) << t.str();
}

TEST(Regime, Gating)
{
    auto sp = small_space(5);
    CauchyProblem pb = problem(sp, 5, 1.0, 1.0, 0.01);
    pb.s = 2.1;
    EXPECT_EQ(pb.regime(), "local theory");
    pb.s = 1.9;
    EXPECT_EQ(pb.regime(), "outside the local theory");
    pb.kappa = 3;
    pb.sigma = 1.5;
    pb.s = 1.5;  // enough on R^2, not on the torus
    EXPECT_FALSE(pb.backed());
    pb.s = 2.1;
    EXPECT_TRUE(pb.backed());
    auto box = nls_space(Geometry::box(1, 2, 2 * std::numbers::pi, 2), 6, 3);
    CauchyProblem eu = problem(box, 3, 1.5, 1.0, 0.01);
    eu.s = 1.5;
    EXPECT_TRUE(eu.backed());
}

TEST(Persistence, BoundedOverTenHorizons)
{
    auto sp = small_space(3);
    CauchyProblem pb = problem(sp, 3, 1.5, 10.0, 0.005);
    pb.s = pb.sigma;
    auto rep = persistence_check(pb, 10.0);
    EXPECT_TRUE(rep.finite);
    EXPECT_LE(rep.max_hsigma_ratio, 2.0);
}
