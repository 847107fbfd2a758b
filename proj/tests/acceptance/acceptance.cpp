// Acceptance criteria 1-10. Usage: grushin_acceptance <n> [<n> ...]
// Prints one "criterion n ...: PASS|FAIL" line per criterion; exit status 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "grushin/dispersion_probe.hpp"
#include "grushin/nls_solver.hpp"
#include "grushin/strichartz_lab.hpp"
#include "run_config.hpp"
#include "runner.hpp"

using namespace grushin;
namespace fs = std::filesystem;

namespace {

// Tolerances, as stated in the acceptance list.
constexpr double orthonormality_tol = 1e-10;
constexpr double eigen_residual_tol = 1e-6;
constexpr double basis_seconds = 10.0;
constexpr double roundtrip_tol = 1e-8;
constexpr double parseval_tol = 1e-8;
constexpr double ode_defect_tol = 1e-8;
constexpr double group_law_tol = 1e-10;
constexpr double hs_conservation_tol = 1e-10;
constexpr double slope_tol = 0.1;
constexpr double dispersion_seconds = 600.0;
constexpr double block_ratio_max = 10.0;
constexpr double control_slope_min = 0.2;
constexpr double strichartz_seconds = 1800.0;
constexpr double scaling_tol = 0.1;
constexpr double translation_tol = 1e-3;
constexpr double l4_drift_tol = 0.01;
constexpr double mode_sum_ratio_max = 4.0;
constexpr double cross_check_tol = 1e-5;
constexpr double mass_drift_tol = 1e-6;
constexpr double energy_drift_tol = 1e-5;
constexpr double order_target = 2.0;
constexpr double order_band = 0.2;
constexpr double suite_seconds = 3600.0;

const fs::path times_dir = fs::path(GRUSHIN_ACCEPTANCE_DIR);

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what)
    {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string fmt_le(double v, double tol) { return fmt(v) + " <= " + fmt(tol); }

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(const std::vector<cd>& a, const std::vector<cd>& b)
{
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

// ------------------------------------------------------------------ 1

double eigen_residual(int m_max, const std::vector<double>& etas)
{
    const HermiteBasis b(1, m_max);
    const int n = b.quad_order();
    std::vector<std::vector<double>> H(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) H[static_cast<std::size_t>(i)] = hermite_functions(b.nodes()[static_cast<std::size_t>(i)], n - 1);
    double worst = 0.0;
    for (double eta : etas) {
        const auto nodes = b.scaled_nodes(eta);
        for (int m = 0; m <= m_max; ++m) {
            const auto v = b.eval_scaled(m, 0, eta, nodes);
            std::vector<cd> modal(static_cast<std::size_t>(n), 0.0);
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int i = 0; i < n; ++i)
                    s += b.weights()[static_cast<std::size_t>(i)] * H[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                         v[static_cast<std::size_t>(i)];
                modal[static_cast<std::size_t>(k)] = s * std::pow(eta, -0.25);
            }
            const auto d2 = hermite_derivative(hermite_derivative(modal));
            const auto x2 = hermite_position(hermite_position(modal));
            double num = 0, den = 0;
            for (std::size_t k = 0; k < d2.size(); ++k) {
                const cd expect = k < modal.size() ? eta * (2.0 * m + 1.0) * modal[k] : cd(0);
                num += std::norm(eta * (x2[k] - d2[k]) - expect);
                den += std::norm(expect);
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
    }
    return worst;
}

Verdict basis_fidelity()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const double e1 = HermiteBasis(1, 64).orthonormality_error();
    const double e2 = HermiteBasis(2, 32).orthonormality_error();
    const double r = eigen_residual(64, {0.05, 0.2, 1.0, 3.0, 40.0});
    const double secs = seconds_since(t0);
    v.check(e1 <= orthonormality_tol, "orthonormality d1=1, m<=64: " + fmt_le(e1, orthonormality_tol));
    v.check(e2 <= orthonormality_tol, "orthonormality d1=2, m<=32: " + fmt_le(e2, orthonormality_tol));
    v.check(r <= eigen_residual_tol, "eigen-relation residual, m<=64, 5 frequencies: " + fmt_le(r, eigen_residual_tol));
    v.check(secs <= basis_seconds, "runtime " + fmt_le(secs, basis_seconds) + " s");
    return v;
}

// ------------------------------------------------------------------ 2

Verdict transform_fidelity()
{
    Verdict v;
    struct Case {
        int d1, d2, K, m;
        bool box;
    };
    double worst_rt = 0, worst_pars = 0;
    int fields = 0;
    for (Case c : {Case{1, 1, 8, 10, false}, Case{1, 2, 4, 6, false}, Case{2, 1, 4, 5, false}, Case{1, 2, 4, 6, true}}) {
        auto geo = c.box ? Geometry::box(c.d1, c.d2, 64 * std::numbers::pi, c.K) : Geometry::torus(c.d1, c.d2, c.K);
        auto sp = FieldSpace::make(geo, c.m);
        for (int i = 0; i < 25; ++i, ++fields) {
            Rng rng(derive_seed(2024, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(c.d1 * 10 + c.d2 + (c.box ? 100 : 0))));
            const SpectralField u = random_field(sp, rng);
            const GridField g = synthesize(u);
            worst_rt = std::max(worst_rt, rel(analyze(g).data(), u.data()));
            worst_pars = std::max(worst_pars, std::abs(grid_l2_norm(g) - u.l2_norm()) / u.l2_norm());
        }
    }
    v.check(fields == 100, std::to_string(fields) + " random band-limited fields over 4 geometries");
    v.check(worst_rt <= roundtrip_tol, "round-trip relative error " + fmt_le(worst_rt, roundtrip_tol));
    v.check(worst_pars <= parseval_tol, "Parseval defect " + fmt_le(worst_pars, parseval_tol));
    return v;
}

// ------------------------------------------------------------------ 3

Verdict propagator_exactness()
{
    Verdict v;
    auto sp = FieldSpace::make(Geometry::torus(1, 2, 2), 3);
    Rng rng(33);
    const SpectralField u = random_field(sp, rng);
    for (double sigma : {1.0, 1.5, 2.0}) {
        const LinearFlow L(*sp, sigma, Flow::schrodinger);
        const double T = 0.5;
        const double dt = 0.005 / L.max_rate(u);
        const auto r = evolve_checked(u, {sigma, T}, dt);
        v.check(r.defect <= ode_defect_tol, "sigma=" + fmt(sigma) + " ODE cross-check (RK4, " + std::to_string(r.steps) +
                                                " steps) max coefficient defect " + fmt_le(r.defect, ode_defect_tol));
        for (Flow f : {Flow::schrodinger, Flow::fractional}) {
            const SpectralField a = evolve(evolve(u, {sigma, 0.3, {}, f}), {sigma, 0.45, {}, f});
            const SpectralField b = evolve(u, {sigma, 0.75, {}, f});
            const SpectralField back = evolve(b, {sigma, -0.75, {}, f});
            const double group = std::max(distance(a, b), distance(back, u)) / u.l2_norm();
            double hs = 0.0;
            for (double s : {-1.0, 0.0, 1.0, 2.0, 3.5}) hs = std::max(hs, std::abs(sobolev_norm(b, s) / sobolev_norm(u, s) - 1.0));
            v.check(group <= group_law_tol && hs <= hs_conservation_tol,
                    "sigma=" + fmt(sigma) + (f == Flow::schrodinger ? " e^{-it}" : " e^{+it}") + ": group law " +
                        fmt_le(group, group_law_tol) + ", H^s conservation " + fmt_le(hs, hs_conservation_tol));
        }
    }
    return v;
}

// ------------------------------------------------------------------ 4

Verdict dispersion_exponents()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = log_grid(10.0, 1000.0, 7);
    struct Case {
        double sigma;
        int d;
    };
    for (Case c : {Case{2.0, 1}, Case{2.0, 2}, Case{1.0, 2}, Case{1.0, 3}, Case{1.0, 1}}) {
        const DecayFit fit = fit_decay(c.sigma, c.d, grid);
        const double want = predicted_decay(c.sigma, c.d);
        v.check(std::abs(fit.slope - want) <= slope_tol, "sigma=" + fmt(c.sigma) + " d=" + std::to_string(c.d) + ": slope " +
                                                             fmt(fit.slope) + " vs " + fmt(want) + " (+-" + fmt(slope_tol) +
                                                             "), t in (10, 1000], " + std::to_string(fit.t.size()) + " times");
    }
    const double secs = seconds_since(t0);
    v.check(secs <= dispersion_seconds, "runtime " + fmt_le(secs, dispersion_seconds) + " s");
    return v;
}

// ------------------------------------------------------------------ 5

Verdict strichartz_proxy()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    BlockExperiment cfg;  // (d1, d2, sigma) = (1, 2, 1), triple (6, 2, 6)
    cfg.epsilon = 0.1;
    cfg.A_max_exp = 8;
    cfg.samples = 32;
    cfg.seed = 5;
    const BlockReport rep = run_block_experiment(cfg);
    const double secs = seconds_since(t0);
    std::string sups;
    for (const auto& b : rep.blocks) sups += (sups.empty() ? "" : " ") + fmt(b.sup_quotient);
    v.check(rep.blocks.size() == 9, "blocks A = 1 .. 2^8, 32 samples each; per-block sup: " + sups);
    v.check(rep.ratio <= block_ratio_max, "max/min of per-block sup quotient " + fmt_le(rep.ratio, block_ratio_max));
    v.check(rep.control_slope >= control_slope_min,
            "negative control (weight gamma - 1/2) log-log slope " + fmt(rep.control_slope) + " >= " + fmt(control_slope_min));
    v.check(secs <= strichartz_seconds, "runtime " + fmt_le(secs, strichartz_seconds) + " s");
    return v;
}

// ------------------------------------------------------------------ 6

Verdict scaling_invariance()
{
    Verdict v;
    auto sp = FieldSpace::make(Geometry::torus(1, 2, 16, XGrid{0, 0.0, 1e-10, false}), 2);
    for (double sigma : {1.0, 1.5}) {
        const Exponent q = Exponent::finite(2), r = Exponent::finite(6);
        const AdmissibleTriple t{*time_exponent(q, r, sigma, 1, 2), q, r, sigma, 1, 2};
        for (std::uint64_t seed : {17u, 18u}) {
            const SpectralField u = scaling_datum(sp, 1, 2, seed);
            for (double lambda : {2.0, 4.0}) {
                const ScalingResult s = scaling_check(u, lambda, t, sigma == 1.0 ? 0.5 : 0.2);
                v.check(s.deviation <= scaling_tol && s.broken_deviation <= scaling_tol,
                        "sigma=" + fmt(sigma) + " seed " + std::to_string(seed) + " lambda=" + fmt(lambda) +
                            ": quotient deviation " + fmt_le(s.deviation, scaling_tol) + "; broken control " +
                            fmt(s.broken_observed) + " vs predicted " + fmt(s.broken_predicted) + " (" +
                            fmt_le(s.broken_deviation, scaling_tol) + ")");
            }
        }
    }
    return v;
}

// ------------------------------------------------------------------ 7

Verdict counterexample_d2_one()
{
    Verdict v;
    CounterexampleConfig cfg;
    cfg.N = 8.0;
    cfg.T = 1.0;
    cfg.time_samples = 16;
    const CounterexampleReport rep = counterexample_d2_1(cfg);
    const double drift = std::max(1.0 - rep.l4_ratio_min, rep.l4_ratio_max - 1.0);
    v.check(rep.max_translation_error <= translation_tol,
            "max_t ||u(t) - u0(., . - t)||_2 / ||u0||_2 over t in [0, 1]: " + fmt_le(rep.max_translation_error, translation_tol));
    v.check(drift <= l4_drift_tol, "L4 norm drift " + fmt_le(drift, l4_drift_tol));
    v.check(rep.verdict == "non-dispersive confirmed", "verdict: " + rep.verdict);
    return v;
}

// ------------------------------------------------------------------ 8

Verdict mode_constant_summability()
{
    Verdict v;
    ModeConstantSpec s{1.0, 1, 2, Exponent::finite(6), Exponent::finite(2), Exponent::finite(6)};
    s.epsilon = 0.1;
    double lo = 1e300, hi = 0.0;
    bool bracketed = true;
    for (int k = 0; k <= 8; ++k) {
        const double A = std::ldexp(1.0, k);
        const ModeSum sum = mode_constant_sum(A, s);
        // independent brute-force partial sum
        double direct = 0.0;
        for (int m = 0; m < 400000; ++m) direct += std::pow(modewise_constant(A, m, s), 2.0);
        bracketed = bracketed && direct >= sum.partial * (1 - 1e-12) && direct <= sum.total() * (1 + 1e-12);
        lo = std::min(lo, sum.ratio());
        hi = std::max(hi, sum.ratio());
    }
    v.check(bracketed, "partial sum + tail bound bracket a 4e5-term direct sum for every A <= 2^8");
    v.check(hi / lo <= mode_sum_ratio_max, "sum_m C(A,m)^2 / A^{gamma + eps/2}: range [" + fmt(lo) + ", " + fmt(hi) +
                                               "], max/min " + fmt_le(hi / lo, mode_sum_ratio_max));
    return v;
}

// ------------------------------------------------------------------ 9

CauchyProblem nls_problem(int kappa, double sigma, double amplitude, double T)
{
    auto sp = nls_space(Geometry::torus(1, 2, 3), 8, kappa);
    CauchyProblem pb;
    pb.kappa = kappa;
    pb.sigma = sigma;
    pb.s = 2.1;
    pb.T = T;
    pb.u0 = nls_datum(sp, 1, 2, amplitude, pb.s, 9);
    const LinearFlow L(*sp, sigma, pb.flow);
    pb.dt = 0.1 / detail::top_rate(L);
    return pb;
}

Verdict nls_solver_checks()
{
    Verdict v;
    struct Case {
        int kappa;
        double sigma, amplitude, T;
    };
    for (Case c : {Case{5, 1.0, 20.0, 0.1}, Case{3, 1.5, 30.0, 0.05}}) {
        const std::string tag = "(kappa, sigma) = (" + std::to_string(c.kappa) + ", " + fmt(c.sigma) + "): ";
        CauchyProblem pb = nls_problem(c.kappa, c.sigma, c.amplitude, c.T);
        v.check(pb.backed(), tag + "s = 2.1 in the local-theory regime (" + pb.regime() + ")");
        pb.solver = Solver::picard;
        const PicardSolution pic = picard_solve(pb);
        const CrossCheck cc = cross_validate(pb, pic);
        v.check(cc.max_difference <= cross_check_tol,
                tag + "Picard vs splitting, relative L2: " + fmt_le(cc.max_difference, cross_check_tol) +
                    " (nonlinear effect " + fmt(cc.nonlinear_effect) + ")");
        v.check(pic.report.max_contraction < 1.0 && pic.report.theta > 0.0,
                tag + "Picard contraction factor " + fmt(pic.report.max_contraction) + " < 1 after " +
                    std::to_string(pic.report.iterations) + " iterates; theta = " + fmt(pic.report.theta) + " > 0");
        pb.solver = Solver::splitting;
        const ConservationLedger led = conservation_report(splitting_solve(pb), pb, false);
        v.check(led.mass_drift <= mass_drift_tol && led.energy_drift <= energy_drift_tol,
                tag + "mass drift " + fmt_le(led.mass_drift, mass_drift_tol) + ", energy drift " +
                    fmt_le(led.energy_drift, energy_drift_tol));
        const ConvergenceStudy st = splitting_convergence(pb);
        v.check(std::abs(st.order - order_target) <= order_band && std::abs(st.energy_order - order_target) <= order_band,
                tag + "dt -> dt/2: error order " + fmt(st.order) + " (Richardson " + fmt(st.richardson_order) +
                    "), energy-drift order " + fmt(st.energy_order) + ", target 2 +- " + fmt(order_band));
    }
    return v;
}

// ------------------------------------------------------------------ 10

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism()
{
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    {
        CauchyProblem pb = nls_problem(3, 1.5, 30.0, 0.02);
        const Trajectory a = splitting_solve(pb), b = splitting_solve(pb);
        bool same = a.states.size() == b.states.size();
        for (std::size_t n = 0; same && n < a.states.size(); ++n) same = a.states[n].data() == b.states[n].data();
        v.check(same, "repeated splitting trajectories are bit-identical");
    }
    {
        BlockExperiment cfg;
        cfg.A_max_exp = 3;
        cfg.samples = 3;
        const BlockReport a = run_block_experiment(cfg), b = run_block_experiment(cfg);
        bool same = a.samples.size() == b.samples.size();
        for (std::size_t i = 0; same && i < a.samples.size(); ++i)
            same = a.samples[i].quotient == b.samples[i].quotient && a.samples[i].control == b.samples[i].control;
        v.check(same, "repeated Strichartz block samples are bit-identical");
    }
    {
        const std::string yaml = "seed: 77\nexperiments:\n"
                                 "  - kind: decompose\n    samples: 2\n"
                                 "  - kind: scaling-check\n"
                                 "  - kind: nls-run\n    T: 0.02\n    convergence: true\n";
        const auto file = cli::parse_config(yaml, "determinism.yaml");
        bool same = true;
        int files = 0;
        const fs::path root = times_dir / "determinism";
        fs::remove_all(root);
        for (const char* run : {"a", "b"}) {
            cli::CommandLine flags;
            flags.out = (root / run).string();
            const auto rc = cli::merge_config(std::nullopt, file, flags);
            std::ostringstream err;
            same = same && cli::execute(rc, err) == 0;
        }
        for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
            if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
            const auto other = root / "b" / fs::relative(e.path(), root / "a");
            same = same && fs::exists(other) && slurp(e.path()) == slurp(other);
            ++files;
        }
        v.check(same && files > 0, "two CLI runs with one config + seed: " + std::to_string(files) + " artifacts byte-identical");
    }
    double total = 0.0;
    std::string missing;
    for (int k = 1; k <= 9; ++k) {
        std::ifstream in(times_dir / ("criterion_" + std::to_string(k) + ".seconds"));
        double s = 0.0;
        if (in >> s)
            total += s;
        else
            missing += " " + std::to_string(k);
    }
    total += seconds_since(t0);
    v.check(missing.empty(), missing.empty() ? "timings of criteria 1-9 recorded" : "timings missing for criteria" + missing);
    v.check(total <= suite_seconds, "criteria 1-10 took " + fmt(total) + " s on this machine (" +
                                        std::to_string(std::max(1u, std::thread::hardware_concurrency())) +
                                        " hardware threads), budget " + fmt(suite_seconds) + " s");
    return v;
}

struct Criterion {
    const char* name;
    std::function<Verdict()> run;
};

const std::map<int, Criterion>& criteria()
{
    static const std::map<int, Criterion> c{
        {1, {"basis fidelity", basis_fidelity}},
        {2, {"transform fidelity", transform_fidelity}},
        {3, {"propagator exactness", propagator_exactness}},
        {4, {"dispersion exponents", dispersion_exponents}},
        {5, {"Strichartz boundedness proxy", strichartz_proxy}},
        {6, {"scaling invariance", scaling_invariance}},
        {7, {"d2=1 counterexample", counterexample_d2_one}},
        {8, {"mode-constant summability", mode_constant_summability}},
        {9, {"NLS solver", nls_solver_checks}},
        {10, {"determinism and suite budget", determinism}},
    };
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (const auto& [k, c] : criteria()) which.push_back(k);
    fs::create_directories(times_dir);
    bool all = true;
    for (int k : which) {
        auto it = criteria().find(k);
        if (it == criteria().end()) {
            std::cerr << "unknown criterion " << k << '\n';
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = it->second.run();
        } catch (const std::exception& e) {
            v.check(false, std::string("exception: ") + e.what());
        }
        const double secs = seconds_since(t0);
        if (k <= 9) std::ofstream(times_dir / ("criterion_" + std::to_string(k) + ".seconds")) << secs << '\n';
        for (const auto& n : v.notes) std::cout << "    " << n << '\n';
        std::cout << "criterion " << k << " (" << it->second.name << "): " << (v.pass ? "PASS" : "FAIL") << "  [" << fmt(secs)
                  << " s]" << std::endl;
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
