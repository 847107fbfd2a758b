#include "experiments.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "grushin/dispersion_probe.hpp"
#include "grushin/field_io.hpp"
#include "grushin/nls_solver.hpp"
#include "grushin/strichartz_lab.hpp"

namespace grushin::cli {

void Table::add(std::vector<Cell> row)
{
    if (row.size() != columns.size()) throw std::logic_error("table " + name + ": row width mismatch");
    rows.push_back(std::move(row));
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string cell_text(const Cell& c)
{
    if (auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (auto* d = std::get_if<double>(&c)) return format_double(*d);
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

} // namespace

void write_csv(std::ostream& out, const Table& t, const std::string& comment)
{
    if (!comment.empty()) out << "# " << comment << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
        out << '\n';
    }
}

namespace {

// ------------------------------------------------------------------ helpers

int geti(const json& p, const char* k) { return static_cast<int>(p.at(k).get<long long>()); }
double getd(const json& p, const char* k) { return p.at(k).get<double>(); }
std::string gets(const json& p, const char* k) { return p.at(k).get<std::string>(); }

Exponent get_exponent(const json& v)
{
    if (v.is_string()) return Exponent::parse(v.get<std::string>());
    return Exponent::finite(v.get<double>());
}

json exponent_json(Exponent e) { return e.is_infinite() ? json("inf") : json(e.value()); }

/// Non-finite values become strings so the summary stays valid JSON.
json num(double v)
{
    if (std::isfinite(v)) return v;
    return format_double(v);
}

Geometry make_geometry(const json& p, XGrid x = {})
{
    const int d1 = geti(p, "d1"), d2 = geti(p, "d2"), K = geti(p, "K");
    if (gets(p, "geometry") == "torus") {
        if (getd(p, "L") != 0.0 && std::abs(getd(p, "L") - 2.0 * std::numbers::pi) > 1e-12)
            throw InvalidInput("the torus has side 2 pi; set geometry: box to choose L");
        return Geometry::torus(d1, d2, K, x);
    }
    const double L = getd(p, "L") > 0.0 ? getd(p, "L") : 2.0 * std::numbers::pi;
    return Geometry::box(d1, d2, L, K, x);
}

// ------------------------------------------------------------------ basis-check

Runner basis_check(const json& p)
{
    const int d1 = geti(p, "d1"), m_max = geti(p, "m_max"), quad = geti(p, "quad_order");
    const std::vector<double> etas = p.at("etas").get<std::vector<double>>();
    auto basis = std::make_shared<HermiteBasis>(d1, m_max, quad);
    auto line = std::make_shared<HermiteBasis>(1, m_max, basis->quad_order());
    return [=] {
        ExperimentResult res;
        const double orth = basis->orthonormality_error();

        // (-d^2/dx^2 + eta^2 x^2) htilde_m = eta (2m+1) htilde_m on the 1D factor:
        // sample htilde_m on scaled nodes, project onto the full quadrature
        // expansion and apply the modal ladder operators.
        const int n = line->quad_order();
        std::vector<std::vector<double>> H(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) H[static_cast<std::size_t>(i)] = hermite_functions(line->nodes()[static_cast<std::size_t>(i)], n - 1);

        Table t{"basis", {"m", "multiplicity", "lambda", "eta", "eigen_residual"}, {}};
        double worst = 0.0;
        for (double eta : etas) {
            const auto nodes = line->scaled_nodes(eta);
            for (int m = 0; m <= m_max; ++m) {
                const auto v = line->eval_scaled(m, 0, eta, nodes);
                std::vector<cd> modal(static_cast<std::size_t>(n), 0.0);
                const double unscale = std::pow(eta, -0.25);
                for (int k = 0; k < n; ++k) {
                    double s = 0.0;
                    for (int i = 0; i < n; ++i)
                        s += line->weights()[static_cast<std::size_t>(i)] * H[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
                             v[static_cast<std::size_t>(i)] * unscale;
                    modal[static_cast<std::size_t>(k)] = s;
                }
                const auto d2 = hermite_derivative(hermite_derivative(modal));
                const auto x2 = hermite_position(hermite_position(modal));
                double num2 = 0.0, den2 = 0.0;
                for (std::size_t k = 0; k < d2.size(); ++k) {
                    const cd op = eta * (x2[k] - d2[k]);
                    const cd expect = k < modal.size() ? eta * (2.0 * m + 1.0) * modal[k] : cd(0);
                    num2 += std::norm(op - expect);
                    den2 += std::norm(expect);
                }
                const double r = std::sqrt(num2 / den2);
                worst = std::max(worst, r);
                t.add({static_cast<long long>(m), static_cast<long long>(basis->multiplicity(m)), basis->lambda(m), eta, r});
            }
        }
        res.tables.push_back(std::move(t));
        res.summary = {{"d1", d1},
                       {"m_max", m_max},
                       {"quad_order", basis->quad_order()},
                       {"mode_count", basis->mode_count()},
                       {"orthonormality_error", num(orth)},
                       {"max_eigen_residual", num(worst)},
                       {"eigen_residual_basis", "one-dimensional factor"}};
        return res;
    };
}

// ------------------------------------------------------------------ decompose

Runner decompose(const json& p, std::uint64_t seed)
{
    auto sp = FieldSpace::make(make_geometry(p), geti(p, "m_max"));
    const double s = getd(p, "s");
    const int samples = geti(p, "samples");
    return [=] {
        ExperimentResult res;
        const auto blocks = representable_blocks(*sp);
        Table bt{"blocks", {"sample", "A", "l2_sq", "weighted"}, {}};
        Table st{"samples", {"sample", "hs_sq", "block_sum", "ratio", "partition_defect", "roundtrip_error", "parseval_defect"}, {}};
        double worst_partition = 0, worst_roundtrip = 0, worst_parseval = 0, rmin = 1e300, rmax = 0;
        for (int i = 0; i < samples; ++i) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            const SpectralField u = random_field(sp, rng);
            const double norm = u.l2_norm();
            SpectralField sum(sp);
            double block_sum = 0.0;
            for (double A : blocks) {
                const SpectralField uA = project_block(u, A);
                sum += uA;
                const double l2 = uA.l2_norm() * uA.l2_norm();
                block_sum += std::pow(A, s) * l2;
                bt.add({static_cast<long long>(i), A, l2, std::pow(A, s) * l2});
            }
            const double hs = std::pow(sobolev_norm(u, s), 2.0);
            const GridField g = synthesize(u);
            const double partition = distance(sum, u) / norm;
            const double roundtrip = distance(analyze(g), u) / norm;
            const double parseval = std::abs(grid_l2_norm(g) - norm) / norm;
            worst_partition = std::max(worst_partition, partition);
            worst_roundtrip = std::max(worst_roundtrip, roundtrip);
            worst_parseval = std::max(worst_parseval, parseval);
            rmin = std::min(rmin, hs / block_sum);
            rmax = std::max(rmax, hs / block_sum);
            st.add({static_cast<long long>(i), hs, block_sum, hs / block_sum, partition, roundtrip, parseval});
        }
        res.tables.push_back(std::move(bt));
        res.tables.push_back(std::move(st));
        res.summary = {{"blocks", blocks.size()},
                       {"max_partition_defect", num(worst_partition)},
                       {"max_roundtrip_error", num(worst_roundtrip)},
                       {"max_parseval_defect", num(worst_parseval)},
                       {"hs_over_block_sum_min", num(rmin)},
                       {"hs_over_block_sum_max", num(rmax)}};
        return res;
    };
}

// ------------------------------------------------------------------ dispersion-scan

Runner dispersion_scan(const json& p)
{
    const double sigma = getd(p, "sigma");
    const int d = geti(p, "d");
    const auto grid = log_grid(getd(p, "t_min"), getd(p, "t_max"), geti(p, "points"));
    detail::require(grid.back() / grid.front() >= 99.9, "dispersion-scan: t_max / t_min must span two decades");
    int above = 0;
    for (double t : grid) above += t > 10.0;
    detail::require(above >= 2, "dispersion-scan: need >= 2 times above t = 10 (the transient is not fitted)");
    return [=] {
        ExperimentResult res;
        const DecayFit fit = fit_decay(sigma, d, grid);
        Table t{"decay", {"t", "sup_kernel"}, {}};
        for (std::size_t i = 0; i < fit.t.size(); ++i) t.add({fit.t[i], fit.sup[i]});
        res.tables.push_back(std::move(t));
        res.summary = {{"sigma", sigma},
                       {"d", d},
                       {"slope", num(fit.slope)},
                       {"intercept", num(fit.intercept)},
                       {"predicted_slope", predicted_decay(sigma, d)},
                       {"slope_error", num(std::abs(fit.slope - predicted_decay(sigma, d)))},
                       {"monotone", fit.monotone},
                       {"widened", fit.widened}};
        return res;
    };
}

// ------------------------------------------------------------------ strichartz-scan

Runner strichartz_scan(const json& p, std::uint64_t seed)
{
    BlockExperiment cfg;
    cfg.triple = {get_exponent(p.at("p")), get_exponent(p.at("q")), get_exponent(p.at("r")), getd(p, "sigma"), geti(p, "d1"),
                  geti(p, "d2")};
    cfg.epsilon = getd(p, "epsilon");
    cfg.A_max_exp = geti(p, "A_max_exp");
    cfg.samples = geti(p, "samples");
    cfg.seed = seed;
    cfg.T = getd(p, "T");
    cfg.K_cap = geti(p, "K_cap");
    cfg.base_step = getd(p, "base_step");
    cfg.m_cap = geti(p, "m_cap");
    cfg.control_shift = getd(p, "control_shift");
    cfg.validate();
    return [=] {
        ExperimentResult res;
        const BlockReport rep = run_block_experiment(cfg);
        Table s{"samples",
                {"A", "sample", "numerator", "l2", "sobolev", "control_sobolev", "quotient", "control", "localized"},
                {}};
        for (const auto& x : rep.samples)
            s.add({x.A, static_cast<long long>(x.sample), x.numerator, x.l2, x.sobolev, x.control_sobolev, x.quotient, x.control,
                   x.localized});
        Table b{"blocks", {"A", "sup_quotient", "sup_control", "sup_localized", "time_intervals"}, {}};
        for (const auto& x : rep.blocks)
            b.add({x.A, x.sup_quotient, x.sup_control, x.sup_localized, static_cast<long long>(x.time_intervals)});
        res.tables.push_back(std::move(s));
        res.tables.push_back(std::move(b));
        res.summary = {{"triple", cfg.triple.str()},
                       {"gamma", cfg.triple.gamma()},
                       {"epsilon", cfg.epsilon},
                       {"sup_quotient_ratio", num(rep.ratio)},
                       {"control_slope", num(rep.control_slope)},
                       {"localized_ratio", num(rep.localized_ratio)}};
        return res;
    };
}

// ------------------------------------------------------------------ scaling-check

Runner scaling(const json& p, std::uint64_t seed)
{
    const double sigma = getd(p, "sigma");
    const int d1 = geti(p, "d1"), d2 = geti(p, "d2");
    const Exponent q = get_exponent(p.at("q")), r = get_exponent(p.at("r"));
    const auto pt = time_exponent(q, r, sigma, d1, d2);
    if (!pt) throw InvalidInput("scaling-check: no time exponent for q = " + q.str() + ", r = " + r.str());
    AdmissibleTriple triple{*pt, q, r, sigma, d1, d2};
    if (auto v = is_admissible(triple); !v) throw InvalidInput("scaling-check: triple " + triple.str() + " not admissible: " + v.reason);
    const int m0 = geti(p, "m0");
    detail::require(geti(p, "K0") <= geti(p, "K"), "scaling-check: K0 must not exceed K");
    auto sp = FieldSpace::make(Geometry::torus(d1, d2, geti(p, "K"), XGrid{0, 0.0, 1e-10, false}), m0);
    auto u = std::make_shared<SpectralField>(scaling_datum(sp, geti(p, "K0"), m0, seed));
    const auto lambdas = p.at("lambdas").get<std::vector<double>>();
    for (double l : lambdas) rescale_datum(*u, l);  // lattice compatibility
    const double T = getd(p, "T");
    return [=] {
        ExperimentResult res;
        Table t{"scaling",
                {"lambda", "quotient", "quotient_scaled", "cell_factor", "deviation", "broken_observed", "broken_predicted",
                 "broken_deviation"},
                {}};
        double worst = 0, worst_broken = 0;
        for (double l : lambdas) {
            const ScalingResult s = scaling_check(*u, l, triple, T);
            worst = std::max(worst, s.deviation);
            worst_broken = std::max(worst_broken, s.broken_deviation);
            t.add({s.lambda, s.quotient, s.quotient_scaled, s.cell_factor, s.deviation, s.broken_observed, s.broken_predicted,
                   s.broken_deviation});
        }
        res.tables.push_back(std::move(t));
        res.summary = {{"triple", triple.str()},
                       {"max_deviation", num(worst)},
                       {"max_broken_deviation", num(worst_broken)}};
        return res;
    };
}

// ------------------------------------------------------------------ counterexample

Runner counterexample(const json& p)
{
    CounterexampleConfig cfg;
    cfg.N = getd(p, "N");
    cfg.T = getd(p, "T");
    cfg.K = geti(p, "K");
    cfg.time_samples = geti(p, "time_samples");
    cfg.x_nodes = geti(p, "x_nodes");
    if (cfg.T >= std::numbers::pi) throw InvalidInput("counterexample: horizon wraps around the 2 pi torus (need T < pi)");
    return [=] {
        ExperimentResult res;
        const CounterexampleReport rep = counterexample_d2_1(cfg);
        Table t{"trajectory", {"t", "translation_error", "l4", "linf"}, {}};
        for (const auto& r : rep.rows) t.add({r.t, r.translation_error, r.l4, r.linf});
        res.tables.push_back(std::move(t));
        res.summary = {{"verdict", rep.verdict},
                       {"N", cfg.N},
                       {"K", rep.K},
                       {"max_translation_error", num(rep.max_translation_error)},
                       {"l4_ratio_min", num(rep.l4_ratio_min)},
                       {"l4_ratio_max", num(rep.l4_ratio_max)},
                       {"linf_drift", num(rep.linf_drift)}};
        return res;
    };
}

// ------------------------------------------------------------------ nls-run

void ledger_rows(Table& t, const std::string& solver, const ConservationLedger& led)
{
    for (std::size_t n = 0; n < led.times.size(); ++n)
        t.add({solver, led.times[n], led.mass[n], led.energy[n], led.hs_norm[n], led.hsigma_ratio[n], led.linf_ratio[n]});
}

json ledger_summary(const ConservationLedger& led)
{
    json proxies = json::array();
    for (const auto& [tr, v] : led.xs_proxy) proxies.push_back({{"triple", tr.str()}, {"value", num(v)}});
    return {{"mass_drift", num(led.mass_drift)},
            {"energy_drift", num(led.energy_drift)},
            {"hsigma_constant", num(led.hsigma_constant)},
            {"hsigma_spread", num(led.hsigma_spread)},
            {"xs_proxy", proxies},
            {"proxy_note", led.proxy_note}};
}

Runner nls_run(const json& p, std::uint64_t seed)
{
    const int kappa = geti(p, "kappa");
    detail::require(kappa == 3 || kappa == 5, "nls-run: kappa must be 3 or 5");
    auto sp = nls_space(make_geometry(p), geti(p, "m_max"), kappa);
    check_dealiasing(*sp, kappa);
    CauchyProblem pb;
    pb.kappa = kappa;
    pb.sigma = getd(p, "sigma");
    pb.s = getd(p, "s");
    pb.T = getd(p, "T");
    pb.flow = gets(p, "flow") == "fractional" ? Flow::fractional : Flow::schrodinger;
    pb.coupling = getd(p, "coupling");
    pb.nonlinear_step = gets(p, "nonlinear_step") == "phase" ? NonlinearStep::phase : NonlinearStep::midpoint;
    pb.picard_depth = geti(p, "picard_depth");
    pb.picard_tol = getd(p, "picard_tol");
    pb.max_halvings = geti(p, "max_halvings");
    pb.epsilon = getd(p, "epsilon");
    pb.u0 = nls_datum(sp, geti(p, "m_top"), geti(p, "K0"), getd(p, "amplitude"), pb.s, seed);
    pb.dt = getd(p, "dt");
    if (pb.dt == 0.0) {
        const LinearFlow L(*sp, pb.sigma, pb.flow);
        pb.dt = 0.1 / detail::top_rate(L);
    }
    pb.dt = std::min(pb.dt, pb.T);
    pb.validate();
    detail::preflight(pb);
    const std::string solver = gets(p, "solver");
    const int every = geti(p, "record_every");
    const bool convergence = p.at("convergence").get<bool>();
    if (solver != "splitting") detail::require(detail::step_count(pb.T, pb.dt) >= 3, "nls-run: Picard needs >= 3 steps");

    return [=] {
        ExperimentResult res;
        Table ledger{"ledger", {"solver", "t", "mass", "energy", "hs_norm", "hsigma_ratio", "linf_ratio"}, {}};
        json summary = {{"regime", pb.regime()},
                        {"backed", pb.backed()},
                        {"kappa", pb.kappa},
                        {"sigma", pb.sigma},
                        {"s", pb.s},
                        {"dt", pb.dt},
                        {"T", pb.T},
                        {"u0_hs_norm", num(sobolev_norm(pb.u0, pb.s))},
                        {"u0_l2_norm", num(pb.u0.l2_norm())}};
        std::optional<SpectralField> final_state;
        if (solver != "picard") {
            const Trajectory tr = splitting_solve(pb, every);
            const ConservationLedger led = conservation_report(tr, pb);
            ledger_rows(ledger, "splitting", led);
            summary["splitting"] = ledger_summary(led);
            final_state = tr.states.back();
        }
        if (solver != "splitting") {
            const PicardSolution pic = picard_solve(pb);
            const PicardReport& r = pic.report;
            const ConservationLedger led = conservation_report(pic.trajectory, pb);
            ledger_rows(ledger, "picard", led);
            Table it{"picard", {"iteration", "increment", "contraction"}, {}};
            for (std::size_t k = 0; k < r.increments.size(); ++k)
                it.add({static_cast<long long>(k + 1), r.increments[k],
                        k == 0 ? std::numeric_limits<double>::quiet_NaN() : r.contraction[k - 1]});
            res.tables.push_back(std::move(it));
            json ps = ledger_summary(led);
            ps["iterations"] = r.iterations;
            ps["halvings"] = r.halvings;
            ps["T_used"] = r.T_used;
            ps["residual"] = num(r.residual);
            ps["max_contraction"] = num(r.max_contraction);
            ps["first_correction"] = num(r.first_correction);
            ps["first_correction_half"] = num(r.first_correction_half);
            ps["theta"] = num(r.theta);
            summary["picard"] = ps;
            if (solver == "both") {
                const CrossCheck c = cross_validate(pb, pic);
                summary["cross_check"] = {{"max_difference", num(c.max_difference)},
                                          {"nonlinear_effect", num(c.nonlinear_effect)},
                                          {"T", c.T}};
            }
            if (!final_state) final_state = pic.trajectory.states.back();
        }
        if (convergence) {
            const ConvergenceStudy st = splitting_convergence(pb);
            Table ct{"convergence", {"dt", "error", "energy_drift", "mass_drift"}, {}};
            for (std::size_t j = 0; j < st.dts.size(); ++j)
                ct.add({st.dts[j], j < st.errors.size() ? st.errors[j] : std::numeric_limits<double>::quiet_NaN(),
                        st.energy_drifts[j], st.mass_drifts[j]});
            res.tables.push_back(std::move(ct));
            summary["convergence"] = {{"order", num(st.order)},
                                      {"richardson_order", num(st.richardson_order)},
                                      {"energy_order", num(st.energy_order)}};
        }
        res.tables.insert(res.tables.begin(), std::move(ledger));
        std::ostringstream field;
        final_state->label = "final";
        write_field(field, *final_state);
        res.files.emplace_back("final_state.field", field.str());
        res.summary = std::move(summary);
        return res;
    };
}

// ------------------------------------------------------------------ admissibility-table

Runner admissibility(const json& p)
{
    const int d1 = geti(p, "d1"), d2 = geti(p, "d2"), r_max = geti(p, "r_max");
    const double sigma = getd(p, "sigma");
    const GeometryCase gc = gets(p, "geometry") == "compact" ? GeometryCase::compact : GeometryCase::euclidean;
    std::vector<Exponent> qs;
    for (const auto& q : p.at("qs")) qs.push_back(get_exponent(q));
    return [=] {
        ExperimentResult res;
        const auto rows = admissibility_table(d1, d2, sigma, gc, qs, r_max);
        Table t{"admissibility", {"r", "q", "p", "gamma", "gamma_sob", "gap"}, {}};
        for (const auto& r : rows) t.add({r.r.value(), r.q.value(), r.p.value(), r.gamma, r.gamma_sob, r.gap});
        res.tables.push_back(std::move(t));
        json qj = json::array();
        for (auto q : qs) qj.push_back(exponent_json(q));
        res.summary = {{"d1", d1}, {"d2", d2}, {"sigma", sigma}, {"geometry", to_string(gc)}, {"qs", qj}, {"rows", rows.size()}};
        return res;
    };
}

} // namespace

Runner prepare(const ExperimentSpec& spec, std::uint64_t seed)
{
    const json& p = spec.params;
    const std::string& k = spec.kind;
    if (k == "basis-check") return basis_check(p);
    if (k == "decompose") return decompose(p, seed);
    if (k == "dispersion-scan") return dispersion_scan(p);
    if (k == "strichartz-scan") return strichartz_scan(p, seed);
    if (k == "scaling-check") return scaling(p, seed);
    if (k == "counterexample") return counterexample(p);
    if (k == "nls-run") return nls_run(p, seed);
    if (k == "admissibility-table") return admissibility(p);
    throw InvalidInput("unknown experiment kind '" + k + "'");
}

} // namespace grushin::cli
