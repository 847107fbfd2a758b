#include "run_config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "grushin/admissibility.hpp"
#include "grushin/version.hpp"

namespace grushin::cli {

std::string Where::str() const
{
    if (line <= 0) return source;
    return source + ":" + std::to_string(line) + ":" + std::to_string(column);
}

ConfigError::ConfigError(const Where& where, const std::string& what) : InvalidInput(where.str() + ": " + what) {}

// ------------------------------------------------------------------ schema

namespace {

using P = ParamType;

ParamSpec integer(std::string n, long long def, double lo, double hi, std::string help)
{
    return {std::move(n), P::integer, def, lo, hi, {}, std::move(help)};
}
ParamSpec real(std::string n, double def, double lo, double hi, std::string help)
{
    return {std::move(n), P::real, def, lo, hi, {}, std::move(help)};
}
ParamSpec text(std::string n, std::string def, std::vector<std::string> choices, std::string help)
{
    return {std::move(n), P::text, def, 0, 0, std::move(choices), std::move(help)};
}
ParamSpec flag(std::string n, bool def, std::string help) { return {std::move(n), P::flag, def, 0, 0, {}, std::move(help)}; }
ParamSpec reals(std::string n, std::vector<double> def, double lo, double hi, std::string help)
{
    return {std::move(n), P::real_list, json(def), lo, hi, {}, std::move(help)};
}
ParamSpec exponent(std::string n, json def, std::string help) { return {std::move(n), P::exponent, def, 1, 1e300, {}, std::move(help)}; }
ParamSpec exponents(std::string n, json def, std::string help)
{
    return {std::move(n), P::exponent_list, def, 1, 1e300, {}, std::move(help)};
}

std::vector<ParamSpec> geometry_params(int K, int m_max)
{
    return {
        text("geometry", "torus", {"torus", "box"}, "y domain: 2 pi torus or periodic Euclidean box"),
        integer("d1", 1, 1, 3, "degenerate (Hermite) dimension"),
        integer("d2", 2, 1, 3, "periodic dimension"),
        integer("K", K, 1, 512, "lattice cutoff |k|_inf <= K"),
        real("L", 0.0, 0.0, 1e6, "box side; 0 means 2 pi"),
        integer("m_max", m_max, 0, 128, "top Hermite mode"),
    };
}

std::map<std::string, std::vector<ParamSpec>> build_schemas()
{
    std::map<std::string, std::vector<ParamSpec>> s;
    s["basis-check"] = {
        integer("d1", 1, 1, 3, "dimension"),
        integer("m_max", 64, 0, 160, "top mode"),
        integer("quad_order", 0, 0, 4096, "Gauss-Hermite nodes; 0 picks the default"),
        reals("etas", {0.2, 3.0}, 1e-6, 1e6, "frequencies |eta| for the eigen-relation residual"),
    };
    {
        auto g = geometry_params(8, 8);
        g.push_back(real("s", 1.0, -10.0, 10.0, "Sobolev index of the block identity"));
        g.push_back(integer("samples", 4, 1, 10000, "random band-limited fields"));
        s["decompose"] = g;
    }
    s["dispersion-scan"] = {
        real("sigma", 2.0, 1.0, 2.0, "fractional power"),
        integer("d", 1, 1, 3, "dimension of the oscillatory integral"),
        real("t_min", 10.0, 1e-6, 1e9, "first time"),
        real("t_max", 1000.0, 1e-6, 1e9, "last time"),
        integer("points", 5, 2, 256, "log-spaced times"),
    };
    s["strichartz-scan"] = {
        real("sigma", 1.0, 1.0, 2.0, "fractional power"),
        integer("d1", 1, 1, 3, "degenerate dimension"),
        integer("d2", 2, 1, 3, "periodic dimension"),
        exponent("p", 6, "time exponent"),
        exponent("q", 2, "x exponent"),
        exponent("r", 6, "y exponent"),
        real("epsilon", 0.1, 0.0, 10.0, "derivative loss above gamma"),
        integer("A_max_exp", 4, 1, 12, "blocks A = 1 .. 2^A_max_exp"),
        integer("samples", 4, 1, 100000, "random data per block"),
        real("T", 0.125, 1e-9, 1e6, "time horizon"),
        integer("K_cap", 24, 2, 512, "lattice cutoff per block box"),
        real("base_step", 1.0 / 12.0, 1e-9, 1e6, "lattice step of block A is A * base_step"),
        integer("m_cap", 8, 0, 128, "top Hermite mode per block"),
        real("control_shift", 0.5, 0.0, 10.0, "negative control weight gamma - shift"),
    };
    s["scaling-check"] = {
        real("sigma", 1.0, 1.0, 2.0, "fractional power"),
        integer("d1", 1, 1, 3, "degenerate dimension"),
        integer("d2", 2, 1, 3, "periodic dimension"),
        exponent("q", 2, "x exponent"),
        exponent("r", 6, "y exponent; p follows from the scaling identity"),
        integer("K", 16, 1, 512, "lattice cutoff (must hold K0 * lambda^2)"),
        integer("K0", 1, 1, 512, "datum frequency cutoff"),
        integer("m0", 2, 0, 128, "datum top mode"),
        reals("lambdas", {2.0, 4.0}, 1.0, 1e3, "dilation factors (powers of two)"),
        real("T", 0.5, 1e-9, 1e6, "time horizon for u"),
    };
    s["counterexample"] = {
        real("N", 8.0, 2.0, 1e3, "concentration parameter"),
        real("T", 1.0, 1e-9, 3.14159, "time horizon (< pi)"),
        integer("K", 0, 0, 1000000, "lattice cutoff; 0 picks ceil(12 N^2)"),
        integer("time_samples", 16, 1, 100000, "time intervals"),
        integer("x_nodes", 0, 0, 4096, "x nodes; 0 picks automatically"),
    };
    {
        auto g = geometry_params(3, 8);
        g.insert(g.end(), {
            integer("kappa", 5, 3, 5, "power of the nonlinearity (3 or 5)"),
            real("sigma", 1.0, 1.0, 2.0, "fractional power"),
            real("s", 2.1, 0.0, 10.0, "regularity of the diagnostics"),
            real("T", 0.1, 1e-9, 1e6, "time horizon"),
            real("dt", 0.0, 0.0, 1e6, "step; 0 picks 0.1 / top linear rate"),
            text("solver", "both", {"splitting", "picard", "both"}, "integrator"),
            real("amplitude", 20.0, 0.0, 1e9, "||u0||_{H^s}"),
            integer("m_top", 1, 0, 128, "datum top mode"),
            integer("K0", 2, 1, 512, "datum frequency cutoff"),
            real("coupling", 1.0, -1e6, 1e6, "nonlinear coupling; 0 is the linear flow"),
            text("flow", "schrodinger", {"schrodinger", "fractional"}, "sign of the linear part"),
            text("nonlinear_step", "midpoint", {"midpoint", "phase"}, "splitting substep"),
            integer("record_every", 1, 1, 1000000, "ledger stride in steps"),
            integer("picard_depth", 30, 1, 1000, "max Picard iterates"),
            real("picard_tol", 1e-8, 1e-16, 1.0, "Picard stopping tolerance"),
            integer("max_halvings", 6, 0, 40, "horizon halvings before giving up"),
            real("epsilon", 0.1, 0.0, 10.0, "loss in the X^s proxy weights"),
            flag("convergence", false, "also run the dt -> dt/2 study"),
        });
        s["nls-run"] = g;
    }
    s["admissibility-table"] = {
        integer("d1", 1, 1, 16, "degenerate dimension"),
        integer("d2", 2, 1, 16, "periodic dimension"),
        real("sigma", 1.0, 1.0, 2.0, "fractional power"),
        text("geometry", "euclidean", {"euclidean", "compact"}, "restriction window"),
        exponents("qs", json::array({2}), "x exponents to sweep"),
        integer("r_max", 32, 2, 4096, "largest finite r"),
    };
    return s;
}

const std::map<std::string, std::vector<ParamSpec>>& schemas()
{
    static const auto s = build_schemas();
    return s;
}

} // namespace

const std::vector<std::string>& experiment_kinds()
{
    static const std::vector<std::string> k{"basis-check",    "decompose",     "dispersion-scan", "strichartz-scan",
                                            "scaling-check",  "counterexample", "nls-run",        "admissibility-table"};
    return k;
}

bool is_experiment_kind(const std::string& kind) { return schemas().count(kind) > 0; }

const std::vector<ParamSpec>& param_schema(const std::string& kind)
{
    auto it = schemas().find(kind);
    if (it == schemas().end()) throw InvalidInput("unknown experiment kind '" + kind + "'");
    return it->second;
}

// ------------------------------------------------------------------ typing

namespace {

std::string type_name(ParamType t)
{
    switch (t) {
    case P::integer: return "an integer";
    case P::real: return "a number";
    case P::text: return "a string";
    case P::flag: return "true or false";
    case P::real_list: return "a list of numbers";
    case P::exponent: return "an exponent (number >= 1, a/b or inf)";
    case P::exponent_list: return "a list of exponents";
    }
    return "?";
}

std::string show(const json& v) { return v.dump(); }

double as_number(const json& v, const ParamSpec& spec, const Where& w)
{
    if (!v.is_number()) throw ConfigError(w, "'" + spec.name + "' must be " + type_name(spec.type) + ", got " + show(v));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(w, "'" + spec.name + "' must be finite");
    if (x < spec.lo || x > spec.hi) {
        std::ostringstream os;
        os << "'" << spec.name << "' = " << std::setprecision(17) << x << " outside [" << spec.lo << ", " << spec.hi << "]";
        throw ConfigError(w, os.str());
    }
    return x;
}

json as_exponent(const json& v, const ParamSpec& spec, const Where& w)
{
    try {
        if (v.is_number()) {
            Exponent::finite(v.get<double>());
            return v;
        }
        if (v.is_string()) {
            const auto e = Exponent::parse(v.get<std::string>());
            if (e.is_infinite()) return "inf";
            return e.value();
        }
    } catch (const InvalidInput& e) {
        throw ConfigError(w, "'" + spec.name + "': " + e.what());
    }
    throw ConfigError(w, "'" + spec.name + "' must be " + type_name(spec.type) + ", got " + show(v));
}

json coerce(const json& v, const ParamSpec& spec, const Where& w)
{
    switch (spec.type) {
    case P::integer: {
        if (!v.is_number_integer())
            throw ConfigError(w, "'" + spec.name + "' must be " + type_name(spec.type) + ", got " + show(v));
        as_number(v, spec, w);
        return v.get<long long>();
    }
    case P::real: return as_number(v, spec, w);
    case P::text: {
        if (!v.is_string()) throw ConfigError(w, "'" + spec.name + "' must be " + type_name(spec.type) + ", got " + show(v));
        const auto s = v.get<std::string>();
        if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
            std::string opts;
            for (const auto& c : spec.choices) opts += (opts.empty() ? "" : ", ") + c;
            throw ConfigError(w, "'" + spec.name + "' must be one of {" + opts + "}, got '" + s + "'");
        }
        return s;
    }
    case P::flag:
        if (!v.is_boolean()) throw ConfigError(w, "'" + spec.name + "' must be " + type_name(spec.type) + ", got " + show(v));
        return v;
    case P::real_list: {
        json out = json::array();
        if (v.is_array()) {
            if (v.empty()) throw ConfigError(w, "'" + spec.name + "' must not be empty");
            for (const auto& e : v) out.push_back(as_number(e, spec, w));
        } else {
            out.push_back(as_number(v, spec, w));
        }
        return out;
    }
    case P::exponent: return as_exponent(v, spec, w);
    case P::exponent_list: {
        json out = json::array();
        if (v.is_array()) {
            if (v.empty()) throw ConfigError(w, "'" + spec.name + "' must not be empty");
            for (const auto& e : v) out.push_back(as_exponent(e, spec, w));
        } else {
            out.push_back(as_exponent(v, spec, w));
        }
        return out;
    }
    }
    return v;
}

Where default_where() { return {"default", 0, 0}; }

} // namespace

ExperimentSpec resolve_experiment(const std::string& kind, const Where& where, const std::vector<RawParams>& layers)
{
    if (!is_experiment_kind(kind)) {
        std::string opts;
        for (const auto& k : experiment_kinds()) opts += (opts.empty() ? "" : ", ") + k;
        throw ConfigError(where, "unknown experiment kind '" + kind + "' (expected one of " + opts + ")");
    }
    const auto& schema = param_schema(kind);
    ExperimentSpec spec;
    spec.kind = kind;
    spec.where = where;
    spec.params = json::object();
    for (const auto& p : schema) {
        spec.params[p.name] = coerce(p.fallback, p, default_where());
        spec.origin[p.name] = default_where();
    }
    for (const auto& layer : layers) {
        for (const auto& [name, raw] : layer) {
            auto it = std::find_if(schema.begin(), schema.end(), [&](const ParamSpec& p) { return p.name == name; });
            if (it == schema.end()) throw ConfigError(raw.where, "unknown parameter '" + name + "' for " + kind);
            spec.params[name] = coerce(raw.value, *it, raw.where);
            spec.origin[name] = raw.where;
        }
    }
    return spec;
}

// ------------------------------------------------------------------ YAML

namespace {

Where where_of(const YAML::Node& n, const std::string& source)
{
    const YAML::Mark m = n.Mark();
    if (m.is_null()) return {source, 0, 0};
    return {source, m.line + 1, m.column + 1};
}

json scalar_to_json(const YAML::Node& n, const std::string& source)
{
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted: always text
    if (s == "true" || s == "True" || s == "TRUE") return true;
    if (s == "false" || s == "False" || s == "FALSE") return false;
    if (s.empty() || s == "~" || s == "null") throw ConfigError(where_of(n, source), "empty value");
    {
        char* end = nullptr;
        errno = 0;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (*end == '\0' && errno == 0) return v;
    }
    {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (*end == '\0' && std::isfinite(v) && s.find_first_of("xXnN") == std::string::npos) return v;
    }
    return s;
}

json node_to_json(const YAML::Node& n, const std::string& source)
{
    switch (n.Type()) {
    case YAML::NodeType::Scalar: return scalar_to_json(n, source);
    case YAML::NodeType::Sequence: {
        json a = json::array();
        for (const auto& e : n) a.push_back(node_to_json(e, source));
        return a;
    }
    case YAML::NodeType::Map: throw ConfigError(where_of(n, source), "nested mappings are not parameter values");
    default: throw ConfigError(where_of(n, source), "empty value");
    }
}

RawParams read_params(const YAML::Node& map, const std::string& source, const std::vector<std::string>& skip)
{
    if (!map.IsMap()) throw ConfigError(where_of(map, source), "expected a mapping of parameters");
    RawParams out;
    for (const auto& kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
        if (out.count(key)) throw ConfigError(where_of(kv.first, source), "duplicate parameter '" + key + "'");
        out[key] = {node_to_json(kv.second, source), where_of(kv.second, source)};
    }
    return out;
}

} // namespace

ConfigFile parse_config(const std::string& text, const std::string& source)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError({source, e.mark.line + 1, e.mark.column + 1}, "YAML syntax: " + e.msg);
    }
    ConfigFile cf;
    cf.path = source;
    if (root.IsNull()) return cf;
    if (!root.IsMap()) throw ConfigError(where_of(root, source), "top level must be a mapping");
    std::map<std::string, bool> seen;
    try {
        for (const auto& kv : root) {
            const std::string key = kv.first.as<std::string>();
            const Where w = where_of(kv.second, source);
            if (seen[key]) throw ConfigError(where_of(kv.first, source), "duplicate key '" + key + "'");
            seen[key] = true;
            if (key == "seed" || key == "out" || key == "threads") {
                if (!kv.second.IsScalar()) throw ConfigError(w, "'" + key + "' must be a scalar");
                RawValue v{key == "seed" ? json(kv.second.Scalar()) : scalar_to_json(kv.second, source), w};
                (key == "seed" ? cf.seed : key == "out" ? cf.out : cf.threads) = v;
            } else if (key == "params") {
                cf.params = read_params(kv.second, source, {});
            } else if (key == "experiments") {
                std::vector<ConfigFile::Entry> list;
                if (!kv.second.IsSequence() && !kv.second.IsNull())
                    throw ConfigError(w, "'experiments' must be a list");
                for (const auto& e : kv.second) {
                    const Where ew = where_of(e, source);
                    if (!e.IsMap() || !e["kind"]) throw ConfigError(ew, "each experiment needs a 'kind'");
                    ConfigFile::Entry entry;
                    entry.kind = e["kind"].as<std::string>();
                    entry.where = ew;
                    if (!is_experiment_kind(entry.kind)) resolve_experiment(entry.kind, where_of(e["kind"], source), {});
                    entry.params = read_params(e, source, {"kind"});
                    list.push_back(std::move(entry));
                }
                cf.experiments = std::move(list);
            } else {
                throw ConfigError(where_of(kv.first, source),
                                  "unknown key '" + key + "' (expected seed, out, threads, params or experiments)");
            }
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError({source, e.mark.line + 1, e.mark.column + 1}, e.msg);
    }
    return cf;
}

ConfigFile load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError({path, 0, 0}, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::pair<std::string, RawValue> parse_assignment(const std::string& text)
{
    const Where w{"--set " + text, 0, 0};
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(w, "expected key=value");
    const std::string key = text.substr(0, eq);
    const std::string value = text.substr(eq + 1);
    YAML::Node n;
    try {
        n = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ConfigError(w, "bad value: " + e.msg);
    }
    if (n.IsMap()) throw ConfigError(w, "value must be a scalar or a [list]");
    return {key, {node_to_json(n, w.source), w}};
}

// ------------------------------------------------------------------ merge

namespace {

std::uint64_t parse_seed(const RawValue& v)
{
    if (v.value.is_number_unsigned()) return v.value.get<std::uint64_t>();
    if (v.value.is_number_integer() && v.value.get<long long>() >= 0) return static_cast<std::uint64_t>(v.value.get<long long>());
    if (v.value.is_string()) {
        const std::string s = v.value.get<std::string>();
        char* end = nullptr;
        errno = 0;
        const unsigned long long x = std::strtoull(s.c_str(), &end, 0);
        if (!s.empty() && s[0] != '-' && *end == '\0' && errno == 0) return x;
    }
    throw ConfigError(v.where, "'seed' must be an unsigned 64-bit integer, got " + v.value.dump());
}

int parse_threads(const RawValue& v)
{
    if (!v.value.is_number_integer() || v.value.get<long long>() < 0 || v.value.get<long long>() > 4096)
        throw ConfigError(v.where, "'threads' must be an integer in [0, 4096], got " + v.value.dump());
    return static_cast<int>(v.value.get<long long>());
}

} // namespace

RunConfig merge_config(const std::optional<std::string>& kind, const std::optional<ConfigFile>& file,
                       const CommandLine& flags)
{
    RunConfig rc;
    rc.config_path = file ? file->path : "";

    rc.provenance["seed"] = "default";
    if (flags.seed) {
        rc.seed = *flags.seed;
        rc.provenance["seed"] = "flag";
    }
    if (file && file->seed) {
        rc.seed = parse_seed(*file->seed);
        rc.provenance["seed"] = "config";
    }

    rc.out_dir = default_out_dir;
    rc.provenance["out"] = "default";
    if (const char* env = std::getenv(out_dir_env); env && *env) {
        rc.out_dir = env;
        rc.provenance["out"] = "env";
    }
    if (flags.out) {
        rc.out_dir = *flags.out;
        rc.provenance["out"] = "flag";
    }
    if (file && file->out) {
        if (!file->out->value.is_string() || file->out->value.get<std::string>().empty())
            throw ConfigError(file->out->where, "'out' must be a directory path");
        rc.out_dir = file->out->value.get<std::string>();
        rc.provenance["out"] = "config";
    }

    rc.provenance["threads"] = "default";
    if (flags.threads) {
        if (*flags.threads < 0) throw ConfigError({"--threads", 0, 0}, "must be >= 0");
        rc.threads = *flags.threads;
        rc.provenance["threads"] = "flag";
    }
    if (file && file->threads) {
        rc.threads = parse_threads(*file->threads);
        rc.provenance["threads"] = "config";
    }

    if (kind) {
        if (file && file->experiments)
            throw ConfigError({file->path, 0, 0}, "'experiments' lists belong to the 'run' subcommand");
        std::vector<RawParams> layers{flags.params};
        if (file && file->params) layers.push_back(*file->params);
        rc.experiments.push_back(resolve_experiment(*kind, {file ? file->path : "command line", 0, 0}, layers));
    } else {
        if (!file) throw ConfigError({"run", 0, 0}, "the run subcommand needs --config");
        if (file->params) throw ConfigError({file->path, 0, 0}, "top-level 'params' belong to single-kind subcommands");
        if (!flags.params.empty()) throw ConfigError(flags.params.begin()->second.where, "--set is not accepted by 'run'");
        if (file->experiments)
            for (const auto& e : *file->experiments) rc.experiments.push_back(resolve_experiment(e.kind, e.where, {e.params}));
    }
    return rc;
}

json RunConfig::canonical() const
{
    json exps = json::array();
    for (const auto& e : experiments) exps.push_back({{"kind", e.kind}, {"params", e.params}});
    return {{"seed", seed}, {"experiments", exps}};
}

json RunConfig::echo() const
{
    json j = canonical();
    j["out"] = out_dir.string();
    j["threads"] = threads;
    j["provenance"] = provenance;
    j["config_file"] = config_path;
    return j;
}

std::uint64_t fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string RunConfig::hash() const
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical().dump());
    return os.str();
}

} // namespace grushin::cli
