#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grushin/version.hpp"
#include "run_config.hpp"
#include "runner.hpp"

using namespace grushin::cli;

namespace {

const char* describe(const std::string& kind)
{
    if (kind == "basis-check") return "Hermite orthonormality and eigen-relation residuals";
    if (kind == "decompose") return "dyadic block decomposition of random band-limited fields";
    if (kind == "dispersion-scan") return "sup of the localized kernel over time, with the fitted decay slope";
    if (kind == "strichartz-scan") return "per-block Strichartz quotients and the negative control";
    if (kind == "scaling-check") return "homogeneous-weight quotients of u and its dilates";
    if (kind == "counterexample") return "d2 = 1 traveling datum: translation identity and norm drift";
    if (kind == "nls-run") return "nonlinear Schroedinger run with conservation ledger and checkpoint";
    if (kind == "admissibility-table") return "admissible triples with their losses";
    return "";
}

std::string default_text(const ParamSpec& p)
{
    if (p.fallback.is_number_float()) {
        std::ostringstream os;
        os << p.fallback.get<double>();
        return os.str();
    }
    if (p.fallback.is_string()) return p.fallback.get<std::string>();
    return p.fallback.dump();
}

std::string param_footer(const std::string& kind)
{
    std::ostringstream os;
    os << "Parameters (--set name=value, or under 'params:' in the config file):\n";
    for (const auto& p : param_schema(kind)) {
        os << "  " << p.name << " [" << default_text(p) << "]  " << p.help;
        if (!p.choices.empty()) {
            os << " {";
            for (std::size_t i = 0; i < p.choices.size(); ++i) os << (i ? "|" : "") << p.choices[i];
            os << "}";
        }
        os << '\n';
    }
    return os.str();
}

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Options& o, bool with_set)
{
    sub->add_option("--config", o.config, "YAML config file; its values override flags");
    sub->add_option("--seed", o.seed, "base seed (unsigned 64-bit)");
    sub->add_option("--out", o.out, std::string("output directory (else $") + out_dir_env + ", else " + default_out_dir + ")");
    sub->add_option("--threads", o.threads, "worker cap; 0 keeps the library default")->check(CLI::NonNegativeNumber);
    if (with_set) sub->add_option("--set", o.sets, "parameter override name=value (repeatable)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral experiments for the Baouendi-Grushin operator"};
    app.set_version_flag("--version", std::string(grushin::version));
    app.require_subcommand(1, 1);

    Options opts;
    for (const auto& kind : experiment_kinds()) {
        CLI::App* sub = app.add_subcommand(kind, describe(kind));
        add_common(sub, opts, true);
        sub->footer(param_footer(kind));
    }
    CLI::App* run = app.add_subcommand("run", "run the experiment list of a config file");
    add_common(run, opts, false);
    run->footer("The config lists experiments as\n  experiments:\n    - kind: counterexample\n      N: 8\n"
                "An empty list writes the manifest only.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    try {
        CommandLine flags;
        if (chosen->count("--seed")) flags.seed = opts.seed;
        if (chosen->count("--out")) flags.out = opts.out;
        if (chosen->count("--threads")) flags.threads = opts.threads;
        for (const auto& s : opts.sets) {
            auto [key, value] = parse_assignment(s);
            if (flags.params.count(key)) throw ConfigError(value.where, "parameter '" + key + "' set twice");
            flags.params[key] = value;
        }
        std::optional<ConfigFile> file;
        if (!opts.config.empty()) file = load_config(opts.config);
        const RunConfig rc = merge_config(name == "run" ? std::nullopt : std::optional<std::string>(name), file, flags);
        return execute(rc, std::cerr);
    } catch (const grushin::InvalidInput& e) {
        std::cerr << "grushin: config error: " << e.what() << '\n';
        return exit_config;
    } catch (const grushin::NumericalFailure& e) {
        std::cerr << "grushin: numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "grushin: " << e.what() << '\n';
        return exit_io;
    }
}
