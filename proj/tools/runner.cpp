#include "runner.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "experiments.hpp"
#include "grushin/random.hpp"
#include "grushin/version.hpp"

namespace grushin::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string utc_now()
{
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string dir_name(std::size_t index, const std::string& kind)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu-", index);
    return buf + kind;
}

} // namespace

int execute(const RunConfig& rc, std::ostream& err)
{
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const std::string hash = rc.hash();
#ifdef _OPENMP
    if (rc.threads > 0) omp_set_num_threads(rc.threads);
#endif

    // Validate everything before computing anything.
    std::vector<Runner> runners;
    for (std::size_t i = 0; i < rc.experiments.size(); ++i) {
        const ExperimentSpec& e = rc.experiments[i];
        try {
            runners.push_back(prepare(e, derive_seed(rc.seed, i)));
        } catch (const InvalidInput& ex) {
            err << "grushin: config error: " << e.where.str() << ": " << e.kind << ": " << ex.what() << '\n';
            return exit_config;
        } catch (const NumericalFailure& ex) {
            err << "grushin: numerical failure: " << e.kind << ": " << ex.what() << '\n';
            return exit_numerical;
        }
    }

    json manifest = {{"tool", "grushin"},
                     {"version", version},
                     {"config_hash", hash},
                     {"seed", rc.seed},
                     {"config", rc.echo()},
                     {"started_utc", utc_now()}};
    json runs = json::array();
    int status = exit_ok;
    std::string error;

    try {
        fs::create_directories(rc.out_dir);
    } catch (const std::exception& ex) {
        err << "grushin: cannot create output directory " << rc.out_dir << ": " << ex.what() << '\n';
        return exit_io;
    }

    for (std::size_t i = 0; i < runners.size() && status == exit_ok; ++i) {
        const ExperimentSpec& e = rc.experiments[i];
        const std::string dir = dir_name(i, e.kind);
        json entry = {{"index", i}, {"kind", e.kind}, {"dir", dir}, {"seed", derive_seed(rc.seed, i)}};
        const auto t0 = clock::now();
        try {
            ExperimentResult res = runners[i]();
            const fs::path where = rc.out_dir / dir;
            fs::create_directories(where);
            json files = json::array();
            const std::string comment = "grushin " + e.kind + " config " + hash + " seed " + std::to_string(rc.seed);
            for (const auto& t : res.tables) {
                std::ostringstream os;
                write_csv(os, t, comment);
                write_file(where / (t.name + ".csv"), os.str());
                files.push_back(t.name + ".csv");
            }
            for (const auto& [name, content] : res.files) {
                write_file(where / name, content);
                files.push_back(name);
            }
            json summary = {{"kind", e.kind}, {"config_hash", hash}, {"seed", rc.seed}, {"params", e.params}, {"results", res.summary}};
            write_file(where / "summary.json", summary.dump(2) + "\n");
            files.push_back("summary.json");
            entry["artifacts"] = files;
            entry["status"] = "ok";
        } catch (const InvalidInput& ex) {
            status = exit_config;
            error = ex.what();
            err << "grushin: invalid input in " << e.kind << ": " << ex.what() << '\n';
        } catch (const NumericalFailure& ex) {
            status = exit_numerical;
            error = ex.what();
            err << "grushin: numerical failure in " << e.kind << ": " << ex.what() << '\n';
        } catch (const std::exception& ex) {
            status = exit_io;
            error = ex.what();
            err << "grushin: " << e.kind << ": " << ex.what() << '\n';
        }
        if (status != exit_ok) {
            entry["status"] = "failed";
            entry["error"] = error;
        }
        entry["wall_seconds"] = std::chrono::duration<double>(clock::now() - t0).count();
        runs.push_back(entry);
    }

    manifest["experiments"] = runs;
    manifest["status"] = status == exit_ok ? "ok" : "failed";
    manifest["exit_code"] = status;
    if (status != exit_ok) manifest["error"] = error;
    manifest["wall_seconds"] = std::chrono::duration<double>(clock::now() - start).count();
    try {
        write_file(rc.out_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& ex) {
        err << "grushin: " << ex.what() << '\n';
        return status == exit_ok ? exit_io : status;
    }
    return status;
}

} // namespace grushin::cli
