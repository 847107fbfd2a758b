#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grushin/error.hpp"

namespace grushin::cli {

using json = nlohmann::json;

/// Source position of a configuration value: "file:line:col", "--set" or "default".
struct Where {
    std::string source;
    int line = 0;    // 1-based, 0 when not from a file
    int column = 0;
    std::string str() const;
};

/// Invalid configuration; the message already carries the location.
class ConfigError : public InvalidInput {
public:
    ConfigError(const Where& where, const std::string& what);
};

enum class ParamType { integer, real, text, flag, real_list, exponent, exponent_list };

struct ParamSpec {
    std::string name;
    ParamType type;
    json fallback;
    double lo = -1e300;
    double hi = 1e300;
    std::vector<std::string> choices;  // text parameters only
    std::string help;
};

const std::vector<std::string>& experiment_kinds();
bool is_experiment_kind(const std::string& kind);
/// Parameter table of an experiment kind (throws InvalidInput for unknown kinds).
const std::vector<ParamSpec>& param_schema(const std::string& kind);

struct RawValue {
    json value;
    Where where;
};
using RawParams = std::map<std::string, RawValue>;

struct ExperimentSpec {
    std::string kind;
    json params;  // every schema parameter, typed and range checked
    std::map<std::string, Where> origin;
    Where where;
};

/// Later layers override earlier ones; unknown names and bad values are
/// reported at the position of the offending layer.
ExperimentSpec resolve_experiment(const std::string& kind, const Where& where, const std::vector<RawParams>& layers);

/// Values supplied on the command line.
struct CommandLine {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    RawParams params;  // --set key=value
};

/// Parsed YAML document.
struct ConfigFile {
    std::string path;
    std::optional<RawValue> seed, out, threads;
    std::optional<RawParams> params;  // single-kind subcommands
    struct Entry {
        std::string kind;
        Where where;
        RawParams params;
    };
    std::optional<std::vector<Entry>> experiments;
};

ConfigFile load_config(const std::string& path);
ConfigFile parse_config(const std::string& text, const std::string& source);

/// "key=value" with the value typed like a YAML scalar.
std::pair<std::string, RawValue> parse_assignment(const std::string& text);

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    int threads = 0;  // 0: library default
    std::vector<ExperimentSpec> experiments;
    std::map<std::string, std::string> provenance;  // seed / out / threads -> config | flag | env | default
    std::string config_path;

    /// Merged configuration; the hashed part is {seed, experiments}.
    json canonical() const;
    json echo() const;
    std::string hash() const;
};

inline constexpr const char* out_dir_env = "GRUSHIN_OUT_DIR";
inline constexpr const char* default_out_dir = "grushin-out";

/// Precedence: config file > command-line flags > environment (output dir) > defaults.
/// kind == nullopt is the `run` subcommand, which takes its experiment list from the file.
RunConfig merge_config(const std::optional<std::string>& kind, const std::optional<ConfigFile>& file,
                       const CommandLine& flags);

std::uint64_t fnv1a64(const std::string& bytes);

} // namespace grushin::cli
