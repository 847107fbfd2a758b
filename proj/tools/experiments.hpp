#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "run_config.hpp"

namespace grushin::cli {

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

/// 17 significant digits; inf / -inf / nan spelled out.
std::string format_double(double v);
void write_csv(std::ostream& out, const Table& t, const std::string& comment);

struct ExperimentResult {
    std::vector<Table> tables;
    json summary = json::object();
    std::vector<std::pair<std::string, std::string>> files;  // extra artifacts: name, content
};

using Runner = std::function<ExperimentResult()>;

/// Checks everything the experiment depends on (spaces, triples, lattices)
/// and returns the deferred computation.
Runner prepare(const ExperimentSpec& spec, std::uint64_t seed);

} // namespace grushin::cli
