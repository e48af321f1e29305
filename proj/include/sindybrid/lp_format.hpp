#pragma once

#include "sindybrid/milp.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sindybrid {

/// CPLEX LP text of the instance (Minimize / Subject To / Bounds / Binaries / Generals).
std::string export_lp(const MilpProblem& problem);

/// Writes export_lp(problem) to `path`. Throws Error when the file cannot be written.
void export_lp(const MilpProblem& problem, const std::filesystem::path& path);

/// Minimal reader for the subset of the LP format written by export_lp.
struct ParsedLp {
    struct Row {
        std::string name;
        std::map<std::string, double> coefs;
        RowSense sense = RowSense::le;
        double rhs = 0.0;
    };
    std::map<std::string, double> objective;
    std::vector<Row> rows;
    std::map<std::string, std::pair<double, double>> bounds;
    std::set<std::string> binaries;
    std::set<std::string> generals;
};

/// Throws ConfigError on malformed input.
ParsedLp parse_lp(const std::string& text);

} // namespace sindybrid
