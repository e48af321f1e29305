#pragma once

#include "sindybrid/ode.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace sindybrid {

/// Benchmark model together with its deviation catalog and campaign defaults.
struct CaseModel {
    std::string id;
    OdeSystem system;
    /// One deviation per state equation, keyed by the deviated state index.
    std::map<std::size_t, DeviationSpec> catalog;
    /// Per-state initial-condition bounds; lo == hi pins the state.
    std::vector<std::pair<double, double>> ic_bounds;
    /// Discrete levels per run condition (full-factorial grid).
    std::vector<std::vector<double>> run_condition_levels;
    double horizon = 1.0;
};

std::vector<std::string> case_ids();

/**
 * Builds one of "meerwein", "fermentation" or "lotka".
 *
 * `overrides` replace named parameters of the shipped defaults. With
 * `use_defaults == false` the overrides must form a complete parameter set,
 * otherwise a ConfigError listing the missing names is thrown.
 */
CaseModel make_case(const std::string& case_id,
                    const ParamMap& overrides = {},
                    bool use_defaults = true);

/// Parameter names a case requires.
std::vector<std::string> required_params(const std::string& case_id);

/// Shipped defaults (for fermentation: the values in data/fermentation_params.json).
ParamMap default_params(const std::string& case_id);

/// Loads a flat {"name": value} JSON object.
ParamMap load_params(const std::string& path);

} // namespace sindybrid
