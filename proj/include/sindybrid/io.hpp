#pragma once

#include "sindybrid/datagen.hpp"
#include "sindybrid/hybrid.hpp"
#include "sindybrid/library.hpp"
#include "sindybrid/milp.hpp"
#include "sindybrid/residual.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace sindybrid {

namespace fs = std::filesystem;

/// Writes `t,<state names...>` CSV with full double precision.
void write_trajectory_csv(const fs::path& path, const Trajectory& traj, const std::vector<std::string>& state_names);

/// Reads a trajectory CSV; run conditions are left empty. Throws ConfigError on malformed input.
Trajectory read_trajectory_csv(const fs::path& path, std::vector<std::string>* state_names = nullptr);

nlohmann::json to_json(const CampaignConfig& config);
CampaignConfig campaign_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LibrarySpec& spec);
/// {"degree":2,"constant":true,"variables":[...],"aliases":{"Tstar":"T/273.15"},"rational":[...],"custom":[...]}
LibrarySpec library_spec_from_json(const nlohmann::json& j);
LibrarySpec load_library_spec(const fs::path& path);

nlohmann::json to_json(const MilpSolution& sol);
nlohmann::json to_json(const HybridModel& hm);
nlohmann::json to_json(const EvalReport& report, const std::vector<std::string>& state_names);

/**
 * Persists a dataset as a directory:
 * config.json, train/exp_<k>.csv (+ .json sidecar), test/exp_<k>.csv, truth.json.
 */
void save_dataset(const fs::path& dir, const Dataset& dataset, const OdeSystem& system);

/// Residual matrix as CSV (header = state names) plus a rows JSON sidecar.
void save_residuals(const fs::path& csv_path, const ResidualMatrix& H);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

/// JSON number or null for non-finite values.
nlohmann::json finite_or_null(double v);

} // namespace sindybrid
