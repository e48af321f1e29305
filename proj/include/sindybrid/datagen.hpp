#pragma once

#include "sindybrid/cases.hpp"
#include "sindybrid/ode.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sindybrid {

/// Everything needed to regenerate a synthetic experimental campaign.
struct CampaignConfig {
    std::string case_id = "lotka";
    /// Deviated state name; empty means no deviation ("none").
    std::string deviation_target;
    int n_train = 6;
    int n_test = 2;
    int n_t = 15;
    double noise_level = 0.1;
    /// Empty: use the case defaults.
    std::vector<std::pair<double, double>> ic_bounds;
    std::vector<std::vector<double>> run_condition_levels;
    /// <= 0: use the case default horizon.
    double horizon = 0.0;
    std::uint64_t seed = 1;
    ParamMap params;

    /// Throws ConfigError when a field is outside its admissible range.
    void validate() const;
};

struct Dataset {
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;
    /// Noise-free ground truth aligned with train/test.
    std::vector<Trajectory> train_clean;
    std::vector<Trajectory> test_clean;
    /// Deviation used to generate the data; nullopt for "none".
    std::optional<DeviationSpec> truth;
    CampaignConfig config;
    /// Whether each test experiment lies inside the bounding box of the training ICs and run conditions.
    std::vector<bool> test_in_training_hull;
};

/// One point per stratum per dimension; deterministic given seed. Throws UsageError on lo >= hi.
std::vector<Vector> latin_hypercube(const std::vector<std::pair<double, double>>& bounds,
                                    int n,
                                    std::uint64_t seed);

/**
 * Builds the full-factorial grid of run-condition levels and draws n cells.
 *
 * Without replacement, n must not exceed the grid size (ConfigError). With
 * replacement the grid is drawn as a sequence of shuffled passes, so every cell
 * appears floor(n/G) or ceil(n/G) times.
 */
std::vector<Vector> sample_run_conditions(const std::vector<std::vector<double>>& levels,
                                          int n,
                                          std::uint64_t seed,
                                          bool with_replacement = false);

/// Multiplicative uniform noise: x * (1 + u), u ~ U(-level, level), independent per entry.
Trajectory add_noise(const Trajectory& traj, double level, std::uint64_t seed);

Dataset build_dataset(const CampaignConfig& config);

/// Mixes a seed with a stream identifier (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace sindybrid
