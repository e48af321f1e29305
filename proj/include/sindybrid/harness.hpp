#pragma once

#include "sindybrid/datagen.hpp"
#include "sindybrid/hybrid.hpp"
#include "sindybrid/library.hpp"
#include "sindybrid/milp.hpp"
#include "sindybrid/residual.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sindybrid {

/**
 * User-facing identification settings.
 *
 * The MILP receives lambda / N_L as its L1 weight, so the sparsity penalty is
 * an average over library terms. Without an explicit box, ub = -lb =
 * box_factor * max_j |mean(h_j)| (in scaled-library units).
 */
struct IdentificationSettings {
    double lambda = 3.0;
    bool lambda_per_term = true;
    double box_factor = 10.0;
    std::optional<double> ub;
    std::optional<double> lb;
    std::optional<int> K_alpha;
    std::optional<int> K_delta;
    MilpOptions milp;
    ResidualOptions residual;

    /// Throws ConfigError on inconsistent values.
    void validate() const;
    Hyperparams resolve(const ResidualMatrix& H, std::size_t n_lib) const;
};

nlohmann::json to_json(const IdentificationSettings& s);
IdentificationSettings settings_from_json(const nlohmann::json& j);

struct RunResult {
    Dataset dataset;
    ResidualMatrix residuals;
    Library library;
    ScaledLibraryMatrix scaled;
    Hyperparams hyperparams;
    MilpSolution solution;
    HybridModel hybrid;
    EvalReport report;
    /// |mean(h_dev)| / max_other |mean(h_k)|; NaN without a single deviated state.
    double dominance_ratio = 0.0;
};

/**
 * dataset -> residuals -> library -> MILP -> hybrid -> evaluation.
 *
 * With a non-empty `run_dir` every intermediate is written there, together
 * with run_config.json from which the run can be repeated. Errors are
 * rethrown as StageError tagged with the failing stage.
 */
RunResult run_identification(const CampaignConfig& config,
                             const LibrarySpec& library,
                             const IdentificationSettings& settings,
                             const std::filesystem::path& run_dir = {});

/// Repeats a run from a persisted run_config.json.
RunResult rerun(const std::filesystem::path& run_config, const std::filesystem::path& run_dir = {});

enum class SweepKind { noise, batches, timesamples, lambda };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& s);

struct SweepSpec {
    SweepKind kind = SweepKind::noise;
    /// Empty for the lambda sweep means {0.5, 1, 2, 3, 5, 10}.
    std::vector<double> levels;
    CampaignConfig base;
    /// Empty means every state in the case's deviation catalog.
    std::vector<std::string> targets;
    int replicates = 3;
    IdentificationSettings settings;
    /// Unset: the case default library.
    std::optional<LibrarySpec> library;

    void validate() const;
};

SweepSpec sweep_spec_from_json(const nlohmann::json& j);

struct SweepRow {
    std::string case_id;
    SweepKind kind = SweepKind::noise;
    double level = 0.0;
    std::string target;
    int replicate = 0;
    bool success = false;
    double r2_train = 0.0;
    double r2_test = 0.0;
    double mae_train = 0.0;
    double mae_test = 0.0;
    /// MILP status, or "error:<stage>" when the run failed.
    std::string status;
    std::uint64_t seed = 0;
    std::string identified;
};

/// hash(base_seed, level, target, replicate).
std::uint64_t cell_seed(std::uint64_t base_seed, double level, const std::string& target, int replicate);

struct SweepOptions {
    /// <= 0: SINDYBRID_WORKERS, else 1.
    int workers = 0;
    /// Persist each cell's run directory under this path when non-empty.
    std::filesystem::path runs_dir;
};

/// Rows ordered by (level, target, replicate) regardless of the worker count.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

std::string sweep_csv_header();
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct LevelSummary {
    double level = 0.0;
    int runs = 0;
    int successes = 0;
    /// True iff every target succeeded in every replicate at this level.
    bool level_success = false;
    double r2_test_mean = 0.0;
    double mae_test_mean = 0.0;
};

std::vector<LevelSummary> summarize(const std::vector<SweepRow>& rows);

struct ResidualDistributionRow {
    double noise = 0.0;
    /// Averaged over seeds.
    Vector mean;
    Vector stddev;
    /// Standard error of each column mean (stddev / sqrt(rows)).
    Vector std_error;
    double dominance_ratio = 0.0;
};

/**
 * Column statistics of the residual matrix per noise level. `base` supplies
 * the campaign layout; its case, target and noise are overridden. Seeds
 * are used as campaign seeds and the statistics averaged over them.
 */
std::vector<ResidualDistributionRow> residual_distribution_report(const std::string& case_id,
                                                                  const std::string& deviation_target,
                                                                  const std::vector<double>& noise_levels,
                                                                  const std::vector<std::uint64_t>& seeds,
                                                                  CampaignConfig base = {});

std::string residual_report_csv(const std::vector<ResidualDistributionRow>& rows,
                                const std::vector<std::string>& state_names);

/// |mean_dev| / max over other columns of |mean|; +inf when the others are all zero.
double dominance_ratio(const Vector& means, std::size_t deviated);

/// SINDYBRID_WORKERS when set to a positive integer, else 1.
int workers_from_env();

} // namespace sindybrid
