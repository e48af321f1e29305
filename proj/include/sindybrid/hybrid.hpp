#pragma once

#include "sindybrid/datagen.hpp"
#include "sindybrid/library.hpp"
#include "sindybrid/milp.hpp"
#include "sindybrid/ode.hpp"

#include <set>
#include <string>
#include <vector>

namespace sindybrid {

/// Coefficients below this magnitude do not count as an identified correction.
inline constexpr double kActiveThreshold = 1e-6;

/// FPM plus the identified sparse correction on the active state equations.
struct HybridModel {
    OdeSystem fpm;
    Library library;
    /// Coefficients in scaled-library space (N_L x N_S).
    Matrix Xi;
    Vector scales;
    std::set<std::size_t> active_states;

    /// f(x, r) + sum_i xi_ij * phi_i(x, r) / scales_i on active states.
    Vector rhs(const Vector& x, const Vector& r) const;
    /// Correction alone (zero outside active states).
    Vector correction(const Vector& x, const Vector& r) const;
    /// OdeSystem view of the hybrid model, sharing a copy of this model.
    OdeSystem as_system() const;
    /// Unscaled coefficient of library term i in state equation j.
    double coefficient(std::size_t i, std::size_t j) const;
    /// Human-readable corrections, one per active state: "dX/dt += -0.050*X*S/(0.01+S)".
    std::vector<std::string> correction_text() const;
};

/// States with delta_j = 1 and max_i |xi_ij| > kActiveThreshold.
std::set<std::size_t> identified_locations(const MilpSolution& solution);

HybridModel assemble_hybrid(const OdeSystem& fpm,
                            const Library& library,
                            const MilpSolution& solution,
                            const Vector& scales);

/// Per-state and state-averaged accuracy of predicted trajectories.
struct Metrics {
    Vector r2;
    Vector mae;
    double r2_avg = 0.0;
    double mae_avg = 0.0;
    /// False when no experiment could be integrated.
    bool defined = false;
};

/// Pools all samples of all experiments per state. Sizes of obs and pred must agree.
Metrics compute_metrics(const std::vector<Matrix>& observed, const std::vector<Matrix>& predicted);

/// 1 - SS_res/SS_tot; 1 when both vanish, 0 when only SS_tot vanishes.
double r2_score(const Vector& observed, const Vector& predicted);
double mean_absolute_error(const Vector& observed, const Vector& predicted);

struct EvalReport {
    Metrics train;
    Metrics test;
    std::set<std::size_t> identified_states;
    std::set<std::size_t> truth_states;
    bool identification_success = false;
    int integration_failures = 0;
    int train_integration_failures = 0;
    /// Predicted trajectories aligned with the dataset (empty matrix on failure).
    std::vector<Matrix> test_predictions;
};

struct EvaluateOptions {
    double rel_tol = 1e-6;
    double abs_tol = 1e-8;
};

/**
 * Integrates the hybrid model from the first (noisy) observation of every
 * train and test experiment and scores it against the observations.
 * Throws UsageError on an empty test set.
 */
EvalReport evaluate(const HybridModel& model,
                    const Dataset& dataset,
                    const std::set<std::size_t>& truth_states,
                    const EvaluateOptions& options = {});

} // namespace sindybrid
