#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sindybrid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ParamMap = std::map<std::string, double>;

/// Right-hand side evaluator: (state, run conditions) -> time derivative.
using RhsFunction = std::function<Vector(const Vector& x, const Vector& r)>;

/**
 * A dynamical system dx/dt = f(x, r) with experiment-constant run conditions r.
 *
 * Instances are immutable once built; the rhs closure owns a copy of the
 * parameters so systems may be shared freely between threads.
 */
struct OdeSystem {
    std::string name;
    std::vector<std::string> state_names;
    std::vector<std::string> run_condition_names;
    ParamMap params;
    RhsFunction rhs;

    std::size_t num_states() const { return state_names.size(); }
    std::size_t num_run_conditions() const { return run_condition_names.size(); }
    std::optional<std::size_t> state_index(const std::string& state) const;
};

/// One additive term of a deviation, expressed in canonical library labels.
struct DeviationTerm {
    std::size_t state;
    std::string label;
    double coefficient;
};

/**
 * Structural model error h(x, r) added on top of an OdeSystem.
 *
 * `dev` returns a full-length vector whose entries outside `target_states`
 * are exactly zero. `terms` describes the same function symbolically so that
 * recovered corrections can be compared coefficient by coefficient.
 */
struct DeviationSpec {
    std::set<std::size_t> target_states;
    RhsFunction dev;
    std::vector<DeviationTerm> terms;
    std::string description;

    /// Evaluates dev and zeroes every non-target entry.
    Vector operator()(const Vector& x, const Vector& r) const;
};

/// Sampled solution of an initial value problem.
struct Trajectory {
    Vector t;
    Matrix X; ///< rows are time samples, columns are states
    Vector r;

    Eigen::Index num_samples() const { return t.size(); }
};

/// Evaluates f(x, r), checking dimensions and finiteness.
/// Throws UsageError on mismatched sizes and NumericDomainError on NaN/Inf.
Vector eval_rhs(const OdeSystem& system, const Vector& x, const Vector& r);

struct IntegrateOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    std::size_t max_steps = 200000;
    /// States whose magnitude exceeds this are treated as a blow-up.
    double blowup_threshold = 1e12;
};

/**
 * Integrates f (+ deviation, when given) with an adaptive Dormand-Prince 5(4)
 * pair and samples the solution exactly at `t_grid` via the continuous
 * extension. `t_grid[0]` is the initial time.
 *
 * Throws IntegrationError (carrying the last accepted time) on step-size
 * underflow, step budget exhaustion or state blow-up.
 */
Trajectory integrate(const OdeSystem& system,
                     const DeviationSpec* deviation,
                     const Vector& x0,
                     const Vector& r,
                     const Vector& t_grid,
                     const IntegrateOptions& options = {});

/// Returns a system whose rhs is f + h.
OdeSystem with_deviation(const OdeSystem& system, const DeviationSpec& deviation);

/// n equally spaced points on [t0, t1], endpoints included.
Vector linspace(double t0, double t1, Eigen::Index n);

} // namespace sindybrid
