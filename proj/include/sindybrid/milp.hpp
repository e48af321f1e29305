#pragma once

#include "sindybrid/library.hpp"
#include "sindybrid/lp.hpp"
#include "sindybrid/ode.hpp"
#include "sindybrid/residual.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sindybrid {

/// Regularisation and cardinality settings of the identification problem.
struct Hyperparams {
    double lambda1_xi = 3.0;
    /// nullopt means unbounded.
    std::optional<int> K_alpha;
    std::optional<int> K_delta;
    double lb = -100.0;
    double ub = 100.0;

    double big_m() const;
    /// Coupled penalty per activated state equation: lambda1_xi * max(|ub|, |lb|) * n_lib.
    double lambda1_delta(int n_lib) const;
    void validate() const;
};

enum class VarKind { continuous, binary, integer };

struct MilpConstraint {
    std::vector<std::pair<int, double>> coefs;
    RowSense sense = RowSense::le;
    double rhs = 0.0;
    /// State equation the row belongs to, or -1 for rows linking all states.
    int block = -1;
};

/**
 * Mixed-integer program over xi, alpha, delta, y, z and s:
 *
 *   min  sum y + lambda1_xi * (sum z + max(|ub|,|lb|) * N_L * s)
 *   s.t. y >= +-(H - XL_sc * Xi),  z >= +-xi,
 *        lb*alpha <= xi <= ub*alpha,  alpha_ij <= delta_j,
 *        sum delta - s <= 0,  sum alpha <= K_alpha,  sum delta <= K_delta.
 */
struct MilpProblem {
    int rows = 0;
    int n_lib = 0;
    int n_states = 0;
    Hyperparams hp;
    Matrix H;
    Matrix XL;
    Vector cost;
    Vector lower;
    Vector upper;
    std::vector<VarKind> kind;
    std::vector<std::string> names;
    std::vector<MilpConstraint> constraints;

    int num_vars() const { return static_cast<int>(cost.size()); }
    int xi(int i, int j) const { return i * n_states + j; }
    int alpha(int i, int j) const { return n_lib * n_states + i * n_states + j; }
    int delta(int j) const { return 2 * n_lib * n_states + j; }
    int y(int r, int j) const { return 2 * n_lib * n_states + n_states + r * n_states + j; }
    int z(int i, int j) const { return 2 * n_lib * n_states + n_states + rows * n_states + i * n_states + j; }
    int s() const { return 3 * n_lib * n_states + n_states + rows * n_states; }

    /// Whether the K_alpha / K_delta rows can never bind.
    bool cardinality_redundant() const;
};

/// Throws UsageError on misaligned or empty inputs.
MilpProblem assemble(const Matrix& H, const Matrix& XL_sc, const Hyperparams& hp);
MilpProblem assemble(const ResidualMatrix& H, const ScaledLibraryMatrix& XL, const Hyperparams& hp);

enum class MilpStatus { optimal, gap_limit, infeasible, node_limit };

std::string to_string(MilpStatus status);

struct MilpOptions {
    double int_tol = 1e-6;
    double gap_tol = 1e-6;
    long node_limit = 1000000;
    /// Solve relaxations state by state when the cardinality rows are redundant.
    bool decompose = true;
    LpOptions lp;
};

struct MilpSolution {
    Matrix Xi;
    Eigen::MatrixXi A;
    Eigen::VectorXi Delta;
    int s = 0;
    double objective = 0.0;
    MilpStatus status = MilpStatus::infeasible;
    double gap = 0.0;
    long nodes = 0;
    bool has_solution = false;
    /// max |xi| / max(|ub|, |lb|); values near 1 mean the coefficient box is saturated.
    double bound_tightness = 0.0;
    /// Full variable vector in MilpProblem order.
    Vector x;
};

/**
 * Best-first branch-and-bound over LP relaxations.
 *
 * Branches first on the delta closest to 0.5, then on alpha, then on s; ties
 * go to the lowest index. Nodes whose bound cannot improve the incumbent by
 * more than gap_tol (relative, floor 1) are pruned. Deterministic.
 */
MilpSolution solve(const MilpProblem& problem, const MilpOptions& options = {});

/// Objective of a full variable vector (y and z recomputed as absolute values).
double evaluate_objective(const MilpProblem& problem, const Matrix& Xi, int s);

/// Solves the continuous LP with every binary/integer variable fixed by `fixed` bounds.
LpSolution solve_relaxation(const MilpProblem& problem, const Vector& lower, const Vector& upper,
                            const LpOptions& options = {});

} // namespace sindybrid
