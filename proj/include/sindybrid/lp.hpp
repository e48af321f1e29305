#pragma once

#include "sindybrid/ode.hpp"

#include <string>
#include <utility>
#include <vector>

namespace sindybrid {

enum class RowSense { le, ge, eq };

struct LpRow {
    std::vector<std::pair<int, double>> coefs;
    RowSense sense = RowSense::le;
    double rhs = 0.0;
};

/// min c'x  s.t.  rows,  lower <= x <= upper  (bounds may be infinite).
struct LpProblem {
    Vector cost;
    Vector lower;
    Vector upper;
    std::vector<LpRow> rows;

    int num_vars() const { return static_cast<int>(cost.size()); }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    Vector x;
    int iterations = 0;
};

struct LpOptions {
    int max_iterations = 200000;
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    /// Pivots between rebuilds of the tableau from the original data.
    int refactor_interval = 100;
    /// Consecutive degenerate pivots before switching to Bland's rule.
    int degenerate_limit = 30;
};

/**
 * Two-phase primal simplex for bounded variables on a dense tableau.
 *
 * Non-basic variables rest at a finite bound (free variables at zero); bound
 * flips are taken without a basis change. Pricing is Dantzig's rule, with
 * Bland's rule after a run of degenerate pivots to prevent cycling. Returns a
 * basic optimal solution when one exists.
 */
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

} // namespace sindybrid
