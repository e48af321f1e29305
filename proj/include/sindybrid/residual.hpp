#pragma once

#include "sindybrid/ode.hpp"

#include <utility>
#include <vector>

namespace sindybrid {

/// Stacked residuals dx/dt - f(x, r) over the training experiments.
struct ResidualMatrix {
    Matrix H;
    /// (experiment id, sample index) of every row.
    std::vector<std::pair<int, int>> rows_index;
    Matrix states_at_rows;
    Matrix r_at_rows;
    /// Samples dropped because f was not finite there.
    int excluded_rows = 0;
    std::vector<std::string> state_names;

    Eigen::Index rows() const { return H.rows(); }
};

/**
 * Three-point second-order finite differences on a possibly non-uniform grid:
 * central formula inside, one-sided formulas at both ends. Exact for
 * polynomials of degree <= 2. Requires at least three samples.
 */
Matrix numeric_derivative(const Vector& t, const Matrix& X);

struct ResidualOptions {
    /// Local quadratic smoothing of the states before differencing.
    bool smooth = false;
    int smooth_window = 5;
    /// Fraction of rows that may be excluded before ResidualError is raised.
    double max_excluded_fraction = 0.2;
};

/// Local least-squares quadratic smoothing over a centred window (shrunk at the ends).
Matrix smooth_states(const Vector& t, const Matrix& X, int window);

ResidualMatrix residual_matrix(const std::vector<Trajectory>& experiments,
                               const OdeSystem& fpm,
                               const ResidualOptions& options = {});

/// Per-column arithmetic mean. Throws UsageError on an empty matrix.
Vector column_means(const Matrix& H);

/// Per-column sample standard deviation (n - 1 denominator; 0 for a single row).
Vector column_stddevs(const Matrix& H);

} // namespace sindybrid
