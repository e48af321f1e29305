#include "sindybrid/residual.hpp"

#include "sindybrid/error.hpp"

#include <cmath>
#include <sstream>

namespace sindybrid {

Matrix numeric_derivative(const Vector& t, const Matrix& X)
{
    const Eigen::Index n = t.size();
    if (n < 3) {
        throw UsageError("numeric_derivative needs at least three samples");
    }
    if (X.rows() != n) {
        throw UsageError("numeric_derivative: time vector and state matrix disagree in length");
    }
    for (Eigen::Index k = 1; k < n; ++k) {
        if (!(t[k] > t[k - 1])) {
            throw UsageError("numeric_derivative: time vector must be strictly increasing");
        }
    }
    // Weights sum to zero, so each stencil is written on differences: constant data gives exactly 0.
    Matrix D(n, X.cols());
    {
        const double h1 = t[1] - t[0], h2 = t[2] - t[1];
        const double c1 = (h1 + h2) / (h1 * h2);
        const double c2 = -h1 / (h2 * (h1 + h2));
        D.row(0) = c1 * (X.row(1) - X.row(0)) + c2 * (X.row(2) - X.row(0));
    }
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
        const double cm = -h2 / (h1 * (h1 + h2));
        const double cp = h1 / (h2 * (h1 + h2));
        D.row(i) = cm * (X.row(i - 1) - X.row(i)) + cp * (X.row(i + 1) - X.row(i));
    }
    {
        const double h1 = t[n - 2] - t[n - 3], h2 = t[n - 1] - t[n - 2];
        const double c0 = h2 / (h1 * (h1 + h2));
        const double c1 = -(h1 + h2) / (h1 * h2);
        D.row(n - 1) = c0 * (X.row(n - 3) - X.row(n - 1)) + c1 * (X.row(n - 2) - X.row(n - 1));
    }
    return D;
}

Matrix smooth_states(const Vector& t, const Matrix& X, int window)
{
    const Eigen::Index n = t.size();
    if (window < 3 || n < 3) {
        return X;
    }
    const Eigen::Index half = window / 2;
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
        while (hi - lo + 1 < 3) {
            lo = std::max<Eigen::Index>(0, lo - 1);
            hi = std::min<Eigen::Index>(n - 1, hi + 1);
        }
        const Eigen::Index m = hi - lo + 1;
        Eigen::MatrixXd A(m, 3);
        for (Eigen::Index k = 0; k < m; ++k) {
            const double dt = t[lo + k] - t[i];
            A(k, 0) = 1.0;
            A(k, 1) = dt;
            A(k, 2) = dt * dt;
        }
        const Eigen::MatrixXd coef = A.colPivHouseholderQr().solve(Eigen::MatrixXd(X.middleRows(lo, m)));
        out.row(i) = coef.row(0);
    }
    return out;
}

ResidualMatrix residual_matrix(const std::vector<Trajectory>& experiments,
                               const OdeSystem& fpm,
                               const ResidualOptions& options)
{
    const auto ns = static_cast<Eigen::Index>(fpm.num_states());
    const auto nr = static_cast<Eigen::Index>(fpm.num_run_conditions());
    Eigen::Index total = 0;
    for (const auto& e : experiments) {
        total += e.num_samples();
    }

    ResidualMatrix out;
    out.state_names = fpm.state_names;
    out.H.resize(total, ns);
    out.states_at_rows.resize(total, ns);
    out.r_at_rows.resize(total, nr);
    Eigen::Index row = 0;
    for (std::size_t e = 0; e < experiments.size(); ++e) {
        const auto& tr = experiments[e];
        if (tr.X.cols() != ns || tr.r.size() != nr) {
            throw UsageError("residual_matrix: experiment dimensions do not match the model");
        }
        const Matrix X = options.smooth ? smooth_states(tr.t, tr.X, options.smooth_window) : tr.X;
        const Matrix dX = numeric_derivative(tr.t, X);
        for (Eigen::Index k = 0; k < tr.num_samples(); ++k) {
            const Vector x = tr.X.row(k).transpose();
            Vector f;
            try {
                f = eval_rhs(fpm, x, tr.r);
            } catch (const NumericDomainError&) {
                ++out.excluded_rows;
                continue;
            }
            out.H.row(row) = dX.row(k) - f.transpose();
            out.states_at_rows.row(row) = x.transpose();
            out.r_at_rows.row(row) = tr.r.transpose();
            out.rows_index.emplace_back(static_cast<int>(e), static_cast<int>(k));
            ++row;
        }
    }
    out.H.conservativeResize(row, ns);
    out.states_at_rows.conservativeResize(row, ns);
    out.r_at_rows.conservativeResize(row, nr);

    if (total > 0 &&
        static_cast<double>(out.excluded_rows) > options.max_excluded_fraction * static_cast<double>(total)) {
        std::ostringstream msg;
        msg << "residual_matrix: " << out.excluded_rows << " of " << total
            << " rows have a non-finite model evaluation";
        throw ResidualError(msg.str());
    }
    return out;
}

Vector column_means(const Matrix& H)
{
    if (H.rows() == 0) {
        throw UsageError("column_means: empty residual matrix");
    }
    return H.colwise().mean().transpose();
}

Vector column_stddevs(const Matrix& H)
{
    if (H.rows() == 0) {
        throw UsageError("column_stddevs: empty residual matrix");
    }
    const Vector mu = column_means(H);
    if (H.rows() == 1) {
        return Vector::Zero(H.cols());
    }
    Vector out(H.cols());
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
        out[j] = std::sqrt((H.col(j).array() - mu[j]).square().sum() / static_cast<double>(H.rows() - 1));
    }
    return out;
}

} // namespace sindybrid
