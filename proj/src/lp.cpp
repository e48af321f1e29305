#include "sindybrid/lp.hpp"

#include "sindybrid/error.hpp"

#include <cmath>
#include <limits>

namespace sindybrid {

std::string to_string(LpStatus status)
{
    switch (status) {
    case LpStatus::optimal:
        return "optimal";
    case LpStatus::infeasible:
        return "infeasible";
    case LpStatus::unbounded:
        return "unbounded";
    case LpStatus::iteration_limit:
        return "iteration-limit";
    }
    return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;

class BoundedSimplex {
public:
    BoundedSimplex(const LpProblem& p, const LpOptions& o) : opt_(o)
    {
        n_ = p.num_vars();
        m_ = static_cast<int>(p.rows.size());
        if (p.lower.size() != n_ || p.upper.size() != n_) {
            throw UsageError("solve_lp: bound vectors do not match the cost vector");
        }
        for (int j = 0; j < n_; ++j) {
            if (p.lower[j] > p.upper[j]) {
                infeasible_bounds_ = true;
            }
        }

        // Structural values at a bound, then row activities.
        Vector xs(n_);
        for (int j = 0; j < n_; ++j) {
            xs[j] = std::isfinite(p.lower[j]) ? p.lower[j] : (std::isfinite(p.upper[j]) ? p.upper[j] : 0.0);
        }
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m_, n_);
        b_.resize(m_);
        Vector slack_lo(m_), slack_up(m_);
        for (int i = 0; i < m_; ++i) {
            const auto& row = p.rows[static_cast<std::size_t>(i)];
            for (const auto& [j, a] : row.coefs) {
                if (j < 0 || j >= n_) {
                    throw UsageError("solve_lp: row references an unknown variable");
                }
                A(i, j) += a;
            }
            b_[i] = row.rhs;
            switch (row.sense) {
            case RowSense::le:
                slack_lo[i] = 0.0;
                slack_up[i] = kInf;
                break;
            case RowSense::ge:
                slack_lo[i] = -kInf;
                slack_up[i] = 0.0;
                break;
            case RowSense::eq:
                slack_lo[i] = 0.0;
                slack_up[i] = 0.0;
                break;
            }
        }

        std::vector<int> art_rows;
        std::vector<double> art_sign;
        Vector resid = b_ - A * xs;
        std::vector<double> slack_val(static_cast<std::size_t>(m_));
        std::vector<bool> slack_basic(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            const double r = resid[i];
            if (r >= slack_lo[i] - opt_.feasibility_tol && r <= slack_up[i] + opt_.feasibility_tol) {
                slack_basic[static_cast<std::size_t>(i)] = true;
                slack_val[static_cast<std::size_t>(i)] = r;
            } else {
                const double v = r < slack_lo[i] ? slack_lo[i] : slack_up[i];
                slack_basic[static_cast<std::size_t>(i)] = false;
                slack_val[static_cast<std::size_t>(i)] = v;
                art_rows.push_back(i);
                art_sign.push_back(r - v > 0.0 ? 1.0 : -1.0);
            }
        }
        na_ = static_cast<int>(art_rows.size());
        N_ = n_ + m_ + na_;

        full_ = Matrix::Zero(m_, N_);
        full_.leftCols(n_) = A;
        for (int i = 0; i < m_; ++i) {
            full_(i, n_ + i) = 1.0;
        }
        lo_.resize(N_);
        up_.resize(N_);
        x_.resize(N_);
        cost2_ = Vector::Zero(N_);
        for (int j = 0; j < n_; ++j) {
            lo_[j] = p.lower[j];
            up_[j] = p.upper[j];
            x_[j] = xs[j];
            cost2_[j] = p.cost[j];
        }
        for (int i = 0; i < m_; ++i) {
            lo_[n_ + i] = slack_lo[i];
            up_[n_ + i] = slack_up[i];
            x_[n_ + i] = slack_val[static_cast<std::size_t>(i)];
        }
        basis_.assign(static_cast<std::size_t>(m_), -1);
        for (int i = 0; i < m_; ++i) {
            if (slack_basic[static_cast<std::size_t>(i)]) {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
            }
        }
        for (int k = 0; k < na_; ++k) {
            const int i = art_rows[static_cast<std::size_t>(k)];
            const int col = n_ + m_ + k;
            full_(i, col) = art_sign[static_cast<std::size_t>(k)];
            lo_[col] = 0.0;
            up_[col] = kInf;
            x_[col] = std::abs(resid[i] - slack_val[static_cast<std::size_t>(i)]);
            basis_[static_cast<std::size_t>(i)] = col;
        }
        is_basic_.assign(static_cast<std::size_t>(N_), false);
        for (int c : basis_) {
            is_basic_[static_cast<std::size_t>(c)] = true;
        }
        // B is diagonal with entries +-1 at this point.
        T_ = full_;
        for (int i = 0; i < m_; ++i) {
            const double diag = full_(i, basis_[static_cast<std::size_t>(i)]);
            if (diag != 1.0) {
                T_.row(i) /= diag;
            }
        }
    }

    LpSolution run()
    {
        LpSolution sol;
        if (infeasible_bounds_) {
            sol.status = LpStatus::infeasible;
            return sol;
        }
        if (na_ > 0) {
            cost_ = Vector::Zero(N_);
            cost_.tail(na_).setOnes();
            cost_scale_ = 1.0;
            compute_reduced_costs();
            const LpStatus st = iterate(true);
            if (st == LpStatus::iteration_limit) {
                sol.status = st;
                sol.iterations = iterations_;
                return sol;
            }
            refactor();
            const double infeas = x_.tail(na_).sum();
            if (infeas > opt_.feasibility_tol * (1.0 + b_.cwiseAbs().maxCoeff()) * 10.0) {
                sol.status = LpStatus::infeasible;
                sol.iterations = iterations_;
                return sol;
            }
            retire_artificials();
        }

        cost_ = cost2_;
        cost_scale_ = std::max(1.0, cost2_.cwiseAbs().maxCoeff());
        compute_reduced_costs();
        LpStatus st = iterate(false);
        // Rebuild from the original data and polish until stable.
        for (int pass = 0; pass < 3 && st == LpStatus::optimal; ++pass) {
            refactor();
            if (!has_entering_candidate()) {
                break;
            }
            st = iterate(false);
        }
        sol.status = st;
        sol.iterations = iterations_;
        sol.x = x_.head(n_);
        sol.objective = cost2_.head(n_).dot(sol.x);
        return sol;
    }

private:
    void compute_reduced_costs()
    {
        Vector cb(m_);
        for (int i = 0; i < m_; ++i) {
            cb[i] = cost_[basis_[static_cast<std::size_t>(i)]];
        }
        d_ = cost_ - (cb.transpose() * T_).transpose();
        for (int i = 0; i < m_; ++i) {
            d_[basis_[static_cast<std::size_t>(i)]] = 0.0;
        }
    }

    void refactor()
    {
        Eigen::MatrixXd B(m_, m_);
        for (int i = 0; i < m_; ++i) {
            B.col(i) = full_.col(basis_[static_cast<std::size_t>(i)]);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        T_ = lu.solve(Eigen::MatrixXd(full_));
        Vector rhs = b_;
        for (int j = 0; j < N_; ++j) {
            if (!is_basic_[static_cast<std::size_t>(j)] && x_[j] != 0.0) {
                rhs -= full_.col(j) * x_[j];
            }
        }
        const Vector xb = lu.solve(rhs);
        for (int i = 0; i < m_; ++i) {
            const int c = basis_[static_cast<std::size_t>(i)];
            T_.col(c).setZero();
            T_(i, c) = 1.0;
            x_[c] = xb[i];
        }
        compute_reduced_costs();
        since_refactor_ = 0;
    }

    bool eligible(int j, double& dir) const
    {
        if (is_basic_[static_cast<std::size_t>(j)] || lo_[j] == up_[j]) {
            return false;
        }
        const double tol = opt_.optimality_tol * cost_scale_;
        if (d_[j] < -tol && x_[j] < up_[j]) {
            dir = 1.0;
            return true;
        }
        if (d_[j] > tol && x_[j] > lo_[j]) {
            dir = -1.0;
            return true;
        }
        return false;
    }

    bool has_entering_candidate() const
    {
        double dir;
        for (int j = 0; j < N_; ++j) {
            if (eligible(j, dir)) {
                return true;
            }
        }
        return false;
    }

    LpStatus iterate(bool phase1)
    {
        int degenerate_run = 0;
        for (;;) {
            if (iterations_ >= opt_.max_iterations) {
                return LpStatus::iteration_limit;
            }
            if (since_refactor_ >= opt_.refactor_interval) {
                refactor();
            }
            const bool bland = degenerate_run >= opt_.degenerate_limit;

            int q = -1;
            double dir = 0.0, best = 0.0;
            for (int j = 0; j < N_; ++j) {
                double dj;
                if (!eligible(j, dj)) {
                    continue;
                }
                if (bland) {
                    q = j;
                    dir = dj;
                    break;
                }
                if (std::abs(d_[j]) > best) {
                    best = std::abs(d_[j]);
                    q = j;
                    dir = dj;
                }
            }
            if (q < 0) {
                return LpStatus::optimal;
            }

            // Ratio test.
            double theta = up_[q] - lo_[q];
            int leave = -1;
            double leave_alpha = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double alpha = T_(i, q);
                if (std::abs(alpha) <= kPivotTol) {
                    continue;
                }
                const int c = basis_[static_cast<std::size_t>(i)];
                const double rate = -dir * alpha;
                double limit;
                if (rate < 0.0) {
                    if (!std::isfinite(lo_[c])) {
                        continue;
                    }
                    limit = (x_[c] - lo_[c]) / -rate;
                } else {
                    if (!std::isfinite(up_[c])) {
                        continue;
                    }
                    limit = (up_[c] - x_[c]) / rate;
                }
                limit = std::max(limit, 0.0);
                bool take = false;
                if (leave < 0 && limit <= theta) {
                    take = true;
                } else if (limit < theta - 1e-12) {
                    take = true;
                } else if (leave >= 0 && limit <= theta + 1e-12) {
                    if (bland) {
                        take = c < basis_[static_cast<std::size_t>(leave)];
                    } else {
                        take = std::abs(alpha) > std::abs(leave_alpha);
                    }
                }
                if (take) {
                    theta = limit;
                    leave = i;
                    leave_alpha = alpha;
                }
            }
            if (!std::isfinite(theta)) {
                if (phase1) {
                    // Cannot happen: the phase-one objective is bounded below.
                    return LpStatus::iteration_limit;
                }
                return LpStatus::unbounded;
            }

            ++iterations_;
            degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

            // Move along the edge.
            if (theta != 0.0) {
                x_[q] += dir * theta;
                for (int i = 0; i < m_; ++i) {
                    const double alpha = T_(i, q);
                    if (alpha != 0.0) {
                        x_[basis_[static_cast<std::size_t>(i)]] -= dir * alpha * theta;
                    }
                }
            }
            if (leave < 0) {
                // Bound flip.
                x_[q] = dir > 0.0 ? up_[q] : lo_[q];
                continue;
            }
            const int out = basis_[static_cast<std::size_t>(leave)];
            const double rate = -dir * leave_alpha;
            x_[out] = rate < 0.0 ? lo_[out] : up_[out];
            pivot(leave, q);
        }
    }

    void pivot(int r, int q)
    {
        const int out = basis_[static_cast<std::size_t>(r)];
        const double piv = T_(r, q);
        T_.row(r) /= piv;
        T_(r, q) = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r) {
                continue;
            }
            const double f = T_(i, q);
            if (f != 0.0) {
                T_.row(i) -= f * T_.row(r);
                T_(i, q) = 0.0;
            }
        }
        const double dq = d_[q];
        if (dq != 0.0) {
            d_ -= dq * T_.row(r).transpose();
            d_[q] = 0.0;
        }
        basis_[static_cast<std::size_t>(r)] = q;
        is_basic_[static_cast<std::size_t>(q)] = true;
        is_basic_[static_cast<std::size_t>(out)] = false;
        ++since_refactor_;
    }

    void retire_artificials()
    {
        for (int k = 0; k < na_; ++k) {
            const int col = n_ + m_ + k;
            lo_[col] = 0.0;
            up_[col] = 0.0;
            if (!is_basic_[static_cast<std::size_t>(col)]) {
                x_[col] = 0.0;
            }
        }
        for (int i = 0; i < m_; ++i) {
            const int c = basis_[static_cast<std::size_t>(i)];
            if (c < n_ + m_) {
                continue;
            }
            int best = -1;
            double mag = 1e-7;
            for (int j = 0; j < n_ + m_; ++j) {
                if (!is_basic_[static_cast<std::size_t>(j)] && std::abs(T_(i, j)) > mag) {
                    mag = std::abs(T_(i, j));
                    best = j;
                }
            }
            if (best >= 0) {
                pivot(i, best);
                x_[c] = 0.0;
            }
        }
        refactor();
    }

    LpOptions opt_;
    int n_ = 0, m_ = 0, na_ = 0, N_ = 0;
    bool infeasible_bounds_ = false;
    Matrix full_;
    Matrix T_;
    Vector b_, lo_, up_, x_, cost_, cost2_, d_;
    double cost_scale_ = 1.0;
    std::vector<int> basis_;
    std::vector<bool> is_basic_;
    int iterations_ = 0;
    int since_refactor_ = 0;
};

} // namespace

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options)
{
    if (problem.num_vars() == 0 && problem.rows.empty()) {
        LpSolution s;
        s.status = LpStatus::optimal;
        s.x = Vector(0);
        return s;
    }
    BoundedSimplex simplex(problem, options);
    return simplex.run();
}

} // namespace sindybrid
