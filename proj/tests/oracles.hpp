#pragma once

// Brute-force reference solvers shared by the unit tests and the acceptance runner.

#include "sindybrid/lp.hpp"
#include "sindybrid/milp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using sindybrid::LpProblem;
using sindybrid::LpRow;
using sindybrid::Matrix;
using sindybrid::RowSense;
using sindybrid::Vector;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls f on every k-subset of {0..n-1}.
inline void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& f)
{
    if (k > n) {
        return;
    }
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        idx[static_cast<std::size_t>(i)] = i;
    }
    while (true) {
        f(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) {
            --i;
        }
        if (i < 0) {
            return;
        }
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) {
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
}

struct VertexResult {
    bool feasible = false;
    double objective = kInf;
    Vector x;
};

/// Minimises c'x over a bounded polyhedron by trying every basic point.
inline VertexResult lp_vertex_oracle(const LpProblem& p, double tol = 1e-9)
{
    const int n = p.num_vars();
    struct Plane {
        Vector a;
        double b;
        RowSense sense;
    };
    std::vector<Plane> planes;
    for (const LpRow& r : p.rows) {
        Vector a = Vector::Zero(n);
        for (const auto& [v, c] : r.coefs) {
            a[v] += c;
        }
        planes.push_back({a, r.rhs, r.sense});
    }
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(p.lower[i])) {
            planes.push_back({Vector::Unit(n, i), p.lower[i], RowSense::ge});
        }
        if (std::isfinite(p.upper[i])) {
            planes.push_back({Vector::Unit(n, i), p.upper[i], RowSense::le});
        }
    }
    auto feasible = [&](const Vector& x) {
        for (const auto& pl : planes) {
            const double v = pl.a.dot(x);
            const double t = tol * std::max(1.0, std::abs(pl.b));
            if ((pl.sense == RowSense::le && v > pl.b + t) || (pl.sense == RowSense::ge && v < pl.b - t) ||
                (pl.sense == RowSense::eq && std::abs(v - pl.b) > t)) {
                return false;
            }
        }
        return true;
    };
    VertexResult best;
    for_each_subset(static_cast<int>(planes.size()), n, [&](const std::vector<int>& s) {
        Eigen::MatrixXd A(n, n);
        Vector b(n);
        for (int k = 0; k < n; ++k) {
            A.row(k) = planes[static_cast<std::size_t>(s[static_cast<std::size_t>(k)])].a.transpose();
            b[k] = planes[static_cast<std::size_t>(s[static_cast<std::size_t>(k)])].b;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.rank() < n) {
            return;
        }
        const Vector x = lu.solve(b);
        if (!feasible(x)) {
            return;
        }
        const double obj = p.cost.dot(x);
        if (!best.feasible || obj < best.objective) {
            best.feasible = true;
            best.objective = obj;
            best.x = x;
        }
    });
    return best;
}

/// Random LP with <= 4 structural variables and a bounded feasible region (when non-empty).
inline LpProblem random_lp(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> nvar(1, 4), nrow(0, 4), coef(-3, 3), rhs(-6, 6), cost(-5, 5), sense(0, 2),
        kind(0, 3);
    LpProblem p;
    const int n = nvar(rng);
    p.cost.resize(n);
    p.lower.resize(n);
    p.upper.resize(n);
    const bool box_rows = kind(rng) == 0;
    for (int i = 0; i < n; ++i) {
        p.cost[i] = cost(rng);
        if (box_rows) {
            p.lower[i] = -kInf;
            p.upper[i] = kInf;
            p.rows.push_back({{{i, 1.0}}, RowSense::le, 5.0});
            p.rows.push_back({{{i, 1.0}}, RowSense::ge, -5.0});
        } else {
            const int a = rhs(rng), b = rhs(rng);
            p.lower[i] = std::min(a, b);
            p.upper[i] = std::max(a, b);
        }
    }
    const int m = nrow(rng);
    for (int k = 0; k < m; ++k) {
        LpRow r;
        for (int i = 0; i < n; ++i) {
            const int c = coef(rng);
            if (c != 0) {
                r.coefs.emplace_back(i, static_cast<double>(c));
            }
        }
        const int s = sense(rng);
        r.sense = s == 0 ? RowSense::le : (s == 1 ? RowSense::ge : RowSense::eq);
        r.rhs = rhs(rng);
        p.rows.push_back(std::move(r));
    }
    return p;
}

/**
 * Minimum of  sum_r |h_r - X_r . xi| + lambda * sum |xi|  over xi_i in [lb, ub]
 * for i in `free`, xi_i = 0 otherwise. The function is piecewise linear and
 * convex, so its minimum over the box is attained at a vertex of the
 * arrangement of kink hyperplanes and box faces; every such vertex is tried.
 */
inline double column_oracle(const Vector& h,
                            const Matrix& X,
                            const std::vector<int>& free,
                            double lambda,
                            double lb,
                            double ub)
{
    const int k = static_cast<int>(free.size());
    const auto rows = h.size();
    auto value = [&](const Vector& xi) {
        double f = 0.0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            double pred = 0.0;
            for (int a = 0; a < k; ++a) {
                pred += X(r, free[static_cast<std::size_t>(a)]) * xi[a];
            }
            f += std::abs(h[r] - pred);
        }
        return f + lambda * xi.cwiseAbs().sum();
    };
    if (k == 0) {
        return value(Vector::Zero(0));
    }
    std::vector<std::pair<Vector, double>> planes;
    for (Eigen::Index r = 0; r < rows; ++r) {
        Vector a(k);
        for (int c = 0; c < k; ++c) {
            a[c] = X(r, free[static_cast<std::size_t>(c)]);
        }
        planes.emplace_back(a, h[r]);
    }
    for (int c = 0; c < k; ++c) {
        planes.emplace_back(Vector::Unit(k, c), 0.0);
        planes.emplace_back(Vector::Unit(k, c), lb);
        planes.emplace_back(Vector::Unit(k, c), ub);
    }
    double best = kInf;
    for_each_subset(static_cast<int>(planes.size()), k, [&](const std::vector<int>& s) {
        Eigen::MatrixXd A(k, k);
        Vector b(k);
        for (int q = 0; q < k; ++q) {
            A.row(q) = planes[static_cast<std::size_t>(s[static_cast<std::size_t>(q)])].first.transpose();
            b[q] = planes[static_cast<std::size_t>(s[static_cast<std::size_t>(q)])].second;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.rank() < k) {
            return;
        }
        const Vector xi = lu.solve(b);
        for (int q = 0; q < k; ++q) {
            if (xi[q] < lb - 1e-9 || xi[q] > ub + 1e-9) {
                return;
            }
        }
        best = std::min(best, value(xi.cwiseMax(lb).cwiseMin(ub)));
    });
    return best;
}

struct MilpInstance {
    Matrix H;
    Matrix XL;
    sindybrid::Hyperparams hp;
};

inline MilpInstance random_milp(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> rows(1, 6), nl(1, 4), ns(1, 3), coin(0, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0), lam(0.0, 5.0), box(0.5, 4.0);
    MilpInstance m;
    const int R = rows(rng), NL = nl(rng), NS = ns(rng);
    m.H.resize(R, NS);
    m.XL.resize(R, NL);
    for (int r = 0; r < R; ++r) {
        for (int j = 0; j < NS; ++j) {
            m.H(r, j) = 2.0 * u(rng);
        }
        for (int i = 0; i < NL; ++i) {
            m.XL(r, i) = u(rng);
        }
    }
    m.hp.lambda1_xi = lam(rng);
    m.hp.ub = box(rng);
    m.hp.lb = -box(rng);
    if (coin(rng) != 0) {
        m.hp.K_alpha = std::uniform_int_distribution<int>(0, NL * NS)(rng);
    }
    if (coin(rng) != 0) {
        m.hp.K_delta = std::uniform_int_distribution<int>(0, NS)(rng);
    }
    return m;
}

/**
 * Exhaustive optimum of the identification MILP: every (alpha, delta, s)
 * assignment is checked for feasibility and costed with the column oracle.
 * Returns nullopt when no assignment is feasible.
 */
inline std::optional<double> milp_enumeration_oracle(const MilpInstance& m)
{
    const int NL = static_cast<int>(m.XL.cols());
    const int NS = static_cast<int>(m.H.cols());
    const double lam = m.hp.lambda1_xi;
    const double c_s = lam * std::max(std::abs(m.hp.ub), std::abs(m.hp.lb)) * NL;
    const int ka = m.hp.K_alpha.value_or(NL * NS);
    const int kd = m.hp.K_delta.value_or(NS);

    // Column cost for every support pattern, computed once.
    std::vector<std::vector<double>> col(static_cast<std::size_t>(NS), std::vector<double>(1u << NL));
    for (int j = 0; j < NS; ++j) {
        for (unsigned pat = 0; pat < (1u << NL); ++pat) {
            std::vector<int> free;
            for (int i = 0; i < NL; ++i) {
                if (pat & (1u << i)) {
                    free.push_back(i);
                }
            }
            col[static_cast<std::size_t>(j)][pat] = column_oracle(m.H.col(j), m.XL, free, lam, m.hp.lb, m.hp.ub);
        }
    }

    std::optional<double> best;
    const unsigned n_alpha = 1u << (NL * NS);
    for (unsigned a = 0; a < n_alpha; ++a) {
        int count_a = 0;
        double cost = 0.0;
        unsigned need_delta = 0;
        for (int j = 0; j < NS; ++j) {
            unsigned pat = 0;
            for (int i = 0; i < NL; ++i) {
                if (a & (1u << (i * NS + j))) {
                    pat |= 1u << i;
                    ++count_a;
                }
            }
            if (pat) {
                need_delta |= 1u << j;
            }
            cost += col[static_cast<std::size_t>(j)][pat];
        }
        if (count_a > ka) {
            continue;
        }
        for (unsigned d = 0; d < (1u << NS); ++d) {
            if ((need_delta & ~d) != 0) {
                continue;
            }
            const int count_d = __builtin_popcount(d);
            if (count_d > kd) {
                continue;
            }
            for (int s = 0; s <= NS; ++s) {
                if (count_d > s) {
                    continue;
                }
                const double total = cost + c_s * s;
                if (!best || total < *best) {
                    best = total;
                }
            }
        }
    }
    return best;
}

} // namespace oracle
