#include "oracles.hpp"

#include "sindybrid/lp.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sindybrid;

namespace {

double max_violation(const LpProblem& p, const Vector& x)
{
    double v = 0.0;
    for (const auto& r : p.rows) {
        double a = 0.0;
        for (const auto& [i, c] : r.coefs) {
            a += c * x[i];
        }
        if (r.sense != RowSense::ge) {
            v = std::max(v, a - r.rhs);
        }
        if (r.sense != RowSense::le) {
            v = std::max(v, r.rhs - a);
        }
    }
    for (int i = 0; i < p.num_vars(); ++i) {
        v = std::max({v, p.lower[i] - x[i], x[i] - p.upper[i]});
    }
    return v;
}

} // namespace

TEST(Lp, MatchesVertexEnumeration)
{
    std::mt19937_64 rng(2024);
    int feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const LpProblem p = oracle::random_lp(rng);
        const auto ref = oracle::lp_vertex_oracle(p);
        const LpSolution sol = solve_lp(p);
        if (!ref.feasible) {
            EXPECT_EQ(sol.status, LpStatus::infeasible) << "trial " << trial;
            ++infeasible;
            continue;
        }
        ++feasible;
        ASSERT_EQ(sol.status, LpStatus::optimal) << "trial " << trial;
        EXPECT_NEAR(sol.objective, ref.objective, 1e-9 * std::max(1.0, std::abs(ref.objective))) << "trial " << trial;
        EXPECT_LE(max_violation(p, sol.x), 1e-9) << "trial " << trial;
        EXPECT_NEAR(p.cost.dot(sol.x), sol.objective, 1e-9);
    }
    EXPECT_GT(feasible, 200);
    EXPECT_GT(infeasible, 5);
}

TEST(Lp, Unbounded)
{
    LpProblem p;
    p.cost = Vector::Constant(2, -1.0);
    p.lower = Vector::Zero(2);
    p.upper = Vector::Constant(2, oracle::kInf);
    p.rows.push_back({{{0, 1.0}, {1, -1.0}}, RowSense::le, 1.0});
    EXPECT_EQ(solve_lp(p).status, LpStatus::unbounded);
}

TEST(Lp, FreeVariablesAndEquality)
{
    // min |x - 3| written with a free x and an epigraph variable.
    LpProblem p;
    p.cost = Vector::Zero(2);
    p.cost[1] = 1.0;
    p.lower = Vector::Constant(2, -oracle::kInf);
    p.upper = Vector::Constant(2, oracle::kInf);
    p.rows.push_back({{{1, 1.0}, {0, -1.0}}, RowSense::ge, -3.0});
    p.rows.push_back({{{1, 1.0}, {0, 1.0}}, RowSense::ge, 3.0});
    p.rows.push_back({{{0, 2.0}}, RowSense::eq, 5.0});
    const LpSolution s = solve_lp(p);
    ASSERT_EQ(s.status, LpStatus::optimal);
    EXPECT_NEAR(s.x[0], 2.5, 1e-12);
    EXPECT_NEAR(s.objective, 0.5, 1e-12);
}

TEST(Lp, DegenerateCyclingExample)
{
    // Beale's example cycles under plain Dantzig pricing.
    LpProblem p;
    p.cost.resize(4);
    p.cost << -0.75, 150.0, -0.02, 6.0;
    p.lower = Vector::Zero(4);
    p.upper = Vector::Constant(4, oracle::kInf);
    p.rows.push_back({{{0, 0.25}, {1, -60.0}, {2, -0.04}, {3, 9.0}}, RowSense::le, 0.0});
    p.rows.push_back({{{0, 0.5}, {1, -90.0}, {2, -0.02}, {3, 3.0}}, RowSense::le, 0.0});
    p.rows.push_back({{{2, 1.0}}, RowSense::le, 1.0});
    const LpSolution s = solve_lp(p);
    ASSERT_EQ(s.status, LpStatus::optimal);
    EXPECT_NEAR(s.objective, -0.05, 1e-12);
}

TEST(Lp, EmptyAndTrivial)
{
    LpProblem p;
    p.cost = Vector::Constant(1, 1.0);
    p.lower = Vector::Constant(1, 2.0);
    p.upper = Vector::Constant(1, 2.0);
    const LpSolution s = solve_lp(p);
    ASSERT_EQ(s.status, LpStatus::optimal);
    EXPECT_EQ(s.x[0], 2.0);

    LpProblem bad = p;
    bad.lower[0] = 3.0;
    EXPECT_EQ(solve_lp(bad).status, LpStatus::infeasible);
}
