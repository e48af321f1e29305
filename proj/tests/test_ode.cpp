#include "sindybrid/cases.hpp"
#include "sindybrid/error.hpp"
#include "sindybrid/ode.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sindybrid;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) {
        out[k++] = x;
    }
    return out;
}

OdeSystem decay()
{
    OdeSystem s;
    s.name = "decay";
    s.state_names = {"x"};
    s.rhs = [](const Vector& x, const Vector&) { return Vector(-x); };
    return s;
}

} // namespace

TEST(EvalRhs, LotkaFixedPointAndAxis)
{
    const CaseModel lv = make_case("lotka");
    const Vector r(0);
    const Vector a = eval_rhs(lv.system, vec({1.0, 1.0}), r);
    EXPECT_EQ(a[0], 0.0);
    EXPECT_EQ(a[1], 0.0);
    const Vector b = eval_rhs(lv.system, vec({2.0, 0.0}), r);
    EXPECT_DOUBLE_EQ(b[0], 2.0);
    EXPECT_DOUBLE_EQ(b[1], 0.0);
}

TEST(EvalRhs, MeerweinVanishesWithoutSubstrate)
{
    const CaseModel m = make_case("meerwein");
    const Vector d = eval_rhs(m.system, vec({0.0, 2.0, 0.5, 0.3}), vec({5.0, 313.15}));
    for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_EQ(d[k], 0.0);
    }
}

TEST(EvalRhs, DimensionMismatchAndNonFinite)
{
    const CaseModel lv = make_case("lotka");
    EXPECT_THROW(eval_rhs(lv.system, vec({1.0}), Vector(0)), UsageError);
    OdeSystem bad = decay();
    bad.rhs = [](const Vector&, const Vector&) { return vec({std::nan("")}); };
    EXPECT_THROW(eval_rhs(bad, vec({1.0}), Vector(0)), NumericDomainError);
}

TEST(EvalRhs, Deterministic)
{
    const CaseModel f = make_case("fermentation");
    const Vector x = vec({40.0, 10.0, 12.0}), r = vec({0.1, 170.0});
    const Vector a = eval_rhs(f.system, x, r);
    const Vector b = eval_rhs(f.system, x, r);
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k], b[k]);
    }
}

TEST(Cases, DeviationCatalog)
{
    const CaseModel lv = make_case("lotka");
    ASSERT_EQ(lv.catalog.size(), 2u);
    const Vector x = vec({0.7, 0.4});
    const Vector dx = lv.catalog.at(0)(x, Vector(0));
    EXPECT_DOUBLE_EQ(dx[0], -0.2 * 0.49 - 0.1 * 0.4);
    EXPECT_EQ(dx[1], 0.0);
    const Vector dy = lv.catalog.at(1)(x, Vector(0));
    EXPECT_EQ(dy[0], 0.0);
    EXPECT_DOUBLE_EQ(dy[1], 0.7);

    const CaseModel m = make_case("meerwein");
    const Vector db = m.catalog.at(1)(vec({1.5, 1.0, 0.0, 0.0}), vec({5.0, 273.15}));
    EXPECT_NEAR(db[1], -2.0, 1e-15);

    const CaseModel f = make_case("fermentation");
    const Vector ds = f.catalog.at(1)(vec({40.0, 0.0, 12.0}), vec({0.08, 160.0}));
    EXPECT_EQ(ds[1], 0.0);
}

TEST(Cases, OverridesAndMissingParameters)
{
    const CaseModel lv = make_case("lotka", {{"alpha", 2.0}});
    EXPECT_DOUBLE_EQ(eval_rhs(lv.system, vec({1.0, 0.0}), Vector(0))[0], 2.0);
    EXPECT_THROW(make_case("lotka", {{"alpha", 1.0}}, false), ConfigError);
    EXPECT_THROW(make_case("nope"), Error);
    EXPECT_THROW(make_case("lotka", {{"unknown_param", 1.0}}), ConfigError);
}

TEST(Integrate, ExponentialDecay)
{
    const Trajectory tr = integrate(decay(), nullptr, vec({1.0}), Vector(0), vec({0.0, 0.5, 1.0}));
    EXPECT_NEAR(tr.X(2, 0), std::exp(-1.0), 1e-6);
    EXPECT_NEAR(tr.X(1, 0), std::exp(-0.5), 1e-6);
    EXPECT_EQ(tr.X(0, 0), 1.0);
}

TEST(Integrate, LotkaPeriodicity)
{
    const CaseModel lv = make_case("lotka");
    IntegrateOptions hi;
    hi.rel_tol = 1e-12;
    hi.abs_tol = 1e-14;
    const Vector x0 = vec({0.5, 0.5});
    // Reference period: first return of y to 0.5 with y increasing, after a fine scan.
    const Vector grid = linspace(0.0, 12.0, 12001);
    const Trajectory ref = integrate(lv.system, nullptr, x0, Vector(0), grid, hi);
    double period = 0.0;
    for (Eigen::Index k = 100; k + 1 < grid.size(); ++k) {
        const double a = ref.X(k, 0) - 0.5, b = ref.X(k + 1, 0) - 0.5;
        if (a < 0.0 && b >= 0.0 && ref.X(k, 1) < 1.0) {
            period = grid[k] + (grid[k + 1] - grid[k]) * (-a) / (b - a);
            break;
        }
    }
    ASSERT_GT(period, 1.0);
    const Trajectory tr = integrate(lv.system, nullptr, x0, Vector(0), vec({0.0, period}));
    EXPECT_NEAR(tr.X(1, 0), 0.5, 1e-3);
    EXPECT_NEAR(tr.X(1, 1), 0.5, 1e-3);
}

TEST(Integrate, LotkaConservedQuantity)
{
    const CaseModel lv = make_case("lotka");
    const Trajectory tr = integrate(lv.system, nullptr, vec({0.3, 0.8}), Vector(0), linspace(0.0, 10.0, 50));
    auto V = [](double x, double y) { return x - std::log(x) + y - std::log(y); };
    const double v0 = V(tr.X(0, 0), tr.X(0, 1));
    for (Eigen::Index k = 0; k < tr.num_samples(); ++k) {
        EXPECT_NEAR(V(tr.X(k, 0), tr.X(k, 1)), v0, 1e-7);
    }
}

TEST(Integrate, MeerweinStoichiometry)
{
    const CaseModel m = make_case("meerwein");
    const Trajectory tr =
        integrate(m.system, nullptr, vec({2.0, 1.5, 0.0, 0.0}), vec({7.0, 318.15}), linspace(0.0, 0.5, 20));
    for (Eigen::Index k = 0; k < tr.num_samples(); ++k) {
        EXPECT_NEAR(tr.X(k, 1) + tr.X(k, 2), 1.5, 1e-8);
        EXPECT_NEAR(tr.X(k, 0) + tr.X(k, 2) + tr.X(k, 3), 2.0, 1e-8);
    }
}

TEST(Integrate, ZeroDeviationMatchesNone)
{
    const CaseModel lv = make_case("lotka");
    DeviationSpec zero;
    zero.target_states = {0};
    zero.dev = [](const Vector& x, const Vector&) { return Vector(Vector::Zero(x.size())); };
    const Vector grid = linspace(0.0, 5.0, 11);
    const Trajectory a = integrate(lv.system, nullptr, vec({0.4, 0.6}), Vector(0), grid);
    const Trajectory b = integrate(lv.system, &zero, vec({0.4, 0.6}), Vector(0), grid);
    EXPECT_EQ((a.X - b.X).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Integrate, WithDeviationEqualsDeviationArgument)
{
    const CaseModel lv = make_case("lotka");
    const OdeSystem dev = with_deviation(lv.system, lv.catalog.at(0));
    const Vector grid = linspace(0.0, 5.0, 11);
    const Trajectory a = integrate(dev, nullptr, vec({0.4, 0.6}), Vector(0), grid);
    const Trajectory b = integrate(lv.system, &lv.catalog.at(0), vec({0.4, 0.6}), Vector(0), grid);
    EXPECT_LT((a.X - b.X).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Integrate, BlowUpRaisesWithLastTime)
{
    OdeSystem s;
    s.state_names = {"x"};
    s.rhs = [](const Vector& x, const Vector&) { return Vector(x.cwiseProduct(x)); };
    try {
        integrate(s, nullptr, vec({1.0}), Vector(0), vec({0.0, 0.5, 2.0}));
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_GT(e.last_time(), 0.5);
        EXPECT_LE(e.last_time(), 1.0 + 1e-9);
    }
}

TEST(Integrate, RejectsBadGrid)
{
    EXPECT_THROW(integrate(decay(), nullptr, vec({1.0}), Vector(0), vec({0.0, 0.0, 1.0})), UsageError);
    EXPECT_THROW(integrate(decay(), nullptr, vec({1.0, 2.0}), Vector(0), vec({0.0, 1.0})), UsageError);
}

TEST(Linspace, Endpoints)
{
    const Vector t = linspace(0.0, 2.0, 5);
    ASSERT_EQ(t.size(), 5);
    EXPECT_EQ(t[0], 0.0);
    EXPECT_EQ(t[4], 2.0);
    EXPECT_DOUBLE_EQ(t[1], 0.5);
}
