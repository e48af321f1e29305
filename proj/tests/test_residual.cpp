#include "sindybrid/cases.hpp"
#include "sindybrid/datagen.hpp"
#include "sindybrid/error.hpp"
#include "sindybrid/residual.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sindybrid;

namespace {

Vector random_grid(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> gap(0.05, 1.0);
    Vector t(n);
    t[0] = gap(rng) - 0.5;
    for (int k = 1; k < n; ++k) {
        t[k] = t[k - 1] + gap(rng);
    }
    return t;
}

} // namespace

TEST(NumericDerivative, HandExample)
{
    Vector t(3);
    t << 0.0, 0.3, 1.0;
    Matrix X(3, 1);
    X << 0.0, 0.09, 1.0;
    const Matrix d = numeric_derivative(t, X);
    EXPECT_NEAR(d(0, 0), 0.0, 1e-14);
    EXPECT_NEAR(d(1, 0), 0.6, 1e-14);
    EXPECT_NEAR(d(2, 0), 2.0, 1e-14);
}

TEST(NumericDerivative, ExactOnQuadraticsOnRandomGrids)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + trial % 12;
        const Vector t = random_grid(rng, n);
        const double a = c(rng), b = c(rng), q = c(rng);
        Matrix X(n, 3);
        Matrix expect(n, 3);
        for (int k = 0; k < n; ++k) {
            X(k, 0) = a;
            X(k, 1) = a + b * t[k];
            X(k, 2) = a + b * t[k] + q * t[k] * t[k];
            expect(k, 0) = 0.0;
            expect(k, 1) = b;
            expect(k, 2) = b + 2.0 * q * t[k];
        }
        const Matrix d = numeric_derivative(t, X);
        const double scale = 1.0 + expect.cwiseAbs().maxCoeff();
        EXPECT_LT((d - expect).cwiseAbs().maxCoeff(), 1e-10 * scale) << "trial " << trial;
        EXPECT_EQ(d.col(0).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(NumericDerivative, NeedsThreeIncreasingSamples)
{
    Vector t(2);
    t << 0.0, 1.0;
    EXPECT_THROW(numeric_derivative(t, Matrix::Zero(2, 1)), UsageError);
    Vector u(3);
    u << 0.0, 1.0, 1.0;
    EXPECT_THROW(numeric_derivative(u, Matrix::Zero(3, 1)), UsageError);
}

TEST(Residual, ZeroForConstantSystem)
{
    OdeSystem s;
    s.state_names = {"a", "b"};
    s.rhs = [](const Vector& x, const Vector&) { return Vector(Vector::Zero(x.size())); };
    Trajectory tr;
    tr.t = linspace(0.0, 1.0, 6);
    tr.X = Matrix::Constant(6, 2, 1.7);
    tr.r = Vector(0);
    const ResidualMatrix H = residual_matrix({tr, tr}, s);
    EXPECT_EQ(H.rows(), 12);
    EXPECT_EQ(H.H.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(H.rows_index[7], std::make_pair(1, 1));
}

TEST(Residual, RowsAlignWithStates)
{
    const CaseModel lv = make_case("lotka");
    CampaignConfig c;
    c.case_id = "lotka";
    c.noise_level = 0.05;
    const Dataset d = build_dataset(c);
    const ResidualMatrix H = residual_matrix(d.train, lv.system);
    ASSERT_EQ(H.rows(), static_cast<Eigen::Index>(d.train.size()) * 15);
    const Matrix dxdt = numeric_derivative(d.train[2].t, d.train[2].X);
    for (Eigen::Index k = 0; k < H.rows(); ++k) {
        const auto [e, i] = H.rows_index[static_cast<std::size_t>(k)];
        EXPECT_EQ((H.states_at_rows.row(k) - d.train[static_cast<std::size_t>(e)].X.row(i)).cwiseAbs().maxCoeff(),
                  0.0);
        if (e == 2) {
            const Vector f = lv.system.rhs(d.train[2].X.row(i).transpose(), Vector(0));
            EXPECT_NEAR(H.H(k, 0), dxdt(i, 0) - f[0], 1e-12);
        }
    }
}

TEST(Residual, SecondOrderConvergenceWithoutDeviation)
{
    const CaseModel lv = make_case("lotka");
    Vector x0(2);
    x0 << 0.5, 0.3;
    double prev = 0.0;
    std::vector<double> errs;
    for (int n : {21, 41, 81}) {
        Trajectory tr = integrate(lv.system, nullptr, x0, Vector(0), linspace(0.0, 4.0, n),
                                  IntegrateOptions{1e-12, 1e-14, 200000, 1e12});
        tr.r = Vector(0);
        const ResidualMatrix H = residual_matrix({tr}, lv.system);
        errs.push_back(H.H.cwiseAbs().maxCoeff());
    }
    for (std::size_t k = 1; k < errs.size(); ++k) {
        const double order = std::log2(errs[k - 1] / errs[k]);
        EXPECT_GE(order, 1.8);
        prev = order;
    }
    EXPECT_GT(prev, 0.0);
}

TEST(Residual, LotkaDeviationColumn)
{
    const CaseModel lv = make_case("lotka");
    CampaignConfig c;
    c.case_id = "lotka";
    c.deviation_target = "x";
    c.noise_level = 0.0;
    c.n_t = 40;
    const Dataset d = build_dataset(c);
    const ResidualMatrix H = residual_matrix(d.train, lv.system);
    double dev_mean = 0.0;
    for (Eigen::Index k = 0; k < H.rows(); ++k) {
        const double x = H.states_at_rows(k, 0), y = H.states_at_rows(k, 1);
        dev_mean += -0.2 * x * x - 0.1 * y;
    }
    dev_mean /= static_cast<double>(H.rows());
    const Vector m = column_means(H.H);
    EXPECT_NEAR(m[0], dev_mean, 0.05 * std::abs(dev_mean));
    EXPECT_LT(std::abs(m[1]), 0.1 * std::abs(m[0]));
}

TEST(Residual, MeerweinDominanceAtZeroNoise)
{
    const CaseModel m = make_case("meerwein");
    CampaignConfig c;
    c.case_id = "meerwein";
    c.deviation_target = "C_A";
    c.noise_level = 0.0;
    const ResidualMatrix H = residual_matrix(build_dataset(c).train, m.system);
    const Vector mean = column_means(H.H);
    for (Eigen::Index k = 1; k < 4; ++k) {
        EXPECT_GE(std::abs(mean[0]), 10.0 * std::abs(mean[k]));
    }
}

TEST(ColumnStats, Basics)
{
    EXPECT_EQ(column_means(Matrix::Zero(4, 3)).cwiseAbs().maxCoeff(), 0.0);
    Matrix one(1, 3);
    one << 1.0, -2.0, 3.5;
    EXPECT_EQ((column_means(one) - one.row(0).transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(column_stddevs(one).cwiseAbs().maxCoeff(), 0.0);
    Matrix two(2, 1);
    two << 1.0, 3.0;
    EXPECT_DOUBLE_EQ(column_stddevs(two)[0], std::sqrt(2.0));
    EXPECT_THROW(column_means(Matrix(0, 2)), UsageError);
}

TEST(Residual, SmoothingKeepsQuadraticsExact)
{
    const Vector t = linspace(0.0, 2.0, 9);
    Matrix X(9, 1);
    for (int k = 0; k < 9; ++k) {
        X(k, 0) = 1.0 + t[k] - 0.5 * t[k] * t[k];
    }
    const Matrix S = smooth_states(t, X, 5);
    EXPECT_LT((S - X).cwiseAbs().maxCoeff(), 1e-12);
}
