#include "sindybrid/error.hpp"
#include "sindybrid/expr.hpp"
#include "sindybrid/library.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sindybrid;

TEST(Expression, ArithmeticAndFunctions)
{
    const auto e = Expression::parse("2*x^2 - y/(1+x) + exp(0) - abs(-3) + sqrt(4) + log(1)", {"x", "y"});
    const double v[2] = {2.0, 3.0};
    EXPECT_DOUBLE_EQ(e.evaluate(v), 8.0 - 1.0 + 1.0 - 3.0 + 2.0);
    const auto neg = Expression::parse("-x^2", {"x"});
    EXPECT_DOUBLE_EQ(neg.evaluate(v), -4.0);
}

TEST(Expression, GuardedDivision)
{
    const auto e = Expression::parse("1/x", {"x"});
    const double zero[1] = {0.0};
    EXPECT_DOUBLE_EQ(e.evaluate(zero), 1.0 / kDivisionGuard);
    const double tiny[1] = {-1e-9};
    EXPECT_DOUBLE_EQ(e.evaluate(tiny), -1.0 / kDivisionGuard);
}

TEST(Expression, Errors)
{
    EXPECT_THROW(Expression::parse("x + z", {"x"}), ConfigError);
    EXPECT_THROW(Expression::parse("x +", {"x"}), ConfigError);
    EXPECT_THROW(Expression::parse("(x", {"x"}), ConfigError);
}

TEST(Library, Degree2TwoStates)
{
    LibrarySpec spec;
    const Library lib = build_library(spec, {"x", "y"}, {});
    const std::vector<std::string> expect{"1", "x", "y", "x^2", "x*y", "y^2"};
    EXPECT_EQ(lib.labels(), expect);
}

TEST(Library, Counts)
{
    LibrarySpec d1;
    d1.degree = 1;
    d1.aliases = {{"Tstar", "T/273.15"}};
    d1.monomial_variables = {"C_A", "C_B", "C_P", "C_S", "C_cat", "Tstar"};
    EXPECT_EQ(build_library(d1, {"C_A", "C_B", "C_P", "C_S"}, {"C_cat", "T"}).size(), 7u);

    LibrarySpec d2;
    EXPECT_EQ(build_library(d2, {"a", "b"}, {"u", "v"}).size(), 15u);
}

TEST(Library, StableOrderAndDuplicates)
{
    const LibrarySpec spec = default_library("fermentation");
    const auto a = build_library(spec, {"X", "S", "P"}, {"D", "S_A"}).labels();
    const auto b = build_library(spec, {"X", "S", "P"}, {"D", "S_A"}).labels();
    EXPECT_EQ(a, b);

    LibrarySpec dup;
    dup.custom = {"x*y"};
    EXPECT_THROW(build_library(dup, {"x", "y"}, {}), ConfigError);
    LibrarySpec unknown;
    unknown.custom = {"q*x"};
    EXPECT_THROW(build_library(unknown, {"x", "y"}, {}), ConfigError);
    LibrarySpec empty;
    empty.degree = 0;
    empty.include_constant = false;
    EXPECT_THROW(build_library(empty, {"x"}, {}), ConfigError);
}

TEST(Library, DefaultsContainCatalogTerms)
{
    const Library m = build_library(default_library("meerwein"), {"C_A", "C_B", "C_P", "C_S"}, {"C_cat", "T"});
    for (const char* t : {"C_A*C_B", "C_A/C_B", "C_B*Tstar", "C_A*C_cat", "C_A*Tstar", "C_A*C_cat*Tstar", "C_S",
                          "C_S^2", "C_S*C_cat", "C_S*Tstar", "C_S*C_cat*Tstar"}) {
        EXPECT_NE(m.find(t), Library::npos) << t;
    }
    const Library f = build_library(default_library("fermentation"), {"X", "S", "P"}, {"D", "S_A"});
    for (const char* t : {"X*S/(0.01+S)", "S/D", "X", "P", "X*P*S_A"}) {
        EXPECT_NE(f.find(t), Library::npos) << t;
    }
    const Library l = build_library(default_library("lotka"), {"x", "y"}, {});
    for (const char* t : {"x^2", "y", "x"}) {
        EXPECT_NE(l.find(t), Library::npos) << t;
    }
}

TEST(Library, EvaluateExamples)
{
    LibrarySpec spec;
    spec.degree = 1;
    spec.custom = {"x1*x2", "x1/(0.01+x2)"};
    const Library lib = build_library(spec, {"x1", "x2"}, {});
    Matrix states(2, 2);
    states << 2.0, 3.0, 1.0, 0.99;
    const Matrix XL = evaluate_library(lib, states, Matrix(2, 0));
    EXPECT_EQ(XL(0, 0), 1.0);
    EXPECT_EQ(XL(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(XL(0, lib.find("x1*x2")), 6.0);
    EXPECT_DOUBLE_EQ(XL(1, lib.find("x1/(0.01+x2)")), 1.0);
}

TEST(Library, NonFiniteNamesTheTerm)
{
    LibrarySpec spec;
    spec.degree = 0;
    spec.include_constant = false;
    spec.custom = {"log(x)"};
    const Library lib = build_library(spec, {"x"}, {});
    Matrix states(2, 1);
    states << 1.0, -1.0;
    try {
        evaluate_library(lib, states, Matrix(2, 0));
        FAIL() << "expected NumericDomainError";
    } catch (const NumericDomainError& e) {
        EXPECT_EQ(e.equation(), "log(x)");
    }
}

TEST(ScaleColumns, Examples)
{
    Matrix XL(3, 2);
    XL << 2.0, 0.0, -4.0, 0.0, 1.0, 0.0;
    const ScaledLibraryMatrix S = scale_columns(XL);
    EXPECT_EQ(S.scales[0], 4.0);
    EXPECT_EQ(S.XL_sc(0, 0), 0.5);
    EXPECT_EQ(S.XL_sc(1, 0), -1.0);
    EXPECT_EQ(S.XL_sc(2, 0), 0.25);
    EXPECT_EQ(S.scales[1], 1.0);
    EXPECT_TRUE(S.degenerate[1]);
    EXPECT_FALSE(S.degenerate[0]);
}

TEST(ScaleColumns, UnitMaxAbsAndHomogeneity)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-50.0, 50.0), c(0.1, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix XL(7, 5);
        for (Eigen::Index i = 0; i < XL.size(); ++i) {
            XL.data()[i] = u(rng);
        }
        const ScaledLibraryMatrix S = scale_columns(XL);
        for (Eigen::Index j = 0; j < XL.cols(); ++j) {
            EXPECT_EQ(S.XL_sc.col(j).cwiseAbs().maxCoeff(), 1.0);
            EXPECT_GT(S.scales[j], 0.0);
            EXPECT_LT((S.XL_sc.col(j) * S.scales[j] - XL.col(j)).cwiseAbs().maxCoeff(), 1e-12);
        }
        const double k = c(rng);
        const ScaledLibraryMatrix T = scale_columns(XL * k);
        EXPECT_LT((T.scales - S.scales * k).cwiseAbs().maxCoeff(), 1e-12 * S.scales.maxCoeff() * k);
        EXPECT_LT((T.XL_sc - S.XL_sc).cwiseAbs().maxCoeff(), 1e-15);
    }
}
