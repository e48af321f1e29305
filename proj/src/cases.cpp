#include "sindybrid/cases.hpp"

#include "sindybrid/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sindybrid {

namespace {

constexpr double kTref = 273.15;

ParamMap resolve_params(const std::string& case_id, const ParamMap& overrides, bool use_defaults)
{
    const auto required = required_params(case_id);
    ParamMap p = use_defaults ? default_params(case_id) : ParamMap{};
    for (const auto& [name, value] : overrides) {
        if (std::find(required.begin(), required.end(), name) == required.end()) {
            throw ConfigError(case_id + ": unknown parameter '" + name + "'");
        }
        p[name] = value;
    }
    std::string missing;
    for (const auto& name : required) {
        if (!p.contains(name)) {
            missing += (missing.empty() ? "" : ", ") + name;
        }
    }
    if (!missing.empty()) {
        throw ConfigError(case_id + ": incomplete parameter set, missing " + missing);
    }
    return p;
}

DeviationSpec make_deviation(std::size_t state,
                             std::size_t num_states,
                             std::function<double(const Vector&, const Vector&)> fn,
                             std::vector<std::pair<std::string, double>> terms,
                             std::string description)
{
    DeviationSpec d;
    d.target_states = {state};
    d.dev = [state, num_states, fn = std::move(fn)](const Vector& x, const Vector& r) {
        Vector out = Vector::Zero(static_cast<Eigen::Index>(num_states));
        out[static_cast<Eigen::Index>(state)] = fn(x, r);
        return out;
    };
    for (auto& [label, coef] : terms) {
        d.terms.push_back({state, label, coef});
    }
    d.description = std::move(description);
    return d;
}

// Rate constants use the Arrhenius form k = k0 * exp(-Ea / (R T)) with Ea in kJ/mol.
CaseModel make_meerwein(const ParamMap& p)
{
    CaseModel c;
    c.id = "meerwein";
    c.system.name = "meerwein";
    c.system.state_names = {"C_A", "C_B", "C_P", "C_S"};
    c.system.run_condition_names = {"C_cat", "T"};
    c.system.params = p;
    const double kM_pre = p.at("kM_pre"), kM_cat = p.at("kM_cat"), E_M = p.at("E_M");
    const double kS_pre = p.at("kS_pre"), kS_cat = p.at("kS_cat"), E_S = p.at("E_S");
    const double R = p.at("R");
    c.system.rhs = [=](const Vector& x, const Vector& r) {
        const double ccat = r[0], T = r[1];
        const double kM = kM_pre * std::exp(kM_cat * ccat) * std::exp(-E_M / (R * T));
        const double kS = kS_pre * std::exp(kS_cat * ccat) * std::exp(-E_S / (R * T));
        const double rm = kM * x[0] * x[1];
        const double rs = kS * x[0];
        Vector dx(4);
        dx << -rm - rs, -rm, rm, rs;
        return dx;
    };

    c.catalog.emplace(0, make_deviation(
                             0, 4, [](const Vector& x, const Vector&) { return -x[0] * x[1] - x[0] / x[1]; },
                             {{"C_A*C_B", -1.0}, {"C_A/C_B", -1.0}}, "-C_A*C_B - C_A/C_B"));
    c.catalog.emplace(1, make_deviation(
                             1, 4, [](const Vector& x, const Vector& r) { return -2.0 * x[1] * (r[1] / kTref); },
                             {{"C_B*Tstar", -2.0}}, "-2*C_B*Tstar"));
    c.catalog.emplace(2, make_deviation(
                             2, 4,
                             [](const Vector& x, const Vector& r) {
                                 const double ts = r[1] / kTref;
                                 return x[0] * (-0.2 * r[0] - 0.2 * ts + 0.3 * r[0] * ts);
                             },
                             {{"C_A*C_cat", -0.2}, {"C_A*Tstar", -0.2}, {"C_A*C_cat*Tstar", 0.3}},
                             "C_A*(-0.2*C_cat - 0.2*Tstar + 0.3*C_cat*Tstar)"));
    c.catalog.emplace(3, make_deviation(
                             3, 4,
                             [](const Vector& x, const Vector& r) {
                                 const double ts = r[1] / kTref;
                                 return -0.1 * x[3] * (1.0 + x[3] + r[0] + ts + r[0] * ts);
                             },
                             {{"C_S", -0.1},
                              {"C_S^2", -0.1},
                              {"C_S*C_cat", -0.1},
                              {"C_S*Tstar", -0.1},
                              {"C_S*C_cat*Tstar", -0.1}},
                             "-0.1*C_S*(1 + C_S + C_cat + Tstar + C_cat*Tstar)"));

    c.ic_bounds = {{1.0, 3.0}, {1.0, 3.0}, {0.0, 0.0}, {0.0, 0.0}};
    c.run_condition_levels = {{3.0, 5.0, 7.0}, {313.15, 318.15}};
    c.horizon = 0.5;
    return c;
}

CaseModel make_fermentation(const ParamMap& p)
{
    CaseModel c;
    c.id = "fermentation";
    c.system.name = "fermentation";
    c.system.state_names = {"X", "S", "P"};
    c.system.run_condition_names = {"D", "S_A"};
    c.system.params = p;
    const double mu_max = p.at("mu_max"), K_S = p.at("K_S"), K_i = p.at("K_i");
    const double X_MAX = p.at("X_MAX"), P_MAX = p.at("P_MAX"), m = p.at("m"), n = p.at("n");
    const double Y_X = p.at("Y_X"), beta_ms = p.at("beta_ms"), K_bs2 = p.at("K_beta_s2");
    const double Y_PX = p.at("Y_PX"), beta_mp = p.at("beta_mp"), K_bs1 = p.at("K_beta_s1");
    c.system.rhs = [=](const Vector& x, const Vector& r) {
        const double X = x[0], S = x[1], P = x[2];
        const double D = r[0], S_A = r[1];
        const double rX = mu_max * S / (K_S + S) * std::exp(K_i * S) * std::pow(1.0 - X / X_MAX, m) *
                          std::pow(1.0 - P / P_MAX, n) * X;
        const double rS = rX / Y_X + beta_ms * S / (K_bs2 + S) * X;
        const double rP = rX * Y_PX + beta_mp * S / (K_bs1 + S) * X;
        Vector dx(3);
        dx << rX - D * X, D * (S_A - S) - rS, rP - D * P;
        return dx;
    };

    c.catalog.emplace(0, make_deviation(
                             0, 3, [](const Vector& x, const Vector&) { return -0.05 * x[0] * x[1] / (0.01 + x[1]); },
                             {{"X*S/(0.01+S)", -0.05}}, "-0.05*X*S/(0.01+S)"));
    c.catalog.emplace(1, make_deviation(
                             1, 3, [](const Vector& x, const Vector& r) { return -0.01 * x[1] / r[0]; },
                             {{"S/D", -0.01}}, "-0.01*S/D"));
    c.catalog.emplace(2, make_deviation(
                             2, 3,
                             [](const Vector& x, const Vector& r) {
                                 return -0.05 * (x[0] + x[2]) - 5e-8 * x[0] * x[2] * r[1];
                             },
                             {{"X", -0.05}, {"P", -0.05}, {"X*P*S_A", -5e-8}},
                             "-0.05*(X + P) - 5e-8*X*P*S_A"));

    c.ic_bounds = {{30.0, 50.0}, {5.0, 20.0}, {9.0, 15.0}};
    c.run_condition_levels = {{0.08, 0.1, 0.12}, {160.0, 170.0, 180.0}};
    c.horizon = 60.0;
    return c;
}

CaseModel make_lotka(const ParamMap& p)
{
    CaseModel c;
    c.id = "lotka";
    c.system.name = "lotka";
    c.system.state_names = {"x", "y"};
    c.system.params = p;
    const double a = p.at("alpha"), b = p.at("beta"), g = p.at("gamma"), d = p.at("delta");
    c.system.rhs = [=](const Vector& x, const Vector&) {
        Vector dx(2);
        dx << (a - b * x[1]) * x[0], (d * x[0] - g) * x[1];
        return dx;
    };

    c.catalog.emplace(0, make_deviation(
                             0, 2, [](const Vector& x, const Vector&) { return -0.2 * x[0] * x[0] - 0.1 * x[1]; },
                             {{"x^2", -0.2}, {"y", -0.1}}, "-0.2*x^2 - 0.1*y"));
    c.catalog.emplace(1, make_deviation(
                             1, 2, [](const Vector& x, const Vector&) { return x[0]; }, {{"x", 1.0}}, "x"));

    c.ic_bounds = {{0.1, 1.0}, {0.1, 1.0}};
    c.horizon = 10.0;
    return c;
}

} // namespace

std::vector<std::string> case_ids()
{
    return {"meerwein", "fermentation", "lotka"};
}

std::vector<std::string> required_params(const std::string& case_id)
{
    if (case_id == "meerwein") {
        return {"kM_pre", "kM_cat", "E_M", "kS_pre", "kS_cat", "E_S", "R"};
    }
    if (case_id == "fermentation") {
        return {"mu_max", "K_S", "K_i",     "X_MAX", "P_MAX",   "m",        "n",
                "Y_X",    "beta_ms", "K_beta_s2", "Y_PX", "beta_mp", "K_beta_s1"};
    }
    if (case_id == "lotka") {
        return {"alpha", "beta", "gamma", "delta"};
    }
    throw UsageError("unknown case '" + case_id + "'");
}

ParamMap default_params(const std::string& case_id)
{
    if (case_id == "meerwein") {
        return {{"kM_pre", 3.71e31}, {"kM_cat", 0.5498}, {"E_M", 198.84}, {"kS_pre", 1.06e8},
                {"kS_cat", 0.7669},  {"E_S", 58.81},     {"R", 8.314e-3}};
    }
    if (case_id == "fermentation") {
        // Keep in sync with data/fermentation_params.json.
        return {{"mu_max", 0.3}, {"K_S", 3.0},      {"K_i", -0.001},     {"X_MAX", 150.0},
                {"P_MAX", 130.0}, {"m", 1.0},       {"n", 1.5},          {"Y_X", 0.5},
                {"beta_ms", 0.1}, {"K_beta_s2", 3.0}, {"Y_PX", 1.5},     {"beta_mp", 0.05},
                {"K_beta_s1", 3.0}};
    }
    if (case_id == "lotka") {
        return {{"alpha", 1.0}, {"beta", 1.0}, {"gamma", 1.0}, {"delta", 1.0}};
    }
    throw UsageError("unknown case '" + case_id + "'");
}

ParamMap load_params(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open parameter file '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("parameter file '" + path + "': " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("parameter file '" + path + "' must hold a JSON object");
    }
    ParamMap p;
    for (const auto& [key, value] : j.items()) {
        if (key.starts_with("_")) {
            continue; // comments / metadata
        }
        if (!value.is_number()) {
            throw ConfigError("parameter '" + key + "' is not a number");
        }
        p[key] = value.get<double>();
    }
    return p;
}

CaseModel make_case(const std::string& case_id, const ParamMap& overrides, bool use_defaults)
{
    if (case_id == "meerwein") {
        return make_meerwein(resolve_params(case_id, overrides, use_defaults));
    }
    if (case_id == "fermentation") {
        return make_fermentation(resolve_params(case_id, overrides, use_defaults));
    }
    if (case_id == "lotka") {
        return make_lotka(resolve_params(case_id, overrides, use_defaults));
    }
    throw UsageError("unknown case '" + case_id + "'");
}

} // namespace sindybrid
