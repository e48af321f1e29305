#include "sindybrid/io.hpp"

#include "sindybrid/error.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sindybrid {

using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << std::setprecision(17);
    return out;
}

json matrix_json(const Matrix& M)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            row.push_back(M(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(finite_or_null(v[i]));
    }
    return out;
}

} // namespace

json finite_or_null(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return nullptr;
}

void write_json(const fs::path& path, const json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj, const std::vector<std::string>& state_names)
{
    if (static_cast<Eigen::Index>(state_names.size()) != traj.X.cols()) {
        throw UsageError("write_trajectory_csv: state names do not match the trajectory");
    }
    auto out = open_out(path);
    out << "t";
    for (const auto& n : state_names) {
        out << "," << n;
    }
    out << "\n";
    for (Eigen::Index k = 0; k < traj.num_samples(); ++k) {
        out << traj.t[k];
        for (Eigen::Index j = 0; j < traj.X.cols(); ++j) {
            out << "," << traj.X(k, j);
        }
        out << "\n";
    }
}

Trajectory read_trajectory_csv(const fs::path& path, std::vector<std::string>* state_names)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError(path.string() + ": empty file");
    }
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            header.push_back(cell);
        }
    }
    if (header.size() < 2 || header[0] != "t") {
        throw ConfigError(path.string() + ": header must start with t");
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(path.string() + ": bad number '" + cell + "'");
            }
        }
        if (row.size() != header.size()) {
            throw ConfigError(path.string() + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    Trajectory tr;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto ns = static_cast<Eigen::Index>(header.size() - 1);
    tr.t.resize(n);
    tr.X.resize(n, ns);
    for (Eigen::Index k = 0; k < n; ++k) {
        tr.t[k] = rows[static_cast<std::size_t>(k)][0];
        for (Eigen::Index j = 0; j < ns; ++j) {
            tr.X(k, j) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(j + 1)];
        }
    }
    if (state_names) {
        state_names->assign(header.begin() + 1, header.end());
    }
    return tr;
}

json to_json(const CampaignConfig& c)
{
    json j;
    j["case"] = c.case_id;
    j["deviation"] = c.deviation_target.empty() ? "none" : c.deviation_target;
    j["n_train"] = c.n_train;
    j["n_test"] = c.n_test;
    j["n_t"] = c.n_t;
    j["noise"] = c.noise_level;
    j["horizon"] = c.horizon;
    j["seed"] = c.seed;
    if (!c.ic_bounds.empty()) {
        json b = json::array();
        for (const auto& [lo, hi] : c.ic_bounds) {
            b.push_back({lo, hi});
        }
        j["ic_bounds"] = b;
    }
    if (!c.run_condition_levels.empty()) {
        j["run_condition_levels"] = c.run_condition_levels;
    }
    if (!c.params.empty()) {
        j["params"] = c.params;
    }
    return j;
}

CampaignConfig campaign_from_json(const json& j)
{
    CampaignConfig c;
    try {
        c.case_id = j.value("case", c.case_id);
        c.deviation_target = j.value("deviation", std::string{});
        if (c.deviation_target == "none") {
            c.deviation_target.clear();
        }
        c.n_train = j.value("n_train", c.n_train);
        c.n_test = j.value("n_test", c.n_test);
        c.n_t = j.value("n_t", c.n_t);
        c.noise_level = j.value("noise", c.noise_level);
        c.horizon = j.value("horizon", c.horizon);
        c.seed = j.value("seed", c.seed);
        if (j.contains("ic_bounds")) {
            for (const auto& b : j.at("ic_bounds")) {
                c.ic_bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
            }
        }
        if (j.contains("run_condition_levels")) {
            c.run_condition_levels = j.at("run_condition_levels").get<std::vector<std::vector<double>>>();
        }
        if (j.contains("params")) {
            c.params = j.at("params").get<ParamMap>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("campaign config: ") + e.what());
    }
    return c;
}

json to_json(const Hyperparams& hp)
{
    json j;
    j["lambda1_xi"] = hp.lambda1_xi;
    j["K_alpha"] = hp.K_alpha ? json(*hp.K_alpha) : json("unbounded");
    j["K_delta"] = hp.K_delta ? json(*hp.K_delta) : json("unbounded");
    j["lb"] = hp.lb;
    j["ub"] = hp.ub;
    return j;
}

Hyperparams hyperparams_from_json(const json& j)
{
    Hyperparams hp;
    try {
        hp.lambda1_xi = j.value("lambda1_xi", hp.lambda1_xi);
        hp.lb = j.value("lb", hp.lb);
        hp.ub = j.value("ub", hp.ub);
        for (const char* key : {"K_alpha", "K_delta"}) {
            if (j.contains(key) && j.at(key).is_number_integer()) {
                (std::string(key) == "K_alpha" ? hp.K_alpha : hp.K_delta) = j.at(key).get<int>();
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("hyperparameters: ") + e.what());
    }
    return hp;
}

json to_json(const LibrarySpec& spec)
{
    json j;
    j["degree"] = spec.degree;
    j["constant"] = spec.include_constant;
    if (!spec.monomial_variables.empty()) {
        j["variables"] = spec.monomial_variables;
    }
    if (!spec.aliases.empty()) {
        json a = json::object();
        for (const auto& al : spec.aliases) {
            a[al.name] = al.expr;
        }
        j["aliases"] = a;
    }
    j["rational"] = spec.rational;
    j["custom"] = spec.custom;
    return j;
}

LibrarySpec library_spec_from_json(const json& j)
{
    LibrarySpec s;
    try {
        s.degree = j.value("degree", s.degree);
        s.include_constant = j.value("constant", s.include_constant);
        if (j.contains("variables")) {
            s.monomial_variables = j.at("variables").get<std::vector<std::string>>();
        }
        if (j.contains("aliases")) {
            for (const auto& [name, expr] : j.at("aliases").items()) {
                s.aliases.push_back(LibraryAlias{name, expr.get<std::string>()});
            }
        }
        if (j.contains("rational")) {
            s.rational = j.at("rational").get<std::vector<std::string>>();
        }
        if (j.contains("custom")) {
            s.custom = j.at("custom").get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("library spec: ") + e.what());
    }
    if (s.degree < 0) {
        throw ConfigError("library spec: degree must be >= 0");
    }
    return s;
}

LibrarySpec load_library_spec(const fs::path& path)
{
    return library_spec_from_json(read_json(path));
}

json to_json(const MilpSolution& sol)
{
    json j;
    j["Xi"] = matrix_json(sol.Xi);
    json A = json::array();
    for (Eigen::Index i = 0; i < sol.A.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < sol.A.cols(); ++k) {
            row.push_back(sol.A(i, k));
        }
        A.push_back(std::move(row));
    }
    j["A"] = A;
    json D = json::array();
    for (Eigen::Index k = 0; k < sol.Delta.size(); ++k) {
        D.push_back(sol.Delta[k]);
    }
    j["Delta"] = D;
    j["s"] = sol.s;
    j["objective"] = finite_or_null(sol.objective);
    j["status"] = to_string(sol.status);
    j["gap"] = sol.gap;
    j["nodes"] = sol.nodes;
    j["bound_tightness"] = sol.bound_tightness;
    return j;
}

json to_json(const HybridModel& hm)
{
    json j;
    j["model"] = hm.fpm.name;
    j["states"] = hm.fpm.state_names;
    j["library"] = hm.library.labels();
    j["scales"] = vector_json(hm.scales);
    j["Xi_scaled"] = matrix_json(hm.Xi);
    json active = json::array();
    for (std::size_t s : hm.active_states) {
        active.push_back(hm.fpm.state_names[s]);
    }
    j["active_states"] = active;
    json coefs = json::object();
    for (std::size_t s : hm.active_states) {
        json terms = json::object();
        const auto labels = hm.library.labels();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double c = hm.coefficient(i, s);
            if (c != 0.0) {
                terms[labels[i]] = c;
            }
        }
        coefs[hm.fpm.state_names[s]] = terms;
    }
    j["coefficients"] = coefs;
    j["corrections"] = hm.correction_text();
    return j;
}

json to_json(const EvalReport& r, const std::vector<std::string>& names)
{
    auto metrics = [&names](const Metrics& m) {
        json j;
        j["defined"] = m.defined;
        j["r2_avg"] = finite_or_null(m.r2_avg);
        j["mae_avg"] = finite_or_null(m.mae_avg);
        json r2 = json::object();
        json mae = json::object();
        for (std::size_t k = 0; k < names.size() && static_cast<Eigen::Index>(k) < m.r2.size(); ++k) {
            r2[names[k]] = finite_or_null(m.r2[static_cast<Eigen::Index>(k)]);
            mae[names[k]] = finite_or_null(m.mae[static_cast<Eigen::Index>(k)]);
        }
        j["r2"] = r2;
        j["mae"] = mae;
        return j;
    };
    auto state_list = [&names](const std::set<std::size_t>& s) {
        json a = json::array();
        for (std::size_t k : s) {
            a.push_back(names[k]);
        }
        return a;
    };
    json j;
    j["train"] = metrics(r.train);
    j["test"] = metrics(r.test);
    j["identified_states"] = state_list(r.identified_states);
    j["truth_states"] = state_list(r.truth_states);
    j["identification_success"] = r.identification_success;
    j["integration_failures"] = r.integration_failures;
    j["train_integration_failures"] = r.train_integration_failures;
    return j;
}

void save_dataset(const fs::path& dir, const Dataset& d, const OdeSystem& system)
{
    fs::create_directories(dir / "train");
    fs::create_directories(dir / "test");
    write_json(dir / "config.json", to_json(d.config));
    auto sidecar = [&](const Trajectory& tr, const std::string& split, std::size_t k) {
        json meta;
        meta["case"] = d.config.case_id;
        json r = json::object();
        for (std::size_t i = 0; i < system.run_condition_names.size(); ++i) {
            r[system.run_condition_names[i]] = tr.r[static_cast<Eigen::Index>(i)];
        }
        meta["r"] = r;
        meta["noise"] = d.config.noise_level;
        meta["seed"] = d.config.seed;
        meta["split"] = split;
        if (split == "test" && k < d.test_in_training_hull.size()) {
            meta["in_training_hull"] = static_cast<bool>(d.test_in_training_hull[k]);
        }
        return meta;
    };
    for (std::size_t k = 0; k < d.train.size(); ++k) {
        const auto base = dir / "train" / ("exp_" + std::to_string(k));
        write_trajectory_csv(base.string() + ".csv", d.train[k], system.state_names);
        write_json(base.string() + ".json", sidecar(d.train[k], "train", k));
    }
    for (std::size_t k = 0; k < d.test.size(); ++k) {
        const auto base = dir / "test" / ("exp_" + std::to_string(k));
        write_trajectory_csv(base.string() + ".csv", d.test[k], system.state_names);
        write_json(base.string() + ".json", sidecar(d.test[k], "test", k));
    }
    json truth;
    if (d.truth) {
        json targets = json::array();
        for (std::size_t s : d.truth->target_states) {
            targets.push_back(system.state_names[s]);
        }
        truth["targets"] = targets;
        truth["description"] = d.truth->description;
        json terms = json::array();
        for (const auto& t : d.truth->terms) {
            terms.push_back({{"state", system.state_names[t.state]}, {"label", t.label}, {"coefficient", t.coefficient}});
        }
        truth["terms"] = terms;
    } else {
        truth["targets"] = json::array();
        truth["description"] = "none";
    }
    write_json(dir / "truth.json", truth);
}

void save_residuals(const fs::path& csv_path, const ResidualMatrix& H)
{
    {
        auto out = open_out(csv_path);
        for (std::size_t j = 0; j < H.state_names.size(); ++j) {
            out << (j ? "," : "") << H.state_names[j];
        }
        out << "\n";
        for (Eigen::Index r = 0; r < H.H.rows(); ++r) {
            for (Eigen::Index j = 0; j < H.H.cols(); ++j) {
                out << (j ? "," : "") << H.H(r, j);
            }
            out << "\n";
        }
    }
    json rows = json::array();
    for (const auto& [e, k] : H.rows_index) {
        rows.push_back({e, k});
    }
    json side;
    side["rows"] = rows;
    side["excluded_rows"] = H.excluded_rows;
    fs::path side_path = csv_path;
    side_path.replace_extension(".rows.json");
    write_json(side_path, side);
}

} // namespace sindybrid
