#include "sindybrid/harness.hpp"

#include "sindybrid/error.hpp"
#include "sindybrid/io.hpp"
#include "sindybrid/lp_format.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace sindybrid {

using nlohmann::json;

void IdentificationSettings::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("lambda must be a finite value >= 0");
    }
    if (!(box_factor > 0.0) || !std::isfinite(box_factor)) {
        throw ConfigError("box_factor must be positive");
    }
    if ((ub && !(*ub > 0.0)) || (lb && !(*lb < 0.0))) {
        throw ConfigError("box must satisfy lb < 0 < ub");
    }
    if ((K_alpha && *K_alpha < 0) || (K_delta && *K_delta < 0)) {
        throw ConfigError("cardinality limits must be >= 0");
    }
}

Hyperparams IdentificationSettings::resolve(const ResidualMatrix& H, std::size_t n_lib) const
{
    validate();
    if (n_lib == 0) {
        throw UsageError("resolve: empty library");
    }
    Hyperparams hp;
    hp.lambda1_xi = lambda_per_term ? lambda / static_cast<double>(n_lib) : lambda;
    hp.K_alpha = K_alpha;
    hp.K_delta = K_delta;
    double m = 1.0;
    if (H.H.size() > 0) {
        const double mean_max = column_means(H.H).cwiseAbs().maxCoeff();
        const double abs_max = H.H.cwiseAbs().maxCoeff();
        if (mean_max > 0.0 && std::isfinite(mean_max)) {
            m = box_factor * mean_max;
        } else if (abs_max > 0.0 && std::isfinite(abs_max)) {
            m = box_factor * abs_max;
        }
    }
    hp.ub = ub ? *ub : (lb ? -*lb : m);
    hp.lb = lb ? *lb : (ub ? -*ub : -m);
    hp.validate();
    return hp;
}

json to_json(const IdentificationSettings& s)
{
    json j;
    j["lambda"] = s.lambda;
    j["lambda_per_term"] = s.lambda_per_term;
    j["box_factor"] = s.box_factor;
    j["ub"] = s.ub ? json(*s.ub) : json("auto");
    j["lb"] = s.lb ? json(*s.lb) : json("auto");
    j["K_alpha"] = s.K_alpha ? json(*s.K_alpha) : json("unbounded");
    j["K_delta"] = s.K_delta ? json(*s.K_delta) : json("unbounded");
    j["gap_tol"] = s.milp.gap_tol;
    j["node_limit"] = s.milp.node_limit;
    j["smooth"] = s.residual.smooth;
    j["smooth_window"] = s.residual.smooth_window;
    return j;
}

IdentificationSettings settings_from_json(const json& j)
{
    IdentificationSettings s;
    try {
        s.lambda = j.value("lambda", s.lambda);
        s.lambda_per_term = j.value("lambda_per_term", s.lambda_per_term);
        s.box_factor = j.value("box_factor", s.box_factor);
        if (j.contains("ub") && j.at("ub").is_number()) {
            s.ub = j.at("ub").get<double>();
        }
        if (j.contains("lb") && j.at("lb").is_number()) {
            s.lb = j.at("lb").get<double>();
        }
        if (j.contains("K_alpha") && j.at("K_alpha").is_number_integer()) {
            s.K_alpha = j.at("K_alpha").get<int>();
        }
        if (j.contains("K_delta") && j.at("K_delta").is_number_integer()) {
            s.K_delta = j.at("K_delta").get<int>();
        }
        s.milp.gap_tol = j.value("gap_tol", s.milp.gap_tol);
        s.milp.node_limit = j.value("node_limit", s.milp.node_limit);
        s.residual.smooth = j.value("smooth", s.residual.smooth);
        s.residual.smooth_window = j.value("smooth_window", s.residual.smooth_window);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("identification settings: ") + e.what());
    }
    s.validate();
    return s;
}

double dominance_ratio(const Vector& means, std::size_t deviated)
{
    if (static_cast<Eigen::Index>(deviated) >= means.size()) {
        throw UsageError("dominance_ratio: state index out of range");
    }
    double other = 0.0;
    for (Eigen::Index k = 0; k < means.size(); ++k) {
        if (k != static_cast<Eigen::Index>(deviated)) {
            other = std::max(other, std::abs(means[k]));
        }
    }
    const double dev = std::abs(means[static_cast<Eigen::Index>(deviated)]);
    if (other == 0.0) {
        return dev == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    }
    return dev / other;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

json library_json(const LibrarySpec& spec, const ScaledLibraryMatrix& S)
{
    json j;
    j["spec"] = to_json(spec);
    j["labels"] = S.labels;
    json scales = json::array();
    for (Eigen::Index i = 0; i < S.scales.size(); ++i) {
        scales.push_back(S.scales[i]);
    }
    j["scales"] = scales;
    json degenerate = json::array();
    for (bool d : S.degenerate) {
        degenerate.push_back(d);
    }
    j["degenerate"] = degenerate;
    return j;
}

void write_predictions(const std::filesystem::path& dir, const RunResult& r)
{
    std::filesystem::create_directories(dir);
    const auto& names = r.hybrid.fpm.state_names;
    for (std::size_t k = 0; k < r.report.test_predictions.size(); ++k) {
        const Matrix& P = r.report.test_predictions[k];
        if (P.size() == 0) {
            continue;
        }
        Trajectory tr;
        tr.t = r.dataset.test[k].t;
        tr.X = P;
        write_trajectory_csv(dir / ("exp_" + std::to_string(k) + ".csv"), tr, names);
    }
}

} // namespace

RunResult run_identification(const CampaignConfig& config,
                             const LibrarySpec& library,
                             const IdentificationSettings& settings,
                             const std::filesystem::path& run_dir)
{
    RunResult out;
    const bool persist = !run_dir.empty();
    stage("config", [&] {
        config.validate();
        settings.validate();
        return 0;
    });
    const CaseModel cm = stage("config", [&] { return make_case(config.case_id, config.params); });
    const OdeSystem& fpm = cm.system;

    if (persist) {
        stage("persist", [&] {
            std::filesystem::create_directories(run_dir);
            json rc;
            rc["campaign"] = to_json(config);
            rc["library"] = to_json(library);
            rc["settings"] = to_json(settings);
            write_json(run_dir / "run_config.json", rc);
            return 0;
        });
    }

    out.dataset = stage("datagen", [&] { return build_dataset(config); });
    if (persist) {
        stage("persist", [&] {
            save_dataset(run_dir / "dataset", out.dataset, fpm);
            return 0;
        });
    }

    out.residuals = stage("residual", [&] { return residual_matrix(out.dataset.train, fpm, settings.residual); });
    std::set<std::size_t> truth;
    if (out.dataset.truth) {
        truth = out.dataset.truth->target_states;
    }
    const Vector means = column_means(out.residuals.H);
    out.dominance_ratio = truth.size() == 1 ? dominance_ratio(means, *truth.begin())
                                            : std::numeric_limits<double>::quiet_NaN();
    if (persist) {
        stage("persist", [&] {
            save_residuals(run_dir / "residuals.csv", out.residuals);
            return 0;
        });
    }

    stage("library", [&] {
        out.library = build_library(library, fpm.state_names, fpm.run_condition_names);
        const Matrix XL = evaluate_library(out.library, out.residuals.states_at_rows, out.residuals.r_at_rows);
        out.scaled = scale_columns(XL, out.library.labels());
        return 0;
    });
    if (persist) {
        stage("persist", [&] {
            write_json(run_dir / "library.json", library_json(library, out.scaled));
            return 0;
        });
    }

    stage("milp", [&] {
        out.hyperparams = settings.resolve(out.residuals, out.library.size());
        const MilpProblem problem = assemble(out.residuals, out.scaled, out.hyperparams);
        if (persist) {
            export_lp(problem, run_dir / "problem.lp");
        }
        out.solution = solve(problem, settings.milp);
        return 0;
    });
    if (persist) {
        stage("persist", [&] {
            json sol = to_json(out.solution);
            sol["hyperparams"] = to_json(out.hyperparams);
            write_json(run_dir / "solution.json", sol);
            return 0;
        });
    }

    stage("hybrid", [&] {
        out.hybrid = assemble_hybrid(fpm, out.library, out.solution, out.scaled.scales);
        return 0;
    });

    stage("evaluate", [&] {
        if (out.dataset.test.empty()) {
            out.report.identified_states = out.hybrid.active_states;
            out.report.truth_states = truth;
            out.report.identification_success = out.report.identified_states == truth;
        } else {
            out.report = evaluate(out.hybrid, out.dataset, truth);
        }
        return 0;
    });

    if (persist) {
        stage("persist", [&] {
            json hj = to_json(out.hybrid);
            write_json(run_dir / "hybrid.json", hj);
            json rep = to_json(out.report, fpm.state_names);
            rep["dominance_ratio"] = finite_or_null(out.dominance_ratio);
            rep["milp_status"] = to_string(out.solution.status);
            write_json(run_dir / "report.json", rep);
            write_predictions(run_dir / "predictions", out);
            return 0;
        });
    }
    return out;
}

RunResult rerun(const std::filesystem::path& run_config, const std::filesystem::path& run_dir)
{
    const json rc = read_json(run_config);
    if (!rc.contains("campaign") || !rc.contains("library") || !rc.contains("settings")) {
        throw ConfigError(run_config.string() + ": expected campaign, library and settings");
    }
    return run_identification(campaign_from_json(rc.at("campaign")),
                              library_spec_from_json(rc.at("library")),
                              settings_from_json(rc.at("settings")),
                              run_dir);
}

std::string to_string(SweepKind kind)
{
    switch (kind) {
    case SweepKind::noise:
        return "noise";
    case SweepKind::batches:
        return "batches";
    case SweepKind::timesamples:
        return "timesamples";
    case SweepKind::lambda:
        return "lambda";
    }
    return "unknown";
}

SweepKind sweep_kind_from_string(const std::string& s)
{
    for (SweepKind k : {SweepKind::noise, SweepKind::batches, SweepKind::timesamples, SweepKind::lambda}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw ConfigError("unknown sweep kind '" + s + "'");
}

void SweepSpec::validate() const
{
    if (levels.empty() && kind != SweepKind::lambda) {
        throw ConfigError("sweep needs at least one level");
    }
    if (replicates < 1) {
        throw ConfigError("sweep needs replicates >= 1");
    }
    for (double v : levels) {
        if (!std::isfinite(v)) {
            throw ConfigError("sweep levels must be finite");
        }
        if ((kind == SweepKind::batches || kind == SweepKind::timesamples) && v != std::floor(v)) {
            throw ConfigError("batches and timesamples levels must be integers");
        }
    }
    settings.validate();
}

SweepSpec sweep_spec_from_json(const json& j)
{
    SweepSpec s;
    try {
        s.kind = sweep_kind_from_string(j.at("sweep").get<std::string>());
        if (j.contains("levels")) {
            s.levels = j.at("levels").get<std::vector<double>>();
        }
        if (j.contains("base")) {
            s.base = campaign_from_json(j.at("base"));
        }
        if (j.contains("targets")) {
            const auto& t = j.at("targets");
            if (t.is_string()) {
                if (t.get<std::string>() != "all") {
                    s.targets = {t.get<std::string>()};
                }
            } else {
                s.targets = t.get<std::vector<std::string>>();
            }
        }
        s.replicates = j.value("replicates", s.replicates);
        if (j.contains("settings")) {
            s.settings = settings_from_json(j.at("settings"));
        }
        if (j.contains("library")) {
            s.library = library_spec_from_json(j.at("library"));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::uint64_t cell_seed(std::uint64_t base_seed, double level, const std::string& target, int replicate)
{
    std::uint64_t level_bits = 0;
    static_assert(sizeof level_bits == sizeof level);
    std::memcpy(&level_bits, &level, sizeof level);
    // FNV-1a keeps the target hash identical across standard libraries.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : target) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = derive_seed(base_seed, level_bits);
    s = derive_seed(s, h);
    return derive_seed(s, static_cast<std::uint64_t>(replicate));
}

int workers_from_env()
{
    const char* v = std::getenv("SINDYBRID_WORKERS");
    if (!v) {
        return 1;
    }
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) {
        return 1;
    }
    return static_cast<int>(std::min<long>(n, 256));
}

namespace {

std::string format_level(double v)
{
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

std::string state_list(const std::set<std::size_t>& s, const std::vector<std::string>& names)
{
    std::string out;
    for (std::size_t k : s) {
        if (!out.empty()) {
            out += ";";
        }
        out += names[k];
    }
    return out;
}

} // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec_in, const SweepOptions& options)
{
    SweepSpec spec = spec_in;
    if (spec.kind == SweepKind::lambda && spec.levels.empty()) {
        spec.levels = {0.5, 1.0, 2.0, 3.0, 5.0, 10.0};
    }
    spec.validate();
    const CaseModel cm = make_case(spec.base.case_id, spec.base.params);
    std::vector<std::string> targets = spec.targets;
    if (targets.empty()) {
        for (const auto& [state, dev] : cm.catalog) {
            targets.push_back(cm.system.state_names[state]);
        }
    }
    const LibrarySpec lib = spec.library ? *spec.library : default_library(spec.base.case_id);

    struct Cell {
        double level;
        std::string target;
        int replicate;
    };
    std::vector<Cell> cells;
    for (double level : spec.levels) {
        for (const auto& t : targets) {
            for (int r = 0; r < spec.replicates; ++r) {
                cells.push_back({level, t, r});
            }
        }
    }
    std::vector<SweepRow> rows(cells.size());

    auto run_cell = [&](std::size_t idx) {
        const Cell& c = cells[idx];
        SweepRow row;
        row.case_id = spec.base.case_id;
        row.kind = spec.kind;
        row.level = c.level;
        row.target = c.target;
        row.replicate = c.replicate;
        CampaignConfig cfg = spec.base;
        cfg.deviation_target = c.target == "none" ? std::string{} : c.target;
        IdentificationSettings settings = spec.settings;
        switch (spec.kind) {
        case SweepKind::noise:
            cfg.noise_level = c.level;
            break;
        case SweepKind::batches:
            cfg.n_train = static_cast<int>(c.level);
            break;
        case SweepKind::timesamples:
            cfg.n_t = static_cast<int>(c.level);
            break;
        case SweepKind::lambda:
            settings.lambda = c.level;
            break;
        }
        cfg.seed = cell_seed(spec.base.seed, c.level, c.target, c.replicate);
        row.seed = cfg.seed;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        try {
            std::filesystem::path dir;
            if (!options.runs_dir.empty()) {
                dir = options.runs_dir / (to_string(spec.kind) + "_" + format_level(c.level) + "_" + c.target + "_r" +
                                          std::to_string(c.replicate));
            }
            const RunResult res = run_identification(cfg, lib, settings, dir);
            row.success = res.report.identification_success;
            row.r2_train = res.report.train.defined ? res.report.train.r2_avg : nan;
            row.r2_test = res.report.test.defined ? res.report.test.r2_avg : nan;
            row.mae_train = res.report.train.defined ? res.report.train.mae_avg : nan;
            row.mae_test = res.report.test.defined ? res.report.test.mae_avg : nan;
            row.status = to_string(res.solution.status);
            if (res.report.integration_failures > 0) {
                row.status += "+integration_failures";
            }
            row.identified = state_list(res.report.identified_states, cm.system.state_names);
        } catch (const StageError& e) {
            row.success = false;
            row.r2_train = row.r2_test = row.mae_train = row.mae_test = nan;
            row.status = "error:" + e.stage();
        } catch (const std::exception&) {
            row.success = false;
            row.r2_train = row.r2_test = row.mae_train = row.mae_test = nan;
            row.status = "error:unknown";
        }
        rows[idx] = std::move(row);
    };

    const int workers = std::max(1, options.workers > 0 ? options.workers : workers_from_env());
    if (workers == 1 || cells.size() < 2) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            run_cell(k);
        }
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), cells.size());
    for (std::size_t w = 0; w < n; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < cells.size(); k = next++) {
                run_cell(k);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    return rows;
}

std::string sweep_csv_header()
{
    return "case,sweep,level,target,replicate,success,r2_train,r2_test,mae_train,mae_test,status";
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os.precision(10);
    os << sweep_csv_header() << "\n";
    auto num = [&os](double v) {
        if (std::isfinite(v)) {
            os << v;
        } else {
            os << "nan";
        }
    };
    for (const auto& r : rows) {
        os << r.case_id << "," << to_string(r.kind) << "," << format_level(r.level) << "," << r.target << ","
           << r.replicate << "," << (r.success ? 1 : 0) << ",";
        num(r.r2_train);
        os << ",";
        num(r.r2_test);
        os << ",";
        num(r.mae_train);
        os << ",";
        num(r.mae_test);
        os << "," << r.status << "\n";
    }
    return os.str();
}

std::vector<LevelSummary> summarize(const std::vector<SweepRow>& rows)
{
    std::vector<LevelSummary> out;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const LevelSummary& s) { return s.level == r.level; });
        if (it == out.end()) {
            out.push_back(LevelSummary{r.level, 0, 0, true, 0.0, 0.0});
            it = out.end() - 1;
        }
        ++it->runs;
        it->successes += r.success ? 1 : 0;
        it->level_success = it->level_success && r.success;
    }
    for (auto& s : out) {
        double r2 = 0.0, mae = 0.0;
        int n = 0;
        for (const auto& r : rows) {
            if (r.level == s.level && std::isfinite(r.r2_test) && std::isfinite(r.mae_test)) {
                r2 += r.r2_test;
                mae += r.mae_test;
                ++n;
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.r2_test_mean = n ? r2 / n : nan;
        s.mae_test_mean = n ? mae / n : nan;
    }
    return out;
}

std::vector<ResidualDistributionRow> residual_distribution_report(const std::string& case_id,
                                                                  const std::string& deviation_target,
                                                                  const std::vector<double>& noise_levels,
                                                                  const std::vector<std::uint64_t>& seeds,
                                                                  CampaignConfig base)
{
    if (noise_levels.empty() || seeds.empty()) {
        throw UsageError("residual_distribution_report: need noise levels and seeds");
    }
    const CaseModel cm = make_case(case_id, base.params);
    std::optional<std::size_t> dev;
    if (!deviation_target.empty() && deviation_target != "none") {
        dev = cm.system.state_index(deviation_target);
        if (!dev) {
            throw ConfigError("unknown deviation target '" + deviation_target + "'");
        }
    }
    base.case_id = case_id;
    base.deviation_target = dev ? deviation_target : std::string{};
    const auto ns = static_cast<Eigen::Index>(cm.system.num_states());

    std::vector<ResidualDistributionRow> out;
    for (double noise : noise_levels) {
        ResidualDistributionRow row;
        row.noise = noise;
        row.mean = Vector::Zero(ns);
        row.stddev = Vector::Zero(ns);
        row.std_error = Vector::Zero(ns);
        for (std::uint64_t seed : seeds) {
            CampaignConfig c = base;
            c.noise_level = noise;
            c.seed = seed;
            const Dataset d = build_dataset(c);
            const ResidualMatrix H = residual_matrix(d.train, cm.system);
            const Vector sd = column_stddevs(H.H);
            row.mean += column_means(H.H);
            row.stddev += sd;
            row.std_error += sd / std::sqrt(static_cast<double>(std::max<Eigen::Index>(H.rows(), 1)));
        }
        const double n = static_cast<double>(seeds.size());
        row.mean /= n;
        row.stddev /= n;
        row.std_error /= n;
        row.dominance_ratio = dev ? dominance_ratio(row.mean, *dev) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(row));
    }
    return out;
}

std::string residual_report_csv(const std::vector<ResidualDistributionRow>& rows,
                                const std::vector<std::string>& names)
{
    std::ostringstream os;
    os.precision(10);
    os << "noise";
    for (const auto& n : names) {
        os << ",mean_" << n;
    }
    for (const auto& n : names) {
        os << ",std_" << n;
    }
    os << ",dominance\n";
    for (const auto& r : rows) {
        os << r.noise;
        for (Eigen::Index k = 0; k < r.mean.size(); ++k) {
            os << "," << r.mean[k];
        }
        for (Eigen::Index k = 0; k < r.stddev.size(); ++k) {
            os << "," << r.stddev[k];
        }
        os << ",";
        if (std::isfinite(r.dominance_ratio)) {
            os << r.dominance_ratio;
        } else {
            os << (std::isinf(r.dominance_ratio) ? "inf" : "nan");
        }
        os << "\n";
    }
    return os.str();
}

} // namespace sindybrid
