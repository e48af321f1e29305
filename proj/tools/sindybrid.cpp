#include "sindybrid/cases.hpp"
#include "sindybrid/error.hpp"
#include "sindybrid/harness.hpp"
#include "sindybrid/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace sindybrid;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << text;
}

void print_run(const RunResult& r)
{
    const auto& names = r.hybrid.fpm.state_names;
    std::string ident, truth;
    for (auto k : r.report.identified_states) {
        ident += (ident.empty() ? "" : ",") + names[k];
    }
    for (auto k : r.report.truth_states) {
        truth += (truth.empty() ? "" : ",") + names[k];
    }
    std::printf("milp: %s, objective %.6g, %ld nodes\n",
                to_string(r.solution.status).c_str(),
                r.solution.objective,
                r.solution.nodes);
    std::printf("identified {%s}, truth {%s}: %s\n",
                ident.c_str(),
                truth.c_str(),
                r.report.identification_success ? "success" : "failure");
    for (const auto& line : r.hybrid.correction_text()) {
        std::printf("  %s\n", line.c_str());
    }
    if (r.report.train.defined) {
        std::printf("train R2 %.4f  MAE %.4g\n", r.report.train.r2_avg, r.report.train.mae_avg);
    }
    if (r.report.test.defined) {
        std::printf("test  R2 %.4f  MAE %.4g\n", r.report.test.r2_avg, r.report.test.mae_avg);
    }
    if (r.report.integration_failures > 0) {
        std::printf("test integration failures: %d\n", r.report.integration_failures);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse identification of hybrid-model corrections"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "identify one campaign and evaluate the hybrid model");
    CampaignConfig cfg;
    IdentificationSettings settings;
    std::string deviation = "none";
    std::string library_path, params_path, config_path, out_dir;
    double ub = 0.0;
    int k_alpha = -1, k_delta = -1;
    run->add_option("--case", cfg.case_id, "meerwein | fermentation | lotka")->check(CLI::IsMember(case_ids()));
    run->add_option("--deviation", deviation, "deviated state or none");
    run->add_option("--noise", cfg.noise_level, "multiplicative noise level")->check(CLI::Range(0.0, 0.4));
    run->add_option("--train", cfg.n_train, "training experiments");
    run->add_option("--test", cfg.n_test, "test experiments");
    run->add_option("--nt", cfg.n_t, "time samples per experiment");
    run->add_option("--horizon", cfg.horizon, "experiment length (default: case horizon)");
    run->add_option("--lambda", settings.lambda, "sparsity weight");
    run->add_option("--box-factor", settings.box_factor, "automatic box = factor * max |mean(h)|");
    run->add_option("--ub", ub, "explicit symmetric coefficient box (scaled units)");
    run->add_option("--K-alpha", k_alpha, "max active library terms");
    run->add_option("--K-delta", k_delta, "max corrected state equations");
    run->add_option("--seed", cfg.seed, "campaign seed");
    run->add_option("--library", library_path, "library spec JSON (default: case library)");
    run->add_option("--params", params_path, "parameter overrides JSON");
    run->add_option("--config", config_path, "repeat a persisted run_config.json");
    run->add_option("--out", out_dir, "run directory");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep from a JSON spec");
    std::string spec_path, sweep_out;
    int workers = 0;
    bool keep_runs = false;
    sweep->add_option("--spec", spec_path, "sweep spec JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_out, "output directory")->required();
    sweep->add_option("--workers", workers, "worker threads (default: SINDYBRID_WORKERS or 1)");
    sweep->add_flag("--keep-runs", keep_runs, "persist every cell's run directory");

    // analyze-h
    auto* an = app.add_subcommand("analyze-h", "residual column statistics across noise levels");
    std::string an_case = "meerwein", an_dev = "none", an_out;
    std::vector<double> an_levels{0.0, 0.05, 0.1, 0.2, 0.3, 0.4};
    int an_seeds = 3;
    std::uint64_t an_seed = 1;
    CampaignConfig an_base;
    an->add_option("--case", an_case)->check(CLI::IsMember(case_ids()));
    an->add_option("--deviation", an_dev, "deviated state or none");
    an->add_option("--noise-levels", an_levels)->delimiter(',');
    an->add_option("--seeds", an_seeds, "number of seeds averaged per level")->check(CLI::PositiveNumber);
    an->add_option("--seed", an_seed, "first seed");
    an->add_option("--train", an_base.n_train);
    an->add_option("--nt", an_base.n_t);
    an->add_option("--out", an_out, "CSV output (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            RunResult r;
            if (!config_path.empty()) {
                r = rerun(config_path, out_dir);
            } else {
                cfg.deviation_target = deviation == "none" ? std::string{} : deviation;
                if (!params_path.empty()) {
                    cfg.params = load_params(params_path);
                }
                if (run->count("--ub")) {
                    settings.ub = std::abs(ub);
                    settings.lb = -std::abs(ub);
                }
                if (k_alpha >= 0) {
                    settings.K_alpha = k_alpha;
                }
                if (k_delta >= 0) {
                    settings.K_delta = k_delta;
                }
                const LibrarySpec lib =
                    library_path.empty() ? default_library(cfg.case_id) : load_library_spec(library_path);
                r = run_identification(cfg, lib, settings, out_dir);
            }
            print_run(r);
            if (!out_dir.empty()) {
                std::printf("results in %s\n", out_dir.c_str());
            }
        } else if (*sweep) {
            const SweepSpec spec = sweep_spec_from_json(read_json(spec_path));
            SweepOptions opts;
            opts.workers = workers;
            if (keep_runs) {
                opts.runs_dir = fs::path(sweep_out) / "runs";
            }
            const auto rows = run_sweep(spec, opts);
            write_text(fs::path(sweep_out) / "sweep.csv", sweep_csv(rows));
            std::string summary = "level,runs,successes,level_success,r2_test_mean,mae_test_mean\n";
            for (const auto& s : summarize(rows)) {
                char buf[256];
                std::snprintf(buf, sizeof buf, "%.10g,%d,%d,%d,%.6g,%.6g\n", s.level, s.runs, s.successes,
                              s.level_success ? 1 : 0, s.r2_test_mean, s.mae_test_mean);
                summary += buf;
                std::printf("level %-8.4g success %d/%d  test R2 %.4f  MAE %.4g\n", s.level, s.successes, s.runs,
                            s.r2_test_mean, s.mae_test_mean);
            }
            write_text(fs::path(sweep_out) / "summary.csv", summary);
        } else if (*an) {
            std::vector<std::uint64_t> seeds;
            for (int k = 0; k < an_seeds; ++k) {
                seeds.push_back(an_seed + static_cast<std::uint64_t>(k));
            }
            const auto rows = residual_distribution_report(an_case, an_dev, an_levels, seeds, an_base);
            const std::string csv = residual_report_csv(rows, make_case(an_case).system.state_names);
            if (an_out.empty()) {
                std::cout << csv;
            } else {
                write_text(an_out, csv);
            }
        }
    } catch (const StageError& e) {
        std::fprintf(stderr, "error in stage %s: %s\n", e.stage().c_str(), e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
