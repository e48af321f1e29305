#include "sindybrid/datagen.hpp"

#include "sindybrid/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

namespace sindybrid {

namespace {

// Portable draws on top of mt19937_64 (the std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

std::string format_vector(const Vector& v)
{
    std::ostringstream out;
    out << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << (i ? ", " : "") << v[i];
    }
    out << ')';
    return out.str();
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void CampaignConfig::validate() const
{
    if (n_train < 2) {
        throw ConfigError("campaign needs n_train >= 2");
    }
    if (n_test < 0) {
        throw ConfigError("campaign needs n_test >= 0");
    }
    if (n_t < 5) {
        throw ConfigError("campaign needs n_t >= 5");
    }
    if (!(noise_level >= 0.0) || noise_level > 0.4 + 1e-12) {
        throw ConfigError("noise level must lie in [0, 0.4]");
    }
}

std::vector<Vector> latin_hypercube(const std::vector<std::pair<double, double>>& bounds,
                                    int n,
                                    std::uint64_t seed)
{
    if (n < 1) {
        throw UsageError("latin_hypercube: n must be >= 1");
    }
    for (const auto& [lo, hi] : bounds) {
        if (!(lo < hi)) {
            throw UsageError("latin_hypercube: degenerate bounds");
        }
    }
    const auto dims = static_cast<Eigen::Index>(bounds.size());
    std::vector<Vector> points(static_cast<std::size_t>(n), Vector(dims));
    Rng rng(seed);
    std::vector<int> strata(static_cast<std::size_t>(n));
    for (Eigen::Index d = 0; d < dims; ++d) {
        std::iota(strata.begin(), strata.end(), 0);
        rng.shuffle(strata);
        const auto [lo, hi] = bounds[static_cast<std::size_t>(d)];
        for (int k = 0; k < n; ++k) {
            const double u = (strata[static_cast<std::size_t>(k)] + rng.uniform01()) / n;
            points[static_cast<std::size_t>(k)][d] = std::min(lo + u * (hi - lo), hi);
        }
    }
    return points;
}

std::vector<Vector> sample_run_conditions(const std::vector<std::vector<double>>& levels,
                                          int n,
                                          std::uint64_t seed,
                                          bool with_replacement)
{
    if (n < 0) {
        throw UsageError("sample_run_conditions: n must be >= 0");
    }
    std::vector<Vector> grid(1, Vector(0));
    for (const auto& lv : levels) {
        if (lv.empty()) {
            throw ConfigError("sample_run_conditions: run condition without levels");
        }
        std::vector<Vector> next;
        for (const auto& cell : grid) {
            for (double v : lv) {
                Vector c(cell.size() + 1);
                c << cell, v;
                next.push_back(std::move(c));
            }
        }
        grid = std::move(next);
    }
    if (!with_replacement && static_cast<std::size_t>(n) > grid.size()) {
        std::ostringstream msg;
        msg << "cannot draw " << n << " run-condition cells without replacement from a grid of "
            << grid.size();
        throw ConfigError(msg.str());
    }
    Rng rng(seed);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(n));
    std::vector<std::size_t> order(grid.size());
    while (out.size() < static_cast<std::size_t>(n)) {
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t k = 0; k < order.size() && out.size() < static_cast<std::size_t>(n); ++k) {
            out.push_back(grid[order[k]]);
        }
    }
    return out;
}

Trajectory add_noise(const Trajectory& traj, double level, std::uint64_t seed)
{
    if (level < 0.0) {
        throw UsageError("add_noise: negative noise level");
    }
    Trajectory out = traj;
    if (level == 0.0) {
        return out;
    }
    Rng rng(seed);
    for (Eigen::Index i = 0; i < out.X.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.X.cols(); ++j) {
            out.X(i, j) *= 1.0 + rng.uniform(-level, level);
        }
    }
    return out;
}

Dataset build_dataset(const CampaignConfig& config)
{
    config.validate();
    const CaseModel cm = make_case(config.case_id, config.params);
    const auto ns = static_cast<Eigen::Index>(cm.system.num_states());

    const auto ic_bounds = config.ic_bounds.empty() ? cm.ic_bounds : config.ic_bounds;
    const auto levels = config.run_condition_levels.empty() ? cm.run_condition_levels
                                                            : config.run_condition_levels;
    if (ic_bounds.size() != cm.system.num_states()) {
        throw ConfigError("ic_bounds must have one entry per state");
    }
    if (levels.size() != cm.system.num_run_conditions()) {
        throw ConfigError("run_condition_levels must have one entry per run condition");
    }
    const double horizon = config.horizon > 0.0 ? config.horizon : cm.horizon;

    Dataset ds;
    ds.config = config;
    if (!config.deviation_target.empty() && config.deviation_target != "none") {
        const auto idx = cm.system.state_index(config.deviation_target);
        if (!idx || !cm.catalog.contains(*idx)) {
            throw ConfigError("unknown deviation target '" + config.deviation_target + "'");
        }
        ds.truth = cm.catalog.at(*idx);
    }

    const int total = config.n_train + config.n_test;

    std::vector<std::pair<double, double>> free_bounds;
    std::vector<Eigen::Index> free_dims;
    for (Eigen::Index j = 0; j < ns; ++j) {
        const auto [lo, hi] = ic_bounds[static_cast<std::size_t>(j)];
        if (lo > hi) {
            throw ConfigError("ic_bounds with lo > hi");
        }
        if (lo < hi) {
            free_bounds.emplace_back(lo, hi);
            free_dims.push_back(j);
        }
    }
    std::vector<Vector> ics(static_cast<std::size_t>(total), Vector(ns));
    for (int k = 0; k < total; ++k) {
        for (Eigen::Index j = 0; j < ns; ++j) {
            ics[static_cast<std::size_t>(k)][j] = ic_bounds[static_cast<std::size_t>(j)].first;
        }
    }
    if (!free_bounds.empty()) {
        const auto pts = latin_hypercube(free_bounds, total, derive_seed(config.seed, 1));
        for (int k = 0; k < total; ++k) {
            for (std::size_t d = 0; d < free_dims.size(); ++d) {
                ics[static_cast<std::size_t>(k)][free_dims[d]] =
                    pts[static_cast<std::size_t>(k)][static_cast<Eigen::Index>(d)];
            }
        }
    }

    std::size_t grid_size = 1;
    for (const auto& lv : levels) {
        grid_size *= lv.size();
    }
    const auto conditions = sample_run_conditions(levels, total, derive_seed(config.seed, 2),
                                                  static_cast<std::size_t>(total) > grid_size);

    const Vector t_grid = linspace(0.0, horizon, config.n_t);
    const DeviationSpec* truth = ds.truth ? &*ds.truth : nullptr;
    std::vector<Trajectory> clean;
    clean.reserve(static_cast<std::size_t>(total));
    for (int k = 0; k < total; ++k) {
        const auto& x0 = ics[static_cast<std::size_t>(k)];
        try {
            clean.push_back(integrate(cm.system, truth, x0, conditions[static_cast<std::size_t>(k)], t_grid));
        } catch (const IntegrationError& e) {
            std::ostringstream msg;
            msg << "ground-truth simulation failed for experiment " << k << " with x0 = " << format_vector(x0)
                << " and r = " << format_vector(conditions[static_cast<std::size_t>(k)]) << ": " << e.what()
                << " (last t = " << e.last_time() << ")";
            throw CampaignError(msg.str());
        }
    }

    std::vector<std::size_t> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    Rng(derive_seed(config.seed, 3)).shuffle(order);

    for (int k = 0; k < total; ++k) {
        const std::size_t src = order[static_cast<std::size_t>(k)];
        Trajectory noisy = add_noise(clean[src], config.noise_level, derive_seed(config.seed, 100 + src));
        if (k < config.n_train) {
            ds.train_clean.push_back(clean[src]);
            ds.train.push_back(std::move(noisy));
        } else {
            ds.test_clean.push_back(clean[src]);
            ds.test.push_back(std::move(noisy));
        }
    }

    // Bounding box of training ICs and run conditions.
    if (!ds.train.empty()) {
        const Eigen::Index dim = ns + static_cast<Eigen::Index>(levels.size());
        Vector lo = Vector::Constant(dim, std::numeric_limits<double>::infinity());
        Vector hi = -lo;
        auto point = [&](const Trajectory& tr) {
            Vector p(dim);
            p << tr.X.row(0).transpose(), tr.r;
            return p;
        };
        for (const auto& tr : ds.train_clean) {
            const Vector p = point(tr);
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        for (const auto& tr : ds.test_clean) {
            const Vector p = point(tr);
            ds.test_in_training_hull.push_back(((p - lo).array() >= 0.0).all() && ((hi - p).array() >= 0.0).all());
        }
    }
    return ds;
}

} // namespace sindybrid
