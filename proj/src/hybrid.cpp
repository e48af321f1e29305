#include "sindybrid/hybrid.hpp"

#include "sindybrid/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

namespace sindybrid {

Vector HybridModel::correction(const Vector& x, const Vector& r) const
{
    Vector c = Vector::Zero(static_cast<Eigen::Index>(fpm.num_states()));
    const auto& fns = library.functions();
    for (std::size_t i = 0; i < fns.size(); ++i) {
        double phi = 0.0;
        bool evaluated = false;
        for (std::size_t j : active_states) {
            const double xi = Xi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (xi == 0.0) {
                continue;
            }
            if (!evaluated) {
                phi = fns[i].eval(x, r) / scales[static_cast<Eigen::Index>(i)];
                evaluated = true;
            }
            c[static_cast<Eigen::Index>(j)] += xi * phi;
        }
    }
    return c;
}

Vector HybridModel::rhs(const Vector& x, const Vector& r) const
{
    if (active_states.empty()) {
        return fpm.rhs(x, r);
    }
    return fpm.rhs(x, r) + correction(x, r);
}

OdeSystem HybridModel::as_system() const
{
    OdeSystem sys = fpm;
    sys.name = fpm.name + "+correction";
    auto self = std::make_shared<const HybridModel>(*this);
    sys.rhs = [self](const Vector& x, const Vector& r) { return self->rhs(x, r); };
    return sys;
}

double HybridModel::coefficient(std::size_t i, std::size_t j) const
{
    return Xi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / scales[static_cast<Eigen::Index>(i)];
}

namespace {

std::string format_coefficient(double c)
{
    char buf[64];
    const double a = std::abs(c);
    if (a >= 1e-3 && a < 1e4) {
        std::snprintf(buf, sizeof buf, "%.3f", a);
    } else {
        std::snprintf(buf, sizeof buf, "%.3e", a);
    }
    return buf;
}

} // namespace

std::vector<std::string> HybridModel::correction_text() const
{
    std::vector<std::string> out;
    const auto labels = library.labels();
    for (std::size_t j : active_states) {
        std::ostringstream os;
        os << "d" << fpm.state_names[j] << "/dt +=";
        bool first = true;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double c = coefficient(i, j);
            if (c == 0.0) {
                continue;
            }
            const std::string mag = format_coefficient(c);
            if (first) {
                os << " " << (c < 0 ? "-" : "") << mag;
            } else {
                os << (c < 0 ? " - " : " + ") << mag;
            }
            if (labels[i] != "1") {
                os << "*" << labels[i];
            }
            first = false;
        }
        if (first) {
            os << " 0";
        }
        out.push_back(os.str());
    }
    return out;
}

std::set<std::size_t> identified_locations(const MilpSolution& solution)
{
    std::set<std::size_t> out;
    if (!solution.has_solution) {
        return out;
    }
    for (Eigen::Index j = 0; j < solution.Delta.size(); ++j) {
        if (solution.Delta[j] == 1 && solution.Xi.col(j).cwiseAbs().maxCoeff() > kActiveThreshold) {
            out.insert(static_cast<std::size_t>(j));
        }
    }
    return out;
}

HybridModel assemble_hybrid(const OdeSystem& fpm,
                            const Library& library,
                            const MilpSolution& solution,
                            const Vector& scales)
{
    HybridModel hm;
    hm.fpm = fpm;
    hm.library = library;
    hm.scales = scales;
    hm.Xi = solution.has_solution ? solution.Xi
                                  : Matrix::Zero(static_cast<Eigen::Index>(library.size()),
                                                 static_cast<Eigen::Index>(fpm.num_states()));
    if (hm.Xi.rows() != static_cast<Eigen::Index>(library.size()) ||
        hm.Xi.cols() != static_cast<Eigen::Index>(fpm.num_states()) ||
        scales.size() != static_cast<Eigen::Index>(library.size())) {
        throw UsageError("assemble_hybrid: coefficient matrix does not match library and model");
    }
    hm.active_states = identified_locations(solution);
    return hm;
}

double r2_score(const Vector& observed, const Vector& predicted)
{
    const double mean = observed.mean();
    const double ss_res = (observed - predicted).squaredNorm();
    const double ss_tot = (observed.array() - mean).square().sum();
    if (ss_tot == 0.0) {
        return ss_res == 0.0 ? 1.0 : 0.0;
    }
    return 1.0 - ss_res / ss_tot;
}

double mean_absolute_error(const Vector& observed, const Vector& predicted)
{
    if (observed.size() == 0) {
        return 0.0;
    }
    return (observed - predicted).cwiseAbs().mean();
}

Metrics compute_metrics(const std::vector<Matrix>& observed, const std::vector<Matrix>& predicted)
{
    if (observed.size() != predicted.size()) {
        throw UsageError("compute_metrics: observation and prediction counts differ");
    }
    Metrics m;
    Eigen::Index rows = 0;
    Eigen::Index ns = -1;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (observed[k].rows() != predicted[k].rows() || observed[k].cols() != predicted[k].cols()) {
            throw UsageError("compute_metrics: observation and prediction shapes differ");
        }
        if (ns >= 0 && observed[k].cols() != ns) {
            throw UsageError("compute_metrics: inconsistent state counts");
        }
        ns = observed[k].cols();
        rows += observed[k].rows();
    }
    if (rows == 0 || ns <= 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        m.r2 = Vector::Constant(std::max<Eigen::Index>(ns, 0), nan);
        m.mae = m.r2;
        m.r2_avg = nan;
        m.mae_avg = nan;
        return m;
    }
    Matrix O(rows, ns), P(rows, ns);
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        O.middleRows(at, observed[k].rows()) = observed[k];
        P.middleRows(at, observed[k].rows()) = predicted[k];
        at += observed[k].rows();
    }
    m.r2.resize(ns);
    m.mae.resize(ns);
    for (Eigen::Index j = 0; j < ns; ++j) {
        m.r2[j] = r2_score(O.col(j), P.col(j));
        m.mae[j] = mean_absolute_error(O.col(j), P.col(j));
    }
    m.r2_avg = m.r2.mean();
    m.mae_avg = m.mae.mean();
    m.defined = true;
    return m;
}

namespace {

Metrics score(const OdeSystem& sys,
              const std::vector<Trajectory>& experiments,
              const IntegrateOptions& io,
              int& failures,
              std::vector<Matrix>* predictions)
{
    std::vector<Matrix> obs;
    std::vector<Matrix> pred;
    for (const auto& e : experiments) {
        const Vector x0 = e.X.row(0).transpose();
        try {
            Trajectory p = integrate(sys, nullptr, x0, e.r, e.t, io);
            obs.push_back(e.X);
            pred.push_back(p.X);
            if (predictions) {
                predictions->push_back(p.X);
            }
        } catch (const IntegrationError&) {
            ++failures;
            if (predictions) {
                predictions->emplace_back();
            }
        } catch (const NumericDomainError&) {
            ++failures;
            if (predictions) {
                predictions->emplace_back();
            }
        }
    }
    return compute_metrics(obs, pred);
}

} // namespace

EvalReport evaluate(const HybridModel& model,
                    const Dataset& dataset,
                    const std::set<std::size_t>& truth_states,
                    const EvaluateOptions& options)
{
    if (dataset.test.empty()) {
        throw UsageError("evaluate: the dataset has no test experiments");
    }
    EvalReport rep;
    rep.identified_states = model.active_states;
    rep.truth_states = truth_states;
    rep.identification_success = rep.identified_states == rep.truth_states;

    IntegrateOptions io;
    io.rel_tol = options.rel_tol;
    io.abs_tol = options.abs_tol;
    const OdeSystem sys = model.as_system();
    rep.train = score(sys, dataset.train, io, rep.train_integration_failures, nullptr);
    rep.test = score(sys, dataset.test, io, rep.integration_failures, &rep.test_predictions);
    if (!rep.test.defined) {
        rep.test.r2 = Vector::Constant(static_cast<Eigen::Index>(model.fpm.num_states()),
                                       std::numeric_limits<double>::quiet_NaN());
        rep.test.mae = rep.test.r2;
    }
    return rep;
}

} // namespace sindybrid
