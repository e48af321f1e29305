#include "sindybrid/ode.hpp"

#include "sindybrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sindybrid {

std::optional<std::size_t> OdeSystem::state_index(const std::string& state) const
{
    auto it = std::find(state_names.begin(), state_names.end(), state);
    if (it == state_names.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - state_names.begin());
}

Vector DeviationSpec::operator()(const Vector& x, const Vector& r) const
{
    Vector out = dev(x, r);
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        if (!target_states.contains(static_cast<std::size_t>(j))) {
            out[j] = 0.0;
        }
    }
    return out;
}

Vector eval_rhs(const OdeSystem& system, const Vector& x, const Vector& r)
{
    if (static_cast<std::size_t>(x.size()) != system.num_states()) {
        std::ostringstream msg;
        msg << system.name << ": state vector has " << x.size() << " entries, expected "
            << system.num_states();
        throw UsageError(msg.str());
    }
    if (static_cast<std::size_t>(r.size()) != system.num_run_conditions()) {
        std::ostringstream msg;
        msg << system.name << ": run-condition vector has " << r.size() << " entries, expected "
            << system.num_run_conditions();
        throw UsageError(msg.str());
    }
    Vector dx = system.rhs(x, r);
    if (static_cast<std::size_t>(dx.size()) != system.num_states()) {
        throw UsageError(system.name + ": rhs returned a vector of the wrong length");
    }
    for (Eigen::Index j = 0; j < dx.size(); ++j) {
        if (!std::isfinite(dx[j])) {
            const std::string eq = "d" + system.state_names[static_cast<std::size_t>(j)] + "/dt";
            throw NumericDomainError(system.name + ": non-finite value in equation " + eq, eq);
        }
    }
    return dx;
}

OdeSystem with_deviation(const OdeSystem& system, const DeviationSpec& deviation)
{
    OdeSystem out = system;
    out.name = system.name + "+deviation";
    out.rhs = [f = system.rhs, deviation](const Vector& x, const Vector& r) -> Vector {
        return f(x, r) + deviation(x, r);
    };
    return out;
}

Vector linspace(double t0, double t1, Eigen::Index n)
{
    if (n < 2) {
        throw UsageError("linspace needs at least two points");
    }
    Vector t(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        t[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    t[n - 1] = t1;
    return t;
}

namespace {

// Dormand-Prince 5(4) tableau with Hairer's dense-output coefficients.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

class Stepper {
public:
    Stepper(const OdeSystem& system, const DeviationSpec* deviation, const Vector& r)
        : system_(system), deviation_(deviation), r_(r) {}

    Vector f(const Vector& x) const
    {
        Vector dx = eval_rhs(system_, x, r_);
        if (deviation_ != nullptr) {
            Vector h = (*deviation_)(x, r_);
            for (Eigen::Index j = 0; j < h.size(); ++j) {
                if (!std::isfinite(h[j])) {
                    const std::string eq =
                        "d" + system_.state_names[static_cast<std::size_t>(j)] + "/dt (deviation)";
                    throw NumericDomainError("non-finite deviation in " + eq, eq);
                }
            }
            dx += h;
        }
        return dx;
    }

private:
    const OdeSystem& system_;
    const DeviationSpec* deviation_;
    const Vector& r_;
};

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const IntegrateOptions& o)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sk = o.abs_tol + o.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = err[i] / sk;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

// Starting step following Hairer, Norsett & Wanner (II.4).
double initial_step(const Stepper& stepper, double t0, const Vector& y0, const Vector& f0,
                    double span, const IntegrateOptions& o)
{
    Vector sk = (o.abs_tol + o.rel_tol * y0.array().abs()).matrix();
    const double n = static_cast<double>(y0.size());
    const double d0 = std::sqrt((y0.array() / sk.array()).square().sum() / n);
    const double dd1 = std::sqrt((f0.array() / sk.array()).square().sum() / n);
    double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h0 = std::min(h0, span);
    Vector y1 = y0 + h0 * f0;
    Vector f1 = stepper.f(y1);
    const double dd2 = std::sqrt(((f1 - f0).array() / sk.array()).square().sum() / n) / h0;
    const double dmax = std::max(dd1, dd2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    (void)t0;
    return std::min({100.0 * h0, h1, span});
}

} // namespace

Trajectory integrate(const OdeSystem& system,
                     const DeviationSpec* deviation,
                     const Vector& x0,
                     const Vector& r,
                     const Vector& t_grid,
                     const IntegrateOptions& options)
{
    if (t_grid.size() < 1) {
        throw UsageError("integrate: empty time grid");
    }
    for (Eigen::Index k = 1; k < t_grid.size(); ++k) {
        if (!(t_grid[k] > t_grid[k - 1])) {
            throw UsageError("integrate: time grid must be strictly increasing");
        }
    }
    if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0)) {
        throw UsageError("integrate: tolerances must be positive");
    }
    if (static_cast<std::size_t>(x0.size()) != system.num_states()) {
        throw UsageError("integrate: initial state has wrong dimension");
    }
    if (static_cast<std::size_t>(r.size()) != system.num_run_conditions()) {
        throw UsageError("integrate: run-condition vector has wrong dimension");
    }

    const Eigen::Index ns = x0.size();
    Trajectory out;
    out.t = t_grid;
    out.r = r;
    out.X.resize(t_grid.size(), ns);
    out.X.row(0) = x0.transpose();
    if (t_grid.size() == 1) {
        return out;
    }

    Stepper stepper(system, deviation, r);
    const double t_end = t_grid[t_grid.size() - 1];
    double t = t_grid[0];
    Vector y = x0;
    Vector k1;
    try {
        k1 = stepper.f(y);
    } catch (const NumericDomainError& e) {
        throw IntegrationError(std::string("integrate: ") + e.what(), t);
    }
    double h = initial_step(stepper, t, y, k1, t_end - t, options);
    Eigen::Index next = 1;
    std::size_t steps = 0;

    Vector k2, k3, k4, k5, k6, k7, y1, ytmp, err;
    while (next < t_grid.size()) {
        if (++steps > options.max_steps) {
            throw IntegrationError("integrate: step budget exhausted", t);
        }
        const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < h_min) {
            throw IntegrationError("integrate: step size underflow", t);
        }
        h = std::min(h, t_end - t);

        bool domain_failure = false;
        try {
            ytmp = y + h * a21 * k1;
            k2 = stepper.f(ytmp);
            ytmp = y + h * (a31 * k1 + a32 * k2);
            k3 = stepper.f(ytmp);
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            k4 = stepper.f(ytmp);
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            k5 = stepper.f(ytmp);
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            k6 = stepper.f(ytmp);
            y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            k7 = stepper.f(y1);
        } catch (const NumericDomainError&) {
            domain_failure = true;
        }
        if (domain_failure || !y1.allFinite()) {
            h *= 0.25;
            continue;
        }

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, y, y1, options);
        if (!std::isfinite(en)) {
            h *= 0.25;
            continue;
        }
        if (en > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            continue;
        }

        const double t_new = (t_end - (t + h) <= 1e-13 * std::max(1.0, std::abs(t_end))) ? t_end : t + h;
        // Dense output on [t, t_new].
        const Vector ydiff = y1 - y;
        const Vector bspl = h * k1 - ydiff;
        const Vector rc4 = ydiff - h * k7 - bspl;
        const Vector rc5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next < t_grid.size() && t_grid[next] <= t_new) {
            if (t_grid[next] == t_new) {
                out.X.row(next) = y1.transpose();
            } else {
                const double theta = (t_grid[next] - t) / h;
                const double theta1 = 1.0 - theta;
                out.X.row(next) =
                    (y + theta * (ydiff + theta1 * (bspl + theta * (rc4 + theta1 * rc5)))).transpose();
            }
            ++next;
        }

        t = t_new;
        y = y1;
        k1 = k7;
        if (y.cwiseAbs().maxCoeff() > options.blowup_threshold) {
            throw IntegrationError("integrate: state blow-up", t);
        }
        const double fac = en == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 10.0);
        h *= fac;
    }
    return out;
}

} // namespace sindybrid
