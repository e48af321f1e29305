#include "sindybrid/milp.hpp"

#include "sindybrid/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

namespace sindybrid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double Hyperparams::big_m() const
{
    return std::max(std::abs(ub), std::abs(lb));
}

double Hyperparams::lambda1_delta(int n_lib) const
{
    return lambda1_xi * big_m() * static_cast<double>(n_lib);
}

void Hyperparams::validate() const
{
    if (!(lambda1_xi >= 0.0) || !std::isfinite(lambda1_xi)) {
        throw UsageError("lambda1_xi must be finite and non-negative");
    }
    if (!(lb < 0.0) || !(ub > 0.0) || !std::isfinite(lb) || !std::isfinite(ub)) {
        throw UsageError("coefficient bounds must satisfy lb < 0 < ub");
    }
    if ((K_alpha && *K_alpha < 0) || (K_delta && *K_delta < 0)) {
        throw UsageError("cardinality limits must be non-negative");
    }
}

std::string to_string(MilpStatus status)
{
    switch (status) {
    case MilpStatus::optimal:
        return "optimal";
    case MilpStatus::gap_limit:
        return "gap-limit";
    case MilpStatus::infeasible:
        return "infeasible";
    case MilpStatus::node_limit:
        return "node-limit";
    }
    return "unknown";
}

bool MilpProblem::cardinality_redundant() const
{
    const bool ka = !hp.K_alpha || *hp.K_alpha >= n_lib * n_states;
    const bool kd = !hp.K_delta || *hp.K_delta >= n_states;
    return ka && kd;
}

MilpProblem assemble(const Matrix& H, const Matrix& XL_sc, const Hyperparams& hp)
{
    hp.validate();
    if (H.rows() == 0) {
        throw UsageError("assemble: the residual matrix has no rows");
    }
    if (H.rows() != XL_sc.rows()) {
        std::ostringstream msg;
        msg << "assemble: residual matrix has " << H.rows() << " rows but the library matrix has "
            << XL_sc.rows();
        throw UsageError(msg.str());
    }
    if (H.cols() == 0 || XL_sc.cols() == 0) {
        throw UsageError("assemble: empty state or library dimension");
    }

    MilpProblem p;
    p.rows = static_cast<int>(H.rows());
    p.n_lib = static_cast<int>(XL_sc.cols());
    p.n_states = static_cast<int>(H.cols());
    p.hp = hp;
    p.H = H;
    p.XL = XL_sc;
    const int R = p.rows, NL = p.n_lib, NS = p.n_states;
    const int nv = p.s() + 1;
    p.cost = Vector::Zero(nv);
    p.lower = Vector::Zero(nv);
    p.upper = Vector::Constant(nv, kInf);
    p.kind.assign(static_cast<std::size_t>(nv), VarKind::continuous);
    p.names.resize(static_cast<std::size_t>(nv));

    const double lam = hp.lambda1_xi;
    for (int i = 0; i < NL; ++i) {
        for (int j = 0; j < NS; ++j) {
            const auto si = std::to_string(i) + "_" + std::to_string(j);
            p.lower[p.xi(i, j)] = -kInf;
            p.names[static_cast<std::size_t>(p.xi(i, j))] = "xi_" + si;
            p.upper[p.alpha(i, j)] = 1.0;
            p.kind[static_cast<std::size_t>(p.alpha(i, j))] = VarKind::binary;
            p.names[static_cast<std::size_t>(p.alpha(i, j))] = "a_" + si;
            p.cost[p.z(i, j)] = lam;
            p.names[static_cast<std::size_t>(p.z(i, j))] = "z_" + si;
        }
    }
    for (int j = 0; j < NS; ++j) {
        p.upper[p.delta(j)] = 1.0;
        p.kind[static_cast<std::size_t>(p.delta(j))] = VarKind::binary;
        p.names[static_cast<std::size_t>(p.delta(j))] = "d_" + std::to_string(j);
        for (int r = 0; r < R; ++r) {
            p.cost[p.y(r, j)] = 1.0;
            p.names[static_cast<std::size_t>(p.y(r, j))] = "y_" + std::to_string(r) + "_" + std::to_string(j);
        }
    }
    p.upper[p.s()] = NS;
    p.kind[static_cast<std::size_t>(p.s())] = VarKind::integer;
    p.names[static_cast<std::size_t>(p.s())] = "s";
    p.cost[p.s()] = hp.lambda1_delta(NL);

    auto add = [&p](std::vector<std::pair<int, double>> coefs, RowSense sense, double rhs, int block) {
        p.constraints.push_back(MilpConstraint{std::move(coefs), sense, rhs, block});
    };

    // y >= h - XL xi  and  y >= -(h - XL xi)
    for (int j = 0; j < NS; ++j) {
        for (int r = 0; r < R; ++r) {
            std::vector<std::pair<int, double>> plus{{p.y(r, j), 1.0}};
            std::vector<std::pair<int, double>> minus{{p.y(r, j), 1.0}};
            for (int i = 0; i < NL; ++i) {
                const double a = XL_sc(r, i);
                if (a != 0.0) {
                    plus.emplace_back(p.xi(i, j), a);
                    minus.emplace_back(p.xi(i, j), -a);
                }
            }
            add(std::move(plus), RowSense::ge, H(r, j), j);
            add(std::move(minus), RowSense::ge, -H(r, j), j);
        }
    }
    for (int j = 0; j < NS; ++j) {
        for (int i = 0; i < NL; ++i) {
            add({{p.z(i, j), 1.0}, {p.xi(i, j), -1.0}}, RowSense::ge, 0.0, j);
            add({{p.z(i, j), 1.0}, {p.xi(i, j), 1.0}}, RowSense::ge, 0.0, j);
        }
    }
    for (int j = 0; j < NS; ++j) {
        for (int i = 0; i < NL; ++i) {
            add({{p.xi(i, j), 1.0}, {p.alpha(i, j), -hp.ub}}, RowSense::le, 0.0, j);
            add({{p.xi(i, j), 1.0}, {p.alpha(i, j), -hp.lb}}, RowSense::ge, 0.0, j);
        }
    }
    for (int j = 0; j < NS; ++j) {
        for (int i = 0; i < NL; ++i) {
            add({{p.alpha(i, j), 1.0}, {p.delta(j), -1.0}}, RowSense::le, 0.0, j);
        }
    }

    std::vector<std::pair<int, double>> link;
    std::vector<std::pair<int, double>> kd;
    for (int j = 0; j < NS; ++j) {
        link.emplace_back(p.delta(j), 1.0);
        kd.emplace_back(p.delta(j), 1.0);
    }
    link.emplace_back(p.s(), -1.0);
    add(std::move(link), RowSense::le, 0.0, -1);
    std::vector<std::pair<int, double>> ka;
    for (int i = 0; i < NL; ++i) {
        for (int j = 0; j < NS; ++j) {
            ka.emplace_back(p.alpha(i, j), 1.0);
        }
    }
    add(std::move(ka), RowSense::le, hp.K_alpha ? *hp.K_alpha : NL * NS, -1);
    add(std::move(kd), RowSense::le, hp.K_delta ? *hp.K_delta : NS, -1);
    return p;
}

MilpProblem assemble(const ResidualMatrix& H, const ScaledLibraryMatrix& XL, const Hyperparams& hp)
{
    return assemble(H.H, XL.XL_sc, hp);
}

double evaluate_objective(const MilpProblem& p, const Matrix& Xi, int s)
{
    const Matrix resid = p.H - p.XL * Xi;
    return resid.cwiseAbs().sum() + p.hp.lambda1_xi * Xi.cwiseAbs().sum() + p.cost[p.s()] * s;
}

LpSolution solve_relaxation(const MilpProblem& p, const Vector& lower, const Vector& upper, const LpOptions& options)
{
    LpProblem lp;
    lp.cost = p.cost;
    lp.lower = lower;
    lp.upper = upper;
    lp.rows.reserve(p.constraints.size());
    for (const auto& c : p.constraints) {
        lp.rows.push_back(LpRow{c.coefs, c.sense, c.rhs});
    }
    return solve_lp(lp, options);
}

namespace {

struct Node {
    double bound = 0.0;
    long id = 0;
    Vector lower;
    Vector upper;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const
    {
        if (a.bound != b.bound) {
            return a.bound > b.bound;
        }
        return a.id > b.id;
    }
};

struct Relaxation {
    bool feasible = false;
    double objective = 0.0;
    Vector x;
};

bool is_integral(double v, double tol)
{
    return std::abs(v - std::round(v)) <= tol;
}

double fractionality(double v)
{
    return std::abs(v - std::floor(v) - 0.5);
}

class BranchAndBound {
public:
    BranchAndBound(const MilpProblem& p, const MilpOptions& o)
        : p_(p), opt_(o), NL_(p.n_lib), NS_(p.n_states), R_(p.rows)
    {
        decompose_ = opt_.decompose && p_.cardinality_redundant();
        for (const auto& c : p_.constraints) {
            if (c.block < 0) {
                continue;
            }
            block_rows_[c.block].push_back(&c);
        }
        k_alpha_ = p_.hp.K_alpha ? *p_.hp.K_alpha : NL_ * NS_;
        k_delta_ = p_.hp.K_delta ? *p_.hp.K_delta : NS_;
    }

    MilpSolution run()
    {
        MilpSolution out;
        out.Xi = Matrix::Zero(NL_, NS_);
        out.A = Eigen::MatrixXi::Zero(NL_, NS_);
        out.Delta = Eigen::VectorXi::Zero(NS_);

        std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
        Node root;
        root.bound = -kInf;
        root.id = next_id_++;
        root.lower = p_.lower;
        root.upper = p_.upper;
        open.push(std::move(root));

        bool limit_hit = false;
        while (!open.empty()) {
            if (has_incumbent_ && open.top().bound >= prune_level()) {
                break;
            }
            if (nodes_ >= opt_.node_limit) {
                limit_hit = true;
                break;
            }
            Node node = open.top();
            open.pop();
            ++nodes_;
            if (!propagate(node.lower, node.upper)) {
                continue;
            }
            Relaxation rel = relax(node.lower, node.upper);
            if (!rel.feasible) {
                continue;
            }
            polish(rel.x, node.lower, node.upper);
            const double bound = std::max(rel.objective, node.bound);
            if (has_incumbent_ && bound >= prune_level()) {
                continue;
            }
            const int var = branching_variable(rel.x);
            if (var < 0) {
                consider_incumbent(rel.x);
                continue;
            }
            const double v = rel.x[var];
            Node down{bound, next_id_++, node.lower, node.upper};
            down.upper[var] = std::floor(v);
            Node up{bound, next_id_++, std::move(node.lower), std::move(node.upper)};
            up.lower[var] = std::ceil(v);
            open.push(std::move(down));
            open.push(std::move(up));
        }

        out.nodes = nodes_;
        if (!has_incumbent_) {
            out.status = limit_hit ? MilpStatus::node_limit : MilpStatus::infeasible;
            return out;
        }
        double best_open = incumbent_obj_;
        if (!open.empty()) {
            best_open = std::min(best_open, open.top().bound);
        }
        const double scale = std::max(1.0, std::abs(incumbent_obj_));
        out.gap = std::max(0.0, incumbent_obj_ - best_open) / scale;
        if (limit_hit) {
            out.status = MilpStatus::node_limit;
        } else if (out.gap > 1e-12) {
            out.status = MilpStatus::gap_limit;
        } else {
            out.status = MilpStatus::optimal;
            out.gap = 0.0;
        }

        out.has_solution = true;
        out.x = incumbent_;
        out.objective = incumbent_obj_;
        double max_abs = 0.0;
        for (int i = 0; i < NL_; ++i) {
            for (int j = 0; j < NS_; ++j) {
                out.Xi(i, j) = incumbent_[p_.xi(i, j)];
                out.A(i, j) = static_cast<int>(std::lround(incumbent_[p_.alpha(i, j)]));
                max_abs = std::max(max_abs, std::abs(out.Xi(i, j)));
            }
        }
        for (int j = 0; j < NS_; ++j) {
            out.Delta[j] = static_cast<int>(std::lround(incumbent_[p_.delta(j)]));
        }
        out.s = static_cast<int>(std::lround(incumbent_[p_.s()]));
        out.bound_tightness = max_abs / p_.hp.big_m();
        return out;
    }

private:
    double prune_level() const
    {
        return incumbent_obj_ - opt_.gap_tol * std::max(1.0, std::abs(incumbent_obj_));
    }

    // Trivial bound propagation over the logic rows. Returns false on a conflict.
    bool propagate(Vector& lo, Vector& up) const
    {
        for (int pass = 0; pass < 3; ++pass) {
            for (int j = 0; j < NS_; ++j) {
                const int d = p_.delta(j);
                for (int i = 0; i < NL_; ++i) {
                    const int a = p_.alpha(i, j);
                    if (up[d] < 0.5) {
                        up[a] = 0.0;
                    }
                    if (lo[a] > 0.5) {
                        lo[d] = 1.0;
                    }
                }
            }
            int fixed_d = 0;
            int fixed_a = 0;
            for (int j = 0; j < NS_; ++j) {
                fixed_d += lo[p_.delta(j)] > 0.5 ? 1 : 0;
                for (int i = 0; i < NL_; ++i) {
                    fixed_a += lo[p_.alpha(i, j)] > 0.5 ? 1 : 0;
                }
            }
            if (fixed_d > k_delta_ || fixed_a > k_alpha_) {
                return false;
            }
            if (fixed_d == k_delta_) {
                for (int j = 0; j < NS_; ++j) {
                    if (lo[p_.delta(j)] < 0.5) {
                        up[p_.delta(j)] = 0.0;
                    }
                }
            }
            if (fixed_a == k_alpha_) {
                for (int j = 0; j < NS_; ++j) {
                    for (int i = 0; i < NL_; ++i) {
                        if (lo[p_.alpha(i, j)] < 0.5) {
                            up[p_.alpha(i, j)] = 0.0;
                        }
                    }
                }
            }
            const int s = p_.s();
            lo[s] = std::max(lo[s], static_cast<double>(fixed_d));
            if (lo[s] > up[s]) {
                return false;
            }
            if (up[s] <= static_cast<double>(fixed_d)) {
                for (int j = 0; j < NS_; ++j) {
                    if (lo[p_.delta(j)] < 0.5) {
                        up[p_.delta(j)] = 0.0;
                    }
                }
            }
            for (int v = 0; v < p_.num_vars(); ++v) {
                if (lo[v] > up[v]) {
                    return false;
                }
            }
        }
        return true;
    }

    Relaxation relax(const Vector& lo, const Vector& up)
    {
        Relaxation out;
        if (!decompose_) {
            const LpSolution sol = solve_relaxation(p_, lo, up, opt_.lp);
            if (sol.status != LpStatus::optimal) {
                return out;
            }
            out.feasible = true;
            out.objective = sol.objective;
            out.x = sol.x;
            return out;
        }

        // Every coupling row is redundant: with s = sum(delta) at the optimum,
        // the relaxation separates by state once the s cost is moved onto delta.
        out.x = Vector::Zero(p_.num_vars());
        out.feasible = true;
        double s_val = 0.0;
        for (int j = 0; j < NS_; ++j) {
            const Relaxation& col = column(j, lo, up);
            if (!col.feasible) {
                out.feasible = false;
                return out;
            }
            out.objective += col.objective;
            const auto& vars = block_vars(j);
            for (std::size_t k = 0; k < vars.size(); ++k) {
                out.x[vars[k]] = col.x[static_cast<Eigen::Index>(k)];
            }
            s_val += out.x[p_.delta(j)];
        }
        const int s = p_.s();
        if (s_val < lo[s] - 1e-12) {
            // A lower bound on s above sum(delta) cannot arise from delta-first branching.
            out.objective += p_.cost[s] * (lo[s] - s_val);
            s_val = lo[s];
        }
        out.x[s] = s_val;
        return out;
    }

    const std::vector<int>& block_vars(int j)
    {
        auto it = block_vars_.find(j);
        if (it != block_vars_.end()) {
            return it->second;
        }
        std::vector<int> vars;
        for (int i = 0; i < NL_; ++i) {
            vars.push_back(p_.xi(i, j));
        }
        for (int i = 0; i < NL_; ++i) {
            vars.push_back(p_.alpha(i, j));
        }
        vars.push_back(p_.delta(j));
        for (int r = 0; r < R_; ++r) {
            vars.push_back(p_.y(r, j));
        }
        for (int i = 0; i < NL_; ++i) {
            vars.push_back(p_.z(i, j));
        }
        return block_vars_.emplace(j, std::move(vars)).first->second;
    }

    const Relaxation& column(int j, const Vector& lo, const Vector& up)
    {
        std::string key(static_cast<std::size_t>(2 * NL_ + 3), '0');
        key[0] = static_cast<char>('A' + j);
        for (int i = 0; i < NL_; ++i) {
            key[static_cast<std::size_t>(1 + 2 * i)] = lo[p_.alpha(i, j)] > 0.5 ? '1' : '0';
            key[static_cast<std::size_t>(2 + 2 * i)] = up[p_.alpha(i, j)] > 0.5 ? '1' : '0';
        }
        key[static_cast<std::size_t>(2 * NL_ + 1)] = lo[p_.delta(j)] > 0.5 ? '1' : '0';
        key[static_cast<std::size_t>(2 * NL_ + 2)] = up[p_.delta(j)] > 0.5 ? '1' : '0';
        key += "#" + std::to_string(j);
        auto it = column_cache_.find(key);
        if (it != column_cache_.end()) {
            return it->second;
        }

        const auto& vars = block_vars(j);
        std::map<int, int> local;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            local[vars[k]] = static_cast<int>(k);
        }
        const auto nv = static_cast<Eigen::Index>(vars.size());
        LpProblem lp;
        lp.cost.resize(nv);
        lp.lower.resize(nv);
        lp.upper.resize(nv);
        for (Eigen::Index k = 0; k < nv; ++k) {
            const int g = vars[static_cast<std::size_t>(k)];
            lp.cost[k] = p_.cost[g];
            lp.lower[k] = lo[g];
            lp.upper[k] = up[g];
        }
        lp.cost[local.at(p_.delta(j))] += p_.cost[p_.s()];
        for (const MilpConstraint* c : block_rows_[j]) {
            LpRow row;
            row.sense = c->sense;
            row.rhs = c->rhs;
            for (const auto& [g, a] : c->coefs) {
                row.coefs.emplace_back(local.at(g), a);
            }
            lp.rows.push_back(std::move(row));
        }
        const LpSolution sol = solve_lp(lp, opt_.lp);
        Relaxation rel;
        if (sol.status == LpStatus::optimal) {
            rel.feasible = true;
            rel.objective = sol.objective;
            rel.x = sol.x;
        }
        return column_cache_.emplace(std::move(key), std::move(rel)).first->second;
    }

    // Moves binaries to integral values where doing so keeps the point feasible
    // and leaves the objective unchanged.
    void polish(Vector& x, const Vector& lo, const Vector& up) const
    {
        const double tol = opt_.int_tol;
        const int s = p_.s();
        for (int j = 0; j < NS_; ++j) {
            for (int i = 0; i < NL_; ++i) {
                const int a = p_.alpha(i, j);
                if (x[p_.xi(i, j)] == 0.0 && lo[a] < 0.5) {
                    x[a] = 0.0;
                }
            }
        }
        if (p_.cost[p_.alpha(0, 0)] == 0.0) {
            // Raise fractional alphas under an integral delta while the K_alpha row allows it.
            double used = 0.0;
            for (int j = 0; j < NS_; ++j) {
                for (int i = 0; i < NL_; ++i) {
                    used += x[p_.alpha(i, j)];
                }
            }
            for (int j = 0; j < NS_; ++j) {
                if (x[p_.delta(j)] < 1.0 - tol) {
                    continue;
                }
                for (int i = 0; i < NL_; ++i) {
                    const int a = p_.alpha(i, j);
                    const double v = x[a];
                    if (is_integral(v, tol) || up[a] < 0.5) {
                        continue;
                    }
                    if (used + (1.0 - v) <= static_cast<double>(k_alpha_) + 1e-9) {
                        used += 1.0 - v;
                        x[a] = 1.0;
                    }
                }
            }
        }
        double sum_delta = 0.0;
        for (int j = 0; j < NS_; ++j) {
            const int d = p_.delta(j);
            bool any = false;
            for (int i = 0; i < NL_; ++i) {
                any = any || x[p_.alpha(i, j)] > 0.0;
            }
            if (!any && lo[d] < 0.5 && p_.cost[d] == 0.0) {
                x[d] = 0.0;
            }
            sum_delta += x[d];
        }
        if (p_.cost[s] == 0.0) {
            const double target = std::ceil(sum_delta - tol);
            if (target >= lo[s] && target <= up[s] && target >= sum_delta - 1e-9) {
                x[s] = target;
            }
        }
    }

    int branching_variable(const Vector& x) const
    {
        const double tol = opt_.int_tol;
        auto pick = [&](auto&& indices) {
            int best = -1;
            double best_f = kInf;
            for (int v : indices) {
                if (is_integral(x[v], tol)) {
                    continue;
                }
                const double f = fractionality(x[v]);
                if (f < best_f) {
                    best_f = f;
                    best = v;
                }
            }
            return best;
        };
        std::vector<int> deltas;
        for (int j = 0; j < NS_; ++j) {
            deltas.push_back(p_.delta(j));
        }
        if (int v = pick(deltas); v >= 0) {
            return v;
        }
        std::vector<int> alphas;
        for (int i = 0; i < NL_; ++i) {
            for (int j = 0; j < NS_; ++j) {
                alphas.push_back(p_.alpha(i, j));
            }
        }
        if (int v = pick(alphas); v >= 0) {
            return v;
        }
        if (!is_integral(x[p_.s()], tol)) {
            return p_.s();
        }
        return -1;
    }

    void consider_incumbent(const Vector& x)
    {
        Vector c = x;
        const double M_ub = p_.hp.ub, M_lb = p_.hp.lb;
        for (int j = 0; j < NS_; ++j) {
            c[p_.delta(j)] = std::round(x[p_.delta(j)]);
            for (int i = 0; i < NL_; ++i) {
                const double a = std::round(x[p_.alpha(i, j)]);
                c[p_.alpha(i, j)] = a;
                c[p_.xi(i, j)] = std::clamp(x[p_.xi(i, j)], M_lb * a, M_ub * a);
            }
        }
        c[p_.s()] = std::round(x[p_.s()]);
        Matrix Xi(NL_, NS_);
        for (int i = 0; i < NL_; ++i) {
            for (int j = 0; j < NS_; ++j) {
                Xi(i, j) = c[p_.xi(i, j)];
                c[p_.z(i, j)] = std::abs(Xi(i, j));
            }
        }
        const Matrix resid = p_.H - p_.XL * Xi;
        for (int r = 0; r < R_; ++r) {
            for (int j = 0; j < NS_; ++j) {
                c[p_.y(r, j)] = std::abs(resid(r, j));
            }
        }
        const double obj = evaluate_objective(p_, Xi, static_cast<int>(c[p_.s()]));
        if (!has_incumbent_ || obj < incumbent_obj_) {
            has_incumbent_ = true;
            incumbent_obj_ = obj;
            incumbent_ = std::move(c);
        }
    }

    const MilpProblem& p_;
    MilpOptions opt_;
    int NL_;
    int NS_;
    int R_;
    int k_alpha_ = 0;
    int k_delta_ = 0;
    bool decompose_ = false;
    long nodes_ = 0;
    long next_id_ = 0;
    bool has_incumbent_ = false;
    double incumbent_obj_ = kInf;
    Vector incumbent_;
    std::map<int, std::vector<const MilpConstraint*>> block_rows_;
    std::map<int, std::vector<int>> block_vars_;
    std::map<std::string, Relaxation> column_cache_;
};

} // namespace

MilpSolution solve(const MilpProblem& problem, const MilpOptions& options)
{
    if (problem.num_vars() == 0 || problem.rows == 0) {
        throw UsageError("solve: empty MILP");
    }
    BranchAndBound bb(problem, options);
    return bb.run();
}

} // namespace sindybrid
