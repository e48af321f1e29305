#include "sindybrid/library.hpp"

#include "sindybrid/error.hpp"
#include "sindybrid/expr.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace sindybrid {

namespace {

// Shared evaluation context: base variables are states then run conditions,
// followed by alias values computed from them.
struct Context {
    std::size_t num_states = 0;
    std::size_t num_rc = 0;
    std::vector<Expression> aliases;

    void fill(const Vector& x, const Vector& r, std::vector<double>& values) const
    {
        values.resize(num_states + num_rc + aliases.size());
        for (std::size_t i = 0; i < num_states; ++i) {
            values[i] = x[static_cast<Eigen::Index>(i)];
        }
        for (std::size_t i = 0; i < num_rc; ++i) {
            values[num_states + i] = r[static_cast<Eigen::Index>(i)];
        }
        const std::span<const double> base(values.data(), num_states + num_rc);
        for (std::size_t a = 0; a < aliases.size(); ++a) {
            values[num_states + num_rc + a] = aliases[a].evaluate(base);
        }
    }
};

std::string monomial_label(const std::vector<std::string>& names, const std::vector<std::size_t>& idx)
{
    std::ostringstream out;
    std::size_t k = 0;
    bool first = true;
    while (k < idx.size()) {
        std::size_t run = 1;
        while (k + run < idx.size() && idx[k + run] == idx[k]) {
            ++run;
        }
        if (!first) {
            out << '*';
        }
        out << names[idx[k]];
        if (run > 1) {
            out << '^' << run;
        }
        first = false;
        k += run;
    }
    return out.str();
}

// Multisets of size `degree` over n items, in lexicographic order of sorted index tuples.
void monomials_of_degree(std::size_t n, int degree, std::vector<std::vector<std::size_t>>& out)
{
    std::vector<std::size_t> idx(static_cast<std::size_t>(degree), 0);
    if (n == 0) {
        return;
    }
    for (;;) {
        out.push_back(idx);
        int pos = degree - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - 1) {
            --pos;
        }
        if (pos < 0) {
            return;
        }
        const std::size_t v = idx[static_cast<std::size_t>(pos)] + 1;
        for (int q = pos; q < degree; ++q) {
            idx[static_cast<std::size_t>(q)] = v;
        }
    }
}

} // namespace

std::vector<std::string> Library::labels() const
{
    std::vector<std::string> out;
    out.reserve(functions_.size());
    for (const auto& f : functions_) {
        out.push_back(f.label);
    }
    return out;
}

std::size_t Library::find(const std::string& label) const
{
    const std::string key = Expression::canonical(label);
    for (std::size_t i = 0; i < functions_.size(); ++i) {
        if (functions_[i].label == key) {
            return i;
        }
    }
    return npos;
}

Library build_library(const LibrarySpec& spec,
                      const std::vector<std::string>& state_names,
                      const std::vector<std::string>& run_condition_names)
{
    if (spec.degree < 0) {
        throw ConfigError("library degree must be >= 0");
    }
    std::vector<std::string> names = state_names;
    names.insert(names.end(), run_condition_names.begin(), run_condition_names.end());
    {
        std::set<std::string> seen;
        for (const auto& n : names) {
            if (!seen.insert(n).second) {
                throw ConfigError("duplicate variable name '" + n + "'");
            }
        }
    }

    auto ctx = std::make_shared<Context>();
    ctx->num_states = state_names.size();
    ctx->num_rc = run_condition_names.size();
    for (const auto& alias : spec.aliases) {
        if (std::find(names.begin(), names.end(), alias.name) != names.end()) {
            throw ConfigError("alias '" + alias.name + "' shadows an existing variable");
        }
        std::vector<std::string> base(names.begin(),
                                      names.begin() + static_cast<std::ptrdiff_t>(ctx->num_states + ctx->num_rc));
        ctx->aliases.push_back(Expression::parse(alias.expr, base));
        names.push_back(alias.name);
    }

    std::vector<std::string> mono_vars = spec.monomial_variables;
    if (mono_vars.empty()) {
        mono_vars.assign(names.begin(),
                         names.begin() + static_cast<std::ptrdiff_t>(ctx->num_states + ctx->num_rc));
    }
    std::vector<std::size_t> mono_index;
    for (const auto& v : mono_vars) {
        auto it = std::find(names.begin(), names.end(), v);
        if (it == names.end()) {
            throw ConfigError("unknown monomial variable '" + v + "'");
        }
        mono_index.push_back(static_cast<std::size_t>(it - names.begin()));
    }

    std::vector<std::string> labels;
    if (spec.include_constant) {
        labels.emplace_back("1");
    }
    for (int d = 1; d <= spec.degree; ++d) {
        std::vector<std::vector<std::size_t>> combos;
        monomials_of_degree(mono_vars.size(), d, combos);
        for (const auto& c : combos) {
            labels.push_back(monomial_label(mono_vars, c));
        }
    }
    for (const auto& t : spec.rational) {
        labels.push_back(Expression::canonical(t));
    }
    for (const auto& t : spec.custom) {
        labels.push_back(Expression::canonical(t));
    }
    if (labels.empty()) {
        throw ConfigError("library is empty");
    }

    Library lib;
    std::set<std::string> seen;
    for (const auto& label : labels) {
        if (!seen.insert(label).second) {
            throw ConfigError("duplicate library label '" + label + "'");
        }
        auto expr = std::make_shared<Expression>(Expression::parse(label, names));
        lib.functions_.push_back(CandidateFunction{
            label, [ctx, expr](const Vector& x, const Vector& r) {
                thread_local std::vector<double> values;
                ctx->fill(x, r, values);
                return expr->evaluate(values);
            }});
    }
    return lib;
}

Matrix evaluate_library(const Library& library, const Matrix& states_at_rows, const Matrix& r_at_rows)
{
    if (states_at_rows.rows() != r_at_rows.rows()) {
        throw UsageError("evaluate_library: state and run-condition rows are not aligned");
    }
    const Eigen::Index rows = states_at_rows.rows();
    const auto nl = static_cast<Eigen::Index>(library.size());
    Matrix XL(rows, nl);
    for (Eigen::Index k = 0; k < rows; ++k) {
        const Vector x = states_at_rows.row(k).transpose();
        const Vector r = r_at_rows.row(k).transpose();
        for (Eigen::Index i = 0; i < nl; ++i) {
            const auto& fn = library.functions()[static_cast<std::size_t>(i)];
            const double v = fn.eval(x, r);
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "library term '" << fn.label << "' is not finite at row " << k;
                throw NumericDomainError(msg.str(), fn.label);
            }
            XL(k, i) = v;
        }
    }
    return XL;
}

ScaledLibraryMatrix scale_columns(const Matrix& XL, std::vector<std::string> labels)
{
    if (XL.rows() < 1) {
        throw UsageError("scale_columns: library matrix has no rows");
    }
    ScaledLibraryMatrix out;
    out.XL_sc = XL;
    out.scales = Vector::Ones(XL.cols());
    out.degenerate.assign(static_cast<std::size_t>(XL.cols()), false);
    out.labels = std::move(labels);
    for (Eigen::Index j = 0; j < XL.cols(); ++j) {
        const double m = XL.col(j).cwiseAbs().maxCoeff();
        if (m == 0.0) {
            out.degenerate[static_cast<std::size_t>(j)] = true;
            continue;
        }
        out.scales[j] = m;
        out.XL_sc.col(j) = XL.col(j) / m;
    }
    return out;
}

LibrarySpec default_library(const std::string& case_id)
{
    LibrarySpec spec;
    spec.degree = 2;
    spec.include_constant = true;
    if (case_id == "meerwein") {
        spec.aliases = {{"Tstar", "T/273.15"}};
        spec.monomial_variables = {"C_A", "C_B", "C_P", "C_S", "C_cat", "Tstar"};
        spec.rational = {"C_A/C_B"};
        spec.custom = {"C_A*C_cat*Tstar", "C_S*C_cat*Tstar"};
    } else if (case_id == "fermentation") {
        spec.rational = {"X*S/(0.01+S)", "S/(0.01+S)", "S/D"};
        spec.custom = {"X*P*S_A"};
    } else if (case_id == "lotka") {
        // degree-2 monomials over the two states
    } else {
        throw UsageError("unknown case '" + case_id + "'");
    }
    return spec;
}

} // namespace sindybrid
