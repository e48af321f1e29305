#pragma once

#include "sindybrid/ode.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sindybrid {

/// A named basis function phi(x, r) evaluated on observed states and run conditions.
struct CandidateFunction {
    std::string label;
    std::function<double(const Vector& x, const Vector& r)> eval;
};

/// Named helper variable usable inside monomials and terms (e.g. Tstar = T/273.15).
struct LibraryAlias {
    std::string name;
    std::string expr;
};

/**
 * Recipe for a candidate library.
 *
 * Functions are generated in a fixed order: the constant, then monomials of
 * total degree 1..degree over `monomial_variables` in graded-lexicographic
 * order, then `rational` terms, then `custom` terms.
 */
struct LibrarySpec {
    int degree = 2;
    bool include_constant = true;
    /// Empty means: every state followed by every run condition.
    std::vector<std::string> monomial_variables;
    std::vector<LibraryAlias> aliases;
    std::vector<std::string> rational;
    std::vector<std::string> custom;
};

class Library {
public:
    Library() = default;

    const std::vector<CandidateFunction>& functions() const noexcept { return functions_; }
    std::size_t size() const noexcept { return functions_.size(); }
    std::vector<std::string> labels() const;
    /// Index of the function with this label (whitespace-insensitive), or npos.
    std::size_t find(const std::string& label) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::vector<CandidateFunction> functions_;

    friend Library build_library(const LibrarySpec&,
                                 const std::vector<std::string>&,
                                 const std::vector<std::string>&);
};

/// Generates the ordered candidate list. Throws ConfigError on duplicate labels,
/// unknown identifiers, or an empty library.
Library build_library(const LibrarySpec& spec,
                      const std::vector<std::string>& state_names,
                      const std::vector<std::string>& run_condition_names);

/// X_L[k][i] = phi_i(x_k, r_k). Throws NumericDomainError naming label and row.
Matrix evaluate_library(const Library& library, const Matrix& states_at_rows, const Matrix& r_at_rows);

/// Library matrix with every column divided by its max-abs value.
struct ScaledLibraryMatrix {
    Matrix XL_sc;
    Vector scales;
    std::vector<std::string> labels;
    std::vector<bool> degenerate; ///< all-zero columns, kept with scale 1
};

ScaledLibraryMatrix scale_columns(const Matrix& XL, std::vector<std::string> labels = {});

/// Shipped per-case library: each injected deviation is a linear combination of its terms.
LibrarySpec default_library(const std::string& case_id);

} // namespace sindybrid
