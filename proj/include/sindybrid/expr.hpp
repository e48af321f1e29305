#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sindybrid {

/// Denominators smaller than this in magnitude are clamped before dividing.
inline constexpr double kDivisionGuard = 1e-6;

/**
 * Small arithmetic expression compiled to a stack program.
 *
 * Grammar: numbers, identifiers, + - * / ^, unary minus, parentheses and the
 * functions exp, log, sqrt, abs. Division is guarded: a denominator with
 * |d| < kDivisionGuard is replaced by copysign(kDivisionGuard, d).
 */
class Expression {
public:
    /// Parses `text`; identifiers must appear in `variables`. Throws ConfigError.
    static Expression parse(std::string_view text, const std::vector<std::string>& variables);

    double evaluate(std::span<const double> values) const;

    const std::string& text() const noexcept { return text_; }

    /// Parser-normalised rendering with whitespace removed.
    static std::string canonical(std::string_view text);

    enum class Op { push_const, push_var, add, sub, mul, div, pow, neg, exp, log, sqrt, abs };

    struct Instr {
        Op op;
        double value = 0.0;
        std::size_t index = 0;
    };

private:
    std::string text_;
    std::vector<Instr> program_;
    std::size_t max_stack_ = 0;

    friend class ExpressionParser;
};

} // namespace sindybrid
