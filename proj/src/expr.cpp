#include "sindybrid/expr.hpp"

#include "sindybrid/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace sindybrid {

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, const std::vector<std::string>& variables)
        : text_(text), vars_(variables) {}

    Expression run()
    {
        Expression e;
        e.text_ = Expression::canonical(text_);
        parse_sum();
        skip_ws();
        if (pos_ != text_.size()) {
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        }
        e.program_ = std::move(program_);
        // Stack depth of the postfix program.
        std::size_t depth = 0;
        for (const auto& ins : e.program_) {
            switch (ins.op) {
            case Expression::Op::push_const:
            case Expression::Op::push_var:
                ++depth;
                break;
            case Expression::Op::add:
            case Expression::Op::sub:
            case Expression::Op::mul:
            case Expression::Op::div:
            case Expression::Op::pow:
                --depth;
                break;
            default:
                break;
            }
            e.max_stack_ = std::max(e.max_stack_, depth);
        }
        return e;
    }

private:
    using Op = Expression::Op;

    [[noreturn]] void fail(const std::string& why) const
    {
        throw ConfigError("cannot parse expression '" + std::string(text_) + "': " + why);
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(Op op, double value = 0.0, std::size_t index = 0) { program_.push_back({op, value, index}); }

    void parse_sum()
    {
        parse_product();
        for (;;) {
            if (accept('+')) {
                parse_product();
                emit(Op::add);
            } else if (accept('-')) {
                parse_product();
                emit(Op::sub);
            } else {
                return;
            }
        }
    }

    void parse_product()
    {
        parse_unary();
        for (;;) {
            if (accept('*')) {
                parse_unary();
                emit(Op::mul);
            } else if (accept('/')) {
                parse_unary();
                emit(Op::div);
            } else {
                return;
            }
        }
    }

    void parse_unary()
    {
        if (accept('-')) {
            parse_unary();
            emit(Op::neg);
        } else if (accept('+')) {
            parse_unary();
        } else {
            parse_power();
        }
    }

    void parse_power()
    {
        parse_primary();
        if (accept('^')) {
            parse_unary();
            emit(Op::pow);
        }
    }

    void parse_primary()
    {
        skip_ws();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_sum();
            if (!accept(')')) {
                fail("missing ')'");
            }
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.data() + pos_;
            char* end = nullptr;
            const std::string buf(begin, text_.size() - pos_);
            const double v = std::strtod(buf.c_str(), &end);
            const std::size_t used = static_cast<std::size_t>(end - buf.c_str());
            if (used == 0) {
                fail("bad number");
            }
            pos_ += used;
            emit(Op::push_const, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name(text_.substr(start, pos_ - start));
            if (accept('(')) {
                Op op;
                if (name == "exp") {
                    op = Op::exp;
                } else if (name == "log") {
                    op = Op::log;
                } else if (name == "sqrt") {
                    op = Op::sqrt;
                } else if (name == "abs") {
                    op = Op::abs;
                } else {
                    fail("unknown function '" + name + "'");
                }
                parse_sum();
                if (!accept(')')) {
                    fail("missing ')'");
                }
                emit(op);
                return;
            }
            auto it = std::find(vars_.begin(), vars_.end(), name);
            if (it == vars_.end()) {
                fail("unknown identifier '" + name + "'");
            }
            emit(Op::push_var, 0.0, static_cast<std::size_t>(it - vars_.begin()));
            return;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string_view text_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
    std::vector<Expression::Instr> program_;
};

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables)
{
    return ExpressionParser(text, variables).run();
}

std::string Expression::canonical(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            out.push_back(c);
        }
    }
    return out;
}

double Expression::evaluate(std::span<const double> values) const
{
    double stack[64] = {};
    double* heap = nullptr;
    std::vector<double> big;
    if (max_stack_ > 64) {
        big.resize(max_stack_);
        heap = big.data();
    }
    double* s = heap != nullptr ? heap : stack;
    std::size_t top = 0;
    for (const auto& ins : program_) {
        switch (ins.op) {
        case Op::push_const:
            s[top++] = ins.value;
            break;
        case Op::push_var:
            s[top++] = values[ins.index];
            break;
        case Op::add:
            --top;
            s[top - 1] += s[top];
            break;
        case Op::sub:
            --top;
            s[top - 1] -= s[top];
            break;
        case Op::mul:
            --top;
            s[top - 1] *= s[top];
            break;
        case Op::div: {
            --top;
            double d = s[top];
            if (std::abs(d) < kDivisionGuard) {
                d = std::copysign(kDivisionGuard, d);
            }
            s[top - 1] /= d;
            break;
        }
        case Op::pow:
            --top;
            if (s[top] == 2.0) {
                s[top - 1] *= s[top - 1];
            } else {
                s[top - 1] = std::pow(s[top - 1], s[top]);
            }
            break;
        case Op::neg:
            s[top - 1] = -s[top - 1];
            break;
        case Op::exp:
            s[top - 1] = std::exp(s[top - 1]);
            break;
        case Op::log:
            s[top - 1] = std::log(s[top - 1]);
            break;
        case Op::sqrt:
            s[top - 1] = std::sqrt(s[top - 1]);
            break;
        case Op::abs:
            s[top - 1] = std::abs(s[top - 1]);
            break;
        }
    }
    return s[0];
}

} // namespace sindybrid
