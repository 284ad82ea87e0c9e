#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ergo {

/// Parse failure with the 0-based offset of the offending character.
class ExprError : public std::runtime_error {
public:
    ExprError(const std::string& msg, std::size_t position)
        : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

namespace detail {
struct ExprNode;
}

/// A parsed arithmetic expression in one free variable. Immutable and
/// cheap to copy; evaluation is pure and deterministic.
///
/// Grammar: numeric literals, the free variable, + - * / ^ (right
/// associative ^), unary minus, parentheses and the functions
/// exp, log, sqrt, abs, pow, min, max, gamma.
class RateFunction {
public:
    RateFunction() = default;

    double operator()(double arg) const;
    bool valid() const { return root_ != nullptr; }
    const std::string& text() const { return text_; }
    const std::string& variable() const { return var_; }
    /// Canonical re-serialization; parse(unparse()) evaluates identically.
    std::string unparse() const;

    friend RateFunction parse_rate_expr(std::string_view text, std::string_view var);

private:
    std::shared_ptr<const detail::ExprNode> root_;
    std::string text_;
    std::string var_;
};

/// Parses `text` with `var` as the only admissible identifier besides the
/// built-in functions. Throws ExprError with a position on any failure.
RateFunction parse_rate_expr(std::string_view text, std::string_view var = "x");

} // namespace ergo
