#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcre::cli {

class ExpressionError : public std::runtime_error {
public:
    ExpressionError(const std::string& what, std::size_t position)
        : std::runtime_error(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Compiled arithmetic expression over environment coordinates x1..xd
/// (x is x1) and state or lag coordinates y1..ym (y is y1).
///
/// Grammar: numbers, + - * / ^, parentheses, comparisons < <= > >= == !=
/// (1 or 0), the constants pi and e, and the functions exp, log, sqrt, abs,
/// sin, cos, tanh, pow(a, b), min(a, ...), max(a, ...) and
/// indicator(c) / ind(c) (1 when c != 0).
class Expression {
public:
    Expression() = default;
    static Expression parse(const std::string& source);

    double operator()(std::span<const double> x, std::span<const double> y = {}) const;

    const std::string& source() const { return source_; }
    /// Number of x and y coordinates referenced (highest index used).
    std::size_t x_arity() const { return x_arity_; }
    std::size_t y_arity() const { return y_arity_; }

    struct Node;

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
    std::size_t x_arity_ = 0;
    std::size_t y_arity_ = 0;
};

}  // namespace mcre::cli
