#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>

namespace thinhomog {

// Thrown on malformed source text; offset is the byte position of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Thrown when evaluation hits division by zero, 0^negative, or any non-finite result.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable scalar expression in the variables x and y.
//
// Grammar (binding tightest last): '+','-'  <  '*','/'  <  unary '-'  <  '^',
// with '^' right-associative, so -x^2 == -(x^2) and 2^3^2 == 2^(3^2).
// Atoms: numeric literals, x, y, pi, sin/cos/exp/abs calls, parentheses.
class Expr {
public:
    Expr() = default;

    static Expr parse(const std::string& src);
    static Expr constant(double v);

    bool empty() const { return !root_; }

    // Evaluates at the binding (x, y). Non-finite intermediates raise EvalError.
    double eval(double x, double y) const;

    // Prints with minimal parentheses; parse(str()) evaluates identically.
    std::string str() const;

    bool depends_on_x() const;
    bool depends_on_y() const;

    // Returns the tree with every occurrence of x replaced by the constant v.
    Expr substitute_x(double v) const;

    // Returns this + c.
    Expr add_constant(double c) const;

    struct Node;

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

} // namespace thinhomog
