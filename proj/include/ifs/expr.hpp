#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ifs {

/// Raised by parse_expr. `offset` is the byte position in the source text.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset);
    std::size_t offset() const noexcept { return offset_; }
    /// Message without the offset suffix.
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t offset_;
    std::string message_;
};

/// Raised when an expression is evaluated outside its domain
/// (division by zero, log of a non-positive value, non-finite result).
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Op {
    Const,
    VarX,
    VarP,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Pow,   // integer exponent in Node::integer
    Phi,   // phi(u, n) = u^(n+1) sin(1/u), phi(0, n) = 0
    DPhi,  // d/du phi(u, n), 0 at u = 0
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;
    int integer = 0;
    NodePtr lhs;
    NodePtr rhs;
};

/// Immutable expression in the variables x and p.
class Expr {
public:
    Expr();
    explicit Expr(NodePtr root);

    static Expr constant(double v);
    static Expr x();
    static Expr p();

    const Node& root() const { return *root_; }
    const NodePtr& node() const { return root_; }

    double eval(double x, double p) const;

    bool depends_on_x() const;
    bool depends_on_p() const;
    bool is_constant() const { return root_->op == Op::Const; }

    /// Replaces p by `value` and folds every subtree that became constant.
    Expr bind_p(double value) const;

    std::string str() const;

private:
    NodePtr root_;
};

Expr parse_expr(std::string_view source);

/// Shortest decimal form that reads back to exactly v.
std::string shortest_repr(double v);

/// Structural derivative with respect to x, lightly simplified.
Expr diff_x(const Expr& e);

double phi_value(double u, int n);
double phi_derivative(double u, int n);

// Smart constructors with constant folding and identity elimination.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr make_unary(Op op, const Expr& a);
Expr make_pow(const Expr& a, int k);
Expr make_phi(Op op, const Expr& a, int n);

/// Postfix program for fast repeated evaluation in x at a fixed p.
/// Expressions that are constant, affine or polynomial of degree <= 4 in x
/// get a closed-form fast path.
class CompiledExpr {
public:
    CompiledExpr() = default;
    explicit CompiledExpr(const Expr& e, double p = 0.0);

    double operator()(double x) const
    {
        if (kind_ == Kind::Affine) {
            return slope_ * x + intercept_;
        }
        if (kind_ == Kind::Polynomial) {
            double v = coeffs_[degree_];
            for (std::size_t j = degree_; j-- > 0;) {
                v = v * x + coeffs_[j];
            }
            return v;
        }
        return run(x);
    }

    bool is_affine() const { return kind_ == Kind::Affine; }
    double slope() const { return slope_; }
    double intercept() const { return intercept_; }

private:
    enum class Kind { Affine, Polynomial, Program };
    struct Instr {
        Op op;
        double value;
        int integer;
    };

    double run(double x) const;

    Kind kind_ = Kind::Affine;
    double slope_ = 0.0;
    double intercept_ = 0.0;
    std::array<double, 5> coeffs_{};
    std::size_t degree_ = 0;
    double p_ = 0.0;
    std::vector<Instr> code_;
    std::size_t max_stack_ = 0;
};

} // namespace ifs
