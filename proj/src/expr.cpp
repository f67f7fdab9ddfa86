#include "ifs/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

namespace ifs {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset), message_(what)
{
}

std::string shortest_repr(double v)
{
    char buf[64];
    for (int digits = 1; digits < 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) {
            return buf;
        }
    }
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

double ipow(double base, int k)
{
    if (k < 0) {
        return 1.0 / ipow(base, -k);
    }
    double result = 1.0;
    while (k > 0) {
        if (k & 1) {
            result *= base;
        }
        base *= base;
        k >>= 1;
    }
    return result;
}

NodePtr make_node(Op op, double value = 0.0, int integer = 0, NodePtr lhs = nullptr,
                  NodePtr rhs = nullptr)
{
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    n->integer = integer;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

double checked(double v, const char* what)
{
    if (!std::isfinite(v)) {
        throw EvalError(std::string("non-finite result in ") + what);
    }
    return v;
}

double apply_unary(Op op, double a, int integer)
{
    switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return checked(std::sin(a), "sin");
    case Op::Cos: return checked(std::cos(a), "cos");
    case Op::Exp: return checked(std::exp(a), "exp");
    case Op::Log:
        if (!(a > 0.0)) {
            throw EvalError("log of non-positive value " + std::to_string(a));
        }
        return std::log(a);
    case Op::Abs: return std::fabs(a);
    case Op::Pow:
        if (integer < 0 && a == 0.0) {
            throw EvalError("pow: zero raised to a negative power");
        }
        return checked(ipow(a, integer), "pow");
    case Op::Phi: return checked(phi_value(a, integer), "phi");
    case Op::DPhi: return checked(phi_derivative(a, integer), "dphi");
    default: break;
    }
    throw std::logic_error("apply_unary: not a unary op");
}

double apply_binary(Op op, double a, double b)
{
    switch (op) {
    case Op::Add: return checked(a + b, "+");
    case Op::Sub: return checked(a - b, "-");
    case Op::Mul: return checked(a * b, "*");
    case Op::Div:
        if (b == 0.0) {
            throw EvalError("division by zero");
        }
        return checked(a / b, "/");
    default: break;
    }
    throw std::logic_error("apply_binary: not a binary op");
}

bool is_binary(Op op)
{
    return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

bool is_leaf(Op op)
{
    return op == Op::Const || op == Op::VarX || op == Op::VarP;
}

double eval_node(const Node& n, double x, double p)
{
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarX: return x;
    case Op::VarP: return p;
    default: break;
    }
    if (is_binary(n.op)) {
        return apply_binary(n.op, eval_node(*n.lhs, x, p), eval_node(*n.rhs, x, p));
    }
    return apply_unary(n.op, eval_node(*n.lhs, x, p), n.integer);
}

bool depends(const Node& n, Op var)
{
    if (n.op == var) {
        return true;
    }
    if (n.lhs && depends(*n.lhs, var)) {
        return true;
    }
    return n.rhs && depends(*n.rhs, var);
}

bool is_const(const Expr& e, double v)
{
    return e.root().op == Op::Const && e.root().value == v;
}

// Folds a node whose children are all constant; leaves it alone if the
// evaluation hits a domain error so the error surfaces at eval time.
Expr fold(NodePtr n)
{
    bool all_const = n->lhs && n->lhs->op == Op::Const && (!n->rhs || n->rhs->op == Op::Const);
    if (!all_const) {
        return Expr(std::move(n));
    }
    try {
        return Expr::constant(eval_node(*n, 0.0, 0.0));
    } catch (const EvalError&) {
        return Expr(std::move(n));
    }
}

// ---------------------------------------------------------------- printing

int precedence(const Node& n)
{
    if (n.op == Op::Const && std::signbit(n.value)) {
        return 3;
    }
    switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    default: return 4;
    }
}

std::string format_number(double v)
{
    const std::string s = shortest_repr(std::fabs(v));
    return std::signbit(v) ? "-" + s : s;
}

const char* func_name(Op op)
{
    switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Abs: return "abs";
    case Op::Pow: return "pow";
    case Op::Phi: return "phi";
    case Op::DPhi: return "dphi";
    default: return "?";
    }
}

std::string print(const Node& n)
{
    switch (n.op) {
    case Op::Const: return format_number(n.value);
    case Op::VarX: return "x";
    case Op::VarP: return "p";
    default: break;
    }
    if (is_binary(n.op)) {
        const int prec = precedence(n);
        std::string l = print(*n.lhs);
        std::string r = print(*n.rhs);
        if (precedence(*n.lhs) < prec) {
            l = "(" + l + ")";
        }
        // Left-associative grammar: a right operand of equal precedence
        // needs parentheses to keep the tree shape.
        if (precedence(*n.rhs) <= prec) {
            r = "(" + r + ")";
        }
        const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
        return l + sym + r;
    }
    if (n.op == Op::Neg) {
        std::string c = print(*n.lhs);
        if (precedence(*n.lhs) < 3) {
            c = "(" + c + ")";
        }
        return "-" + c;
    }
    std::string s = std::string(func_name(n.op)) + "(" + print(*n.lhs);
    if (n.op == Op::Pow || n.op == Op::Phi || n.op == Op::DPhi) {
        s += ", " + std::to_string(n.integer);
    }
    return s + ")";
}

// ---------------------------------------------------------------- parsing

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse()
    {
        Expr e = expr();
        skip_ws();
        if (pos_ < src_.size()) {
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        }
        return e;
    }

private:
    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    // Offset reported for a premature end: just past the last token.
    std::size_t end_offset() const
    {
        std::size_t end = src_.size();
        while (end > 0 && std::isspace(static_cast<unsigned char>(src_[end - 1]))) {
            --end;
        }
        return end;
    }

    char peek()
    {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    void expect(char c)
    {
        if (peek() != c) {
            if (pos_ >= src_.size()) {
                throw ParseError(std::string("expected '") + c + "' but input ended", end_offset());
            }
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
        ++pos_;
    }

    Expr expr()
    {
        Expr lhs = term();
        for (;;) {
            char c = peek();
            if (c != '+' && c != '-') {
                return lhs;
            }
            ++pos_;
            Expr rhs = term();
            lhs = Expr(make_node(c == '+' ? Op::Add : Op::Sub, 0.0, 0, lhs.node(), rhs.node()));
        }
    }

    Expr term()
    {
        Expr lhs = factor();
        for (;;) {
            char c = peek();
            if (c != '*' && c != '/') {
                return lhs;
            }
            ++pos_;
            Expr rhs = factor();
            lhs = Expr(make_node(c == '*' ? Op::Mul : Op::Div, 0.0, 0, lhs.node(), rhs.node()));
        }
    }

    Expr number()
    {
        const char* begin = src_.data() + pos_;
        std::size_t n = pos_;
        while (n < src_.size() && std::isdigit(static_cast<unsigned char>(src_[n]))) {
            ++n;
        }
        if (n < src_.size() && src_[n] == '.') {
            ++n;
            while (n < src_.size() && std::isdigit(static_cast<unsigned char>(src_[n]))) {
                ++n;
            }
        }
        if (n < src_.size() && (src_[n] == 'e' || src_[n] == 'E')) {
            std::size_t m = n + 1;
            if (m < src_.size() && (src_[m] == '+' || src_[m] == '-')) {
                ++m;
            }
            if (m < src_.size() && std::isdigit(static_cast<unsigned char>(src_[m]))) {
                n = m;
                while (n < src_.size() && std::isdigit(static_cast<unsigned char>(src_[n]))) {
                    ++n;
                }
            }
        }
        std::string text(begin, n - pos_);
        if (text == ".") {
            throw ParseError("malformed number", pos_);
        }
        double v = std::strtod(text.c_str(), nullptr);
        if (!std::isfinite(v)) {
            throw ParseError("number out of range", pos_);
        }
        pos_ = n;
        return Expr::constant(v);
    }

    int integer_literal()
    {
        skip_ws();
        std::size_t start = pos_;
        bool neg = false;
        if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
            neg = src_[pos_] == '-';
            ++pos_;
        }
        std::size_t digits = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
        if (pos_ == digits) {
            if (digits >= src_.size()) {
                throw ParseError("expected integer literal but input ended", end_offset());
            }
            throw ParseError("expected integer literal", start);
        }
        if (pos_ - digits > 6) {
            throw ParseError("integer literal too large", start);
        }
        int v = std::stoi(std::string(src_.substr(digits, pos_ - digits)));
        return neg ? -v : v;
    }

    Expr factor()
    {
        char c = peek();
        if (pos_ >= src_.size()) {
            throw ParseError("unexpected end of input", end_offset());
        }
        if (c == '-') {
            ++pos_;
            Expr e = factor();
            if (e.root().op == Op::Const) {
                return Expr::constant(-e.root().value);
            }
            return Expr(make_node(Op::Neg, 0.0, 0, e.node()));
        }
        Expr base = primary();
        if (peek() == '^') {
            ++pos_;
            const int k = integer_literal();
            return Expr(make_node(Op::Pow, 0.0, k, base.node()));
        }
        return base;
    }

    Expr primary()
    {
        char c = peek();
        if (pos_ >= src_.size()) {
            throw ParseError("unexpected end of input", end_offset());
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                ++pos_;
            }
            std::string name(src_.substr(start, pos_ - start));
            if (name == "x") {
                return Expr::x();
            }
            if (name == "p") {
                return Expr::p();
            }
            Op op;
            if (name == "sin") op = Op::Sin;
            else if (name == "cos") op = Op::Cos;
            else if (name == "exp") op = Op::Exp;
            else if (name == "log") op = Op::Log;
            else if (name == "abs") op = Op::Abs;
            else if (name == "pow") op = Op::Pow;
            else if (name == "phi") op = Op::Phi;
            else if (name == "dphi") op = Op::DPhi;
            else throw ParseError("unknown identifier '" + name + "'", start);

            expect('(');
            Expr arg = expr();
            int integer = 0;
            if (op == Op::Pow || op == Op::Phi || op == Op::DPhi) {
                expect(',');
                skip_ws();
                std::size_t at = pos_;
                integer = integer_literal();
                if (op != Op::Pow && integer < 1) {
                    throw ParseError(name + " order must be >= 1", at);
                }
            }
            expect(')');
            return Expr(make_node(op, 0.0, integer, arg.node()));
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

} // namespace

// ---------------------------------------------------------------- Expr

Expr::Expr() : root_(make_node(Op::Const)) {}

Expr::Expr(NodePtr root) : root_(std::move(root)) {}

Expr Expr::constant(double v) { return Expr(make_node(Op::Const, v)); }
Expr Expr::x() { return Expr(make_node(Op::VarX)); }
Expr Expr::p() { return Expr(make_node(Op::VarP)); }

double Expr::eval(double x, double p) const { return eval_node(*root_, x, p); }

bool Expr::depends_on_x() const { return depends(*root_, Op::VarX); }
bool Expr::depends_on_p() const { return depends(*root_, Op::VarP); }

std::string Expr::str() const { return print(*root_); }

Expr Expr::bind_p(double value) const
{
    std::function<Expr(const NodePtr&)> rec = [&](const NodePtr& n) -> Expr {
        switch (n->op) {
        case Op::VarP: return Expr::constant(value);
        case Op::Const:
        case Op::VarX: return Expr(n);
        default: break;
        }
        if (is_binary(n->op)) {
            Expr a = rec(n->lhs);
            Expr b = rec(n->rhs);
            switch (n->op) {
            case Op::Add: return a + b;
            case Op::Sub: return a - b;
            case Op::Mul: return a * b;
            default: return a / b;
            }
        }
        Expr a = rec(n->lhs);
        switch (n->op) {
        case Op::Neg: return -a;
        case Op::Pow: return make_pow(a, n->integer);
        case Op::Phi:
        case Op::DPhi: return make_phi(n->op, a, n->integer);
        default: return make_unary(n->op, a);
        }
    };
    return rec(root_);
}

Expr parse_expr(std::string_view source) { return Parser(source).parse(); }

double phi_value(double u, int n)
{
    if (std::fabs(u) < 1e-300) {
        return 0.0;
    }
    return ipow(u, n + 1) * std::sin(1.0 / u);
}

double phi_derivative(double u, int n)
{
    if (std::fabs(u) < 1e-300) {
        return 0.0;
    }
    const double inv = 1.0 / u;
    return (n + 1) * ipow(u, n) * std::sin(inv) - ipow(u, n - 1) * std::cos(inv);
}

// ---------------------------------------------------------------- algebra

Expr operator+(const Expr& a, const Expr& b)
{
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return fold(make_node(Op::Add, 0.0, 0, a.node(), b.node()));
}

Expr operator-(const Expr& a, const Expr& b)
{
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return -b;
    return fold(make_node(Op::Sub, 0.0, 0, a.node(), b.node()));
}

Expr operator*(const Expr& a, const Expr& b)
{
    if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return fold(make_node(Op::Mul, 0.0, 0, a.node(), b.node()));
}

Expr operator/(const Expr& a, const Expr& b)
{
    if (is_const(b, 1.0)) return a;
    return fold(make_node(Op::Div, 0.0, 0, a.node(), b.node()));
}

Expr operator-(const Expr& a)
{
    if (a.root().op == Op::Neg) return Expr(a.root().lhs);
    if (a.root().op == Op::Const) return Expr::constant(-a.root().value);
    return Expr(make_node(Op::Neg, 0.0, 0, a.node()));
}

Expr make_unary(Op op, const Expr& a)
{
    if (op == Op::Neg) return -a;
    return fold(make_node(op, 0.0, 0, a.node()));
}

Expr make_pow(const Expr& a, int k)
{
    if (k == 0) return Expr::constant(1.0);
    if (k == 1) return a;
    return fold(make_node(Op::Pow, 0.0, k, a.node()));
}

Expr make_phi(Op op, const Expr& a, int n)
{
    return fold(make_node(op, 0.0, n, a.node()));
}

Expr diff_x(const Expr& e)
{
    const Node& n = e.root();
    auto sub = [](const NodePtr& p) { return Expr(p); };
    switch (n.op) {
    case Op::Const:
    case Op::VarP: return Expr::constant(0.0);
    case Op::VarX: return Expr::constant(1.0);
    default: break;
    }
    if (!e.depends_on_x()) {
        return Expr::constant(0.0);
    }
    const Expr a = sub(n.lhs);
    const Expr da = diff_x(a);
    switch (n.op) {
    case Op::Add: return da + diff_x(sub(n.rhs));
    case Op::Sub: return da - diff_x(sub(n.rhs));
    case Op::Mul: {
        const Expr b = sub(n.rhs);
        return da * b + a * diff_x(b);
    }
    case Op::Div: {
        const Expr b = sub(n.rhs);
        return (da * b - a * diff_x(b)) / make_pow(b, 2);
    }
    case Op::Neg: return -da;
    case Op::Sin: return make_unary(Op::Cos, a) * da;
    case Op::Cos: return -(make_unary(Op::Sin, a) * da);
    case Op::Exp: return e * da;
    case Op::Log: return da / a;
    case Op::Abs: return make_unary(Op::Abs, a) / a * da;
    case Op::Pow: return Expr::constant(n.integer) * make_pow(a, n.integer - 1) * da;
    case Op::Phi: return make_phi(Op::DPhi, a, n.integer) * da;
    case Op::DPhi: {
        // Expand dphi(u, k) = (k+1) u^k sin(1/u) - u^(k-1) cos(1/u) and differentiate that.
        const int k = n.integer;
        const Expr inv = Expr::constant(1.0) / a;
        const Expr expanded = Expr::constant(k + 1) * make_pow(a, k) * make_unary(Op::Sin, inv) -
                              make_pow(a, k - 1) * make_unary(Op::Cos, inv);
        return diff_x(expanded);
    }
    default: break;
    }
    throw std::logic_error("diff_x: unhandled node");
}

// ---------------------------------------------------------------- CompiledExpr

CompiledExpr::CompiledExpr(const Expr& e, double p) : p_(p)
{
    const Expr d = diff_x(e);
    if (!d.depends_on_x()) {
        try {
            slope_ = d.eval(0.0, p);
            intercept_ = e.eval(0.0, p);
            kind_ = Kind::Affine;
            return;
        } catch (const EvalError&) {
            // fall through to the general program
        }
    } else {
        std::array<Expr, 5> derivs{e, d, Expr::constant(0.0), Expr::constant(0.0), Expr::constant(0.0)};
        for (std::size_t m = 2; m < derivs.size(); ++m) {
            derivs[m] = diff_x(derivs[m - 1]);
            if (derivs[m].depends_on_x()) {
                continue;
            }
            try {
                double factorial = 1.0;
                for (std::size_t j = 0; j <= m; ++j) {
                    factorial *= j > 0 ? static_cast<double>(j) : 1.0;
                    coeffs_[j] = derivs[j].eval(0.0, p) / factorial;
                }
                degree_ = m;
                kind_ = Kind::Polynomial;
                return;
            } catch (const EvalError&) {
                break;
            }
        }
    }
    kind_ = Kind::Program;
    std::size_t depth = 0;
    std::function<void(const Node&)> emit = [&](const Node& n) {
        if (n.lhs) emit(*n.lhs);
        if (n.rhs) emit(*n.rhs);
        code_.push_back({n.op, n.value, n.integer});
        if (is_leaf(n.op)) {
            ++depth;
        } else if (is_binary(n.op)) {
            --depth;
        }
        max_stack_ = std::max(max_stack_, depth);
    };
    emit(e.root());
}

double CompiledExpr::run(double x) const
{
    std::array<double, 64> small;
    small[0] = 0.0;
    std::vector<double> big;
    double* stack = small.data();
    if (max_stack_ > small.size()) {
        big.resize(max_stack_);
        stack = big.data();
    }
    std::size_t top = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::Const: stack[top++] = in.value; break;
        case Op::VarX: stack[top++] = x; break;
        case Op::VarP: stack[top++] = p_; break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            --top;
            stack[top - 1] = apply_binary(in.op, stack[top - 1], stack[top]);
            break;
        default: stack[top - 1] = apply_unary(in.op, stack[top - 1], in.integer); break;
        }
    }
    return stack[0];
}

} // namespace ifs
