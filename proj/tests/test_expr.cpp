#include <doctest.h>

#include "ifs/expr.hpp"

#include <cmath>
#include <random>

using namespace ifs;

namespace {

double central_difference(const Expr& e, double x, double p, double h = 1e-6)
{
    return (e.eval(x + h, p) - e.eval(x - h, p)) / (2.0 * h);
}

Expr random_expr(std::mt19937_64& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 12);
    std::uniform_real_distribution<double> val(-3.0, 3.0);
    switch (pick(rng)) {
    case 0: return Expr::x();
    case 1: return Expr::p();
    case 2: return Expr::constant(std::round(val(rng) * 1000.0) / 1000.0);
    case 3: return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
    case 4: return random_expr(rng, depth - 1) - random_expr(rng, depth - 1);
    case 5: return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
    case 6: return random_expr(rng, depth - 1) / random_expr(rng, depth - 1);
    case 7: return -random_expr(rng, depth - 1);
    case 8: return make_unary(Op::Sin, random_expr(rng, depth - 1));
    case 9: return make_unary(Op::Cos, random_expr(rng, depth - 1));
    case 10: return make_unary(Op::Exp, make_unary(Op::Sin, random_expr(rng, depth - 1)));
    case 11: return make_pow(random_expr(rng, depth - 1), static_cast<int>(rng() % 4));
    default: return make_phi(Op::Phi, random_expr(rng, depth - 1), 1 + static_cast<int>(rng() % 3));
    }
}

bool same_value(const Expr& a, const Expr& b, double x, double p)
{
    double va = 0.0;
    double vb = 0.0;
    bool fa = false;
    bool fb = false;
    try {
        va = a.eval(x, p);
    } catch (const EvalError&) {
        fa = true;
    }
    try {
        vb = b.eval(x, p);
    } catch (const EvalError&) {
        fb = true;
    }
    return fa == fb && (fa || va == vb);
}

} // namespace

TEST_CASE("parse and evaluate arithmetic")
{
    CHECK(parse_expr("2*x + 1").eval(3.0, 0.0) == 7.0);
    CHECK(parse_expr("1 + 2*3").eval(0.0, 0.0) == 7.0);
    CHECK(parse_expr("(1 + 2)*3").eval(0.0, 0.0) == 9.0);
    CHECK(parse_expr("8/4/2").eval(0.0, 0.0) == 1.0);
    CHECK(parse_expr("1 - 2 - 3").eval(0.0, 0.0) == -4.0);
    CHECK(parse_expr("-x^2").eval(3.0, 0.0) == -9.0);
    CHECK(parse_expr("pow(x, 3)").eval(2.0, 0.0) == 8.0);
    CHECK(parse_expr("pow(x, -1)").eval(4.0, 0.0) == 0.25);
    CHECK(parse_expr("2.5e-1*p").eval(0.0, 4.0) == 1.0);
    CHECK(parse_expr("abs(x - 1)").eval(0.25, 0.0) == 0.75);
}

TEST_CASE("parse builds the expected tree")
{
    const Expr e = parse_expr("p*x + 0.01");
    REQUIRE(e.root().op == Op::Add);
    CHECK(e.root().lhs->op == Op::Mul);
    CHECK(e.root().lhs->lhs->op == Op::VarP);
    CHECK(e.root().lhs->rhs->op == Op::VarX);
    CHECK(e.root().rhs->op == Op::Const);
    CHECK(e.root().rhs->value == 0.01);

    const Expr t = parse_expr("phi(p - 0.25, 3) + p*x + 0.01");
    REQUIRE(t.root().op == Op::Add);
    const Node& left = *t.root().lhs;
    REQUIRE(left.op == Op::Add);
    CHECK(left.lhs->op == Op::Phi);
    CHECK(left.lhs->integer == 3);
}

TEST_CASE("syntax errors report the offset")
{
    auto offset_of = [](const char* src) -> long {
        try {
            parse_expr(src);
        } catch (const ParseError& e) {
            return static_cast<long>(e.offset());
        }
        return -1;
    };
    CHECK(offset_of("x/ ") == 2);
    CHECK(offset_of("x +* 2") == 3);
    CHECK(offset_of("foo(x)") == 0);
    CHECK(offset_of("(x + 1") == 6);
    CHECK(offset_of("x $") == 2);
    CHECK(offset_of("phi(x, 0)") == 7);
    CHECK(offset_of("") == 0);
}

TEST_CASE("phi helper")
{
    CHECK(phi_value(0.0, 3) == 0.0);
    CHECK(phi_value(0.5, 1) == doctest::Approx(0.25 * std::sin(2.0)).epsilon(1e-15));
    CHECK(phi_value(-0.1, 3) == doctest::Approx(1e-4 * std::sin(-10.0)).epsilon(1e-14));
    for (double u : {-0.3, -0.05, 0.02, 0.4}) {
        for (int n : {1, 2, 3}) {
            const double h = 1e-7;
            const double fd = (phi_value(u + h, n) - phi_value(u - h, n)) / (2.0 * h);
            CHECK(phi_derivative(u, n) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("derivative examples")
{
    CHECK(diff_x(parse_expr("p*x + 0.01")).str() == "p");
    CHECK(diff_x(parse_expr("3.0")).str() == "0");
    const Expr d = diff_x(parse_expr("x*x*sin(1/x)"));
    const double x = 0.5;
    const double exact = 2.0 * x * std::sin(1.0 / x) - std::cos(1.0 / x);
    CHECK(d.eval(x, 0.0) == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("derivative matches central differences at random points")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> xs(0.1, 0.9);
    const char* sources[] = {
        "x*x*sin(1/x)",       "p*x + phi(p - 0.25, 3) + 0.01", "exp(x)*cos(3*x)", "log(1 + x^2)/(2 + x)",
        "phi(x - 0.5, 2)",    "abs(x - 2)*x",                  "pow(x, 5) - 3*x", "sin(p*x)/(1 + x)",
        "dphi(x - 0.3, 4)",   "x/(1 + exp(-x))",
    };
    for (const char* src : sources) {
        const Expr e = parse_expr(src);
        const Expr d = diff_x(e);
        for (int i = 0; i < 10; ++i) {
            const double x = xs(rng);
            const double p = 0.2;
            CAPTURE(src);
            CAPTURE(x);
            CHECK(d.eval(x, p) == doctest::Approx(central_difference(e, x, p)).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("printing round-trips through the parser")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pts(-1.5, 1.5);
    for (int trial = 0; trial < 500; ++trial) {
        const Expr e = random_expr(rng, 4);
        const std::string s = e.str();
        const Expr back = parse_expr(s);
        CAPTURE(s);
        CHECK(back.str() == s);
        for (int i = 0; i < 5; ++i) {
            const double x = pts(rng);
            const double p = pts(rng);
            CHECK(same_value(e, back, x, p));
        }
    }
}

TEST_CASE("binding folds the parameter")
{
    CHECK(parse_expr("p*x + p").bind_p(0.5).str() == "0.5*x + 0.5");
    CHECK(parse_expr("p*x + phi(p - 0.25, 3) + 0.01").bind_p(0.25).str() == "0.25*x + 0.01");
    CHECK(parse_expr("(1/3 + p)*x + 2/3 - p").bind_p(0.0).eval(0.0, 0.0) == doctest::Approx(2.0 / 3.0));
    CHECK_FALSE(parse_expr("sin(p)*x").bind_p(1.0).depends_on_p());
}

TEST_CASE("compiled expressions agree with the tree")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pts(0.0, 1.0);
    const char* sources[] = {"0.3*x + 0.1", "x*x", "-x", "2 - 3*x + x^3", "x^2*sin(p/(x+1))", "phi(x - 0.5, 1)",
                             "exp(-x)"};
    for (const char* src : sources) {
        const Expr e = parse_expr(src);
        const CompiledExpr c(e, 0.7);
        for (int i = 0; i < 50; ++i) {
            const double x = pts(rng);
            CAPTURE(src);
            CHECK(c(x) == doctest::Approx(e.eval(x, 0.7)).epsilon(1e-14).scale(1.0));
        }
    }
    CHECK(CompiledExpr(parse_expr("0.5*x + 0.25")).is_affine());
    CHECK_FALSE(CompiledExpr(parse_expr("x*x")).is_affine());
}

TEST_CASE("evaluation domain errors")
{
    CHECK_THROWS_AS(parse_expr("1/x").eval(0.0, 0.0), EvalError);
    CHECK_THROWS_AS(parse_expr("log(x)").eval(-1.0, 0.0), EvalError);
}
