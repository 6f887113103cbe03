#include <cmath>

#include "acx/expr.hpp"
#include "acx/tape.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace acx;

namespace {

double central_fd(const Expr& e, Bindings p, const std::string& var, double h) {
    const double x0 = p[var];
    p[var] = x0 + h;
    const double fp = evaluate(e, p);
    p[var] = x0 - h;
    const double fm = evaluate(e, p);
    return (fp - fm) / (2.0 * h);
}

}  // namespace

TEST_CASE("parse builds the expected trees") {
    CHECK(parse("x").op() == Op::Var);
    CHECK(parse("x").name() == "x");

    const Expr a1 = parse("-x/(1+y)");
    REQUIRE(a1.op() == Op::Div);
    CHECK(a1.arg(0).op() == Op::Neg);
    CHECK(a1.arg(0).arg(0).name() == "x");
    REQUIRE(a1.arg(1).op() == Op::Add);
    CHECK(a1.arg(1).arg(0).is_num(1.0));
    CHECK(a1.arg(1).arg(1).name() == "y");
}

TEST_CASE("operator precedence and associativity") {
    // ^ binds tighter than unary minus, which binds tighter than * and /.
    const Expr e = parse("-x^2");
    REQUIRE(e.op() == Op::Neg);
    CHECK(e.arg(0).op() == Op::Pow);
    CHECK(evaluate(e, {{"x", 3.0}}) == doctest::Approx(-9.0));

    const Expr r = parse("2^3^2");
    CHECK(evaluate(r, {}) == doctest::Approx(512.0));
    CHECK(evaluate(parse("x^-2"), {{"x", 2.0}}) == doctest::Approx(0.25));
    CHECK(evaluate(parse("8/4/2"), {}) == doctest::Approx(1.0));
    CHECK(evaluate(parse("1-2-3"), {}) == doctest::Approx(-4.0));
    CHECK(evaluate(parse("-2*3+1"), {}) == doctest::Approx(-5.0));
    CHECK(evaluate(parse("2.5e-1 * 4"), {}) == doctest::Approx(1.0));
}

TEST_CASE("parse errors carry a byte offset") {
    try {
        parse("1 + * 2");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
    }
    CHECK_THROWS_AS(parse("sin x"), ParseError);
    CHECK_THROWS_AS(parse("(x+1"), ParseError);
    CHECK_THROWS_AS(parse("x y"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    // Unknown identifiers parse fine and fail only when evaluated.
    const Expr e = parse("foo + 1");
    CHECK_THROWS_AS(evaluate(e, {}), UnboundIdentifier);
}

TEST_CASE("evaluation examples") {
    const Expr e = parse("y*(2+rho*y^2)/2");
    CHECK(evaluate(e, {{"y", 1.0}, {"rho", 3.0}}) == doctest::Approx(2.5));
    CHECK(evaluate(parse("exp(y1/2)"), {{"y1", 0.0}}) == 1.0);
    CHECK(evaluate(parse("x/(1+y)^2"), {{"x", 2.0}, {"y", 1.0}}) == doctest::Approx(0.5));
}

TEST_CASE("domain errors name the failing subexpression") {
    try {
        evaluate(parse("3 + 1/(1+y)"), {{"y", -1.0}});
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(e.subexpression() == "1/(1 + y)");
    }
    CHECK_THROWS_AS(evaluate(parse("log(x)"), {{"x", 0.0}}), DomainError);
    CHECK_THROWS_AS(evaluate(parse("sqrt(x)"), {{"x", -1.0}}), DomainError);
}

TEST_CASE("constants are bound after parsing") {
    const Expr e = parse("rho*y");
    const Expr bound = bind_constants(e, {{"rho", 2.0}});
    CHECK(free_identifiers(bound) == std::vector<std::string>{"y"});
    CHECK(evaluate(bound, {{"y", 1.5}}) == doctest::Approx(3.0));
}

TEST_CASE("symbolic derivatives of a rational integrable pair") {
    const Expr a2 = parse("-y/(1+y)");
    const Expr a1 = parse("-x/(1+y)");
    const Expr da2 = differentiate(a2, "y");
    const Expr da1 = differentiate(a1, "y");
    const Expr dx_c = differentiate(parse("c"), "x");
    CHECK(dx_c.is_num(0.0));
    for (double y : {-0.5, -0.2, 0.0, 0.3, 1.7}) {
        const Bindings p{{"x", 0.7}, {"y", y}};
        const double expect2 = -1.0 / ((1 + y) * (1 + y));
        const double expect1 = 0.7 / ((1 + y) * (1 + y));
        CHECK(evaluate(da2, p) == doctest::Approx(expect2).epsilon(1e-13));
        CHECK(evaluate(da1, p) == doctest::Approx(expect1).epsilon(1e-13));
        CHECK(evaluate(da2, p) == doctest::Approx(central_fd(a2, p, "y", 1e-5)).epsilon(1e-8));
    }
}

TEST_CASE("print then parse round-trips structurally") {
    for (const char* s : {"-x/(1+y)", "x^-2", "(-2)^x", "-(a*b)", "a - (b - c)", "a/(b/c)", "(a^b)^c", "a^b^c",
                          "sin(-x)*cos(x^2)", "x - -2", "1e-20*x + 1e+20", "-x^2", "exp(y1/2)/2"}) {
        const Expr e = parse(s);
        const std::string printed = to_string(e);
        INFO(s, " -> ", printed);
        CHECK(structurally_equal(parse(printed), e));
    }
}

TEST_CASE("property: symbolic derivative agrees with central differences") {
    testsupport::ExprGen gen({"x", "y", "z"}, testsupport::kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int failures = 0;
    for (int k = 0; k < 100; ++k) {
        const Expr e = gen(4);
        const Bindings p{{"x", u(gen.rng())}, {"y", u(gen.rng())}, {"z", u(gen.rng())}};
        for (const char* v : {"x", "y", "z"}) {
            const double sym = evaluate(differentiate(e, v), p);
            const double fd = central_fd(e, p, v, 1e-5);
            if (std::abs(sym - fd) > 1e-6 * (1.0 + std::abs(sym))) {
                ++failures;
                MESSAGE("mismatch for ", to_string(e), " d/d", v, ": ", sym, " vs ", fd);
            }
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("property: print/parse round trip on random trees") {
    testsupport::ExprGen gen({"x", "y", "z"}, testsupport::kSeed + 1);
    for (int k = 0; k < 100; ++k) {
        const Expr e = gen(5);
        CHECK(structurally_equal(parse(to_string(e)), e));
    }
}

TEST_CASE("tape evaluation agrees with the tree walker and jets give exact derivatives") {
    testsupport::ExprGen gen({"x", "y", "z"}, 7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 30; ++k) {
        const Expr e = gen(4);
        const Tape tape(std::span<const Expr>(&e, 1), {"x", "y", "z"});
        const std::vector<double> x{u(gen.rng()), u(gen.rng()), u(gen.rng())};
        const Bindings p{{"x", x[0]}, {"y", x[1]}, {"z", x[2]}};
        const double v = evaluate(e, p);
        CHECK(tape(x)[0] == doctest::Approx(v).epsilon(1e-12));
        const auto j = tape.jets_at<3>(x);
        CHECK(j[0].value() == doctest::Approx(v).epsilon(1e-12));
        const Expr dx = differentiate(e, "x");
        const Expr dxy = differentiate(dx, "y");
        const Expr dxyz = differentiate(dxy, "z");
        CHECK(j[0].d(0) == doctest::Approx(evaluate(dx, p)).epsilon(1e-10));
        CHECK(j[0].partial({1, 1, 0, 0}) == doctest::Approx(evaluate(dxy, p)).epsilon(1e-9));
        CHECK(j[0].partial({1, 1, 1, 0}) == doctest::Approx(evaluate(dxyz, p)).epsilon(1e-8));
    }
}

TEST_CASE("finite-difference jet mode approximates exact jets") {
    const Expr e = parse("sin(x)*exp(y) + x^3*y^2");
    const Tape tape(std::span<const Expr>(&e, 1), {"x", "y"});
    const std::vector<double> x{0.3, -0.4};
    const auto exact = tape.jets_at<3>(x);
    std::vector<Jet<3>> fd;
    {
        ScopedDerivativeMode mode(DerivativeMode::FiniteDifference);
        fd = tape.jets_at<3>(x);
    }
    for (int i = 0; i < Jet<3>::size; ++i) CHECK(fd[0].coeff(i) == doctest::Approx(exact[0].coeff(i)).epsilon(1e-6));
}

TEST_CASE("tape shares structurally equal subexpressions") {
    const Expr a = parse("sin(x*y) + sin(x*y)");
    const Tape t(std::span<const Expr>(&a, 1), {"x", "y"});
    CHECK(t.num_instructions() == 5);  // x, y, x*y, sin, +
}

TEST_CASE("exact zero test for rational expressions") {
    CHECK(vanishes_identically(parse("(x+y)^2 - x^2 - 2*x*y - y^2")) == true);
    CHECK(vanishes_identically(parse("x/(1+x^2) - x*(1+x^2)^(-1)")) == true);
    CHECK(vanishes_identically(parse("0.1*x*3 - 0.3*x")) == false);  // binary rounding is visible
    CHECK(vanishes_identically(parse("0.5*x*4 - 2*x")) == true);
    CHECK(vanishes_identically(parse("(x+y)^2 - x^2 - y^2")) == false);
    CHECK_FALSE(vanishes_identically(parse("sin(x) - sin(x)")).has_value());
    CHECK_FALSE(vanishes_identically(parse("x^0.5")).has_value());
    // differentiated rational expressions stay rational
    const Expr f = parse("x^3/(1+y^2)");
    CHECK(vanishes_identically(differentiate(differentiate(f, "x"), "y") - differentiate(differentiate(f, "y"), "x")) == true);
}
