#include <cmath>
#include <numbers>
#include <random>

#include "acx/torus.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace acx;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kNu{0.3, 1.1};

TorusBundleSpec make_spec(cplx nu, cplx lambda, cplx a = 0.0, cplx b = 0.0) {
    TorusBundleSpec s;
    s.nu = nu;
    s.lambda = lambda;
    s.a = {Expr(a.real()), Expr(a.imag())};
    s.b = {Expr(b.real()), Expr(b.imag())};
    return s;
}

// Complex ∂_φ̄ and ∂_φ of a section by fourth-order central differences in
// (φ₁, φ₂).
std::pair<cplx, cplx> fd_wirtinger(const TwistedSection& f, cplx nu, cplx phi, double h = 1e-3) {
    auto diff = [&](cplx dir) {
        return (-f.eval(nu, phi + 2.0 * h * dir) + 8.0 * f.eval(nu, phi + h * dir) - 8.0 * f.eval(nu, phi - h * dir) +
                f.eval(nu, phi - 2.0 * h * dir)) / (12 * h);
    };
    const cplx f1 = diff(1.0), f2 = diff(cplx(0, 1));
    return {0.5 * (f1 + cplx(0, 1) * f2), 0.5 * (f1 - cplx(0, 1) * f2)};
}

// 2 × the number of retained modes whose ∂_φ̄ symbol vanishes, from the
// closed-form condition m = 0 and θ + 2πn = 0.
int zero_mode_count(int mm, int nn, double theta) {
    int count = 0;
    for (int m = -mm; m <= mm; ++m)
        for (int n = -nn; n <= nn; ++n)
            if (m == 0 && std::abs(theta + 2 * kPi * n) < 1e-12) ++count;
    return 2 * count;
}

}  // namespace

TEST_CASE("complex constants") {
    CHECK(parse_complex("0.3+1.1i") == cplx(0.3, 1.1));
    CHECK(std::abs(parse_complex("exp(i*1.0)") - std::polar(1.0, 1.0)) < 1e-15);
    CHECK(std::abs(parse_complex("-(i/2)*conj(0.8-0.6i)") - cplx(0.3, -0.4)) < 1e-15);
    CHECK(std::abs(parse_complex("2*pi") - 2 * kPi) < 1e-15);
    CHECK(parse_complex("(1+i)^2") == cplx(0, 2));
    CHECK(parse_complex("1e-3i") == cplx(0, 1e-3));
    CHECK_THROWS_AS(parse_complex("1 +"), ParseError);
    CHECK_THROWS_AS(parse_complex("foo(1)"), ParseError);
    CHECK_THROWS_AS(parse_complex("x"), ParseError);
}

TEST_CASE("lattice coordinates and symbols") {
    const auto st = lattice_of(kNu, phi_of(kNu, 0.25, 0.6));
    CHECK(st[0] == doctest::Approx(0.25));
    CHECK(st[1] == doctest::Approx(0.6));
    // symbols against finite differences of single modes, with a twist
    for (const double theta : {0.0, 0.7, -2.0}) {
        for (const auto [m, n] : {std::pair{0, 0}, std::pair{1, 0}, std::pair{0, -2}, std::pair{-3, 2}}) {
            TwistedSection f(3, 3, theta);
            f(m, n) = 1.0;
            const cplx phi{0.7, 0.4};
            const auto [dbar, d] = fd_wirtinger(f, kNu, phi);
            const cplx v = f.eval(kNu, phi);
            const double scale = 1.0 + std::abs(dbar_symbol(m, n, theta, kNu));
            CHECK(std::abs(dbar - dbar_symbol(m, n, theta, kNu) * v) < 1e-8 * scale);
            CHECK(std::abs(d - d_symbol(m, n, theta, kNu) * v) < 1e-8 * scale);
        }
    }
}

TEST_CASE("twisted sections glue by lambda") {
    const double theta = 0.7;
    const auto f = TwistedSection::random(8, 8, theta, testsupport::kSeed);
    std::mt19937_64 rng(testsupport::kSeed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int used = 0;
    for (int k = 0; k < 40 && used < 20; ++k) {
        const cplx phi{u(rng), u(rng)};
        const cplx v = f.eval(kNu, phi);
        if (std::abs(v) < 0.1) continue;
        ++used;
        CHECK(std::abs(f.eval(kNu, phi + kNu) / v - std::polar(1.0, theta)) < 1e-9);
        CHECK(std::abs(f.eval(kNu, phi + 2 * kPi) / v - 1.0) < 1e-9);
    }
    CHECK(used == 20);
    // real round trip
    const auto g = TwistedSection::from_real(8, 8, theta, f.to_real());
    CHECK(g.coeffs() == f.coeffs());
}

TEST_CASE("fourier coefficients of trigonometric data are exact") {
    const auto c = fourier_coefficients([](double s, double t) { return cplx(std::cos(2 * kPi * s), std::sin(2 * kPi * (s + 2 * t))); }, 3, 3);
    auto at = [&](int p, int q) { return c[static_cast<std::size_t>((p + 3) * 7 + q + 3)]; };
    CHECK(std::abs(at(1, 0) - 0.5) < 1e-14);
    CHECK(std::abs(at(-1, 0) - 0.5) < 1e-14);
    CHECK(std::abs(at(1, 2) - cplx(0.5, 0)) < 1e-14);  // i sin x = (e^{ix} − e^{−ix})/2
    CHECK(std::abs(at(-1, -2) + cplx(0.5, 0)) < 1e-14);
    CHECK(std::abs(at(0, 0)) < 1e-14);
}

TEST_CASE("operator against pointwise evaluation") {
    // Low-mode data so every product stays inside the truncation and the
    // Galerkin output equals Lf pointwise.
    TorusBundleSpec spec = make_spec(kNu, std::polar(1.0, 0.7));
    spec.a = {parse("0.4*cos(2*pi*s) - 0.2"), parse("0.3*sin(2*pi*t)")};
    spec.b = {parse("0.5 + 0.25*sin(2*pi*(s - t))"), parse("-0.1*cos(2*pi*t)")};
    const auto op = assemble_cr_operator(spec, 4, 4);
    auto f = TwistedSection(4, 4, op.theta);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    for (int m = -2; m <= 2; ++m)
        for (int n = -2; n <= 2; ++n) f(m, n) = {z(rng), z(rng)};
    const auto lf = apply(op, f);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const double s = u(rng), t = u(rng);
        const cplx phi = phi_of(kNu, s, t);
        const cplx a{0.4 * std::cos(2 * kPi * s) - 0.2, 0.3 * std::sin(2 * kPi * t)};
        const cplx b{0.5 + 0.25 * std::sin(2 * kPi * (s - t)), -0.1 * std::cos(2 * kPi * t)};
        const cplx v = f.eval(kNu, phi);
        const cplx expected = fd_wirtinger(f, kNu, phi).first + a * v + b * std::polar(1.0, 2 * op.theta * t) * std::conj(v);
        CHECK(std::abs(lf.eval(kNu, phi) - expected) < 1e-7);  // finite-difference error
    }
}

TEST_CASE("kernel of the plain operator") {
    SUBCASE("lambda = 1: constants, modes decouple") {
        const auto op = assemble_cr_operator(make_spec(kNu, 1.0), 8, 8);
        const auto k = kernel_analysis(op);
        CHECK(k.kernel_dim == 2);
        CHECK(k.kernel_dim == zero_mode_count(8, 8, 0.0));
        TwistedSection one(8, 8, 0.0);
        one(0, 0) = cplx(0.3, -1.2);
        CHECK(apply(op, one).norm() == 0.0);
        // 2 × 2 diagonal blocks
        double off = 0.0;
        for (int r = 0; r < op.matrix.rows(); ++r)
            for (int c = 0; c < op.matrix.cols(); ++c)
                if (r / 2 != c / 2) off = std::max(off, std::abs(op.matrix(r, c)));
        CHECK(off == 0.0);
    }
    SUBCASE("lambda = exp(i): trivial kernel") {
        const auto op = assemble_cr_operator(make_spec(kNu, std::polar(1.0, 1.0)), 8, 8);
        const auto k = kernel_analysis(op);
        CHECK(k.kernel_dim == 0);
        CHECK(k.kernel_dim == zero_mode_count(8, 8, 1.0));
        double smallest = 1e300;
        for (int m = -8; m <= 8; ++m)
            for (int n = -8; n <= 8; ++n) smallest = std::min(smallest, std::abs(dbar_symbol(m, n, 1.0, kNu)));
        CHECK(k.smallest[0] == doctest::Approx(smallest).epsilon(1e-12));
        CHECK(k.smallest[0] > 0.1);
    }
    SUBCASE("lambda = -1 and the doubled lattice") {
        const auto base = kernel_analysis(assemble_cr_operator(make_spec(kNu, -1.0), 8, 8));
        CHECK(base.kernel_dim == 0);
        CHECK(base.kernel_dim == zero_mode_count(8, 8, kPi));
        const auto doubled = kernel_analysis(assemble_cr_operator(make_spec(2.0 * kNu, 1.0), 8, 8));
        CHECK(doubled.kernel_dim == 2);
    }
}

TEST_CASE("rigidity with a constant antilinear term") {
    SUBCASE("b = 1, lambda = 1") {
        const auto k8 = kernel_analysis(assemble_cr_operator(make_spec(kNu, 1.0, 0.0, 1.0), 8, 8));
        CHECK(k8.kernel_dim == 0);
        // ‖Lf‖² = ‖f_φ̄‖² + |b|²‖f‖² when b is constant, attained on constants
        CHECK(k8.smallest[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("b from a nonzero constant holomorphic coefficient, stable in the truncation") {
        const cplx big_lambda{0.8, -0.6};
        auto spec = make_spec(kNu, 1.0);
        spec.b = TorusBundleSpec::b_from_lambda_coefficient(big_lambda);
        const cplx b{spec.b[0].value(), spec.b[1].value()};
        CHECK(std::abs(-2.0 * cplx(0, 1) * std::conj(b) - big_lambda) < 1e-15);
        const auto k8 = kernel_analysis(assemble_cr_operator(spec, 8, 8));
        const auto k12 = kernel_analysis(assemble_cr_operator(spec, 12, 12));
        CHECK(k8.kernel_dim == 0);
        CHECK(k12.kernel_dim == 0);
        CHECK(k8.smallest[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(k8.smallest[0] - k12.smallest[0]) <= 0.1 * k12.smallest[0]);
    }
    SUBCASE("variable a and b") {
        auto spec = make_spec(kNu, 1.0);
        spec.a = {parse("0.3*cos(2*pi*s)"), Expr(0.0)};
        spec.b = {parse("1 + 0.2*sin(2*pi*t)"), parse("0.1*cos(2*pi*(s+t))")};
        const auto k8 = kernel_analysis(assemble_cr_operator(spec, 8, 8));
        const auto k12 = kernel_analysis(assemble_cr_operator(spec, 12, 12));
        MESSAGE("min sigma " << k8.smallest[0] << " / " << k12.smallest[0]);
        CHECK(k8.kernel_dim == 0);
        CHECK(std::abs(k8.smallest[0] - k12.smallest[0]) <= 0.1 * k12.smallest[0]);
    }
}

TEST_CASE("inhomogeneous solve") {
    auto spec = make_spec(kNu, 1.0, 0.0, 1.0);
    const auto op = assemble_cr_operator(spec, 8, 8);
    SUBCASE("zero right-hand side") {
        const auto r = solve_inhomogeneous(op, TwistedSection(8, 8, 0.0));
        CHECK(r.f.norm() == 0.0);
    }
    SUBCASE("round trip") {
        const auto fstar = TwistedSection::random(8, 8, 0.0, 5);
        const auto r = solve_inhomogeneous(op, apply(op, fstar));
        CHECK(r.residual <= 1e-10);
        double err = 0.0;
        for (std::size_t i = 0; i < fstar.coeffs().size(); ++i) err = std::max(err, std::abs(r.f.coeffs()[i] - fstar.coeffs()[i]));
        CHECK(err <= 1e-8);
    }
    SUBCASE("smooth right-hand side from expressions") {
        spec.g = std::array<Expr, 2>{parse("exp(sin(2*pi*s))*cos(2*pi*t)"), parse("1/(2 + cos(2*pi*(s - t)))")};
        const auto g = rhs_section(spec, 8, 8);
        const auto r = solve_inhomogeneous(op, g);
        CHECK(r.residual <= 1e-8);
        CHECK(r.min_sigma == doctest::Approx(1.0));
    }
    SUBCASE("near singular operator") {
        const auto flat = assemble_cr_operator(make_spec(kNu, 1.0), 4, 4);
        CHECK_THROWS_AS(solve_inhomogeneous(flat, TwistedSection(4, 4, 0.0)), NearSingular);
    }
}

TEST_CASE("energy identity") {
    SUBCASE("boundary terms cancel for a twisted section") {
        auto spec = make_spec(kNu, std::polar(1.0, 0.7), 0.0, 1.0);
        const auto f = TwistedSection::random(8, 8, 0.7, testsupport::kSeed);
        const auto e = energy_identity_residual(f, spec);
        CHECK(e.boundary[0] <= 1e-8);
        CHECK(e.boundary[1] <= 1e-8);
        CHECK(e.grids[1] == 2 * e.grids[0]);
        // constant b with a nontrivial twist is not antiholomorphic in the
        // twisted reading
        CHECK(e.hypotheses[0].pass);
        CHECK_FALSE(e.hypotheses[1].pass);
    }
    SUBCASE("zero section") {
        const auto e = energy_identity_residual(TwistedSection(6, 6, 0.0), make_spec(kNu, 1.0, 0.0, 1.0));
        CHECK(e.boundary[0] == 0.0);
        CHECK(e.boundary[1] == 0.0);
        CHECK(e.energy == 0.0);
    }
    SUBCASE("positive energy for nonzero f with b = 1, Parseval oracle") {
        const auto spec = make_spec(kNu, 1.0, 0.0, 1.0);
        const auto f = TwistedSection::random(6, 6, 0.0, 9);
        const auto e = energy_identity_residual(f, spec);
        for (const auto& h : e.hypotheses) CHECK(h.pass);
        const double area = 2 * kPi * kNu.imag();
        const double parseval = area * (f.norm() * f.norm() + f.dbar(kNu).norm() * f.dbar(kNu).norm());
        CHECK(e.energy > 0.0);
        CHECK(e.energy == doctest::Approx(parseval).epsilon(1e-12));
    }
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(assemble_cr_operator(make_spec(cplx(1.0, 0.0), 1.0)), InvalidTorusSpec);
    CHECK_THROWS_AS(assemble_cr_operator(make_spec(kNu, 1.2)), InvalidTorusSpec);
    CHECK_THROWS_AS(validate(make_spec(kNu, 0.0)), InvalidTorusSpec);
    auto spec = make_spec(kNu, 1.0);
    spec.a = {parse("cos(phi1)"), Expr(0.0)};  // 2π-periodic but not ν-periodic
    CHECK_THROWS_AS(validate(spec), InvalidTorusSpec);
    spec.a = {parse("cos(2*pi*t) + x"), Expr(0.0)};
    CHECK_THROWS_AS(validate(spec), InvalidTorusSpec);
    spec.a = {parse("cos(2*pi*t) + sin(phi1 - 0.3/1.1*phi2)"), Expr(0.0)};
    CHECK_NOTHROW(validate(spec));
}

TEST_CASE("integrability system residual") {
    std::vector<std::array<double, 2>> grid;
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) grid.push_back({-0.8 + 0.2 * i, -0.4 + 0.1 * j});
    SUBCASE("rational family") {
        const auto r = integrability_residual(parse("-x/(1+y)"), parse("-y/(1+y)"), grid);
        CHECK(r.residual <= 1e-14);
        REQUIRE(r.symbolic_zero.has_value());
        CHECK(*r.symbolic_zero);
    }
    SUBCASE("zero") {
        const auto r = integrability_residual(Expr(0.0), Expr(0.0), grid);
        CHECK(r.residual == 0.0);
        CHECK(r.symbolic_zero == true);
    }
    SUBCASE("A1 = x") {
        const auto r = integrability_residual(parse("x"), Expr(0.0), grid);
        // first equation is −x, the second is −1
        CHECK(r.per_equation[0] == doctest::Approx(0.8));
        CHECK(r.per_equation[1] == doctest::Approx(1.0));
        CHECK(r.residual == doctest::Approx(1.0));
        CHECK(r.symbolic_zero == false);
    }
    SUBCASE("non-rational data gets no symbolic verdict") {
        const auto r = integrability_residual(parse("sin(x)"), Expr(0.0), grid);
        CHECK_FALSE(r.symbolic_zero.has_value());
    }
    SUBCASE("singular coefficient") {
        CHECK_THROWS_AS(integrability_residual(Expr(0.0), parse("-1 + 0*x"), grid), SingularCoefficient);
    }
}
