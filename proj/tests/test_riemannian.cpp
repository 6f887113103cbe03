#include <cmath>
#include <numbers>
#include <random>

#include "acx/riemannian.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace acx;

namespace {

constexpr double kPi = std::numbers::pi;
Expr E(const char* s) { return parse(s); }

MetricField round_sphere(double r) {
    const Chart c({"theta", "phi"}, {{{0.3, 2.8}, {0.0, 2 * kPi}}}, {0.0, 2 * kPi});
    const Expr r2(r * r);
    return MetricField(c, {r2, Expr(0.0), Expr(0.0), r2 * pow(sin(Expr::var("theta")), Expr(2.0))});
}

// I + small symmetric perturbation built from random expressions.
MetricField random_metric(const Chart& c, unsigned seed) {
    testsupport::ExprGen gen(c.coords, seed);
    const int n = c.dim();
    std::vector<Expr> e(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const Expr p = Expr(0.04) * sin(gen(3));
            e[static_cast<std::size_t>(i * n + j)] = (i == j ? Expr(1.0) + p : p);
            e[static_cast<std::size_t>(j * n + i)] = e[static_cast<std::size_t>(i * n + j)];
        }
    return MetricField(c, e);
}

ParamSurface sphere_in_r3(double r) {
    const Chart c({"x", "y", "z"});
    const Expr rr(r);
    const Expr th = Expr::var("s"), ph = Expr::var("t");
    return ParamSurface(c, {"s", "t"}, {rr * sin(th) * cos(ph), rr * sin(th) * sin(ph), rr * cos(th)}, {{{0.3, 2.8}, {0.0, 2 * kPi}}},
                        {0.0, 2 * kPi});
}

// Round S³ in hyperspherical coordinates.
MetricField s3() {
    const Chart c({"chi", "theta", "phi"});
    const Expr sc = pow(sin(Expr::var("chi")), Expr(2.0));
    return MetricField(c, {Expr(1.0), Expr(0.0), Expr(0.0), Expr(0.0), sc, Expr(0.0), Expr(0.0), Expr(0.0),
                           sc * pow(sin(Expr::var("theta")), Expr(2.0))});
}

ParamSurface s3_band(double chi) {
    return ParamSurface(Chart({"chi", "theta", "phi"}), {"s", "t"}, {Expr(chi), Expr::var("s"), Expr::var("t")},
                        {{{0.5, 2.5}, {0.0, 2 * kPi}}}, {0.0, 2 * kPi});
}

}  // namespace

TEST_CASE("levi-civita") {
    SUBCASE("euclidean metric has zero symbols") {
        const Chart c({"a", "b", "x", "y"});
        const auto nabla = levi_civita(MetricField::euclidean(c));
        for (const auto& g : nabla.christoffel()) CHECK(g.is_num(0.0));
    }
    SUBCASE("round sphere") {
        const auto g = round_sphere(2.0);
        const auto nabla = levi_civita(g);
        for (const double th : {0.4, 1.0, 2.2}) {
            const auto gam = nabla.at({th, 0.7});
            CHECK(gam(0, 1, 1) == doctest::Approx(-std::sin(th) * std::cos(th)).epsilon(1e-12));
            CHECK(gam(1, 0, 1) == doctest::Approx(std::cos(th) / std::sin(th)).epsilon(1e-12));
            CHECK(gam(0, 0, 0) == 0.0);
        }
    }
    SUBCASE("random metrics: metricity, symmetry, finite-difference oracle") {
        for (unsigned seed = 1; seed <= 4; ++seed) {
            const Chart c = seed % 2 ? Chart({"u", "v", "w"}) : Chart({"a", "b", "x", "y"});
            const auto g = random_metric(c, seed);
            const auto pts = random_points(c, 8, seed);
            check_metric(g, pts);
            const auto nabla = levi_civita(g);
            for (const auto& r : check_levi_civita(nabla, g, pts)) {
                CHECK(r.pass);
                CHECK(r.residual <= 1e-10);
            }
            // ∂_k g_ij by central differences
            const int n = c.dim();
            const double h = 1e-5;
            double worst = 0.0;
            for (const auto& p : pts) {
                const auto gam = nabla.at(p);
                const auto g0 = g.at(p);
                for (int k = 0; k < n; ++k) {
                    auto pp = p, pm = p;
                    pp[k] += h;
                    pm[k] -= h;
                    const auto gp = g.at(pp), gm = g.at(pm);
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) {
                            double v = (gp(i, j) - gm(i, j)) / (2 * h);
                            for (int l = 0; l < n; ++l) v -= gam(l, k, i) * g0(l, j) + gam(l, k, j) * g0(i, l);
                            worst = std::max(worst, std::abs(v));
                        }
                }
            }
            CHECK(worst <= 1e-8);
        }
    }
}

TEST_CASE("curvature") {
    SUBCASE("flat") {
        const Chart c({"a", "b", "x", "y"});
        CHECK(CurvatureField(levi_civita(MetricField::euclidean(c))).at({0.1, 0.2, 0.3, 0.4}).max_abs() == 0.0);
    }
    SUBCASE("round sphere has sectional curvature 1/r^2") {
        for (const double r : {1.0, 2.0, 0.5}) {
            const auto g = round_sphere(r);
            const CurvatureField curv(levi_civita(g));
            for (const double th : {0.5, 1.3, 2.4}) {
                const Point p{th, 1.0};
                CHECK(sectional_curvature(curv.at(p), g.at(p), {1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0 / (r * r)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("round S3") {
        const auto g = s3();
        const CurvatureField curv(levi_civita(g));
        const Point p{1.1, 0.8, 0.3};
        const auto r = curv.at(p);
        CHECK(sectional_curvature(r, g.at(p), {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}) == doctest::Approx(1.0));
        CHECK(sectional_curvature(r, g.at(p), {0.3, -1.0, 0.0}, {0.2, 0.5, 1.0}) == doctest::Approx(1.0));
    }
    SUBCASE("identities and the metric-jet route agree") {
        for (unsigned seed = 5; seed <= 8; ++seed) {
            const Chart c = seed % 2 ? Chart({"u", "v", "w"}) : Chart({"a", "b", "x", "y"});
            const auto g = random_metric(c, seed);
            const CurvatureField curv(levi_civita(g));
            const auto pts = random_points(c, 6, seed);
            for (const auto& r : check_curvature_identities(curv, pts)) CHECK(r.pass);
            for (const auto& p : pts) {
                std::vector<Jet<2>> in;
                for (int i = 0; i < c.dim(); ++i) in.push_back(Jet<2>::variable(i, p[i]));
                const auto a = curv.at(p);
                const auto b = riemann_from_metric_jets(g.jets<2>(std::span<const Jet<2>>(in)));
                double diff = 0.0;
                for (std::size_t k = 0; k < a.v.size(); ++k) diff = std::max(diff, std::abs(a.v[k] - b.v[k]));
                CHECK(diff <= 1e-11);
            }
        }
    }
}

TEST_CASE("submanifold tensors") {
    SUBCASE("plane in flat space") {
        const Chart c({"x", "y", "z", "w"});
        const ParamSurface l(c, {"s", "t"}, {E("s + t"), E("s - 2*t"), E("0.5*s"), E("0")}, {{{-1.0, 1.0}, {-1.0, 1.0}}});
        const auto d = submanifold_tensors(MetricField::euclidean(c), l, {0.2, -0.3});
        CHECK(d.codim == 2);
        for (int al = 0; al < 2; ++al) {
            CHECK(max_abs(d.pi[al].col(0)) + max_abs(d.pi[al].col(1)) <= 1e-14);
            CHECK(max_abs(d.shape[al].col(0)) + max_abs(d.shape[al].col(1)) <= 1e-14);
        }
        CHECK(d.r_hat.max_abs() <= 1e-14);
    }
    SUBCASE("sphere in R3: second fundamental form and duality") {
        for (const double r : {1.0, 2.0}) {
            const auto l = sphere_in_r3(r);
            const auto g = MetricField::euclidean(l.target());
            std::mt19937_64 rng(testsupport::kSeed);
            std::uniform_real_distribution<double> us(0.4, 2.7), ut(0.0, 6.0), uv(-1.0, 1.0);
            for (int k = 0; k < 10; ++k) {
                const auto d = submanifold_tensors(g, l, {us(rng), ut(rng)});
                CHECK(d.codim == 1);
                // |Π(X, Y)| = g(X, Y)/r along the unit normal
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) CHECK(std::abs(std::abs(d.pi[0](a, b)) - d.h(a, b) / r) <= 1e-12);
                CHECK((d.pi[0](0, 0) > 0.0) == (d.pi[0](1, 1) > 0.0));
                // g(A(X, V), Y) = g(Π(X, Y), V) for random X, Y, V
                const double x[2]{uv(rng), uv(rng)}, y[2]{uv(rng), uv(rng)}, v = uv(rng);
                double lhs = 0.0, rhs = 0.0;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        rhs += v * d.pi[0](a, b) * x[a] * y[b];
                        for (int c = 0; c < 2; ++c) lhs += v * d.shape[0](c, a) * x[a] * d.h(c, b) * y[b];
                    }
                CHECK(std::abs(lhs - rhs) <= 1e-9);
                CHECK(d.intrinsic_curvature == doctest::Approx(1.0 / (r * r)).epsilon(1e-10));
                CHECK(d.curvature_from_pi == doctest::Approx(1.0 / (r * r)).epsilon(1e-10));
            }
        }
    }
    SUBCASE("degenerate inputs") {
        const Chart c({"x", "y", "z"});
        const ParamSurface bad(c, {"s", "t"}, {E("s + t"), E("s + t"), E("0")}, {{{-1.0, 1.0}, {-1.0, 1.0}}});
        CHECK_THROWS_AS(submanifold_tensors(MetricField::euclidean(c), bad, {0.1, 0.2}), DegenerateSubmanifold);
        const MetricField neg(c, {E("1"), E("0"), E("0"), E("0"), E("1"), E("0"), E("0"), E("0"), E("-1")});
        const ParamSurface plane(c, {"s", "t"}, {E("s"), E("t"), E("0")}, {{{-1.0, 1.0}, {-1.0, 1.0}}});
        CHECK_THROWS_AS(submanifold_tensors(neg, plane, {0.1, 0.2}), DegenerateMetric);
    }
}

TEST_CASE("structure equations") {
    SUBCASE("plane in flat space: all zero") {
        const Chart c({"x", "y", "z"});
        const ParamSurface l(c, {"s", "t"}, {E("s"), E("t"), E("0")}, {{{-1.0, 1.0}, {-1.0, 1.0}}});
        const auto r = gauss_codazzi_ricci_residuals(MetricField::euclidean(c), l, l.grid(4, 4));
        CHECK(r.gauss.residual == 0.0);
        CHECK(r.codazzi.residual == 0.0);
        CHECK(r.ricci.residual == 0.0);
        CHECK(r.max_pi == 0.0);
    }
    SUBCASE("sphere in R3") {
        for (const double rad : {1.0, 2.0}) {
            const auto l = sphere_in_r3(rad);
            const auto r = gauss_codazzi_ricci_residuals(MetricField::euclidean(l.target()), l, l.grid(5, 6));
            CHECK(r.gauss.pass);
            CHECK(r.codazzi.pass);
            CHECK(r.ricci.pass);
            CHECK(r.gauss_curvature.pass);
            CHECK(r.rhat_corrected.pass);
            // R̂ carries the intrinsic curvature, R_g is zero
            CHECK(r.rhat_difference == doctest::Approx(1.0 / (rad * rad)).epsilon(0.5));
        }
    }
    SUBCASE("totally geodesic sphere in S3: horizontal curvatures agree") {
        const auto l = s3_band(kPi / 2);
        const auto r = gauss_codazzi_ricci_residuals(s3(), l, l.grid(5, 5));
        CHECK(r.max_pi <= 1e-12);
        CHECK(r.rhat_difference <= 1e-7);
        CHECK(r.gauss.pass);
        CHECK(r.codazzi.pass);
        CHECK(r.ricci.pass);
        const auto d = submanifold_tensors(s3(), l, {1.0, 0.4});
        CHECK(d.intrinsic_curvature == doctest::Approx(1.0));
    }
    SUBCASE("non-geodesic sphere in S3: the Π-terms account for the difference") {
        const auto l = s3_band(1.0);
        const auto r = gauss_codazzi_ricci_residuals(s3(), l, l.grid(5, 5));
        CHECK(r.max_pi > 0.1);
        CHECK(r.rhat_difference > 1e-2);
        CHECK(r.rhat_corrected.pass);
        CHECK(r.gauss_curvature.pass);
        // intrinsic curvature of the latitude sphere of radius sin(1)
        const auto d = submanifold_tensors(s3(), l, {1.0, 0.4});
        CHECK(d.intrinsic_curvature == doctest::Approx(1.0 / (std::sin(1.0) * std::sin(1.0))));
    }
    SUBCASE("surface in R4 with normal curvature fixes the Ricci sign") {
        const Chart c({"x", "y", "u", "v"});
        const ParamSurface l(c, {"s", "t"}, {E("s"), E("t"), E("s^2 - t^2"), E("2*s*t")}, {{{-0.5, 0.5}, {-0.5, 0.5}}});
        const auto r = gauss_codazzi_ricci_residuals(MetricField::euclidean(c), l, l.grid(4, 4));
        CHECK(r.gauss.pass);
        CHECK(r.codazzi.pass);
        CHECK(r.ricci.pass);
        CHECK(r.ricci_flipped > 1e-2);
        CHECK(r.rhat_corrected.pass);
    }
    SUBCASE("random curved ambient, codimension 2") {
        for (unsigned seed = 11; seed <= 13; ++seed) {
            const Chart c({"a", "b", "x", "y"});
            const auto g = random_metric(c, seed);
            const ParamSurface l(c, {"s", "t"}, {E("s"), E("t + 0.3*s^2"), E("0.4*sin(s*t) + 0.2*t"), E("0.3*cos(s) - 0.5*t^2")},
                                 {{{-0.6, 0.6}, {-0.6, 0.6}}});
            const auto r = gauss_codazzi_ricci_residuals(g, l, l.grid(3, 3));
            CHECK(r.gauss.pass);
            CHECK(r.codazzi.pass);
            CHECK(r.ricci.pass);
            CHECK(r.gauss_curvature.pass);
            CHECK(r.rhat_corrected.pass);
            CHECK(r.codazzi_flipped > 1e-3);
        }
    }
}
