#include <cmath>
#include <numbers>
#include <random>

#include "acx/frames.hpp"
#include "doctest.h"
#include "structures.hpp"
#include "support.hpp"

using namespace acx;
using teststructs::E;

namespace {

// Distance between the spans of two orthonormal pairs (projector difference).
double plane_distance(const std::array<Vec<double>, 2>& a, const std::vector<Vec<double>>& b) {
    Eigen::MatrixXd pa = Eigen::MatrixXd::Zero(4, 4), pb = Eigen::MatrixXd::Zero(4, 4);
    for (const auto& v : a) pa += to_eigen(v) * to_eigen(v).transpose();
    for (const auto& v : b) pb += to_eigen(v) * to_eigen(v).transpose();
    return (pa - pb).cwiseAbs().maxCoeff();
}

Vec<double> e(int i) {
    Vec<double> v(4, 0.0);
    v[i] = 1.0;
    return v;
}

// Push J forward by the triangular diffeomorphism
//   y3 = x3, y2 = x2 + a x3², y1 = x1 + b x2 x3, y0 = x0 + c x1.
struct Shear {
    double a = 0.3, b = -0.4, c = 0.25;

    Point forward(const Point& x) const {
        return {x[0] + c * x[1], x[1] + b * x[2] * x[3], x[2] + a * x[3] * x[3], x[3]};
    }
    Mat<double> jacobian(const Point& x) const {
        Mat<double> m = Mat<double>::identity(4);
        m(0, 1) = c;
        m(1, 2) = b * x[3];
        m(1, 3) = b * x[2];
        m(2, 3) = 2 * a * x[3];
        return m;
    }
    AlmostComplexField push(const AlmostComplexField& jf) const {
        const auto& names = jf.chart().coords;
        std::vector<Expr> y;
        for (const auto& n : names) y.push_back(Expr::var(n));
        // inverse map expressed in the target coordinates (same names)
        const Expr x3 = y[3];
        const Expr x2 = y[2] - Expr(a) * x3 * x3;
        const Expr x1 = y[1] - Expr(b) * x2 * x3;
        const Expr x0 = y[0] - Expr(c) * x1;
        std::map<std::string, Expr, std::less<>> sub{{names[0], x0}, {names[1], x1}, {names[2], x2}, {names[3], x3}};
        std::vector<Expr> d = {Expr(1.0), Expr(c),   Expr(0.0),        Expr(0.0),       //
                               Expr(0.0), Expr(1.0), Expr(b) * x3,     Expr(b) * x2,    //
                               Expr(0.0), Expr(0.0), Expr(1.0),        Expr(2 * a) * x3,  //
                               Expr(0.0), Expr(0.0), Expr(0.0),        Expr(1.0)};
        std::vector<Expr> jx;
        for (const Expr& en : jf.entries()) jx.push_back(substitute(en, sub));
        const auto r = matmul_expr(matmul_expr(d, jx, 4), inverse_expr(d, 4), 4);
        return AlmostComplexField(jf.chart(), r);
    }
};

}  // namespace

TEST_CASE("characteristic plane") {
    CHECK_FALSE(characteristic_plane(AlmostComplexField::standard(Chart({"a", "b", "c", "d"})), {0.1, 0.2, 0.3, 0.4}));

    const auto ex1 = teststructs::parallel_example();
    for (const Point& p : sample_grid(ex1.chart(), 3)) {
        const auto pl = characteristic_plane(ex1, p);
        REQUIRE(pl);
        CHECK(plane_distance(*pl, {e(0), e(1)}) < 1e-12);
    }
    // ρ = 2 on the torus: ξ = -∂y, Jξ = ∂x
    const auto w = teststructs::winding(2.0);
    const auto pl = characteristic_plane(w, {0.3, 0.6, 0.0, 0.0});
    REQUIRE(pl);
    CHECK(plane_distance(*pl, {e(2), e(3)}) < 1e-12);
}

TEST_CASE("derived flag ranks") {
    CHECK(derived_flag(AlmostComplexField::standard(Chart({"a", "b", "c", "d"})), {0, 0, 0, 0}).ranks == FlagRanks{0, 0, 0});

    const auto w = teststructs::winding(1.0);
    CHECK(derived_flag(w, {0.1, 0.2, 0.15, -0.1}).ranks == FlagRanks{2, 3, 4});
    // On the torus itself [Π², Π³] stays inside Π³.
    CHECK(derived_flag(w, {0.1, 0.2, 0.0, 0.0}).ranks == FlagRanks{2, 3, 3});

    const auto fam = teststructs::integrable_plane_family();
    for (const Point& p : random_points(fam.chart(), 10, testsupport::kSeed)) {
        const auto f = derived_flag(fam, p);
        CHECK(f.ranks.pi2 == 2);
        CHECK(f.ranks.pi3 == 2);
        // Π² is tangent to the fibres {phi = const}
        CHECK(plane_distance({f.pi2[0], f.pi2[1]}, {e(2), e(3)}) < 1e-10);
    }
}

TEST_CASE("canonical frame of the winding structure satisfies the frame tables") {
    const auto w = teststructs::winding(1.0);
    for (const Point& p : {Point{0.0, 0.0, 0.0, 0.0}, Point{0.3, 0.7, 0.0, 0.0}, Point{0.1, 0.2, 0.1, 0.1}}) {
        const auto f = canonical_frame(w, p);
        const auto r = frame_residuals(w, f);
        CHECK(r.j_table <= 1e-12);
        CHECK(r.n_table <= 1e-9);
        CHECK(r.bracket <= 1e-6);
        CHECK(f.sign_rule == "first-nonzero-component-positive");
    }
}

TEST_CASE("canonical frame of generic perturbations") {
    const auto base = teststructs::winding(1.0);
    Chart box = base.chart();
    box.box = {{{-0.3, 0.3}}, {{-0.3, 0.3}}, {{-0.3, 0.3}}, {{-0.3, 0.3}}};
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const auto jf = teststructs::perturbed(base, seed);
        for (const Point& p : random_points(box, 5, seed)) {
            const auto f = canonical_frame(jf, p);
            const auto r = frame_residuals(jf, f);
            CHECK(r.j_table <= 1e-12);
            CHECK(r.n_table <= 1e-6);
            CHECK(r.bracket <= 1e-6);
        }
    }
}

TEST_CASE("N(., xi3) is orientation reversing on the plane") {
    const auto jf = teststructs::perturbed(teststructs::winding(1.0), 5);
    const Point p{0.1, -0.1, 0.05, 0.2};
    const auto f = canonical_frame(jf, p);
    const auto n = nijenhuis_at(jf, p);
    // matrix of N(., xi3) in the basis (xi1, xi2)
    Eigen::MatrixXd basis(4, 2);
    basis << to_eigen(f.xi[0]), to_eigen(f.xi[1]);
    Eigen::MatrixXd m(2, 2);
    for (int c = 0; c < 2; ++c) m.col(c) = basis.colPivHouseholderQr().solve(to_eigen(n.apply(f.xi[c], f.xi[2])));
    CHECK(m.determinant() < 0);
    CHECK(m.determinant() == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("flat J has no frame") {
    CHECK_THROWS_AS(canonical_frame(AlmostComplexField::standard(Chart({"a", "b", "c", "d"})), {0, 0, 0, 0}), DegenerateFlag);
    // Π² integrable: Π³ = Π², the frame is undefined
    CHECK_THROWS_AS(canonical_frame(teststructs::integrable_plane_family(), {0.1, 0.2, 0.1, 0.1}), DegenerateFlag);
}

TEST_CASE("structure functions") {
    const auto w = teststructs::winding(1.0);
    const Point p{0.2, 0.4, 0.0, 0.0};
    const auto s1 = structure_functions(w, p, 1e-4);
    // [xi1, xi2] = xi3
    CHECK(std::abs(s1.c[2][0][1] - 1.0) <= 1e-6);
    CHECK(std::abs(s1.c[0][0][1]) <= 1e-6);
    CHECK(std::abs(s1.c[1][0][1]) <= 1e-6);
    CHECK(std::abs(s1.c[3][0][1]) <= 1e-6);
    const auto s2 = structure_functions(w, p, 5e-5);
    double diff = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) diff = std::max(diff, std::abs(s1.c[i][j][k] - s2.c[i][j][k]));
    CHECK(diff <= 1e-4);
}

TEST_CASE("structure functions are invariant under a diffeomorphism") {
    const auto jf = teststructs::perturbed(teststructs::winding(1.0), 7);
    const Shear sh;
    const auto pushed = sh.push(jf);
    for (const Point& p : {Point{0.1, 0.05, -0.1, 0.2}, Point{-0.2, 0.1, 0.15, -0.05}}) {
        const auto f = canonical_frame(jf, p);
        const Point q = sh.forward(p);
        const Vec<double> ref = sh.jacobian(p) * f.xi[0];
        const auto g = canonical_frame(pushed, q, {}, &ref);
        for (int a = 0; a < 4; ++a) CHECK(max_abs(g.xi[a] - sh.jacobian(p) * f.xi[a]) <= 1e-8);
        const auto c1 = structure_functions(jf, p);
        const auto c2 = structure_functions(pushed, q, 1e-4, &ref);
        double diff = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) diff = std::max(diff, std::abs(c1.c[i][j][k] - c2.c[i][j][k]));
        CHECK(diff <= 1e-4);
    }
}

TEST_CASE("property: frame and its sign do not depend on the spanning choice (100 random cases)") {
    std::mt19937_64 rng(testsupport::kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto base = teststructs::winding(1.0);
    std::vector<AlmostComplexField> structs;
    for (unsigned s = 0; s < 10; ++s) structs.push_back(teststructs::perturbed(base, 100 + s));
    int failures = 0;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto& jf = structs[static_cast<std::size_t>(k % 10)];
        Point p(4);
        for (auto& x : p) x = 0.3 * u(rng);
        FrameOptions opt;
        opt.span_scale = std::exp(2.0 * u(rng));
        opt.span_rotation = std::numbers::pi * u(rng);
        const auto f0 = canonical_frame(jf, p);
        const auto f1 = canonical_frame(jf, p, opt);
        double d = 0.0;
        for (int a = 0; a < 4; ++a) d = std::max(d, max_abs(f0.xi[a] - f1.xi[a]));
        worst = std::max(worst, d);
        if (d > 1e-8) ++failures;
    }
    MESSAGE("worst frame difference under respanning ", worst);
    CHECK(failures == 0);
}

TEST_CASE("sign propagates continuously along a path") {
    const auto jf = teststructs::perturbed(teststructs::winding(1.0), 21);
    std::vector<Point> path;
    for (int k = 0; k <= 40; ++k) {
        const double t = k / 40.0;
        path.push_back({0.3 * std::cos(6.0 * t), 0.3 * std::sin(6.0 * t), 0.1 * t, -0.1 * t});
    }
    const auto frames = frames_along_path(jf, path);
    for (std::size_t k = 1; k < frames.size(); ++k) CHECK(dot(frames[k].xi[0], frames[k - 1].xi[0]) > 0);
}

TEST_CASE("singular loci scans") {
    const Chart c({"a", "b", "c", "d"}, {{{-1, 1}}, {{-1, 1}}, {{-1, 1}}, {{-1, 1}}});
    const auto grid = sample_grid(c, 3);
    const auto flat = scan_singular_loci(AlmostComplexField::standard(c), grid);
    CHECK(flat.nijenhuis_zero.size() == grid.size());

    const auto ex1 = teststructs::parallel_example();
    const auto g1 = sample_grid(ex1.chart(), 3);
    const auto s1 = scan_singular_loci(ex1, g1);
    CHECK(s1.nijenhuis_zero.empty());
    CHECK(s1.pi3_degenerate.size() == g1.size());

    // avoid the torus x = y = 0 where [Π², Π³] ⊂ Π³
    const auto w = teststructs::winding(1.0);
    std::vector<Point> g;
    for (double phi : {0.0, 0.5})
        for (double psi : {0.0, 0.5})
            for (double x : {-0.25, 0.1, 0.3})
                for (double y : {-0.2, 0.15}) g.push_back({phi, psi, x, y});
    const auto sw = scan_singular_loci(w, g);
    CHECK(sw.nijenhuis_zero.empty());
    CHECK(sw.pi3_degenerate.empty());
    CHECK(sw.pi4_degenerate.empty());
}
