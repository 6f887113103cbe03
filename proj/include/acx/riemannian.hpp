#pragma once

// Riemannian companion: Levi-Civita connection, curvature, the second
// fundamental form, shape operator and normal curvature of a surface, the
// Gauss, Codazzi and Ricci equations, and the curvature of the total space
// of the normal bundle with the metric induced by the normal connection.
//
// Curvature convention: R(X, Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y], stored as
// R(∂_i, ∂_j)∂_k = Σ_l R(l, i, j, k) ∂_l.

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "acx/connections.hpp"
#include "acx/curves.hpp"
#include "acx/geom.hpp"

namespace acx {

class MetricField {
public:
    MetricField() = default;
    // entries[i*n + j] = g_ij; must be symmetric entrywise (structurally or
    // numerically, see check_metric).
    MetricField(Chart chart, std::vector<Expr> entries);
    static MetricField euclidean(const Chart& chart);

    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    const Expr& entry(int i, int j) const { return entries_[static_cast<std::size_t>(i * dim() + j)]; }
    const std::vector<Expr>& entries() const { return entries_; }

    Mat<double> at(const Point& p) const;
    template <int K>
    Mat<Jet<K>> jets(std::span<const Jet<K>> p) const {
        const auto flat = tape_->jets<K>(p);
        const int n = dim();
        Mat<Jet<K>> m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = flat[static_cast<std::size_t>(i * n + j)];
        return m;
    }

private:
    Chart chart_;
    std::vector<Expr> entries_;
    std::shared_ptr<const Tape> tape_;
};

class DegenerateMetric : public std::domain_error {
public:
    DegenerateMetric(const std::string& what, Point at, double min_eigenvalue)
        : std::domain_error(what), at_(std::move(at)), min_eig_(min_eigenvalue) {}
    const Point& at() const { return at_; }
    double min_eigenvalue() const { return min_eig_; }

private:
    Point at_;
    double min_eig_;
};

// Symmetry (≤ 1e-12 relative) and positive definiteness at the points.
// Throws DegenerateMetric at the first failing point.
void check_metric(const MetricField& g, const std::vector<Point>& points);

// Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij), symbolic.
ConnectionField levi_civita(const MetricField& g);

// "metricity" |∇g| and "symmetry" |Γ^k_ij − Γ^k_ji| at the points (1e-10).
std::vector<CheckResult> check_levi_civita(const ConnectionField& nabla, const MetricField& g, const std::vector<Point>& points);

struct Riemann {
    int n = 0;
    std::vector<double> v;

    Riemann() = default;
    explicit Riemann(int dim) : n(dim), v(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}
    double& operator()(int l, int i, int j, int k) { return v[static_cast<std::size_t>(((l * n + i) * n + j) * n + k)]; }
    double operator()(int l, int i, int j, int k) const { return v[static_cast<std::size_t>(((l * n + i) * n + j) * n + k)]; }
    // R(x, y)z
    Vec<double> apply(const Vec<double>& x, const Vec<double>& y, const Vec<double>& z) const;
    double max_abs() const;
};

// Riemann tensor from a symbolic connection, evaluated pointwise with exact
// first derivatives of the Christoffel symbols.
class CurvatureField {
public:
    // Throws std::logic_error for sampled connections.
    explicit CurvatureField(const ConnectionField& nabla);
    const Chart& chart() const { return chart_; }
    Riemann at(const Point& p) const;

private:
    Chart chart_;
    std::shared_ptr<const Tape> tape_;
};

inline CurvatureField curvature(const ConnectionField& nabla) { return CurvatureField(nabla); }

// Riemann tensor of a metric given by its jets (at least second order
// exact) in the jet variables 0..n−1.
template <int K>
Riemann riemann_from_metric_jets(const Mat<Jet<K>>& g);

// g(R(x, y)y, x) / (|x|²|y|² − g(x, y)²).
double sectional_curvature(const Riemann& r, const Mat<double>& g, const Vec<double>& x, const Vec<double>& y);

// "antisymmetry" R(l,i,j,k) + R(l,j,i,k) and "first Bianchi" cyclic sum in
// (i, j, k), at the points (1e-9).
std::vector<CheckResult> check_curvature_identities(const CurvatureField& r, const std::vector<Point>& points);

class DegenerateSubmanifold : public std::runtime_error {
public:
    DegenerateSubmanifold(const std::string& what, ParamPoint at) : std::runtime_error(what), at_(at) {}
    ParamPoint at() const { return at_; }

private:
    ParamPoint at_;
};

// Tensors of L at one parameter point, in the frame X_a = ∂_a S (a = s, t)
// and a g-orthonormal normal frame ν_α.
struct SubmanifoldData {
    ParamPoint st{};
    Point at;
    int codim = 0;
    std::array<Vec<double>, 2> tangents;
    std::vector<Vec<double>> normals;
    Mat<double> h;                              // induced metric
    std::vector<Mat<double>> pi;                // Π(X_a, X_b) = Σ_α pi[α](a, b) ν_α
    std::vector<Mat<double>> shape;             // A(X_a, ν_α) = Σ_c shape[α](c, a) X_c
    std::array<Mat<double>, 2> omega;           // ∇⊥_{X_a} ν_β = Σ_α omega[a](α, β) ν_α
    std::vector<std::array<Mat<double>, 2>> dpi;  // (∇_{X_a}Π)(X_b, X_c) = Σ_α dpi[α][a](b, c) ν_α
    Mat<double> r_perp;                         // R⊥(X_s, X_t)ν_β = Σ_α r_perp(α, β) ν_α
    Riemann r_induced;                          // curvature of h in (s, t)
    // Curvature of the total space of the normal bundle at the zero section,
    // coordinates (s, t, n_1, ..): metric h + Σ_α (dn_α + ω^α_{aβ} n_β ds^a)².
    Riemann r_hat;
    double intrinsic_curvature = 0.0;           // Gauss curvature of h
    double curvature_from_pi = 0.0;             // (g(Π11, Π22) − |Π12|²) / det h
};

// Throws DegenerateSubmanifold (rank < 2 or degenerate induced metric) and
// DegenerateMetric.
SubmanifoldData submanifold_tensors(const MetricField& g, const ParamSurface& l, const ParamPoint& st);

inline constexpr double kStructureTolerance = 1e-7;

struct StructureEquations {
    // R = [∇_X, ∇_Y] − ∇_[X,Y] throughout: Gauss as commonly printed,
    // Codazzi [R(X,Y)Z]⊥ = (∇_XΠ)(Y,Z) − (∇_YΠ)(X,Z), Ricci
    // [R(X,Y)V]⊥ = R⊥(X,Y)V − Π(X, A(Y,V)) + Π(Y, A(X,V)).
    CheckResult gauss, codazzi, ricci;
    // The same with the opposite sign on the right-hand side terms of
    // Codazzi and on the Π-terms of Ricci.
    double codazzi_flipped = 0.0, ricci_flipped = 0.0;
    double max_pi = 0.0;
    // R̂(X, Y) against R_g(X, Y) for X, Y ∈ TL, all other slots in the frame
    // (X_s, X_t, ν_α): raw difference, and after moving the Π-terms of the
    // three equations over (R̂ ≈ R^L ⊕ R⊥ at the zero section).
    double rhat_difference = 0.0;
    CheckResult rhat_corrected;
    // Gauss curvature from the Π-terms plus the ambient sectional curvature
    // of TL, against the intrinsic curvature.
    CheckResult gauss_curvature;
};

StructureEquations gauss_codazzi_ricci_residuals(const MetricField& g, const ParamSurface& l, const std::vector<ParamPoint>& grid);

}  // namespace acx
