#pragma once

// The twisted Cauchy–Riemann operator f ↦ f_φ̄ + a f + b f̄ on sections of
// the flat line bundle over T² = ℂ / (2πℤ + νℤ) with gluing f(φ + ν) = λ f(φ),
// discretized by a Galerkin truncation of a twisted double Fourier series.
// Also the energy identity for its kernel and the residual of the
// integrability system for the coefficients A₁, A₂ of a plane field.

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "acx/expr.hpp"
#include "acx/report.hpp"

namespace acx {

using cplx = std::complex<double>;

// Complex constants such as "0.3+1.1i", "exp(i*1.0)" or
// "-(i/2)*conj(0.8-0.6i)". Knows i, pi, conj, re, im, abs, arg, exp, log,
// sin, cos, sqrt and ^; a number directly followed by i is imaginary.
// Throws ParseError.
cplx parse_complex(std::string_view text);

class InvalidTorusSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Coefficients are real and imaginary parts as expressions in phi1, phi2
// (the lattice coordinates s, t and the constant pi may also be used). They
// must be functions on the torus, i.e. 2π- and ν-periodic in φ.
//
// b is read in the trivializing frame of the twist: the operator acting on
// twisted sections multiplies f̄ by b·e^{2iθt}, θ = arg λ, which is what makes
// b f̄ twist like f. For λ = ±1 the two readings agree.
struct TorusBundleSpec {
    cplx nu{0.0, 1.0};
    cplx lambda{1.0, 0.0};
    std::array<Expr, 2> a{Expr(0.0), Expr(0.0)};
    std::array<Expr, 2> b{Expr(0.0), Expr(0.0)};
    std::optional<std::array<Expr, 2>> g;

    // Λ = −2i b̄, i.e. b = −(i/2) Λ̄, for constant Λ.
    static std::array<Expr, 2> b_from_lambda_coefficient(cplx big_lambda);
};

// Throws InvalidTorusSpec: Im ν = 0, λ = 0, coefficients not evaluable or not
// periodic on the fundamental domain.
void validate(const TorusBundleSpec& spec);

// φ = 2πs + νt.
cplx phi_of(cplx nu, double s, double t);
std::array<double, 2> lattice_of(cplx nu, cplx phi);

// Symbols of ∂_φ̄ and ∂_φ on the basis e^{iθt} e^{2πi(ms + nt)}.
cplx dbar_symbol(int m, int n, double theta, cplx nu);
cplx d_symbol(int m, int n, double theta, cplx nu);

// f(φ) = e^{iθt} Σ c_mn e^{2πi(ms + nt)}, |m| ≤ M, |n| ≤ N.
class TwistedSection {
public:
    TwistedSection(int m_max, int n_max, double theta);
    TwistedSection(int m_max, int n_max, double theta, std::vector<cplx> coeffs);

    // Coefficients with independent standard normal parts damped by
    // 1/(1 + m² + n²)^{decay/2}.
    static TwistedSection random(int m_max, int n_max, double theta, unsigned seed, double decay = 2.0);
    // Galerkin projection of a twisted function given on the lattice
    // coordinates, f(s, t), via fourier_coefficients.
    template <class F>
    static TwistedSection project(int m_max, int n_max, double theta, F&& f);

    int m_max() const { return m_; }
    int n_max() const { return n_; }
    double theta() const { return theta_; }
    int modes() const { return (2 * m_ + 1) * (2 * n_ + 1); }
    int index(int m, int n) const { return (m + m_) * (2 * n_ + 1) + (n + n_); }
    cplx& operator()(int m, int n) { return c_[static_cast<std::size_t>(index(m, n))]; }
    cplx operator()(int m, int n) const { return c_[static_cast<std::size_t>(index(m, n))]; }
    const std::vector<cplx>& coeffs() const { return c_; }

    cplx eval_st(double s, double t) const;
    cplx eval(cplx nu, cplx phi) const { const auto st = lattice_of(nu, phi); return eval_st(st[0], st[1]); }

    // Termwise ∂_φ̄ and ∂_φ.
    TwistedSection dbar(cplx nu) const;
    TwistedSection d(cplx nu) const;

    // Interleaved (Re c, Im c) in mode order, and back.
    Eigen::VectorXd to_real() const;
    static TwistedSection from_real(int m_max, int n_max, double theta, const Eigen::VectorXd& x);

    double norm() const;  // coefficient 2-norm

private:
    int m_, n_;
    double theta_;
    std::vector<cplx> c_;
};

// Real matrix of f ↦ f_φ̄ + a f + b f̄ on the truncated basis, acting on
// TwistedSection::to_real vectors.
struct CrOperator {
    int m_max = 0, n_max = 0;
    double theta = 0.0;
    cplx nu;
    Eigen::MatrixXd matrix;
};

// Fourier coefficients of a function on the lattice coordinates, modes
// |p| ≤ P, |q| ≤ Q, laid out as (p + P)(2Q + 1) + (q + Q). Separable DFT on
// a grid of 3(2P + 1) × 3(2Q + 1) points.
std::vector<cplx> fourier_coefficients(const std::function<cplx(double, double)>& f, int p_max, int q_max);

// Throws InvalidTorusSpec for Im ν = 0 or |λ| ≠ 1 (no twisted Fourier basis
// with bounded weight exists off the unit circle).
CrOperator assemble_cr_operator(const TorusBundleSpec& spec, int m_max = 8, int n_max = 8);

TwistedSection apply(const CrOperator& op, const TwistedSection& f);

inline constexpr double kKernelRelTolerance = 1e-8;

struct KernelAnalysis {
    int kernel_dim = 0;               // singular values below 1e-8 × largest
    std::vector<double> smallest;     // up to five, ascending
    double largest = 0.0;
};

KernelAnalysis kernel_analysis(const CrOperator& op);

class NearSingular : public std::runtime_error {
public:
    NearSingular(const std::string& what, double min_sigma, double max_sigma)
        : std::runtime_error(what), min_(min_sigma), max_(max_sigma) {}
    double min_sigma() const { return min_; }
    double max_sigma() const { return max_; }

private:
    double min_, max_;
};

struct InhomogeneousSolution {
    TwistedSection f;
    double residual = 0.0;  // ‖Lf − g‖ / ‖g‖ (absolute when g = 0)
    double min_sigma = 0.0;
};

// Throws NearSingular when min σ < 1e-8 × max σ.
InhomogeneousSolution solve_inhomogeneous(const CrOperator& op, const TwistedSection& g);

// g from spec.g, projected onto the operator's truncation (g read in the
// trivializing frame like b).
TwistedSection rhs_section(const TorusBundleSpec& spec, int m_max, int n_max);

struct EnergyIdentity {
    // ∫ ∂_φ(f_φ̄ f̄) dφ₁dφ₂ by trapezoid rule at two grid sizes; the boundary
    // terms cancel when |λ| = 1.
    std::array<double, 2> boundary{};
    std::array<int, 2> grids{};
    // ∫ (|b|²|f|² + |f_φ̄|²) dφ₁dφ₂ at the finer grid.
    double energy = 0.0;
    // |λ| = 1 and b_φ = 0, the hypotheses under which a kernel element has
    // zero energy.
    std::vector<CheckResult> hypotheses;
};

EnergyIdentity energy_identity_residual(const TwistedSection& f, const TorusBundleSpec& spec);

struct IntegrabilityResidual {
    double residual = 0.0;                 // max over the grid of both equations
    std::array<double, 2> per_equation{};  // max over the grid of each
    std::array<double, 2> witness{};       // (x, y) where the max is attained
    std::array<Expr, 2> equations;         // left-hand sides, symbolic
    // Exact verdict on the symbolic equations when they are rational;
    // nullopt otherwise.
    std::optional<bool> symbolic_zero;
};

class SingularCoefficient : public std::domain_error {
public:
    SingularCoefficient(const std::string& what, std::array<double, 2> at) : std::domain_error(what), at_(at) {}
    std::array<double, 2> at() const { return at_; }

private:
    std::array<double, 2> at_;
};

// Residuals of
//   ∂_y A₁ − A₁ ∂_x A₁ + ((1 + A₁²)/(1 + A₂)) ∂_x A₂ = 0,
//   ∂_y A₂ − (1 + A₂) ∂_x A₁ + A₁ ∂_x A₂ = 0
// with A₁, A₂ expressions in x, y. Throws SingularCoefficient if 1 + A₂
// vanishes at a grid point.
IntegrabilityResidual integrability_residual(const Expr& a1, const Expr& a2, const std::vector<std::array<double, 2>>& grid);

template <class F>
TwistedSection TwistedSection::project(int m_max, int n_max, double theta, F&& f) {
    // Strip the twist and transform.
    const auto c = fourier_coefficients(
        [&](double s, double t) { return cplx(f(s, t)) * std::polar(1.0, -theta * t); }, m_max, n_max);
    return TwistedSection(m_max, n_max, theta, c);
}

}  // namespace acx
