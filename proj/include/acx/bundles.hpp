#pragma once

// Almost complex structures on and near normal bundles of pseudoholomorphic
// surfaces: the structure Ĵ induced on the normal bundle, the splitting of a
// linear bundle structure into an integrable part plus its Nijenhuis term,
// the ε-ladder test of the first-order normal form, and the second-order
// symbol of a diffeomorphism relating two structures along a surface.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "acx/connections.hpp"
#include "acx/curves.hpp"
#include "acx/geom.hpp"

namespace acx {

class NotTotallyGeodesic : public std::runtime_error {
public:
    NotTotallyGeodesic(const std::string& what, double residual, ParamPoint at)
        : std::runtime_error(what), residual_(residual), at_(at) {}
    double residual() const { return residual_; }
    ParamPoint at() const { return at_; }

private:
    double residual_;
    ParamPoint at_;
};

// Pointwise data of the normal bundle over C(s, t), in the frame
// (∂_s S, ∂_t S, ν₁, ν₂).
struct NormalData {
    Mat<double> j0;                  // J on TC: J ∂_a S = Σ_b j0(b, a) ∂_b S
    Mat<double> j2;                  // J on TM/TC: J ν_j ≡ Σ_k j2(k, j) ν_k
    std::array<Mat<double>, 2> omega;  // ∇_{∂_a S} ν_j ≡ Σ_k omega[a](k, j) ν_k
    double normal_defect = 0.0;      // max normal part of ∇_{∂_a S} ∂_b S (frame coefficients)
};

class NormalBundleStructure {
public:
    // normal_coords picks the chart coordinates whose projections off TC
    // span the normal frame.
    NormalBundleStructure(AlmostComplexField j, ConnectionField nabla, ParamSurface c, std::array<int, 2> normal_coords);

    // Coordinates (s, t, n1, n2): the class of n1 ν₁ + n2 ν₂ over C(s, t).
    const Chart& chart() const { return chart_; }
    const ParamSurface& surface() const { return c_; }
    const ConnectionField& connection() const { return nabla_; }
    std::array<int, 2> normal_coords() const { return normal_; }

    // Euclidean projections of the chosen coordinate vectors off TC.
    std::array<Vec<double>, 2> normal_frame(const ParamPoint& st) const;
    // Throws NotTotallyGeodesic if ∇ does not preserve TC at this point.
    NormalData normal_data(const ParamPoint& st) const;

    Mat<double> at(const Point& q) const;
    // Central differences with one Richardson level, step h.
    Tensor21<double> nijenhuis_at(const Point& q, double h = 1e-3) const;

private:
    AlmostComplexField j_;
    ConnectionField nabla_;
    ParamSurface c_;
    std::array<int, 2> normal_;
    Chart chart_;
};

inline constexpr double kTotallyGeodesicTolerance = 1e-8;

// Chooses the normal coordinates most transversal to C at the centre of the
// parameter box and checks that ∇ preserves TC on a grid over C.
NormalBundleStructure normal_bundle_structure(const AlmostComplexField& j, const ConnectionField& nabla,
                                              const ParamSurface& c);

// Convention-independent checks over bundle points: Ĵ² = −Id, the bundle-map
// property (base block equal to J|TC), fiber linearity (second fiber
// derivatives of Ĵ vanish).
std::vector<CheckResult> check_normal_structure(const NormalBundleStructure& nb, const std::vector<Point>& points);

// Span of the image of N_Ĵ at q (orthonormal columns), rank by SVD.
std::vector<Vec<double>> nijenhuis_image(const NormalBundleStructure& nb, const Point& q, double rel_tol = 1e-6);

struct LinearDecomposition {
    AlmostComplexField j0;
    std::vector<CheckResult> preconditions;  // linear bundle structure conditions on N_J
    std::vector<CheckResult> checks;         // J₀² = −Id, N_{J₀} = 0, reconstruction
};

class NotLinearBundle : public std::invalid_argument {
public:
    NotLinearBundle(const std::string& what, std::vector<CheckResult> failures)
        : std::invalid_argument(what), failures_(std::move(failures)) {}
    const std::vector<CheckResult>& failures() const { return failures_; }

private:
    std::vector<CheckResult> failures_;
};

// r = Σ_f x_f ∂_f over the fiber coordinates f; N_J is taken on the zero
// section (fiber coordinates set to 0).
// J₀ = J − ½ J N_J(r, ·), symbolic. Throws NotLinearBundle listing the
// failed conditions: N_J(F, F) = 0, Im N_J ⊂ F, N_J(F, ·) constant along the
// fibers, N_J(base, base) affine along the fibers.
LinearDecomposition linear_bundle_decompose(const AlmostComplexField& j, std::array<int, 2> fiber,
                                            int per_axis = 4);

// Matrix of N(r, ·) with r the given vector: K(k, j) = Σ_i r_i N^k_ij.
Mat<double> contract_first(const Tensor21<double>& n, const Vec<double>& r);

enum class JetVariant {
    Curve,  // C = {fiber = 0}, r = fiber radius, N_J on C
    Point,  // r = x − origin, N_J at the origin
};

struct JetLadderOptions {
    double factor = 0.5;
    JetVariant variant = JetVariant::Curve;
    std::array<int, 2> fiber{2, 3};
    Point origin;  // Point variant only
    std::vector<double> eps{1e-2, 1e-3, 1e-4};
    int base_samples = 6;
    int directions = 4;
    unsigned seed = 1;
};

struct JetLadder {
    std::vector<double> eps, defect, ratio;  // ratio = defect / ε²
    CheckResult result;
};

class TransversalityFailure : public std::runtime_error {
public:
    TransversalityFailure(const std::string& what, Point at) : std::runtime_error(what), at_(std::move(at)) {}
    const Point& at() const { return at_; }

private:
    Point at_;
};

// D(ε) = max ‖J − J₀ − f·J₀N_J(r, ·)‖ at distance ε from C (or the origin).
// Passes when every D(ε) ≤ 1e-12 or max/min of D(ε)/ε² is at most 4. The
// curve variant first checks Π² = Im N_J transversal to C at the sampled
// foot points and throws TransversalityFailure otherwise.
JetLadder jet_normal_form_residual(const AlmostComplexField& j, const AlmostComplexField& j0, const JetLadderOptions& opt);

// Second-order symbol at one point of C, all (2,1)-tensors with entries
// (k, i, j) for T(∂_i, ∂_j).
struct JetSymbol {
    Point at;
    Tensor21<double> p;    // P(ξ, η) = (∂_η J₂ − ∂_η J₁) ξ
    Tensor21<double> b;    // −½ J₁ P
    Tensor21<double> phi;  // symmetrized symbol
    double relation_residual = 0.0;   // |J₁B − B(J₂·, ·) − P|
    double identity10_residual = 0.0;
    double eq8_residual = 0.0;        // |J₁Φ − Φ(J₂·, ·) − P|
    double symmetry_residual = 0.0;
    double tangent_residual = 0.0;    // |Φ(TC, TC)|
};

class PreconditionMismatch : public std::invalid_argument {
public:
    PreconditionMismatch(const std::string& what, std::string tensor, double residual, Point at)
        : std::invalid_argument(what), tensor_(std::move(tensor)), residual_(residual), at_(std::move(at)) {}
    const std::string& tensor() const { return tensor_; }
    double residual() const { return residual_; }
    const Point& at() const { return at_; }

private:
    std::string tensor_;
    double residual_;
    Point at_;
};

class IdentityViolation : public std::runtime_error {
public:
    IdentityViolation(const std::string& what, double residual, Point at)
        : std::runtime_error(what), residual_(residual), at_(std::move(at)) {}
    double residual() const { return residual_; }
    const Point& at() const { return at_; }

private:
    double residual_;
    Point at_;
};

struct EquivalenceOptions {
    double precondition_tolerance = 1e-9;
    double identity_tolerance = 1e-8;
    // With check = false the symbol is returned even when J₁, J₂ or their
    // Nijenhuis tensors differ on C, so the residuals can be inspected.
    bool check = true;
};

// Symbols at the given points of C. Throws PreconditionMismatch (J or N_J
// differ on C) or IdentityViolation (identity P(ξ,η) − P(η,ξ) =
// P(Jξ,Jη) − P(Jη,Jξ) fails, i.e. N_{J₁} ≠ N_{J₂}).
std::vector<JetSymbol> equivalence_symbol(const AlmostComplexField& j1, const AlmostComplexField& j2, const ParamSurface& c,
                                          const std::vector<ParamPoint>& grid, const EquivalenceOptions& opt = {});

}  // namespace acx
