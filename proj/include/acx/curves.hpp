#pragma once

// Parametrized surfaces in a chart: pseudoholomorphy residuals, the line
// field L¹ = TC ∩ Π³ with its rotation number, the invariants γ₁, γ₂, γ₃,
// and scans for the points of C where the construction degenerates.

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "acx/frames.hpp"
#include "acx/geom.hpp"

namespace acx {

using ParamPoint = std::array<double, 2>;

class ParamSurface {
public:
    ParamSurface() = default;
    // embedding[i] is the chart coordinate i as a function of the two
    // parameters; periods of 0 mean non-periodic.
    ParamSurface(Chart target, std::array<std::string, 2> params, std::vector<Expr> embedding,
                 std::array<std::array<double, 2>, 2> box, std::array<double, 2> periods = {0.0, 0.0});

    const Chart& target() const { return target_; }
    const std::array<std::string, 2>& params() const { return params_; }
    const std::vector<Expr>& embedding() const { return embedding_; }
    const std::array<std::array<double, 2>, 2>& box() const { return box_; }
    const std::array<double, 2>& periods() const { return periods_; }

    Point at(const ParamPoint& st) const;
    // Columns ∂_s S, ∂_t S.
    std::array<Vec<double>, 2> tangents(const ParamPoint& st) const;
    // ∂_s∂_s S, ∂_s∂_t S, ∂_t∂_t S.
    std::array<Vec<double>, 3> second_derivatives(const ParamPoint& st) const;
    // Jets of the embedding with the parameters seeded as jet variables 0, 1.
    template <int K>
    Vec<Jet<K>> jets(const ParamPoint& st) const {
        return tape_->jets_at<K>(std::span<const double>(st));
    }

    // n_s × n_t grid over the box; periodic directions exclude the endpoint.
    std::vector<ParamPoint> grid(int n_s, int n_t) const;

private:
    Chart target_;
    std::array<std::string, 2> params_;
    std::vector<Expr> embedding_;
    std::array<std::array<double, 2>, 2> box_{};
    std::array<double, 2> periods_{};
    std::shared_ptr<const Tape> tape_;
};

// Parameters of the point of S closest to q (coarse grid search, then
// Gauss-Newton); periodic parameters are wrapped into the box.
ParamPoint nearest_parameter(const ParamSurface& s, const Point& q);

class RankDeficientParametrization : public std::runtime_error {
public:
    RankDeficientParametrization(const std::string& what, ParamPoint at) : std::runtime_error(what), at_(at) {}
    ParamPoint at() const { return at_; }

private:
    ParamPoint at_;
};

// T C ∩ Π² ≠ 0 at a point of C.
class TangencyPoint : public std::runtime_error {
public:
    TangencyPoint(const std::string& what, ParamPoint at) : std::runtime_error(what), at_(at) {}
    ParamPoint at() const { return at_; }

private:
    ParamPoint at_;
};

inline constexpr double kPseudoholomorphicTolerance = 1e-8;

// Residual at one point: sqrt(½ Σ_i ‖(I − P) J q_i‖²) for a Euclidean
// orthonormal basis q_i of the tangent plane and P its orthogonal projector.
double ph_residual_at(const ParamSurface& s, const AlmostComplexField& j, const ParamPoint& st);
CheckResult ph_residual(const ParamSurface& s, const AlmostComplexField& j, const std::vector<ParamPoint>& grid);

struct L1Sample {
    ParamPoint st{};
    ParamPoint param_direction{};  // unit, oriented with positive t-component where possible
    Vec<double> direction;         // unit ambient vector spanning L¹
};

// The L¹ line at one point of C; throws TangencyPoint or DegenerateFlag.
L1Sample l1_direction(const AlmostComplexField& j, const ParamSurface& c, const ParamPoint& st);

struct L1Field {
    std::vector<L1Sample> samples;
    // Slope of the L¹ leaves: mean advance in s (in units of the s-period)
    // per t-period, from RK4 integration over several t-cycles.
    double rotation_number = 0.0;
    // Lifted turning of the line field along the s- and t-cycles through the
    // first sample point, in full turns (half-integers are possible).
    double turning_s = 0.0, turning_t = 0.0;
};

struct L1Options {
    int steps_per_cycle = 256;
    int cycles = 4;
};

L1Field l1_field(const AlmostComplexField& j, const ParamSurface& c, const std::vector<ParamPoint>& samples,
                 const L1Options& opt = {});

struct CurveInvariants {
    ParamPoint st{};
    double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0;
    Vec<double> v1, v2;  // ambient vectors
};

// v₁ spans L¹ with v₁ ≡ ξ₃ mod Π², v₂ = J v₁; [v₁, v₂] = γ₁v₁ + γ₂v₂ with the
// bracket taken in parameter space by central differences (step h, one
// Richardson level); J v₁ = γ₃ v₂.
CurveInvariants curve_invariants(const AlmostComplexField& j, const ParamSurface& c, const ParamPoint& st, double h = 1e-4);

struct Sigma0Scan {
    std::vector<ParamPoint> tangency;      // dim(TC ∩ Π²) ≥ 1
    std::vector<ParamPoint> pi3_degenerate;
    std::vector<ParamPoint> pi4_degenerate;
};

Sigma0Scan sigma0_scan(const AlmostComplexField& j, const ParamSurface& c, const std::vector<ParamPoint>& grid);

}  // namespace acx
