#pragma once

// Linear connections in a chart: the almost complex projection of an
// arbitrary connection, the minimal correction (torsion = ¼N_J), and the gauge
// that makes a pseudoholomorphic surface totally geodesic.
//
// Convention: ∇_{∂_i}∂_j = Σ_k Γ^k_ij ∂_k, stored as Tensor21 entries (k, i, j).
// Torsion T^k_ij = Γ^k_ij − Γ^k_ji.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acx/curves.hpp"
#include "acx/geom.hpp"

namespace acx {

class ConnectionField {
public:
    using Sampler = std::function<Tensor21<double>(const Point&)>;

    ConnectionField() = default;
    // christoffel[(k*n + i)*n + j] = Γ^k_ij
    ConnectionField(Chart chart, std::vector<Expr> christoffel);
    // Pointwise connection, e.g. the output of a gauge correction.
    ConnectionField(Chart chart, Sampler sampler);

    static ConnectionField flat(const Chart& chart);
    // table[i][j] = components of ∇_{∂_i}∂_j (row i, column j).
    static ConnectionField from_table(const Chart& chart, const std::vector<std::vector<std::vector<Expr>>>& table);

    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    bool symbolic() const { return !sampler_; }
    // Symbolic connections only; throws std::logic_error otherwise.
    const std::vector<Expr>& christoffel() const;

    Tensor21<double> at(const Point& p) const;

private:
    Chart chart_;
    std::vector<Expr> gamma_;
    std::shared_ptr<const Tape> tape_;
    Sampler sampler_;
};

class NotAlmostComplex : public std::invalid_argument {
public:
    NotAlmostComplex(const std::string& what, double defect) : std::invalid_argument(what), defect_(defect) {}
    double defect() const { return defect_; }

private:
    double defect_;
};

// ∇ = ½(∇′ − J∇′J). Symbolic when ∇′ is.
ConnectionField almost_complexify(const ConnectionField& prime, const AlmostComplexField& j);

TensorField21 torsion(const ConnectionField& nabla);  // symbolic connections only
Tensor21<double> torsion_at(const ConnectionField& nabla, const Point& p);

// max |(∇_i J)^k_j| at p.
double covariant_j_defect(const ConnectionField& nabla, const AlmostComplexField& j, const Point& p);
CheckResult check_preserves_j(const ConnectionField& nabla, const AlmostComplexField& j, std::span<const Point> grid,
                              double threshold = 1e-9);
// max |T − ¼N_J| over the grid.
CheckResult check_minimal(const ConnectionField& nabla, const AlmostComplexField& j, std::span<const Point> grid,
                          double threshold = 1e-9);

// Parts of a vector-valued bilinear form by J-linearity in each argument:
// index 0 = complex linear (B(JX, ·) = J B(X, ·)), 1 = antilinear; first
// index refers to the first argument.
struct LinearityParts {
    Tensor21<double> part[2][2];
};
LinearityParts linearity_parts(const Tensor21<double>& b, const Mat<double>& j);

// ∇ + A with A = −½T⁺⁺ − T⁻⁺ (complex linear in the second argument), whose
// torsion is the totally antilinear part T⁻⁻ = ¼N_J. Throws NotAlmostComplex
// if ∇J ≠ 0 at one of the probe points (default: 3⁴ grid over the chart box).
ConnectionField minimalize(const ConnectionField& nabla, const AlmostComplexField& j, std::span<const Point> probe = {});

struct GaugeOptions {
    double radius = 0.1;  // A is undamped within this distance of C, zero beyond twice it
};

// The symmetric complex-bilinear form A at p: with ξ = ∂_s S and η = ∇_ξ ξ at
// the foot point of p on C, A(ξ, ξ) = −η, extended by A(ν, ·) = 0 for the
// Euclidean normal ν and by J(p)-bilinearity, then damped by a smooth bump
// in the distance to C.
Tensor21<double> gauge_form(const ConnectionField& nabla, const AlmostComplexField& j, const ParamSurface& c,
                            const Point& p, const GaugeOptions& opt = {});

struct GaugedConnection {
    ConnectionField connection;  // sampled
    bool whole_surface = true;   // false unless C is a torus
    std::string domain;          // restriction note when !whole_surface
};

GaugedConnection gauge_totally_geodesic(const ConnectionField& nabla, const AlmostComplexField& j, const ParamSurface& c,
                                        const GaugeOptions& opt = {});

// Normal part (Euclidean) of ∇_{∂_a S}∂_b S along C, maximized over a, b and
// the grid.
CheckResult check_totally_geodesic(const ConnectionField& nabla, const ParamSurface& c,
                                   const std::vector<ParamPoint>& grid, double threshold = 1e-8);

// Row/column table of vector values entry(row, col) in the chart's
// coordinate basis, e.g. "-0.25 ∂y1".
std::string format_table(const Chart& chart, const std::string& corner,
                         const std::function<Vec<double>(int, int)>& entry);
std::string connection_table(const ConnectionField& nabla, const Point& p);
std::string nijenhuis_table(const AlmostComplexField& j, const Point& p);

}  // namespace acx
