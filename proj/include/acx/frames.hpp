#pragma once

// The characteristic plane Π² = Im N_J, its derived flag, the canonical
// frame (ξ₁, ξ₂, ξ₃, ξ₄) normalized by the Nijenhuis tensor, structure
// functions of that frame, and scans for the loci where the flag degenerates.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acx/geom.hpp"

namespace acx {

struct FlagRanks {
    int pi2 = 0, pi3 = 0, pi4 = 0;
    friend bool operator==(const FlagRanks&, const FlagRanks&) = default;
};

std::string to_string(const FlagRanks& r);

class DegenerateFlag : public std::runtime_error {
public:
    DegenerateFlag(const std::string& what, FlagRanks ranks) : std::runtime_error(what), ranks_(ranks) {}
    FlagRanks ranks() const { return ranks_; }

private:
    FlagRanks ranks_;
};

class IllConditioned : public std::runtime_error {
public:
    IllConditioned(const std::string& what, double cond) : std::runtime_error(what), cond_(cond) {}
    double condition() const { return cond_; }

private:
    double cond_;
};

// Below this max-norm N_J counts as zero.
inline constexpr double kNijenhuisZero = 1e-10;
inline constexpr double kRankTolerance = 1e-8;

// Orthonormal basis of Im N_J(p), or nothing where N_J(p) = 0.
std::optional<std::array<Vec<double>, 2>> characteristic_plane(const AlmostComplexField& j, const Point& p);

struct DerivedFlag {
    FlagRanks ranks;
    std::vector<Vec<double>> pi2, pi3, pi4;  // orthonormal bases
};

DerivedFlag derived_flag(const AlmostComplexField& j, const Point& p);
// Π² and Π³ only (ranks.pi4 and pi4 left empty), with one derivative order less.
DerivedFlag derived_flag_pi3(const AlmostComplexField& j, const Point& p);

// Spanning choice for Π² used at the start of the construction; the frame
// does not depend on it (tested), so this only exists to exercise that.
struct FrameOptions {
    double span_scale = 1.0;     // w ← span_scale · w
    double span_rotation = 0.0;  // w ← cos θ · w + sin θ · Jw
};

struct CanonicalFrame {
    Point point;
    std::array<Vec<double>, 4> xi;
    double s = 0.0;              // eigenvalue of N_J(·, [w, Jw]) on Π² for unit w
    std::string sign_rule;       // how the sign of ξ₁ was fixed
};

// Sign of ξ₁: first component above 1e-12 in absolute value positive, unless
// a reference is given, in which case ξ₁ is aligned with it (dot > 0).
CanonicalFrame canonical_frame(const AlmostComplexField& j, const Point& p, const FrameOptions& opt = {},
                               const Vec<double>* reference = nullptr);

// Frames along a path with the sign propagated continuously from the first
// point.
std::vector<CanonicalFrame> frames_along_path(const AlmostComplexField& j, const std::vector<Point>& path);

// c[i][j][k] with [ξ_j, ξ_k] = Σ_i c[i][j][k] ξ_i (0-based indices).
struct StructureFunctions {
    std::array<std::array<std::array<double, 4>, 4>, 4> c{};
    double condition = 0.0;
};

// Brackets by central differences of the pointwise frame with step h and one
// Richardson level.
// The optional reference fixes the sign of ξ₁ as in canonical_frame.
StructureFunctions structure_functions(const AlmostComplexField& j, const Point& p, double h = 1e-4,
                                       const Vec<double>* reference = nullptr);

// Lie bracket of two pointwise frame fields at p by the same differencing.
Vec<double> frame_bracket(const AlmostComplexField& j, const Point& p, int a, int b, double h = 1e-4);

struct SingularScan {
    std::vector<Point> nijenhuis_zero;  // rk Π² < 2
    std::vector<Point> pi3_degenerate;  // rk Π³ < 3
    std::vector<Point> pi4_degenerate;  // rk Π⁴ < 4
};

SingularScan scan_singular_loci(const AlmostComplexField& j, const std::vector<Point>& grid);

// Residuals of the frame identities at one sample: ξ₂ = Jξ₁, ξ₄ = Jξ₃, the
// Nijenhuis table, and ξ₃ = [ξ₁, ξ₂] by differencing.
struct FrameResiduals {
    double j_table = 0.0;
    double n_table = 0.0;
    double bracket = 0.0;
};
FrameResiduals frame_residuals(const AlmostComplexField& j, const CanonicalFrame& f);

}  // namespace acx
