#pragma once

// The built-in example bank: every reference example, driven by the bundled
// manifests, reduced to rows of measured residual against threshold.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acx/geom.hpp"
#include "acx/report.hpp"

namespace acx {

struct BankOptions {
    bool fd_only = false;          // finite-difference jets; thresholds floored at 1e-5
    double tolerance_scale = 1.0;  // multiplies every threshold except discrimination rows
    std::optional<int> torus_m, torus_n;  // override the torus truncation
    unsigned seed = 42;
    std::filesystem::path manifest_dir;  // empty: bundled manifests
};

struct BankRow {
    int criterion = 0;  // acceptance item the row belongs to
    std::string group;  // example name
    CheckResult result;
    double seconds = 0.0;  // wall time of the row's section
};

// Failures are rows; exceptions inside a section become failing rows with
// the message in the note.
std::vector<BankRow> run_example_bank(const BankOptions& opt = {});

// Threshold actually applied under the options.
double bank_threshold(double threshold, const BankOptions& opt);

// Generic structure P J P⁻¹ with P = I + small random quadratic polynomial
// entries.
AlmostComplexField generic_perturbation(const AlmostComplexField& j, unsigned seed, double scale = 0.2);

// Pullback ψ*J of J by z_k ↦ z_k + ½ c_k conj(z₂)² (coordinates
// (x1, y1, x2, y2) read as z₁, z₂), which fixes {z₂ = 0} with second-order
// symbol determined by c.
AlmostComplexField quadratic_pullback(const AlmostComplexField& j, std::array<double, 2> c1, std::array<double, 2> c2);

}  // namespace acx
