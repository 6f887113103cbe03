#pragma once

// JSON manifests (schema 1): a chart, named constants, an almost complex
// structure or a metric, named surfaces and torus solver settings, plus the
// printed reference data the example bank compares against.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "acx/connections.hpp"
#include "acx/curves.hpp"
#include "acx/geom.hpp"
#include "acx/riemannian.hpp"
#include "acx/torus.hpp"
#include "json.hpp"

namespace acx {

inline constexpr int kManifestSchema = 1;

using Constants = std::map<std::string, double, std::less<>>;
// table[row][col] = components of the entry, rows and columns in chart order;
// an empty entry means none was given.
using ExprTable = std::vector<std::vector<std::vector<Expr>>>;

struct TorusSettings {
    TorusBundleSpec spec;
    int m_max = 8, n_max = 8;
};

// Ĵ as printed, in the bundle coordinates (s, t, n1, n2).
struct NormalStructureSpec {
    std::vector<std::string> coords;
    std::vector<std::vector<Expr>> images;
};

struct Manifest {
    std::string source;
    std::string name;
    std::string description;
    Chart chart;
    Constants constants;

    std::optional<AlmostComplexField> j;
    std::optional<ConnectionField> connection;        // structure.connection_table
    std::optional<ExprTable> nijenhuis_table;         // structure.nijenhuis_table
    std::optional<std::array<int, 2>> fiber;          // structure.fiber
    std::optional<std::array<Expr, 2>> plane_coefficients;  // structure.plane_coefficients (A1, A2 in x, y)
    std::optional<std::vector<Expr>> characteristic_field;  // structure.characteristic_field
    std::optional<std::vector<Expr>> characteristic_bracket;
    std::optional<Expr> rotation_number;
    std::optional<NormalStructureSpec> normal_structure;

    std::optional<MetricField> metric;
    std::map<std::string, ParamSurface> curves;
    std::optional<TorusSettings> torus;

    const ParamSurface& curve(std::string_view name) const;  // throws std::out_of_range
};

class ManifestError : public std::runtime_error {
public:
    ManifestError(const std::string& source, std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

struct ManifestOptions {
    Constants overrides;     // replace declared constants
    bool check_j = true;     // J² + Id on a 3^n grid of the chart box
};

// Every problem found is listed (field path first), not just the first one.
Manifest parse_manifest(const nlohmann::json& doc, const std::string& source, const ManifestOptions& opt = {});
Manifest load_manifest(const std::filesystem::path& path, const ManifestOptions& opt = {});

// <dir>/<name>.json with dir defaulting to the bundled manifest directory.
std::filesystem::path bundled_manifest(std::string_view name, const std::filesystem::path& dir = {});

}  // namespace acx
