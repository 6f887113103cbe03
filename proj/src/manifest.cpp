#include "acx/manifest.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace acx {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string r;
    for (std::size_t i = 0; i < v.size(); ++i) r += (i ? sep : "") + v[i];
    return r;
}

// Collects every error with its field path; parsing continues with
// placeholders so later fields are still checked.
class Reader {
public:
    std::vector<std::string> errors;
    Constants constants;

    void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    const json* member(const json& obj, const std::string& path, const char* key, bool required) {
        if (!obj.is_object()) {
            error(path, "expected an object");
            return nullptr;
        }
        const auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) error(path + "." + key, "missing");
            return nullptr;
        }
        return &*it;
    }

    std::optional<double> number(const json& v, const std::string& path) {
        if (!v.is_number()) {
            error(path, "expected a number");
            return std::nullopt;
        }
        return v.get<double>();
    }

    std::optional<int> integer(const json& v, const std::string& path) {
        if (!v.is_number_integer()) {
            error(path, "expected an integer");
            return std::nullopt;
        }
        return v.get<int>();
    }

    std::optional<std::string> string(const json& v, const std::string& path) {
        if (!v.is_string()) {
            error(path, "expected a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    // Parses, binds constants and pi, and checks the remaining identifiers.
    Expr expr(const json& v, const std::string& path, const std::vector<std::string>& allowed, bool bind = true) {
        std::string text;
        if (v.is_number()) return Expr(v.get<double>());
        if (!v.is_string()) {
            error(path, "expected an expression string");
            return Expr(0.0);
        }
        text = v.get<std::string>();
        Expr e;
        try {
            e = parse(text);
        } catch (const ParseError& pe) {
            error(path, fmt::format("syntax error at offset {} in \"{}\": {}", pe.offset(), text, pe.what()));
            return Expr(0.0);
        }
        if (bind) {
            Constants k = constants;
            k.emplace("pi", std::numbers::pi);
            e = bind_constants(e, k);
        }
        bool ok = true;
        for (const auto& id : free_identifiers(e))
            if (std::find(allowed.begin(), allowed.end(), id) == allowed.end()) {
                error(path, fmt::format("undeclared identifier '{}' (allowed: {})", id, join(allowed, ", ")));
                ok = false;
            }
        return ok ? e : Expr(0.0);
    }

    std::vector<Expr> expr_list(const json& v, const std::string& path, std::size_t n, const std::vector<std::string>& allowed) {
        std::vector<Expr> out(n, Expr(0.0));
        if (!v.is_array()) {
            error(path, fmt::format("expected an array of {} expressions", n));
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::string p = fmt::format("{}[{}]", path, i);
            if (i >= v.size())
                error(p, "missing");
            else
                out[i] = expr(v[i], p, allowed);
        }
        if (v.size() > n) error(path, fmt::format("expected {} entries, got {}", n, v.size()));
        return out;
    }

    std::vector<std::vector<Expr>> expr_matrix(const json& v, const std::string& path, std::size_t n,
                                               const std::vector<std::string>& allowed) {
        std::vector<std::vector<Expr>> out(n, std::vector<Expr>(n, Expr(0.0)));
        if (!v.is_array()) {
            error(path, fmt::format("expected a {0}x{0} array", n));
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::string p = fmt::format("{}[{}]", path, i);
            if (i >= v.size())
                error(p, "missing row");
            else
                out[i] = expr_list(v[i], p, n, allowed);
        }
        if (v.size() > n) error(path, fmt::format("expected {} rows, got {}", n, v.size()));
        return out;
    }

    std::array<double, 2> interval(const json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            error(path, "expected [lo, hi]");
            return {0.0, 1.0};
        }
        return {v[0].get<double>(), v[1].get<double>()};
    }

    // "0.3+1.1i" or a number.
    cplx complex(const json& v, const std::string& path) {
        if (v.is_number()) return {v.get<double>(), 0.0};
        if (!v.is_string()) {
            error(path, "expected a complex constant");
            return {};
        }
        try {
            return parse_complex(v.get<std::string>());
        } catch (const std::exception& e) {
            error(path, e.what());
            return {};
        }
    }

    // Complex coefficient as a constant string or [re, im] expressions in
    // the torus variables (pi left unbound for the torus module).
    std::array<Expr, 2> complex_coefficient(const json& v, const std::string& path) {
        static const std::vector<std::string> vars{"phi1", "phi2", "s", "t", "pi"};
        if (v.is_array()) {
            if (v.size() != 2) {
                error(path, "expected [re, im]");
                return {Expr(0.0), Expr(0.0)};
            }
            return {expr(v[0], path + "[0]", vars, false), expr(v[1], path + "[1]", vars, false)};
        }
        const cplx c = complex(v, path);
        return {Expr(c.real()), Expr(c.imag())};
    }
};

std::optional<Chart> read_chart(Reader& rd, const json& doc) {
    const json* c = rd.member(doc, "", "chart", true);
    if (!c) return std::nullopt;
    const json* coords = rd.member(*c, "chart", "coords", true);
    if (!coords) return std::nullopt;
    std::vector<std::string> names;
    if (!coords->is_array()) {
        rd.error("chart.coords", "expected an array of names");
        return std::nullopt;
    }
    for (std::size_t i = 0; i < coords->size(); ++i)
        if (auto s = rd.string((*coords)[i], fmt::format("chart.coords[{}]", i))) names.push_back(*s);
    const std::size_t n = names.size();
    if (const json* d = rd.member(*c, "chart", "dimension", false))
        if (auto dim = rd.integer(*d, "chart.dimension"); dim && static_cast<std::size_t>(*dim) != n)
            rd.error("chart.dimension", fmt::format("is {} but {} coordinates are listed", *dim, n));
    std::vector<std::array<double, 2>> box(n, {-1.0, 1.0});
    if (const json* b = rd.member(*c, "chart", "box", false)) {
        if (!b->is_array() || b->size() != n)
            rd.error("chart.box", fmt::format("expected {} intervals", n));
        else
            for (std::size_t i = 0; i < n; ++i) box[i] = rd.interval((*b)[i], fmt::format("chart.box[{}]", i));
    }
    std::vector<double> periods(n, 0.0);
    if (const json* p = rd.member(*c, "chart", "periods", false)) {
        if (!p->is_array() || p->size() != n)
            rd.error("chart.periods", fmt::format("expected {} numbers", n));
        else
            for (std::size_t i = 0; i < n; ++i)
                if (auto v = rd.number((*p)[i], fmt::format("chart.periods[{}]", i))) periods[i] = *v;
    }
    try {
        return Chart(names, box, periods);
    } catch (const std::invalid_argument& e) {
        rd.error("chart", e.what());
        return std::nullopt;
    }
}

ExprTable read_table(Reader& rd, const json& v, const std::string& path, const Chart& chart) {
    const auto n = static_cast<std::size_t>(chart.dim());
    // Entries not listed stay empty (no reference value).
    ExprTable t(n, std::vector<std::vector<Expr>>(n));
    if (!v.is_object()) {
        rd.error(path, "expected {row: {col: [components]}}");
        return t;
    }
    for (const auto& [row, cols] : v.items()) {
        int r = -1;
        try {
            r = chart.index(row);
        } catch (const std::out_of_range&) {
            rd.error(path + "." + row, "not a chart coordinate");
            continue;
        }
        if (!cols.is_object()) {
            rd.error(path + "." + row, "expected {col: [components]}");
            continue;
        }
        for (const auto& [col, comps] : cols.items()) {
            int k = -1;
            try {
                k = chart.index(col);
            } catch (const std::out_of_range&) {
                rd.error(path + "." + row + "." + col, "not a chart coordinate");
                continue;
            }
            t[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] =
                rd.expr_list(comps, path + "." + row + "." + col, n, chart.coords);
        }
    }
    return t;
}

std::optional<ParamSurface> read_curve(Reader& rd, const json& v, const std::string& path, const Chart& chart) {
    std::array<std::string, 2> params{"s", "t"};
    if (const json* p = rd.member(v, path, "params", false)) {
        if (!p->is_array() || p->size() != 2 || !(*p)[0].is_string() || !(*p)[1].is_string())
            rd.error(path + ".params", "expected two parameter names");
        else
            params = {(*p)[0].get<std::string>(), (*p)[1].get<std::string>()};
    }
    const std::vector<std::string> allowed{params[0], params[1]};
    std::vector<Expr> emb(static_cast<std::size_t>(chart.dim()), Expr(0.0));
    if (const json* e = rd.member(v, path, "embedding", true))
        emb = rd.expr_list(*e, path + ".embedding", static_cast<std::size_t>(chart.dim()), allowed);
    std::array<std::array<double, 2>, 2> box{{{0.0, 1.0}, {0.0, 1.0}}};
    if (const json* b = rd.member(v, path, "box", true)) {
        if (!b->is_array() || b->size() != 2)
            rd.error(path + ".box", "expected two intervals");
        else
            for (std::size_t i = 0; i < 2; ++i) box[i] = rd.interval((*b)[i], fmt::format("{}.box[{}]", path, i));
    }
    std::array<double, 2> periods{0.0, 0.0};
    if (const json* p = rd.member(v, path, "periods", false)) {
        if (!p->is_array() || p->size() != 2)
            rd.error(path + ".periods", "expected two numbers");
        else
            for (std::size_t i = 0; i < 2; ++i)
                if (auto x = rd.number((*p)[i], fmt::format("{}.periods[{}]", path, i))) periods[i] = *x;
    }
    try {
        return ParamSurface(chart, params, emb, box, periods);
    } catch (const std::exception& e) {
        rd.error(path, e.what());
        return std::nullopt;
    }
}

void read_structure(Reader& rd, const json& s, const Chart& chart, Manifest& m) {
    const auto n = static_cast<std::size_t>(chart.dim());
    const json* rows = rd.member(s, "structure", "J", false);
    const json* images = rd.member(s, "structure", "J_images", false);
    if (rows && images) rd.error("structure", "give either J or J_images, not both");
    try {
        if (rows) {
            const auto mtx = rd.expr_matrix(*rows, "structure.J", n, chart.coords);
            std::vector<Expr> flat;
            for (const auto& r : mtx) flat.insert(flat.end(), r.begin(), r.end());
            m.j = AlmostComplexField(chart, flat);
        } else if (images) {
            m.j = AlmostComplexField::from_images(chart, rd.expr_matrix(*images, "structure.J_images", n, chart.coords));
        }
    } catch (const std::invalid_argument& e) {
        rd.error("structure.J", e.what());
    }
    if (const json* t = rd.member(s, "structure", "connection_table", false)) {
        try {
            auto table = read_table(rd, *t, "structure.connection_table", chart);
            for (auto& row : table)
                for (auto& e : row)
                    if (e.empty()) e.assign(static_cast<std::size_t>(chart.dim()), Expr(0.0));
            m.connection = ConnectionField::from_table(chart, table);
        } catch (const std::exception& e) {
            rd.error("structure.connection_table", e.what());
        }
    }
    if (const json* t = rd.member(s, "structure", "nijenhuis_table", false))
        m.nijenhuis_table = read_table(rd, *t, "structure.nijenhuis_table", chart);
    if (const json* f = rd.member(s, "structure", "fiber", false)) {
        std::array<int, 2> fib{-1, -1};
        if (!f->is_array() || f->size() != 2) {
            rd.error("structure.fiber", "expected two coordinate names");
        } else {
            for (std::size_t i = 0; i < 2; ++i) {
                const std::string p = fmt::format("structure.fiber[{}]", i);
                if (auto name = rd.string((*f)[i], p)) {
                    try {
                        fib[i] = chart.index(*name);
                    } catch (const std::out_of_range&) {
                        rd.error(p, "not a chart coordinate");
                    }
                }
            }
            if (fib[0] >= 0 && fib[1] >= 0) m.fiber = fib;
        }
    }
    if (const json* p = rd.member(s, "structure", "plane_coefficients", false)) {
        const std::vector<std::string> xy{"x", "y"};
        std::array<Expr, 2> a{Expr(0.0), Expr(0.0)};
        for (std::size_t i = 0; i < 2; ++i) {
            const char* key = i == 0 ? "A1" : "A2";
            if (const json* v = rd.member(*p, "structure.plane_coefficients", key, true))
                a[i] = rd.expr(*v, std::string("structure.plane_coefficients.") + key, xy);
        }
        m.plane_coefficients = a;
    }
    if (const json* v = rd.member(s, "structure", "characteristic_field", false))
        m.characteristic_field = rd.expr_list(*v, "structure.characteristic_field", n, chart.coords);
    if (const json* v = rd.member(s, "structure", "characteristic_bracket", false))
        m.characteristic_bracket = rd.expr_list(*v, "structure.characteristic_bracket", n, chart.coords);
    if (const json* v = rd.member(s, "structure", "rotation_number", false))
        m.rotation_number = rd.expr(*v, "structure.rotation_number", {});
    if (const json* v = rd.member(s, "structure", "normal_structure", false)) {
        NormalStructureSpec ns;
        if (const json* c = rd.member(*v, "structure.normal_structure", "coords", true)) {
            if (!c->is_array() || c->size() != 4)
                rd.error("structure.normal_structure.coords", "expected four names");
            else
                for (const auto& x : *c) ns.coords.push_back(x.is_string() ? x.get<std::string>() : std::string("?"));
        }
        if (const json* im = rd.member(*v, "structure.normal_structure", "images", true))
            ns.images = rd.expr_matrix(*im, "structure.normal_structure.images", 4, ns.coords);
        m.normal_structure = ns;
    }
}

void read_torus(Reader& rd, const json& t, Manifest& m) {
    TorusSettings ts;
    if (const json* v = rd.member(t, "torus", "nu", true)) ts.spec.nu = rd.complex(*v, "torus.nu");
    if (const json* v = rd.member(t, "torus", "lambda", true)) ts.spec.lambda = rd.complex(*v, "torus.lambda");
    if (const json* v = rd.member(t, "torus", "a", false)) ts.spec.a = rd.complex_coefficient(*v, "torus.a");
    if (const json* v = rd.member(t, "torus", "b", false)) ts.spec.b = rd.complex_coefficient(*v, "torus.b");
    if (const json* v = rd.member(t, "torus", "g", false)) ts.spec.g = rd.complex_coefficient(*v, "torus.g");
    if (const json* v = rd.member(t, "torus", "M", false))
        if (auto x = rd.integer(*v, "torus.M")) ts.m_max = *x;
    if (const json* v = rd.member(t, "torus", "N", false))
        if (auto x = rd.integer(*v, "torus.N")) ts.n_max = *x;
    if (ts.m_max < 0 || ts.n_max < 0) rd.error("torus", "truncation must be non-negative");
    try {
        validate(ts.spec);
    } catch (const std::exception& e) {
        rd.error("torus", e.what());
    }
    m.torus = ts;
}

}  // namespace

const ParamSurface& Manifest::curve(std::string_view name) const {
    const auto it = curves.find(std::string(name));
    if (it == curves.end()) throw std::out_of_range(fmt::format("{}: no curve named '{}'", source, name));
    return it->second;
}

ManifestError::ManifestError(const std::string& source, std::vector<std::string> errors)
    : std::runtime_error(fmt::format("{}: {} error{}:\n  {}", source, errors.size(), errors.size() == 1 ? "" : "s",
                                     join(errors, "\n  "))),
      errors_(std::move(errors)) {}

Manifest parse_manifest(const nlohmann::json& doc, const std::string& source, const ManifestOptions& opt) {
    Reader rd;
    Manifest m;
    m.source = source;
    if (!doc.is_object()) throw ManifestError(source, {"(root): expected an object"});

    static const std::set<std::string> known{"schema", "name", "description", "chart", "constants",
                                             "structure", "curves", "torus", "metric"};
    for (const auto& [k, v] : doc.items())
        if (!known.count(k)) rd.error(k, "unknown top-level key");

    if (const json* s = rd.member(doc, "", "schema", true))
        if (auto v = rd.integer(*s, "schema"); v && *v != kManifestSchema)
            rd.error("schema", fmt::format("unsupported version {} (expected {})", *v, kManifestSchema));
    if (const json* v = rd.member(doc, "", "name", false))
        if (auto s = rd.string(*v, "name")) m.name = *s;
    if (const json* v = rd.member(doc, "", "description", false))
        if (auto s = rd.string(*v, "description")) m.description = *s;

    if (const json* c = rd.member(doc, "", "constants", false)) {
        if (!c->is_object())
            rd.error("constants", "expected {name: number}");
        else
            for (const auto& [k, v] : c->items())
                if (auto x = rd.number(v, "constants." + k)) rd.constants[k] = *x;
    }
    for (const auto& [k, v] : opt.overrides) {
        if (!rd.constants.count(k)) rd.error("constants." + k, "override of an undeclared constant");
        rd.constants[k] = v;
    }
    m.constants = rd.constants;

    const auto chart = read_chart(rd, doc);
    if (!chart) throw ManifestError(source, rd.errors);
    m.chart = *chart;
    for (const auto& name : m.chart.coords)
        if (rd.constants.count(name)) rd.error("constants." + name, "shadows a chart coordinate");

    if (const json* s = rd.member(doc, "", "structure", false)) read_structure(rd, *s, m.chart, m);
    if (const json* g = rd.member(doc, "", "metric", false)) {
        const auto n = static_cast<std::size_t>(m.chart.dim());
        const auto mtx = rd.expr_matrix(*g, "metric", n, m.chart.coords);
        std::vector<Expr> flat;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                if (k < i && !structurally_equal(mtx[i][k], mtx[k][i]))
                    rd.error(fmt::format("metric[{}][{}]", i, k), "not symmetric");
                flat.push_back(mtx[i][k]);
            }
        m.metric = MetricField(m.chart, flat);
    }
    if (const json* c = rd.member(doc, "", "curves", false)) {
        if (!c->is_object())
            rd.error("curves", "expected {name: surface}");
        else
            for (const auto& [k, v] : c->items())
                if (auto s = read_curve(rd, v, "curves." + k, m.chart)) m.curves.emplace(k, *s);
    }
    if (const json* t = rd.member(doc, "", "torus", false)) read_torus(rd, *t, m);

    if (rd.errors.empty() && m.j && opt.check_j) {
        const auto grid = evaluable_points(sample_grid(m.chart, 3), m.j->tape());
        const auto r = check_almost_complex(*m.j, grid);
        if (!r.pass) {
            std::string at;
            for (double x : r.witness_point) at += fmt::format("{}{:g}", at.empty() ? "" : ", ", x);
            rd.error("structure.J", fmt::format("J^2 + Id = {:.3e} at ({}) exceeds {:g}", r.residual, at, r.threshold));
        }
    }
    if (rd.errors.empty() && m.metric) {
        try {
            check_metric(*m.metric, sample_grid(m.chart, 3));
        } catch (const DegenerateMetric& e) {
            rd.error("metric", e.what());
        }
    }
    if (!rd.errors.empty()) throw ManifestError(source, rd.errors);
    return m;
}

Manifest load_manifest(const std::filesystem::path& path, const ManifestOptions& opt) {
    std::ifstream in(path);
    if (!in) throw ManifestError(path.string(), {"(file): cannot open"});
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ManifestError(path.string(), {fmt::format("(file): JSON parse error at byte {}: {}", e.byte, e.what())});
    }
    return parse_manifest(doc, path.string(), opt);
}

std::filesystem::path bundled_manifest(std::string_view name, const std::filesystem::path& dir) {
    const std::filesystem::path base = dir.empty() ? std::filesystem::path(ACX_MANIFEST_DIR) : dir;
    return base / (std::string(name) + ".json");
}

}  // namespace acx
