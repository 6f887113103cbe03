// compute: command-line front end over the manifests and the example bank.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "acx/bank.hpp"
#include "acx/bundles.hpp"
#include "acx/frames.hpp"
#include "acx/manifest.hpp"
#include "acx/riemannian.hpp"
#include "acx/tape.hpp"
#include "acx/torus.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace acx;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string manifest;
    std::string at;
    int grid = 0;
    unsigned seed = 42;
    bool fd_only = false;
    double tolerance_scale = 1.0;
    std::string out;
    std::string csv;
    std::string curve;
    bool json_stdout = false;
    std::vector<std::string> sets;
    // torus-solve
    std::string nu, lambda, a, b;
    int m_max = -1, n_max = -1;
    // jet-check
    double factor = 0.5;
};

class Report {
public:
    Report(std::string command, const Flags& f) : command_(std::move(command)), flags_(f) {}

    std::string manifest;
    json data = json::object();
    std::vector<std::string> tables;
    bool list_checks = true;  // text output only; bank prints its own table

    void check(CheckResult r) {
        BankOptions bo;
        bo.fd_only = flags_.fd_only;
        bo.tolerance_scale = flags_.tolerance_scale;
        r.threshold = bank_threshold(r.threshold, bo);
        r.pass = !std::isnan(r.residual) && r.residual <= r.threshold;
        checks_.push_back(std::move(r));
    }
    // Pass decided by the caller (e.g. discrimination rows).
    void check_raw(CheckResult r) { checks_.push_back(std::move(r)); }

    bool pass() const {
        return std::all_of(checks_.begin(), checks_.end(), [](const CheckResult& r) { return r.pass; });
    }

    json to_json() const {
        json cs = json::array();
        for (const auto& r : checks_) {
            json c{{"check", r.check}, {"residual", finite_or_string(r.residual)}, {"threshold", r.threshold}, {"pass", r.pass}};
            if (!r.witness_point.empty()) c["witness_point"] = r.witness_point;
            if (!r.note.empty()) c["note"] = r.note;
            cs.push_back(std::move(c));
        }
        return json{{"command", command_},   {"manifest", manifest}, {"seed", flags_.seed},
                    {"fd_only", flags_.fd_only}, {"tolerance_scale", flags_.tolerance_scale},
                    {"checks", cs},          {"data", data},         {"pass", pass()}};
    }

    std::string text() const {
        std::ostringstream os;
        os << fmt::format("compute {}  manifest={}  seed={}{}\n", command_, manifest.empty() ? "-" : manifest, flags_.seed,
                          flags_.fd_only ? "  fd-only" : "");
        for (const auto& t : tables) os << "\n" << t << "\n";
        if (list_checks && !checks_.empty()) {
            std::size_t w = 5;
            for (const auto& r : checks_) w = std::max(w, r.check.size());
            os << "\n" << fmt::format("{:<{}}  {:>11}  {:>9}  {:<4}  {}\n", "check", w, "residual", "threshold", "pass", "note");
            for (const auto& r : checks_)
                os << fmt::format("{:<{}}  {:>11.3e}  {:>9.1e}  {:<4}  {}\n", r.check, w, r.residual, r.threshold,
                                  r.pass ? "ok" : "FAIL", r.note);
        }
        os << "\n" << (pass() ? "all checks pass" : "some checks FAIL") << "\n";
        return os.str();
    }

private:
    std::string command_;
    const Flags& flags_;
    std::vector<CheckResult> checks_;

    static json finite_or_string(double x) {
        if (std::isfinite(x)) return x;
        return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    }
};

// RFC 4180: quote fields containing a comma, quote or line break.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char c : s) {
        if (c == '"') r += '"';
        r += c;
    }
    return r + "\"";
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_field(header[i]);
    out << "\r\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt::format("{:.17g}", r[i]);
        out << "\r\n";
    }
}

fs::path resolve_manifest(const std::string& arg) {
    if (arg.empty()) throw UsageError("this command needs a manifest (-m)");
    if (fs::exists(arg)) return arg;
    const auto bundled = bundled_manifest(fs::path(arg).stem().string());
    if (arg.find('/') == std::string::npos && fs::exists(bundled)) return bundled;
    throw UsageError("manifest not found: " + arg);
}

Manifest load(const Flags& f, Report& rep) {
    ManifestOptions mo;
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects name=value, got " + s);
        try {
            mo.overrides[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
        } catch (const std::exception&) {
            throw UsageError("--set: not a number in " + s);
        }
    }
    const auto path = resolve_manifest(f.manifest);
    rep.manifest = path.string();
    return load_manifest(path, mo);
}

template <class T>
const T& need(const std::optional<T>& v, const char* block, const Manifest& m) {
    if (!v) throw UsageError(fmt::format("{}: this command needs the {} block", m.source, block));
    return *v;
}

Point parse_point(const std::string& text, const Chart& chart) {
    Point p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            p.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("--at: not a number: " + item);
        }
    }
    if (p.size() != chart.coords.size())
        throw UsageError(fmt::format("--at: expected {} values ({}), got {}", chart.dim(), fmt::join(chart.coords, ","), p.size()));
    return p;
}

Point centre(const Chart& c) {
    Point p;
    for (const auto& b : c.box) p.push_back(0.5 * (b[0] + b[1]));
    return p;
}

Point point_or_centre(const Flags& f, const Chart& c) { return f.at.empty() ? centre(c) : parse_point(f.at, c); }

json matrix_json(const Mat<double>& m) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        a.push_back(row);
    }
    return a;
}

std::string matrix_text(const Mat<double>& m, const std::string& title) {
    std::string s = title + "\n";
    for (int i = 0; i < m.rows(); ++i) {
        for (int k = 0; k < m.cols(); ++k) s += fmt::format("{:>12.6g}", m(i, k));
        s += "\n";
    }
    return s;
}

const ParamSurface& pick_curve(const Flags& f, const Manifest& m) {
    if (m.curves.empty()) throw UsageError(m.source + ": this command needs the curves block");
    if (f.curve.empty()) return m.curves.begin()->second;
    return m.curve(f.curve);
}

std::vector<Point> grid_points(const Flags& f, const Chart& c, int def, const Tape* tape) {
    const auto g = sample_grid(c, f.grid > 0 ? f.grid : def);
    return tape ? evaluable_points(g, *tape) : g;
}

// Reference N_J entries of the manifest at p.
CheckResult printed_nijenhuis(const Manifest& m, const std::vector<Point>& pts) {
    WorstCase w;
    for (const auto& p : pts) {
        Bindings b;
        for (int i = 0; i < m.chart.dim(); ++i) b[m.chart.coords[static_cast<std::size_t>(i)]] = p[static_cast<std::size_t>(i)];
        const auto t = nijenhuis_at(*m.j, p);
        for (int r = 0; r < m.chart.dim(); ++r)
            for (int c = 0; c < m.chart.dim(); ++c) {
                const auto& ref = (*m.nijenhuis_table)[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                if (ref.empty()) continue;
                double d = 0.0;
                for (int k = 0; k < m.chart.dim(); ++k)
                    d = std::max(d, std::abs(t(k, r, c) - evaluate(ref[static_cast<std::size_t>(k)], b)));
                w.update(d, p);
            }
    }
    return w.result("printed N_J entries", 1e-10);
}

void cmd_nijenhuis(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const Point p = point_or_centre(f, m.chart);
    rep.tables.push_back(nijenhuis_table(j, p));
    const auto t = nijenhuis_at(j, p);
    json n = json::object();
    for (int r = 0; r < j.dim(); ++r)
        for (int c = 0; c < j.dim(); ++c) n[m.chart.coords[static_cast<std::size_t>(r)]][m.chart.coords[static_cast<std::size_t>(c)]] = t.on_basis(r, c);
    rep.data["at"] = p;
    rep.data["nijenhuis"] = n;
    rep.check(check_almost_complex(j, std::vector<Point>{p}));
    if (m.nijenhuis_table) {
        const auto pts = f.grid > 0 ? grid_points(f, m.chart, 3, &j.tape()) : std::vector<Point>{p};
        rep.check(printed_nijenhuis(m, pts));
    }
}

void cmd_frame(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const Point p = point_or_centre(f, m.chart);
    const auto fr = canonical_frame(j, p);
    const auto sf = structure_functions(j, p);
    json c = json::array();
    for (int i = 0; i < 4; ++i)
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) {
                const double v = sf.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                if (std::abs(v) > 1e-12) c.push_back({{"i", i + 1}, {"j", a + 1}, {"k", b + 1}, {"c", v}});
            }
    rep.data = {{"at", p},
                {"xi", {fr.xi[0], fr.xi[1], fr.xi[2], fr.xi[3]}},
                {"s", fr.s},
                {"sign_rule", fr.sign_rule},
                {"structure_functions", c},
                {"condition", sf.condition}};
    Mat<double> x(4, 4);
    for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 4; ++i) x(i, a) = fr.xi[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
    rep.tables.push_back(matrix_text(x, "canonical frame (columns xi1..xi4)"));
    const auto r = frame_residuals(j, fr);
    rep.check({"frame J-table", r.j_table, 1e-12, true, p, {}});
    rep.check({"frame N_J-table", r.n_table, 1e-6, true, p, {}});
    rep.check({"xi3 = [xi1, xi2]", r.bracket, 1e-6, true, p, {}});
}

void cmd_scan(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const auto grid = grid_points(f, m.chart, 5, &j.tape());
    const auto s = scan_singular_loci(j, grid);
    rep.data = {{"grid_points", grid.size()},
                {"nijenhuis_zero", s.nijenhuis_zero},
                {"pi3_degenerate", s.pi3_degenerate},
                {"pi4_degenerate", s.pi4_degenerate}};
    rep.tables.push_back(fmt::format("{} grid points: N_J = 0 at {}, rk Pi3 < 3 at {}, rk Pi4 < 4 at {}", grid.size(),
                                     s.nijenhuis_zero.size(), s.pi3_degenerate.size(), s.pi4_degenerate.size()));
    rep.check(check_almost_complex(j, grid));
    if (!f.csv.empty()) {
        auto in = [](const std::vector<Point>& v, const Point& p) { return std::find(v.begin(), v.end(), p) != v.end(); };
        std::vector<std::string> header = m.chart.coords;
        header.insert(header.end(), {"nijenhuis_zero", "pi3_degenerate", "pi4_degenerate"});
        std::vector<std::vector<double>> rows;
        for (const auto& p : grid) {
            auto r = p;
            r.push_back(in(s.nijenhuis_zero, p));
            r.push_back(in(s.pi3_degenerate, p));
            r.push_back(in(s.pi4_degenerate, p));
            rows.push_back(r);
        }
        write_csv(f.csv, header, rows);
    }
}

void cmd_curve(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const auto& c = pick_curve(f, m);
    const int n = f.grid > 0 ? f.grid : 10;
    const auto grid = c.grid(n, n);
    rep.check(ph_residual(c, j, grid));
    std::vector<std::vector<double>> rows;
    json samples = json::array();
    for (const auto& st : grid) {
        try {
            const auto d = l1_direction(j, c, st);
            const auto inv = curve_invariants(j, c, st);
            const double angle = std::atan2(d.param_direction[1], d.param_direction[0]);
            rows.push_back({st[0], st[1], angle, inv.gamma1, inv.gamma2, inv.gamma3});
            samples.push_back({{"st", st}, {"angle", angle}, {"gamma", {inv.gamma1, inv.gamma2, inv.gamma3}}});
        } catch (const std::exception& e) {
            samples.push_back({{"st", st}, {"error", e.what()}});
        }
    }
    rep.data["samples"] = samples;
    if (c.periods()[0] > 0.0 && c.periods()[1] > 0.0) {
        const auto lf = l1_field(j, c, {grid.front()});
        rep.data["rotation_number"] = lf.rotation_number;
        rep.data["turning"] = {lf.turning_s, lf.turning_t};
        rep.tables.push_back(fmt::format("L1 rotation number {:.9f}, turning ({:g}, {:g})", lf.rotation_number, lf.turning_s,
                                         lf.turning_t));
        if (m.rotation_number) {
            const double expected = evaluate(*m.rotation_number, {});
            rep.check({"L1 rotation number", std::abs(lf.rotation_number - expected), 1e-3, true, {},
                       fmt::format("expected {:g}", expected)});
        }
    }
    if (!f.csv.empty()) write_csv(f.csv, {c.params()[0], c.params()[1], "angle", "gamma1", "gamma2", "gamma3"}, rows);
}

void cmd_connection(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const auto nabla = m.connection ? *m.connection : minimalize(almost_complexify(ConnectionField::flat(m.chart), j), j);
    rep.data["source"] = m.connection ? "structure.connection_table" : "minimal correction of the flat connection";
    const Point p = point_or_centre(f, m.chart);
    rep.tables.push_back(connection_table(nabla, p));
    const auto grid = grid_points(f, m.chart, 5, &j.tape());
    rep.check(check_preserves_j(nabla, j, grid));
    rep.check(check_minimal(nabla, j, grid));
}

void cmd_normal_bundle(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const auto& c = pick_curve(f, m);
    ConnectionField nabla;
    if (m.connection) {
        nabla = *m.connection;
    } else {
        const auto minimal = minimalize(almost_complexify(ConnectionField::flat(m.chart), j), j);
        nabla = gauge_totally_geodesic(minimal, j, c).connection;
    }
    const auto nb = normal_bundle_structure(j, nabla, c);
    const auto pts = random_points(nb.chart(), 20, f.seed);
    for (const auto& r : check_normal_structure(nb, pts)) rep.check(r);
    const Point q = point_or_centre(f, nb.chart());
    const auto jh = nb.at(q);
    const auto img = nijenhuis_image(nb, q);
    rep.data = {{"coords", nb.chart().coords}, {"at", q}, {"jhat", matrix_json(jh)},
                {"nijenhuis_rank", img.size()}, {"nijenhuis_max", nb.nijenhuis_at(q).max_abs()}};
    rep.tables.push_back(matrix_text(jh, fmt::format("Jhat at ({}) in {}", fmt::join(q, ", "), fmt::join(nb.chart().coords, ", "))));
    if (m.normal_structure) {
        const auto printed = AlmostComplexField::from_images(nb.chart(), m.normal_structure->images);
        WorstCase w;
        for (const auto& p : pts) {
            const auto a = printed.at(p), b = nb.at(p);
            double d = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int k = 0; k < 4; ++k) d = std::max(d, std::abs(a(i, k) - b(i, k)));
            w.update(d, p);
        }
        auto r = w.result("printed Jhat table", 1e-7);
        r.note = "convention dependent";
        rep.check(r);
    }
}

void cmd_decompose(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const auto fiber = need(m.fiber, "structure.fiber", m);
    try {
        const auto d = linear_bundle_decompose(j, fiber);
        for (const auto& r : d.preconditions) rep.check(r);
        for (const auto& r : d.checks) rep.check(r);
        json e = json::array();
        for (const auto& x : d.j0.entries()) e.push_back(to_string(x));
        rep.data["j0_entries"] = e;
        const Point p = point_or_centre(f, m.chart);
        rep.tables.push_back(matrix_text(d.j0.at(p), fmt::format("J0 at ({})", fmt::join(p, ", "))));
    } catch (const NotLinearBundle& e) {
        for (const auto& r : e.failures()) rep.check(r);
        rep.data["error"] = e.what();
    }
}

void cmd_jet_check(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& j = need(m.j, "structure.J", m);
    const auto fiber = need(m.fiber, "structure.fiber", m);
    const auto j0 = linear_bundle_decompose(j, fiber).j0;
    JetLadderOptions lo;
    lo.fiber = fiber;
    lo.factor = f.factor;
    lo.seed = f.seed;
    const auto r = jet_normal_form_residual(j, j0, lo);
    rep.data = {{"eps", r.eps}, {"defect", r.defect}, {"ratio", r.ratio}, {"factor", f.factor}};
    rep.check(r.result);
}

void cmd_torus_solve(const Flags& f, Report& rep) {
    TorusSettings ts;
    if (!f.manifest.empty()) {
        const auto m = load(f, rep);
        ts = need(m.torus, "torus", m);
    }
    auto coef = [](const std::string& s) {
        const cplx z = parse_complex(s);
        return std::array<Expr, 2>{Expr(z.real()), Expr(z.imag())};
    };
    if (!f.nu.empty()) ts.spec.nu = parse_complex(f.nu);
    if (!f.lambda.empty()) ts.spec.lambda = parse_complex(f.lambda);
    if (!f.a.empty()) ts.spec.a = coef(f.a);
    if (!f.b.empty()) ts.spec.b = coef(f.b);
    if (f.m_max >= 0) ts.m_max = f.m_max;
    if (f.n_max >= 0) ts.n_max = f.n_max;
    validate(ts.spec);
    const auto op = assemble_cr_operator(ts.spec, ts.m_max, ts.n_max);
    const auto k = kernel_analysis(op);
    rep.data = {{"nu", {ts.spec.nu.real(), ts.spec.nu.imag()}},
                {"lambda", {ts.spec.lambda.real(), ts.spec.lambda.imag()}},
                {"M", ts.m_max},
                {"N", ts.n_max},
                {"kernel_dim", k.kernel_dim},
                {"smallest_singular_values", k.smallest},
                {"largest_singular_value", k.largest}};
    rep.tables.push_back(fmt::format("truncation ({}, {}): kernel dimension {}, smallest sigma {}, largest {:.6g}", ts.m_max,
                                     ts.n_max, k.kernel_dim, fmt::join(k.smallest, " "), k.largest));
    const double theta = std::arg(ts.spec.lambda);
    const auto sec = TwistedSection::random(ts.m_max, ts.n_max, theta, f.seed);
    const auto e = energy_identity_residual(sec, ts.spec);
    rep.check({"energy identity boundary term", std::max(e.boundary[0], e.boundary[1]), 1e-8, true, {},
               fmt::format("random section, seed {}", f.seed)});
    rep.data["energy"] = e.energy;
    if (ts.spec.g) {
        const auto g = rhs_section(ts.spec, ts.m_max, ts.n_max);
        const auto s = solve_inhomogeneous(op, g);
        rep.check({"inhomogeneous residual", s.residual, 1e-8, true, {}, fmt::format("min sigma {:.3g}", s.min_sigma)});
        rep.data["solution_norm"] = s.f.norm();
    }
}

void cmd_riemann(const Flags& f, Report& rep) {
    const auto m = load(f, rep);
    const auto& g = need(m.metric, "metric", m);
    const auto lc = levi_civita(g);
    for (const auto& r : check_levi_civita(lc, g, grid_points(f, m.chart, 3, nullptr))) rep.check(r);
    if (m.curves.empty()) return;
    const auto& c = pick_curve(f, m);
    const int n = f.grid > 0 ? f.grid : 5;
    const auto r = gauss_codazzi_ricci_residuals(g, c, c.grid(n, n));
    for (const auto& x : {r.gauss, r.codazzi, r.ricci, r.gauss_curvature, r.rhat_corrected}) rep.check(x);
    rep.data = {{"max_pi", r.max_pi},
                {"codazzi_flipped", r.codazzi_flipped},
                {"ricci_flipped", r.ricci_flipped},
                {"rhat_difference", r.rhat_difference}};
    const auto st = c.grid(n, n)[static_cast<std::size_t>(n * n / 2)];
    const auto d = submanifold_tensors(g, c, st);
    rep.data["sample"] = {{"st", st}, {"intrinsic_curvature", d.intrinsic_curvature}, {"curvature_from_pi", d.curvature_from_pi}};
}

void cmd_bank(const Flags& f, Report& rep) {
    BankOptions bo;
    bo.fd_only = f.fd_only;
    bo.tolerance_scale = f.tolerance_scale;
    bo.seed = f.seed;
    if (f.m_max >= 0) bo.torus_m = f.m_max;
    if (f.n_max >= 0) bo.torus_n = f.n_max;
    const auto rows = run_example_bank(bo);
    json rs = json::array();
    std::size_t w = 0, gw = 0;
    for (const auto& r : rows) {
        w = std::max(w, r.result.check.size());
        gw = std::max(gw, r.group.size());
    }
    std::string table = fmt::format("{:>2}  {:<{}}  {:<{}}  {:>11}  {:>9}  {:<4}  {:>7}  {}\n", "#", "example", gw, "check", w,
                                    "residual", "threshold", "pass", "seconds", "note");
    for (const auto& r : rows) {
        table += fmt::format("{:>2}  {:<{}}  {:<{}}  {:>11.3e}  {:>9.1e}  {:<4}  {:>7.2f}  {}\n", r.criterion, r.group, gw,
                             r.result.check, w, r.result.residual, r.result.threshold, r.result.pass ? "ok" : "FAIL",
                             r.seconds, r.result.note);
        auto c = r.result;
        c.check = r.group + ": " + c.check;
        rep.check_raw(c);
        rs.push_back({{"criterion", r.criterion}, {"group", r.group}, {"seconds", r.seconds}});
    }
    rep.tables.push_back(table);
    rep.list_checks = false;
    rep.data["rows"] = rs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Computations for almost complex 4-manifolds from JSON manifests"};
    app.require_subcommand(1);
    Flags f;
    struct Command {
        const char* name;
        const char* help;
        void (*run)(const Flags&, Report&);
    };
    const std::vector<Command> commands{
        {"nijenhuis", "Nijenhuis tensor table at a point", cmd_nijenhuis},
        {"frame", "canonical frame and structure functions at a point", cmd_frame},
        {"scan", "singular loci of the characteristic flag on a grid", cmd_scan},
        {"curve", "pseudoholomorphy, L1 line field and invariants along a surface", cmd_curve},
        {"connection", "minimal almost complex connection checks and table", cmd_connection},
        {"normal-bundle", "induced structure on the normal bundle of a surface", cmd_normal_bundle},
        {"decompose", "split a linear bundle structure into J0 and its Nijenhuis term", cmd_decompose},
        {"jet-check", "epsilon ladder of the first-order normal form", cmd_jet_check},
        {"torus-solve", "twisted Cauchy-Riemann operator: kernel, energy identity, solve", cmd_torus_solve},
        {"riemann", "Levi-Civita, Gauss, Codazzi and Ricci residuals", cmd_riemann},
        {"bank", "run the built-in example bank", cmd_bank},
    };
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        if (std::string(c.name) != "bank") {
            sub->add_option("-m,--manifest", f.manifest, "manifest path or bundled manifest name");
            sub->add_option("--set", f.sets, "override a constant, name=value");
        }
        sub->add_option("--at", f.at, "comma-separated point");
        sub->add_option("--grid", f.grid, "grid points per axis");
        sub->add_option("--seed", f.seed, "seed for randomized sampling")->default_val(42);
        sub->add_flag("--fd-only", f.fd_only, "finite differences instead of exact jets");
        sub->add_option("--tolerance-scale", f.tolerance_scale, "multiply every threshold")->check(CLI::PositiveNumber);
        sub->add_option("--out", f.out, "write the JSON report here");
        sub->add_flag("--json", f.json_stdout, "print the JSON report instead of the text tables");
        if (std::string(c.name) == "scan" || std::string(c.name) == "curve")
            sub->add_option("--csv", f.csv, "write the grid values as CSV");
        if (std::string(c.name) == "curve" || std::string(c.name) == "normal-bundle" || std::string(c.name) == "riemann")
            sub->add_option("--curve", f.curve, "surface name from the curves block");
        if (std::string(c.name) == "jet-check") sub->add_option("--factor", f.factor, "normal form factor");
        if (std::string(c.name) == "torus-solve") {
            sub->add_option("--nu", f.nu, "lattice parameter, e.g. 0.3+1.1i");
            sub->add_option("--lambda", f.lambda, "gluing factor");
            sub->add_option("--a", f.a, "constant coefficient a");
            sub->add_option("--b", f.b, "constant coefficient b");
        }
        if (std::string(c.name) == "torus-solve" || std::string(c.name) == "bank") {
            sub->add_option("--M", f.m_max, "Fourier truncation in s");
            sub->add_option("--N", f.n_max, "Fourier truncation in t");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const Command* chosen = nullptr;
    for (const auto& c : commands)
        if (app.got_subcommand(c.name)) chosen = &c;

    Report rep(chosen->name, f);
    try {
        ScopedDerivativeMode mode(f.fd_only ? DerivativeMode::FiniteDifference : DerivativeMode::Exact);
        chosen->run(f, rep);
    } catch (const ManifestError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "compute " << chosen->name << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "compute " << chosen->name << ": " << e.what() << "\n";
        return 3;
    }
    const json j = rep.to_json();
    if (!f.out.empty()) {
        std::ofstream out(f.out);
        if (!out) {
            std::cerr << "cannot write " << f.out << "\n";
            return 2;
        }
        out << j.dump(2) << "\n";
    }
    if (f.json_stdout)
        std::cout << j.dump(2) << "\n";
    else
        std::cout << rep.text();
    return rep.pass() ? 0 : 1;
}
