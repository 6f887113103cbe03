#include "acx/bank.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "acx/bundles.hpp"
#include "acx/connections.hpp"
#include "acx/curves.hpp"
#include "acx/frames.hpp"
#include "acx/manifest.hpp"
#include "acx/riemannian.hpp"
#include "acx/tape.hpp"
#include "acx/torus.hpp"

namespace acx {

namespace {

Bindings bind(const Chart& c, const Point& p) {
    Bindings b;
    for (int i = 0; i < c.dim(); ++i) b.emplace(c.coords[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(i)]);
    return b;
}

Vec<double> eval_vec(const std::vector<Expr>& e, const Chart& c, const Point& p) {
    const auto b = bind(c, p);
    Vec<double> v(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) v[static_cast<int>(i)] = evaluate(e[i], b);
    return v;
}

double max_abs_diff(const Mat<double>& a, const Mat<double>& b) {
    double r = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) r = std::max(r, std::abs(a(i, k) - b(i, k)));
    return r;
}

ConnectionField random_symmetric(const Chart& c, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = c.dim();
    std::vector<Expr> g(static_cast<std::size_t>(n * n * n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Expr e(u(rng));
                for (int a = 0; a < n; ++a) e = e + Expr(u(rng)) * Expr::var(c.coords[static_cast<std::size_t>(a)]);
                g[static_cast<std::size_t>((k * n + i) * n + j)] = e;
                g[static_cast<std::size_t>((k * n + j) * n + i)] = e;
            }
    return ConnectionField(c, g);
}

// Largest deviation of N_J from the manifest's reference entries.
CheckResult nijenhuis_table_check(const Manifest& m, const std::vector<Point>& pts, double thr) {
    WorstCase w;
    const auto& table = *m.nijenhuis_table;
    for (const auto& p : pts) {
        const auto t = nijenhuis_at(*m.j, p);
        for (int r = 0; r < m.chart.dim(); ++r)
            for (int c = 0; c < m.chart.dim(); ++c) {
                const auto& ref = table[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                if (ref.empty()) continue;
                w.update(max_abs(t.on_basis(r, c) - eval_vec(ref, m.chart, p)), p);
            }
    }
    auto res = w.result("printed N_J entries", thr);
    res.note = fmt::format("{} points", pts.size());
    return res;
}

class Bank {
public:
    explicit Bank(const BankOptions& opt) : opt_(opt) {}

    std::vector<BankRow> rows;

    Manifest load(const std::string& name, Constants overrides = {}) {
        ManifestOptions mo;
        mo.overrides = std::move(overrides);
        return load_manifest(bundled_manifest(name, opt_.manifest_dir), mo);
    }

    // Runs one section; exceptions become a failing row.
    void section(int criterion, const std::string& group, const std::function<void()>& body) {
        criterion_ = criterion;
        group_ = group;
        const std::size_t first = rows.size();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const std::exception& e) {
            CheckResult r{"section completed", std::numeric_limits<double>::infinity(), 0.0, false, {}, e.what()};
            rows.push_back({criterion_, group_, r, 0.0});
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (std::size_t i = first; i < rows.size(); ++i) rows[i].seconds = secs;
    }

    // Row passes when residual ≤ adjusted threshold.
    void add(CheckResult r) {
        r.threshold = bank_threshold(r.threshold, opt_);
        r.pass = !std::isnan(r.residual) && r.residual <= r.threshold;
        rows.push_back({criterion_, group_, std::move(r), 0.0});
    }
    void add(const std::string& check, double residual, double threshold, std::string note = {}) {
        add(CheckResult{check, residual, threshold, true, {}, std::move(note)});
    }
    // Discrimination row: passes when the residual exceeds the threshold.
    void add_exceeds(const std::string& check, double residual, double threshold, const std::string& note) {
        CheckResult r{check, residual, threshold, residual > threshold, {}, "pass means residual > threshold; " + note};
        rows.push_back({criterion_, group_, std::move(r), 0.0});
    }
    void add_prefixed(const std::string& prefix, const std::vector<CheckResult>& rs) {
        for (auto r : rs) {
            r.check = prefix + r.check;
            add(std::move(r));
        }
    }

    const BankOptions& opt() const { return opt_; }

private:
    BankOptions opt_;
    int criterion_ = 0;
    std::string group_;
};

void integrable_plane(Bank& b) {
    b.section(1, "integrable_plane", [&] {
        const auto m = b.load("integrable_plane");
        const auto& pc = m.plane_coefficients.value();
        const auto& bx = m.chart.box[static_cast<std::size_t>(m.chart.index("x"))];
        const auto& by = m.chart.box[static_cast<std::size_t>(m.chart.index("y"))];
        std::vector<std::array<double, 2>> grid;
        for (int i = 0; i < 20; ++i)
            for (int k = 0; k < 20; ++k) {
                const double x = bx[0] + (bx[1] - bx[0]) * i / 19.0, y = by[0] + (by[1] - by[0]) * k / 19.0;
                if (std::abs(1.0 + y) > 1e-3) grid.push_back({x, y});
            }
        const auto r = integrability_residual(pc[0], pc[1], grid);
        b.add(CheckResult{"integrability system residual", r.residual, 1e-12, true, {r.witness[0], r.witness[1]},
                          fmt::format("{} grid points", grid.size())});
        const bool exact = r.symbolic_zero.value_or(false);
        b.add("integrability system vanishes symbolically", exact ? 0.0 : 1.0, 0.0,
              r.symbolic_zero ? "exact rational check" : "no symbolic verdict");

        // Im N_J ⊂ ⟨∂x, ∂y⟩: components along phi1, phi2 of every N_J(∂i, ∂j)
        WorstCase w;
        const int ix = m.chart.index("x"), iy = m.chart.index("y");
        for (const auto& p : random_points(m.chart, 20, b.opt().seed)) {
            const auto t = nijenhuis_at(*m.j, p);
            for (int k = 0; k < 4; ++k) {
                if (k == ix || k == iy) continue;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j) w.update(std::abs(t(k, i, j)), p);
            }
        }
        b.add(w.result("Im N_J in <dx, dy>", 1e-10));
    });
}

void winding(Bank& b) {
    for (const double rho : {0.0, 1.0, 2.0}) {
        b.section(2, fmt::format("winding rho={:g}", rho), [&] {
            const auto m = b.load("winding", {{"rho", rho}});
            const auto& j = m.j.value();
            b.add(nijenhuis_table_check(m, evaluable_points(sample_grid(m.chart, 3), j.tape()), 1e-10));

            const VectorField xi(m.chart, m.characteristic_field.value());
            const auto br = lie_bracket(xi, j.apply(xi));
            const auto& expect = m.characteristic_bracket.value();
            WorstCase w;
            for (int a = 0; a < 5; ++a)
                for (int c = 0; c < 5; ++c) {
                    const Point p{a / 5.0, c / 5.0, 0.0, 0.0};
                    w.update(max_abs(br.at(p) - eval_vec(expect, m.chart, p)), p);
                }
            b.add(w.result("[xi, J xi] on x = y = 0", 1e-10));

            const auto& torus = m.curve("torus");
            const auto f = l1_field(j, torus, torus.grid(10, 10));
            const double expected = evaluate(m.rotation_number.value(), {});
            b.add("L1 rotation number", std::abs(f.rotation_number - expected), 1e-3,
                  fmt::format("measured {:.9f}, expected {:g}", f.rotation_number, expected));
        });
    }
}

void printed_tables(Bank& b) {
    for (const char* name : {"parallel_normal", "transversal_normal"}) {
        b.section(3, name, [&] {
            const auto m = b.load(name);
            const auto& j = m.j.value();
            b.add(nijenhuis_table_check(m, evaluable_points(sample_grid(m.chart, 3), j.tape()), 1e-10));
            const auto grid = evaluable_points(sample_grid(m.chart, 5), j.tape());
            const auto& nabla = m.connection.value();
            auto pj = check_preserves_j(nabla, j, grid, 1e-9);
            pj.check = "printed connection: " + pj.check;
            b.add(pj);
            auto mn = check_minimal(nabla, j, grid, 1e-9);
            mn.check = "printed connection: " + mn.check;
            b.add(mn);
        });
    }
}

void canonical_frames(Bank& b) {
    b.section(4, "winding rho=1 and 10 perturbations", [&] {
        const auto m = b.load("winding", {{"rho", 1.0}});
        Chart box = m.chart;
        box.box.assign(4, {-0.3, 0.3});
        auto run = [&](const std::string& label, const std::vector<AlmostComplexField>& js, unsigned seed0) {
            WorstCase jt, nt, bt;
            int samples = 0;
            for (std::size_t k = 0; k < js.size(); ++k)
                for (const auto& p : random_points(box, 20, seed0 + static_cast<unsigned>(k))) {
                    const auto f = canonical_frame(js[k], p);
                    const auto r = frame_residuals(js[k], f);
                    jt.update(r.j_table, p);
                    nt.update(r.n_table, p);
                    bt.update(r.bracket, p);
                    ++samples;
                }
            const std::string note = fmt::format("{} samples", samples);
            for (auto r : {jt.result(label + ": frame J-table", 1e-12), nt.result(label + ": frame N_J-table", 1e-6),
                           bt.result(label + ": xi3 = [xi1, xi2]", 1e-6)}) {
                r.note = note;
                b.add(r);
            }
        };
        run("unperturbed", {m.j.value()}, b.opt().seed);
        std::vector<AlmostComplexField> perturbed;
        for (unsigned s = 1; s <= 10; ++s) perturbed.push_back(generic_perturbation(*m.j, s));
        run("perturbed", perturbed, b.opt().seed + 100);
    });
}

ConnectionField pipeline_connection(const AlmostComplexField& j, const ParamSurface& c, const ConnectionField& seed,
                                    double radius) {
    return gauge_totally_geodesic(minimalize(almost_complexify(seed, j), j), j, c, {radius}).connection;
}

void normal_structures(Bank& b) {
    for (const char* name : {"parallel_normal", "transversal_normal"}) {
        b.section(5, name, [&] {
            const auto m = b.load(name);
            const auto& j = m.j.value();
            const auto& c = m.curve("C");
            const auto na = normal_bundle_structure(j, pipeline_connection(j, c, ConnectionField::flat(m.chart), 0.1), c);
            const auto nb = normal_bundle_structure(j, pipeline_connection(j, c, random_symmetric(m.chart, 9), 0.05), c);
            const auto np = normal_bundle_structure(j, m.connection.value(), c);
            const auto pts = random_points(na.chart(), 50, b.opt().seed + 2);
            WorstCase ab, ap;
            for (const auto& q : pts) {
                const auto ja = na.at(q);
                ab.update(max_abs_diff(ja, nb.at(q)), q);
                ap.update(max_abs_diff(ja, np.at(q)), q);
            }
            auto r1 = ab.result("Jhat independent of the connection", 1e-7);
            r1.note = "flat seed, bump 0.1 vs random symmetric seed, bump 0.05";
            b.add(r1);
            b.add(ap.result("Jhat from the printed connection table", 1e-7));
            b.add_prefixed("", check_normal_structure(na, pts));

            const std::vector<Point> few(pts.begin(), pts.begin() + 10);
            WorstCase nij;
            for (const auto& q : few) nij.update(na.nijenhuis_at(q).max_abs(), q);
            const bool parallel = std::string(name) == "parallel_normal";
            if (parallel) {
                b.add(nij.result("N_Jhat = 0", 1e-9));
            } else {
                // Expected Im N_Jhat = <dn1, dn2>: rank defect plus the part of
                // the image off the fiber.
                WorstCase img;
                int rank = 4;
                for (const auto& q : few) {
                    const auto basis = nijenhuis_image(na, q);
                    double off = 0.0;
                    for (const auto& v : basis) off = std::max({off, std::abs(v[0]), std::abs(v[1])});
                    rank = std::min(rank, static_cast<int>(basis.size()));
                    img.update(std::abs(static_cast<double>(basis.size()) - 2.0) + off, q);
                }
                auto r = img.result("Im N_Jhat = <dn1, dn2>", 1e-6);
                r.note = fmt::format("min rank {}, max |N_Jhat| {:.3g}", rank, nij.value());
                b.add(r);
            }
            if (m.normal_structure) {
                const auto& ns = *m.normal_structure;
                if (ns.coords != na.chart().coords)
                    throw std::invalid_argument("normal_structure.coords do not match the bundle chart (" +
                                                fmt::format("{}", fmt::join(na.chart().coords, ", ")) + ")");
                const auto printed = AlmostComplexField::from_images(na.chart(), ns.images);
                const int it = na.chart().index(ns.coords[1]);
                WorstCase raw, frozen;
                for (const auto& q : pts) {
                    const auto mine = na.at(q);
                    raw.update(max_abs_diff(printed.at(q), mine), q);
                    Point q0 = q;
                    q0[static_cast<std::size_t>(it)] = 0.0;
                    frozen.update(max_abs_diff(printed.at(q0), mine), q);
                }
                auto r = raw.result("printed Jhat table, transported fiber coordinates", 1e-7);
                r.note = "printed table carries exp(t/2); pointwise lift gives the constant 1/2";
                b.add(r);
                auto f = frozen.result("printed Jhat table, pointwise fiber coordinates", 1e-7);
                f.note = "printed table evaluated with t = 0 in the exponential factor";
                b.add(f);
            }
        });
    }
}

void decompositions(Bank& b) {
    auto run = [&](const Manifest& m, const std::string& label) {
        const auto fiber = m.fiber.value();
        try {
            const auto d = linear_bundle_decompose(m.j.value(), fiber);
            b.add_prefixed(label + ": ", d.preconditions);
            b.add_prefixed(label + ": ", d.checks);
        } catch (const NotLinearBundle& e) {
            b.add_prefixed(label + ": ", e.failures());
        }
    };
    b.section(6, "linear_family", [&] {
        for (const auto& v : std::vector<std::array<double, 2>>{{1.0, 0.0}, {0.0, 1.0}, {0.3, -0.7}})
            run(b.load("linear_family", {{"v1", v[0]}, {"v2", v[1]}}), fmt::format("v=({:g},{:g})", v[0], v[1]));
    });
    b.section(6, "parallel_normal", [&] { run(b.load("parallel_normal"), "fiber (x1,y1)"); });
}

void jet_ladder(Bank& b) {
    b.section(7, "linear_family", [&] {
        const auto m = b.load("linear_family");
        const auto& linear = m.j.value();
        const auto fiber = m.fiber.value();
        const auto j0 = linear_bundle_decompose(linear, fiber).j0;
        // P = I + (x² − y²)E + xy F: same 1-jet along the zero section.
        std::mt19937_64 rng(b.opt().seed);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        const Expr x = Expr::var(m.chart.coords[static_cast<std::size_t>(fiber[0])]);
        const Expr y = Expr::var(m.chart.coords[static_cast<std::size_t>(fiber[1])]);
        std::vector<Expr> p(16);
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k)
                p[static_cast<std::size_t>(i * 4 + k)] = Expr(i == k ? 1.0 : 0.0) + Expr(u(rng)) * (x * x - y * y) + Expr(u(rng)) * x * y;
        const auto j = conjugated(linear, p);
        JetLadderOptions lo;
        lo.fiber = fiber;
        const auto half = jet_normal_form_residual(j, j0, lo);
        auto r = half.result;
        r.note = fmt::format("D/eps^2 = {:.4g}, {:.4g}, {:.4g}", half.ratio[0], half.ratio[1], half.ratio[2]);
        b.add(r);
        lo.factor = 0.25;
        const auto quarter = jet_normal_form_residual(j, j0, lo);
        b.add_exceeds("jet normal form, factor 0.25 rejected", quarter.result.residual, quarter.result.threshold,
                      fmt::format("D/eps^2 = {:.4g}, {:.4g}, {:.4g}", quarter.ratio[0], quarter.ratio[1], quarter.ratio[2]));
    });
}

void symbols(Bank& b) {
    b.section(8, "transversal_normal", [&] {
        const auto m = b.load("transversal_normal");
        const auto& j1 = m.j.value();
        const auto& c = m.curve("C");
        const auto grid = c.grid(4, 4);
        const auto j2 = quadratic_pullback(j1, {0.4, -0.3}, {-0.2, 0.5});
        WorstCase eq8, sym, tan, rel;
        for (const auto& s : equivalence_symbol(j1, j2, c, grid)) {
            eq8.update(s.eq8_residual, s.at);
            rel.update(s.relation_residual, s.at);
            sym.update(s.symmetry_residual, s.at);
            tan.update(s.tangent_residual, s.at);
        }
        b.add(eq8.result("pullback witness: J1 Phi - Phi(J2 ., .) = P", 1e-8));
        b.add(rel.result("pullback witness: J1 B - B(J2 ., .) = P", 1e-10));
        b.add(sym.result("pullback witness: Phi symmetric", 1e-12));
        b.add(tan.result("pullback witness: Phi(TC, TC) = 0", 1e-12));

        const auto flat = AlmostComplexField::standard(m.chart);
        double worst = 0.0;
        for (const auto& s : equivalence_symbol(flat, j1, c, grid, {1e-9, 1e-8, false}))
            worst = std::max(worst, s.identity10_residual);
        b.add_exceeds("symmetry identity violated when N_J differ", worst, 1e-3, "flat structure against the example");
    });
}

void torus(Bank& b) {
    const int mm = b.opt().torus_m.value_or(-1), nn = b.opt().torus_n.value_or(-1);
    auto trunc = [&](const TorusSettings& t) { return std::array<int, 2>{mm >= 0 ? mm : t.m_max, nn >= 0 ? nn : t.n_max}; };
    b.section(9, "torus_rigidity", [&] {
        const auto m = b.load("torus_rigidity");
        const auto& ts = m.torus.value();
        const auto [tm, tn] = trunc(ts);
        const auto ka = kernel_analysis(assemble_cr_operator(ts.spec, tm, tn));
        const auto kb = kernel_analysis(assemble_cr_operator(ts.spec, tm + 4, tn + 4));
        b.add(fmt::format("kernel dimension at ({},{})", tm, tn), ka.kernel_dim, 0.0,
              fmt::format("min sigma {:.6g}, max sigma {:.6g}", ka.smallest.front(), ka.largest));
        const double sa = ka.smallest.front(), sb = kb.smallest.front();
        b.add(fmt::format("min sigma stable against ({},{})", tm + 4, tn + 4), std::abs(sa - sb) / std::max(sb, 1e-300), 0.1,
              fmt::format("{:.6g} vs {:.6g}", sa, sb));

        auto spec = ts.spec;
        spec.lambda = std::polar(1.0, 0.7);
        WorstCase w;
        for (unsigned k = 0; k < 10; ++k) {
            const auto f = TwistedSection::random(tm, tn, 0.7, b.opt().seed + k);
            const auto e = energy_identity_residual(f, spec);
            w.update(std::max(e.boundary[0], e.boundary[1]), {static_cast<double>(k)});
        }
        auto r = w.result("energy identity boundary term, 10 twisted sections", 1e-8);
        r.witness_point.clear();
        r.note = "twist theta = 0.7";
        b.add(r);
    });
    b.section(9, "torus_kernel", [&] {
        const auto m = b.load("torus_kernel");
        const auto [tm, tn] = trunc(m.torus.value());
        const auto ka = kernel_analysis(assemble_cr_operator(m.torus->spec, tm, tn));
        b.add(fmt::format("kernel dimension 2 at ({},{})", tm, tn), std::abs(ka.kernel_dim - 2), 0.0,
              fmt::format("kernel dimension {}", ka.kernel_dim));
    });
}

void structure_equations(Bank& b) {
    b.section(10, "plane_flat", [&] {
        const auto m = b.load("plane_flat");
        const auto& l = m.curve("plane");
        const auto r = gauss_codazzi_ricci_residuals(m.metric.value(), l, l.grid(4, 4));
        b.add("Gauss residual exactly 0", r.gauss.residual, 0.0);
        b.add("Codazzi residual exactly 0", r.codazzi.residual, 0.0);
        b.add("Ricci residual exactly 0", r.ricci.residual, 0.0);
    });
    for (const double rad : {1.0, 2.0}) {
        b.section(10, fmt::format("sphere_r3 r={:g}", rad), [&] {
            const auto m = b.load("sphere_r3", {{"r", rad}});
            const auto& g = m.metric.value();
            const auto& l = m.curve("sphere");
            const auto grid = l.grid(5, 6);
            const auto r = gauss_codazzi_ricci_residuals(g, l, grid);
            for (auto x : {r.gauss, r.codazzi, r.ricci}) {
                x.threshold = kStructureTolerance;
                b.add(x);
            }
            WorstCase k;
            const double expect = 1.0 / (rad * rad);
            for (const auto& st : grid) {
                const auto d = submanifold_tensors(g, l, st);
                k.update(std::abs(d.curvature_from_pi - expect), {st[0], st[1]});
            }
            b.add(k.result("Gauss equation curvature = 1/r^2", 1e-6));
        });
    }
}

}  // namespace

double bank_threshold(double threshold, const BankOptions& opt) {
    const double t = threshold * opt.tolerance_scale;
    return opt.fd_only ? std::max(t, 1e-5) : t;
}

AlmostComplexField generic_perturbation(const AlmostComplexField& j, unsigned seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto& c = j.chart();
    const int n = c.dim();
    std::vector<Expr> p(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            Expr e(i == k ? 1.0 : 0.0);
            for (int a = 0; a < n; ++a) {
                const Expr xa = Expr::var(c.coords[static_cast<std::size_t>(a)]);
                e = e + Expr(scale * u(rng)) * xa;
                e = e + Expr(0.5 * scale * u(rng)) * xa * Expr::var(c.coords[static_cast<std::size_t>((a + i + k) % n)]);
            }
            p[static_cast<std::size_t>(i * n + k)] = e;
        }
    return conjugated(j, p);
}

AlmostComplexField quadratic_pullback(const AlmostComplexField& j, std::array<double, 2> c1, std::array<double, 2> c2) {
    const auto& ch = j.chart();
    if (ch.dim() != 4) throw std::invalid_argument("quadratic_pullback: needs a 4-dimensional chart");
    const Expr x1 = Expr::var(ch.coords[0]), y1 = Expr::var(ch.coords[1]);
    const Expr x2 = Expr::var(ch.coords[2]), y2 = Expr::var(ch.coords[3]);
    // conj(z2)²
    const Expr re = x2 * x2 - y2 * y2, im = Expr(-2.0) * x2 * y2;
    const std::vector<Expr> psi{
        x1 + Expr(0.5) * (Expr(c1[0]) * re - Expr(c1[1]) * im),
        y1 + Expr(0.5) * (Expr(c1[0]) * im + Expr(c1[1]) * re),
        x2 + Expr(0.5) * (Expr(c2[0]) * re - Expr(c2[1]) * im),
        y2 + Expr(0.5) * (Expr(c2[0]) * im + Expr(c2[1]) * re),
    };
    std::vector<Expr> dpsi(16);
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 4; ++i)
            dpsi[static_cast<std::size_t>(k * 4 + i)] = differentiate(psi[static_cast<std::size_t>(k)], ch.coords[static_cast<std::size_t>(i)]);
    std::map<std::string, Expr, std::less<>> at_psi;
    for (int k = 0; k < 4; ++k) at_psi.emplace(ch.coords[static_cast<std::size_t>(k)], psi[static_cast<std::size_t>(k)]);
    std::vector<Expr> j_psi;
    for (const auto& e : j.entries()) j_psi.push_back(substitute(e, at_psi));
    return AlmostComplexField(ch, matmul_expr(inverse_expr(dpsi, 4), matmul_expr(j_psi, dpsi, 4), 4));
}

std::vector<BankRow> run_example_bank(const BankOptions& opt) {
    ScopedDerivativeMode mode(opt.fd_only ? DerivativeMode::FiniteDifference : DerivativeMode::Exact);
    Bank b(opt);
    integrable_plane(b);
    winding(b);
    printed_tables(b);
    canonical_frames(b);
    normal_structures(b);
    decompositions(b);
    jet_ladder(b);
    symbols(b);
    torus(b);
    structure_equations(b);
    return std::move(b.rows);
}

}  // namespace acx
