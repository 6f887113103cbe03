#include "acx/bundles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <fmt/format.h>

namespace acx {

namespace {

std::string where(const ParamPoint& st) { return fmt::format("({:.6g}, {:.6g})", st[0], st[1]); }

Chart bundle_chart_of(const ParamSurface& c) {
    const auto& b = c.box();
    return Chart({c.params()[0], c.params()[1], "n1", "n2"}, {b[0], b[1], {-1.0, 1.0}, {-1.0, 1.0}},
                 {c.periods()[0], c.periods()[1], 0.0, 0.0});
}

double max_abs(const Mat<double>& m) {
    double r = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int k = 0; k < m.cols(); ++k) r = std::max(r, std::abs(m(i, k)));
    return r;
}

Vec<double> bilinear(const Tensor21<double>& g, const Vec<double>& x, const Vec<double>& y) { return g.apply(x, y); }

// (M T)(k, i, j) = Σ_a M(k, a) T(a, i, j)
Tensor21<double> left(const Mat<double>& m, const Tensor21<double>& t) {
    const int n = t.dim();
    Tensor21<double> r(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < n; ++a) r(k, i, j) += m(k, a) * t(a, i, j);
    return r;
}

// T(M·, ·) when slot = 0, T(·, M·) when slot = 1.
Tensor21<double> precompose(const Tensor21<double>& t, const Mat<double>& m, int slot) {
    const int n = t.dim();
    Tensor21<double> r(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < n; ++a) r(k, i, j) += slot == 0 ? t(k, a, j) * m(a, i) : t(k, i, a) * m(a, j);
    return r;
}

Tensor21<double> swapped(const Tensor21<double>& t) {
    const int n = t.dim();
    Tensor21<double> r(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(k, i, j) = t(k, j, i);
    return r;
}

Tensor21<double> combine(const Tensor21<double>& a, double ca, const Tensor21<double>& b, double cb) {
    const int n = a.dim();
    Tensor21<double> r(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(k, i, j) = ca * a(k, i, j) + cb * b(k, i, j);
    return r;
}

double max_diff(const Tensor21<double>& a, const Tensor21<double>& b) { return combine(a, 1.0, b, -1.0).max_abs(); }

// Orthonormal basis of the span of the vectors N(∂_i, ∂_j).
std::vector<Vec<double>> image_basis(const Tensor21<double>& t, double rel_tol, double abs_zero) {
    const int n = t.dim();
    Eigen::MatrixXd m(n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) m(k, i * n + j) = t(k, i, j);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    std::vector<Vec<double>> out;
    if (sv.size() == 0 || sv[0] < abs_zero) return out;
    for (Eigen::Index r = 0; r < sv.size(); ++r) {
        if (sv[r] < rel_tol * sv[0]) break;
        out.emplace_back(svd.matrixU().col(r).data(), svd.matrixU().col(r).data() + n);
    }
    return out;
}

}  // namespace

NormalBundleStructure::NormalBundleStructure(AlmostComplexField j, ConnectionField nabla, ParamSurface c,
                                             std::array<int, 2> normal_coords)
    : j_(std::move(j)), nabla_(std::move(nabla)), c_(std::move(c)), normal_(normal_coords), chart_(bundle_chart_of(c_)) {
    require_same_chart(j_.chart(), nabla_.chart());
    require_same_chart(j_.chart(), c_.target());
    if (j_.dim() != 4) throw std::invalid_argument("normal bundle structure: needs a 4-dimensional chart");
}

namespace {

// ν_j and ∂_a ν_j from the projector onto TC, differentiated through jets.
struct FrameJets {
    std::array<Vec<double>, 2> nu;
    std::array<std::array<Vec<double>, 2>, 2> dnu;  // dnu[a][j]
};

FrameJets frame_jets(const ParamSurface& c, const ParamPoint& st, std::array<int, 2> normal) {
    const auto e = c.jets<2>(st);
    const int n = static_cast<int>(e.size());
    Mat<Jet<2>> t(n, 2);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < 2; ++a) t(i, a) = e[static_cast<std::size_t>(i)].derivative(a);
    const Mat<Jet<2>> gram = t.transpose() * t;
    const Mat<Jet<2>> proj = t * solve(gram, t.transpose());
    FrameJets out;
    for (int j = 0; j < 2; ++j) {
        Vec<Jet<2>> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[i] = (i == normal[j] ? Jet<2>(1.0) : Jet<2>(0.0)) - proj(i, normal[j]);
        out.nu[j] = values(v);
        for (int a = 0; a < 2; ++a) {
            out.dnu[a][j].resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) out.dnu[a][j][i] = v[i].d(a);
        }
    }
    return out;
}

}  // namespace

std::array<Vec<double>, 2> NormalBundleStructure::normal_frame(const ParamPoint& st) const {
    return frame_jets(c_, st, normal_).nu;
}

NormalData NormalBundleStructure::normal_data(const ParamPoint& st) const {
    const Point x = c_.at(st);
    const auto tan = c_.tangents(st);
    const auto dd = c_.second_derivatives(st);
    const auto fr = frame_jets(c_, st, normal_);
    const auto g = nabla_.at(x);
    const Mat<double> jm = j_.at(x);
    const Mat<double> basis_inv = inverse(from_columns<double>({tan[0], tan[1], fr.nu[0], fr.nu[1]}));

    NormalData d;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const auto co = basis_inv * (dd[static_cast<std::size_t>(a + b)] + bilinear(g, tan[a], tan[b]));
            d.normal_defect = std::max({d.normal_defect, std::abs(co[2]), std::abs(co[3])});
        }
    if (!(d.normal_defect <= kTotallyGeodesicTolerance))
        throw NotTotallyGeodesic(fmt::format("connection does not preserve TC at {} (normal part {:.3g}); the induced "
                                             "normal connection is ill-defined",
                                             where(st), d.normal_defect),
                                 d.normal_defect, st);
    d.j0 = Mat<double>(2, 2);
    d.j2 = Mat<double>(2, 2);
    for (int a = 0; a < 2; ++a) {
        const auto co = basis_inv * acx::apply(jm, tan[a]);
        for (int b = 0; b < 2; ++b) d.j0(b, a) = co[b];
    }
    for (int j = 0; j < 2; ++j) {
        const auto co = basis_inv * acx::apply(jm, fr.nu[j]);
        for (int k = 0; k < 2; ++k) d.j2(k, j) = co[2 + k];
    }
    for (int a = 0; a < 2; ++a) {
        d.omega[a] = Mat<double>(2, 2);
        for (int j = 0; j < 2; ++j) {
            const auto co = basis_inv * (fr.dnu[a][j] + bilinear(g, tan[a], fr.nu[j]));
            for (int k = 0; k < 2; ++k) d.omega[a](k, j) = co[2 + k];
        }
    }
    return d;
}

Mat<double> NormalBundleStructure::at(const Point& q) const {
    const auto d = normal_data({q[0], q[1]});
    const double nf[2] = {q[2], q[3]};
    // Fiber components of the horizontal lift of ∂_a: h[a][k] = −Σ_j ω^k_{aj} n_j.
    double h[2][2];
    for (int a = 0; a < 2; ++a)
        for (int k = 0; k < 2; ++k) h[a][k] = -(d.omega[a](k, 0) * nf[0] + d.omega[a](k, 1) * nf[1]);
    Mat<double> m(4, 4);
    for (int a = 0; a < 2; ++a) {
        // Ĵ∂_a = Σ_b J₀^b_a H∂_b + J₂(∂_a − H∂_a)
        for (int b = 0; b < 2; ++b) m(b, a) = d.j0(b, a);
        for (int mm = 0; mm < 2; ++mm) {
            double v = 0.0;
            for (int b = 0; b < 2; ++b) v += d.j0(b, a) * h[b][mm];
            for (int k = 0; k < 2; ++k) v -= d.j2(mm, k) * h[a][k];
            m(2 + mm, a) = v;
        }
    }
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) m(2 + k, 2 + j) = d.j2(k, j);
    return m;
}

Tensor21<double> NormalBundleStructure::nijenhuis_at(const Point& q, double h) const {
    const Mat<double> j0 = at(q);
    Mat<Jet<1>> jm(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) jm(r, c) = Jet<1>(j0(r, c));
    for (int v = 0; v < 4; ++v) {
        auto central = [&](double step) {
            Point a = q, b = q;
            a[v] += step;
            b[v] -= step;
            return (1.0 / (2.0 * step)) * (at(a) - at(b));
        };
        const Mat<double> d = (1.0 / 3.0) * (4.0 * central(0.5 * h) - central(h));
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) jm(r, c).coeff(1 + v) = d(r, c);
    }
    const auto nj = nijenhuis_jets<1>(jm);
    Tensor21<double> out(4);
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out(k, i, j) = nj(k, i, j).value();
    return out;
}

NormalBundleStructure normal_bundle_structure(const AlmostComplexField& j, const ConnectionField& nabla, const ParamSurface& c) {
    const auto& box = c.box();
    const ParamPoint mid{0.5 * (box[0][0] + box[0][1]), 0.5 * (box[1][0] + box[1][1])};
    const auto tan = c.tangents(mid);
    const int n = c.target().dim();
    std::array<int, 2> best{0, 1};
    double best_det = -1.0;
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = k1 + 1; k2 < n; ++k2) {
            Eigen::MatrixXd m(n, 4);
            m.col(0) = to_eigen(tan[0]);
            m.col(1) = to_eigen(tan[1]);
            m.col(2) = Eigen::VectorXd::Unit(n, k1);
            m.col(3) = Eigen::VectorXd::Unit(n, k2);
            const double det = std::abs(m.determinant());
            if (det > best_det + 1e-12) {
                best_det = det;
                best = {k1, k2};
            }
        }
    NormalBundleStructure nb(j, nabla, c, best);
    for (const auto& st : c.grid(5, 5)) nb.normal_data(st);
    return nb;
}

std::vector<CheckResult> check_normal_structure(const NormalBundleStructure& nb, const std::vector<Point>& points) {
    WorstCase square, bundle, linear;
    const double h = 0.25;
    for (const auto& q : points) {
        const Mat<double> m = nb.at(q);
        square.update(max_abs(m * m + Mat<double>::identity(4)), q);

        const auto d = nb.normal_data({q[0], q[1]});
        double bd = 0.0;
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 4; ++c) bd = std::max(bd, std::abs(m(b, c) - (c < 2 ? d.j0(b, c) : 0.0)));
        bundle.update(bd, q);

        double ld = 0.0;
        auto shifted = [&](double d1, double d2) {
            Point p = q;
            p[2] += d1;
            p[3] += d2;
            return nb.at(p);
        };
        const double inv = 1.0 / (h * h);
        ld = std::max(ld, max_abs(inv * (shifted(h, 0) - 2.0 * m + shifted(-h, 0))));
        ld = std::max(ld, max_abs(inv * (shifted(0, h) - 2.0 * m + shifted(0, -h))));
        ld = std::max(ld, max_abs(0.25 * inv * (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h))));
        linear.update(ld, q);
    }
    return {square.result("Jhat^2 = -Id", 1e-10), bundle.result("bundle map onto J|TC", 1e-10),
            linear.result("Jhat linear along fibers", 1e-8)};
}

std::vector<Vec<double>> nijenhuis_image(const NormalBundleStructure& nb, const Point& q, double rel_tol) {
    return image_basis(nb.nijenhuis_at(q), rel_tol, 1e-7);
}

Mat<double> contract_first(const Tensor21<double>& n, const Vec<double>& r) {
    const int d = n.dim();
    Mat<double> k(d, d);
    for (int a = 0; a < d; ++a)
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) k(a, j) += r[i] * n(a, i, j);
    return k;
}

LinearDecomposition linear_bundle_decompose(const AlmostComplexField& j, std::array<int, 2> fiber, int per_axis) {
    const auto& chart = j.chart();
    const int n = j.dim();
    if (n != 4) throw std::invalid_argument("linear_bundle_decompose: needs a 4-dimensional chart");
    auto is_fiber = [&](int i) { return i == fiber[0] || i == fiber[1]; };
    std::array<int, 2> base{};
    for (int i = 0, b = 0; i < n; ++i)
        if (!is_fiber(i)) base.at(static_cast<std::size_t>(b++)) = i;

    const auto grid = evaluable_points(sample_grid(chart, per_axis), j.tape());
    WorstCase ff, image, mixed, basebase;
    for (const auto& p : grid) {
        const auto nj = nijenhuis_jets<3>(j.jets<3>(p));
        double dff = 0.0, dim = 0.0, dmix = 0.0, dbb = 0.0;
        for (int k = 0; k < n; ++k)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const auto& c = nj(k, a, b);
                    if (is_fiber(a) && is_fiber(b)) dff = std::max(dff, std::abs(c.value()));
                    if (!is_fiber(k)) dim = std::max(dim, std::abs(c.value()));
                    for (int f : fiber) {
                        std::array<int, kJetVars> o{};
                        o[static_cast<std::size_t>(f)] = 1;
                        if (is_fiber(a) || is_fiber(b)) dmix = std::max(dmix, std::abs(c.partial(o)));
                        for (int g : fiber) {
                            auto o2 = o;
                            ++o2[static_cast<std::size_t>(g)];
                            if (!is_fiber(a) && !is_fiber(b)) dbb = std::max(dbb, std::abs(c.partial(o2)));
                        }
                    }
                }
        ff.update(dff, p);
        image.update(dim, p);
        mixed.update(dmix, p);
        basebase.update(dbb, p);
    }
    LinearDecomposition out;
    out.preconditions = {ff.result("N_J(F, F) = 0", 1e-9), image.result("Im N_J in F", 1e-9),
                         mixed.result("N_J(F, .) constant along fibers", 1e-9),
                         basebase.result("N_J(base, base) affine along fibers", 1e-9)};
    std::vector<CheckResult> failed;
    for (const auto& r : out.preconditions)
        if (!r.pass) failed.push_back(r);
    if (!failed.empty()) {
        std::string msg = "not a linear bundle structure:";
        for (const auto& r : failed) msg += fmt::format(" [{}: {:.3g}]", r.check, r.residual);
        throw NotLinearBundle(msg, failed);
    }

    // J₀ = J − ½ J K with K^k_j = Σ_f x_f N^k_fj on the zero section.
    const auto nsym = nijenhuis(j);
    std::map<std::string, Expr, std::less<>> zero;
    for (int f : fiber) zero.emplace(chart.coords[f], Expr(0.0));
    std::vector<Expr> k(static_cast<std::size_t>(n * n), Expr(0.0));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int f : fiber)
                k[static_cast<std::size_t>(a * n + b)] =
                    k[static_cast<std::size_t>(a * n + b)] + Expr::var(chart.coords[f]) * substitute(nsym(a, f, b), zero);
    const auto jk = matmul_expr(j.entries(), k, n);
    std::vector<Expr> j0(static_cast<std::size_t>(n * n));
    for (std::size_t i = 0; i < j0.size(); ++i) j0[i] = j.entries()[i] - Expr(0.5) * jk[i];
    out.j0 = AlmostComplexField(chart, j0);

    WorstCase square, integrable, recon;
    for (const auto& p : grid) {
        const Mat<double> m0 = out.j0.at(p);
        square.update(max_abs(m0 * m0 + Mat<double>::identity(n)), p);
        integrable.update(nijenhuis_at(out.j0, p).max_abs(), p);
        Point foot = p;
        Vec<double> r(static_cast<std::size_t>(n), 0.0);
        for (int f : fiber) {
            r[f] = p[f];
            foot[f] = 0.0;
        }
        const Mat<double> kk = contract_first(nijenhuis_at(j, foot), r);
        recon.update(max_abs(m0 + 0.5 * (m0 * kk) - j.at(p)), p);
    }
    out.checks = {square.result("J0^2 = -Id", 1e-10), integrable.result("N_J0 = 0", 1e-8),
                  recon.result("J0 + 1/2 J0 N_J(r, .) = J", 1e-10)};
    return out;
}

JetLadder jet_normal_form_residual(const AlmostComplexField& j, const AlmostComplexField& j0, const JetLadderOptions& opt) {
    require_same_chart(j.chart(), j0.chart());
    const auto& chart = j.chart();
    const int n = j.dim();
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss;

    struct Sample {
        Point origin;
        Tensor21<double> n;  // N_J at the origin
        std::vector<Vec<double>> dirs;
    };
    std::vector<Sample> samples;
    if (opt.variant == JetVariant::Curve) {
        for (int s = 0; s < opt.base_samples; ++s) {
            Point foot(static_cast<std::size_t>(n), 0.0);
            for (int i = 0; i < n; ++i) {
                if (i == opt.fiber[0] || i == opt.fiber[1]) continue;
                const auto& b = chart.box[static_cast<std::size_t>(i)];
                foot[i] = b[0] + (0.1 + 0.8 * unit(rng)) * (b[1] - b[0]);
            }
            Sample smp{foot, nijenhuis_at(j, foot), {}};
            const auto im = image_basis(smp.n, 1e-8, 1e-10);
            Eigen::MatrixXd m(n, 2 + static_cast<Eigen::Index>(im.size()));
            for (int i = 0, c = 0; i < n; ++i)
                if (i != opt.fiber[0] && i != opt.fiber[1]) m.col(c++) = Eigen::VectorXd::Unit(n, i);
            for (std::size_t c = 0; c < im.size(); ++c) m.col(2 + static_cast<Eigen::Index>(c)) = to_eigen(im[c]);
            if (im.size() != 2 || numerical_rank(m, 1e-8) < 4)
                throw TransversalityFailure("characteristic plane Im N_J is not transversal to the zero section", foot);
            for (int d = 0; d < opt.directions; ++d) {
                const double th = 2.0 * 3.14159265358979323846 * unit(rng);
                Vec<double> u(static_cast<std::size_t>(n), 0.0);
                u[opt.fiber[0]] = std::cos(th);
                u[opt.fiber[1]] = std::sin(th);
                smp.dirs.push_back(u);
            }
            samples.push_back(std::move(smp));
        }
    } else {
        if (static_cast<int>(opt.origin.size()) != n) throw std::invalid_argument("jet_normal_form_residual: origin required");
        Sample smp{opt.origin, nijenhuis_at(j, opt.origin), {}};
        for (int d = 0; d < opt.directions * std::max(1, opt.base_samples); ++d) {
            Vec<double> u(static_cast<std::size_t>(n));
            for (auto& x : u) x = gauss(rng);
            smp.dirs.push_back(scaled(u, 1.0 / std::sqrt(dot(u, u))));
        }
        samples.push_back(std::move(smp));
    }

    JetLadder out;
    out.eps = opt.eps;
    for (double eps : opt.eps) {
        double worst = 0.0;
        for (const auto& s : samples)
            for (const auto& u : s.dirs) {
                Point a = s.origin;
                for (int i = 0; i < n; ++i) a[i] += eps * u[i];
                const Mat<double> m0 = j0.at(a);
                const Mat<double> k = contract_first(s.n, scaled(u, eps));
                worst = std::max(worst, max_abs(j.at(a) - m0 - opt.factor * (m0 * k)));
            }
        out.defect.push_back(worst);
        out.ratio.push_back(worst / (eps * eps));
    }
    const bool exact = std::all_of(out.defect.begin(), out.defect.end(), [](double d) { return d <= 1e-12; });
    const auto [lo, hi] = std::minmax_element(out.ratio.begin(), out.ratio.end());
    const double spread = exact ? 1.0 : (*lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity());
    out.result = CheckResult{fmt::format("jet normal form, factor {:g}", opt.factor), spread, 4.0, spread <= 4.0, {}, {}};
    if (exact) out.result.note = "remainder vanishes";
    return out;
}

std::vector<JetSymbol> equivalence_symbol(const AlmostComplexField& j1, const AlmostComplexField& j2, const ParamSurface& c,
                                          const std::vector<ParamPoint>& grid, const EquivalenceOptions& opt) {
    require_same_chart(j1.chart(), j2.chart());
    require_same_chart(j1.chart(), c.target());
    const int n = j1.dim();
    std::vector<JetSymbol> out;
    for (const auto& st : grid) {
        JetSymbol s;
        s.at = c.at(st);
        const auto a1 = j1.jets<1>(s.at);
        const auto a2 = j2.jets<1>(s.at);
        Mat<double> m1(n, n), m2(n, n);
        double dj = 0.0;
        s.p = Tensor21<double>(n);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i) {
                m1(k, i) = a1(k, i).value();
                m2(k, i) = a2(k, i).value();
                dj = std::max(dj, std::abs(m1(k, i) - m2(k, i)));
                for (int v = 0; v < n; ++v) s.p(k, i, v) = a2(k, i).d(v) - a1(k, i).d(v);
            }
        const double dn = max_diff(nijenhuis_at(j1, s.at), nijenhuis_at(j2, s.at));
        if (opt.check && !(dj <= opt.precondition_tolerance))
            throw PreconditionMismatch(fmt::format("J1 and J2 differ on C at {} by {:.3g}", where(st), dj), "J", dj, s.at);
        if (opt.check && !(dn <= opt.precondition_tolerance))
            throw PreconditionMismatch(fmt::format("N_J1 and N_J2 differ on C at {} by {:.3g}", where(st), dn), "N_J", dn,
                                       s.at);

        s.b = left(-0.5 * m1, s.p);
        s.relation_residual = max_diff(combine(left(m1, s.b), 1.0, precompose(s.b, m2, 0), -1.0), s.p);

        const auto pj = precompose(precompose(s.p, m2, 0), m2, 1);  // P(Jξ, Jη)
        s.identity10_residual = combine(combine(s.p, 1.0, swapped(s.p), -1.0), 1.0, combine(pj, 1.0, swapped(pj), -1.0), -1.0).max_abs();
        if (opt.check && !(s.identity10_residual <= opt.identity_tolerance))
            throw IdentityViolation(fmt::format("identity P(x,y) - P(y,x) = P(Jx,Jy) - P(Jy,Jx) fails at {} by {:.3g}",
                                                where(st), s.identity10_residual),
                                    s.identity10_residual, s.at);

        const Mat<double>& jm = m1;
        const auto b_xjy = precompose(s.b, jm, 1);  // B(ξ, Jη)
        const auto b_jxy = precompose(s.b, jm, 0);  // B(Jξ, η)
        const auto bracket = combine(combine(b_xjy, 1.0, swapped(b_xjy), 1.0), 1.0, combine(b_jxy, 1.0, swapped(b_jxy), 1.0), -1.0);
        s.phi = combine(combine(s.b, 0.5, swapped(s.b), 0.5), 1.0, left(jm, bracket), -0.25);

        s.eq8_residual = max_diff(combine(left(m1, s.phi), 1.0, precompose(s.phi, m2, 0), -1.0), s.p);
        s.symmetry_residual = max_diff(s.phi, swapped(s.phi));
        const auto tan = c.tangents(st);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) s.tangent_residual = std::max(s.tangent_residual, max_abs(s.phi.apply(tan[a], tan[b])));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace acx
