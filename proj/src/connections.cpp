#include "acx/connections.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace acx {

ConnectionField::ConnectionField(Chart chart, std::vector<Expr> christoffel)
    : chart_(std::move(chart)), gamma_(std::move(christoffel)) {
    const auto n = static_cast<std::size_t>(chart_.dim());
    if (gamma_.size() != n * n * n)
        throw ChartMismatch("ConnectionField: expected " + std::to_string(n * n * n) + " Christoffel symbols, got " +
                            std::to_string(gamma_.size()));
    tape_ = std::make_shared<const Tape>(std::span<const Expr>(gamma_), chart_.coords);
}

ConnectionField::ConnectionField(Chart chart, Sampler sampler) : chart_(std::move(chart)), sampler_(std::move(sampler)) {}

ConnectionField ConnectionField::flat(const Chart& chart) {
    const auto n = static_cast<std::size_t>(chart.dim());
    return ConnectionField(chart, std::vector<Expr>(n * n * n, Expr(0.0)));
}

ConnectionField ConnectionField::from_table(const Chart& chart, const std::vector<std::vector<std::vector<Expr>>>& table) {
    const int n = chart.dim();
    std::vector<Expr> g(static_cast<std::size_t>(n * n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) g[static_cast<std::size_t>((k * n + i) * n + j)] = table.at(i).at(j).at(k);
    return ConnectionField(chart, std::move(g));
}

const std::vector<Expr>& ConnectionField::christoffel() const {
    if (!symbolic()) throw std::logic_error("ConnectionField: sampled connection has no symbolic Christoffel symbols");
    return gamma_;
}

Tensor21<double> ConnectionField::at(const Point& p) const {
    if (sampler_) return sampler_(p);
    const auto v = (*tape_)(std::span<const double>(p));
    const int n = dim();
    Tensor21<double> t(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t(k, i, j) = v[static_cast<std::size_t>((k * n + i) * n + j)];
    return t;
}

namespace {

std::size_t ix(int n, int k, int i, int j) { return static_cast<std::size_t>((k * n + i) * n + j); }
std::size_t ix(int n, int a, int b) { return static_cast<std::size_t>(a * n + b); }

// Γ^k_ij = ½(Γ′^k_ij − Σ_a J^k_a (∂_i J^a_j + Σ_b Γ′^a_ib J^b_j)); dj[(i*n + a)*n + b] = ∂_i J^a_b.
template <class S>
std::vector<S> complexified(const std::vector<S>& g, const std::vector<S>& jm, const std::vector<S>& dj, int n) {
    std::vector<S> out(g.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            std::vector<S> dji(static_cast<std::size_t>(n));  // ∇′_{∂i}(J∂j)
            for (int a = 0; a < n; ++a) {
                S v = dj[ix(n, i, a, j)];
                for (int b = 0; b < n; ++b) v = v + g[ix(n, a, i, b)] * jm[ix(n, b, j)];
                dji[static_cast<std::size_t>(a)] = v;
            }
            for (int k = 0; k < n; ++k) {
                S v = g[ix(n, k, i, j)];
                for (int a = 0; a < n; ++a) v = v - jm[ix(n, k, a)] * dji[static_cast<std::size_t>(a)];
                out[ix(n, k, i, j)] = S(0.5) * v;
            }
        }
    return out;
}

// ½(B ∓ J B(J·, ·)) in the first (arg = 0) or second (arg = 1) argument;
// sign −1 keeps the complex-linear part, +1 the antilinear part.
template <class S>
std::vector<S> linearity_part(const std::vector<S>& b, const std::vector<S>& jm, int n, int arg, double sign) {
    std::vector<S> out(b.size());
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                S jb(0.0);
                for (int a = 0; a < n; ++a) {
                    S inner(0.0);
                    for (int c = 0; c < n; ++c)
                        inner = inner + (arg == 0 ? b[ix(n, a, c, j)] * jm[ix(n, c, i)] : b[ix(n, a, i, c)] * jm[ix(n, c, j)]);
                    jb = jb + jm[ix(n, k, a)] * inner;
                }
                out[ix(n, k, i, j)] = S(0.5) * (b[ix(n, k, i, j)] + S(sign) * jb);
            }
    return out;
}

template <class S>
std::vector<S> torsion_of(const std::vector<S>& g, int n) {
    std::vector<S> t(g.size());
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t[ix(n, k, i, j)] = g[ix(n, k, i, j)] - g[ix(n, k, j, i)];
    return t;
}

template <class S>
std::vector<S> minimal_christoffel(const std::vector<S>& g, const std::vector<S>& jm, int n) {
    const auto t = torsion_of(g, n);
    const auto lin_first = linearity_part(t, jm, n, 0, -1.0);
    const auto anti_first = linearity_part(t, jm, n, 0, +1.0);
    const auto tpp = linearity_part(lin_first, jm, n, 1, -1.0);
    const auto tmp = linearity_part(anti_first, jm, n, 1, -1.0);
    std::vector<S> out(g.size());
    for (std::size_t q = 0; q < g.size(); ++q) out[q] = g[q] - S(0.5) * tpp[q] - tmp[q];
    return out;
}

std::vector<double> flatten(const Tensor21<double>& t) {
    const int n = t.dim();
    std::vector<double> v(static_cast<std::size_t>(n * n * n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) v[ix(n, k, i, j)] = t(k, i, j);
    return v;
}

Tensor21<double> unflatten(const std::vector<double>& v, int n) {
    Tensor21<double> t(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t(k, i, j) = v[ix(n, k, i, j)];
    return t;
}

std::vector<double> flatten(const Mat<double>& m) {
    std::vector<double> v(static_cast<std::size_t>(m.rows() * m.cols()));
    for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) v[ix(m.cols(), a, b)] = m(a, b);
    return v;
}

// Values and first derivatives of J at p, flattened as in complexified().
std::pair<std::vector<double>, std::vector<double>> j_with_derivatives(const AlmostComplexField& j, const Point& p) {
    const int n = j.dim();
    const auto jm = j.jets<1>(p);
    std::vector<double> v(static_cast<std::size_t>(n * n)), d(static_cast<std::size_t>(n * n * n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            v[ix(n, a, b)] = jm(a, b).value();
            for (int i = 0; i < n; ++i) d[ix(n, i, a, b)] = jm(a, b).d(i);
        }
    return {v, d};
}

double smooth_step_weight(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

// 1 for u ≤ 1, 0 for u ≥ 2, C^∞ in between.
double bump(double u) {
    const double a = smooth_step_weight(2.0 - u), b = smooth_step_weight(u - 1.0);
    return a / (a + b);
}

}  // namespace

ConnectionField almost_complexify(const ConnectionField& prime, const AlmostComplexField& j) {
    require_same_chart(prime.chart(), j.chart());
    const int n = j.dim();
    if (prime.symbolic()) {
        std::vector<Expr> dj(static_cast<std::size_t>(n * n * n));
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) dj[ix(n, i, a, b)] = differentiate(j.entry(a, b), j.chart().coords[i]);
        return ConnectionField(j.chart(), complexified(prime.christoffel(), j.entries(), dj, n));
    }
    return ConnectionField(j.chart(), [prime, j, n](const Point& p) {
        const auto [jm, dj] = j_with_derivatives(j, p);
        return unflatten(complexified(flatten(prime.at(p)), jm, dj, n), n);
    });
}

TensorField21 torsion(const ConnectionField& nabla) {
    return TensorField21(nabla.chart(), torsion_of(nabla.christoffel(), nabla.dim()), true);
}

Tensor21<double> torsion_at(const ConnectionField& nabla, const Point& p) {
    return unflatten(torsion_of(flatten(nabla.at(p)), nabla.dim()), nabla.dim());
}

double covariant_j_defect(const ConnectionField& nabla, const AlmostComplexField& j, const Point& p) {
    const int n = j.dim();
    const auto [jm, dj] = j_with_derivatives(j, p);
    const auto g = nabla.at(p);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int b = 0; b < n; ++b) {
                double v = dj[ix(n, i, k, b)];
                for (int a = 0; a < n; ++a) v += g(k, i, a) * jm[ix(n, a, b)] - jm[ix(n, k, a)] * g(a, i, b);
                worst = std::max(worst, std::abs(v));
            }
    return worst;
}

CheckResult check_preserves_j(const ConnectionField& nabla, const AlmostComplexField& j, std::span<const Point> grid,
                              double threshold) {
    WorstCase w;
    for (const auto& p : grid) w.update(covariant_j_defect(nabla, j, p), p);
    return w.result("nabla J = 0", threshold);
}

CheckResult check_minimal(const ConnectionField& nabla, const AlmostComplexField& j, std::span<const Point> grid,
                          double threshold) {
    WorstCase w;
    for (const auto& p : grid) {
        const auto t = torsion_at(nabla, p);
        const auto nj = nijenhuis_at(j, p);
        double d = 0.0;
        const int n = j.dim();
        for (int k = 0; k < n; ++k)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) d = std::max(d, std::abs(t(k, a, b) - 0.25 * nj(k, a, b)));
        w.update(d, p);
    }
    return w.result("T = N_J/4", threshold);
}

LinearityParts linearity_parts(const Tensor21<double>& b, const Mat<double>& j) {
    const int n = b.dim();
    const auto flat = flatten(b);
    const auto jm = flatten(j);
    LinearityParts out;
    for (int f = 0; f < 2; ++f) {
        const auto first = linearity_part(flat, jm, n, 0, f == 0 ? -1.0 : 1.0);
        for (int s = 0; s < 2; ++s) out.part[f][s] = unflatten(linearity_part(first, jm, n, 1, s == 0 ? -1.0 : 1.0), n);
    }
    return out;
}

ConnectionField minimalize(const ConnectionField& nabla, const AlmostComplexField& j, std::span<const Point> probe) {
    require_same_chart(nabla.chart(), j.chart());
    std::vector<Point> grid;
    if (probe.empty()) {
        grid = evaluable_points(sample_grid(j.chart(), 3), j.tape());
        probe = grid;
    }
    for (const auto& p : probe) {
        const double d = covariant_j_defect(nabla, j, p);
        if (!(d <= 1e-8))
            throw NotAlmostComplex("minimalize: input connection does not preserve J (defect " + fmt::format("{:.3g}", d) + ")", d);
    }
    const int n = j.dim();
    if (nabla.symbolic()) return ConnectionField(j.chart(), minimal_christoffel(nabla.christoffel(), j.entries(), n));
    return ConnectionField(j.chart(), [nabla, j, n](const Point& p) {
        return unflatten(minimal_christoffel(flatten(nabla.at(p)), flatten(j.at(p)), n), n);
    });
}

Tensor21<double> gauge_form(const ConnectionField& nabla, const AlmostComplexField& j, const ParamSurface& c, const Point& p,
                            const GaugeOptions& opt) {
    require_same_chart(nabla.chart(), j.chart());
    require_same_chart(c.target(), j.chart());
    const int n = j.dim();
    Tensor21<double> a(n);
    const ParamPoint st = nearest_parameter(c, p);
    const Point x = c.at(st);
    double dist = 0.0;
    for (int i = 0; i < n; ++i) dist += (p[i] - x[i]) * (p[i] - x[i]);
    const double weight = bump(std::sqrt(dist) / opt.radius);
    if (weight == 0.0) return a;

    const auto [ds, dt] = c.tangents(st);
    const auto g = nabla.at(x);
    const Vec<double> xi = ds;
    // η = ∇_ξ ξ along C
    Vec<double> eta = c.second_derivatives(st)[0];
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l) eta[k] += g(k, i, l) * xi[i] * xi[l];

    Eigen::MatrixXd tan(n, 2);
    tan.col(0) = to_eigen(ds);
    tan.col(1) = to_eigen(dt);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(tan);
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::VectorXd nu = q.col(2);

    const Mat<double> jp = j.at(p);
    const Eigen::MatrixXd je = to_eigen(jp);
    Eigen::MatrixXd basis(n, 4);
    basis.col(0) = to_eigen(xi);
    basis.col(1) = je * to_eigen(xi);
    basis.col(2) = nu;
    basis.col(3) = je * nu;
    // Row 0, 1 of the inverse give the complex ξ-coordinate (re, im) of ∂_i.
    const Eigen::MatrixXd coord = basis.inverse();
    const Eigen::VectorXd minus_eta = -to_eigen(eta);
    const Eigen::VectorXd j_minus_eta = je * minus_eta;
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
            const double re = coord(0, i) * coord(0, l) - coord(1, i) * coord(1, l);
            const double im = coord(0, i) * coord(1, l) + coord(1, i) * coord(0, l);
            for (int k = 0; k < n; ++k) a(k, i, l) = weight * (re * minus_eta[k] + im * j_minus_eta[k]);
        }
    return a;
}

GaugedConnection gauge_totally_geodesic(const ConnectionField& nabla, const AlmostComplexField& j, const ParamSurface& c,
                                        const GaugeOptions& opt) {
    if (c.target().dim() != 4) throw std::invalid_argument("gauge_totally_geodesic: needs a surface in a 4-dimensional chart");
    GaugedConnection out;
    out.whole_surface = c.periods()[0] > 0.0 && c.periods()[1] > 0.0;
    if (!out.whole_surface)
        out.domain = "surface is not a torus: the gauge is built over the parameter box only, with foot points clamped to it";
    out.connection = ConnectionField(j.chart(), [nabla, j, c, opt](const Point& p) {
        auto g = nabla.at(p);
        const auto a = gauge_form(nabla, j, c, p, opt);
        const int n = g.dim();
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int l = 0; l < n; ++l) g(k, i, l) += a(k, i, l);
        return g;
    });
    return out;
}

CheckResult check_totally_geodesic(const ConnectionField& nabla, const ParamSurface& c, const std::vector<ParamPoint>& grid,
                                   double threshold) {
    WorstCase w;
    for (const auto& st : grid) {
        const Point x = c.at(st);
        const auto t = c.tangents(st);
        const auto dd = c.second_derivatives(st);
        const auto g = nabla.at(x);
        const int n = static_cast<int>(x.size());
        Eigen::MatrixXd tan(n, 2);
        tan.col(0) = to_eigen(t[0]);
        tan.col(1) = to_eigen(t[1]);
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(tan).householderQ() * Eigen::MatrixXd::Identity(n, 2);
        double worst = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                Eigen::VectorXd v = to_eigen(dd[static_cast<std::size_t>(a + b)]);
                for (int k = 0; k < n; ++k)
                    for (int i = 0; i < n; ++i)
                        for (int l = 0; l < n; ++l) v[k] += g(k, i, l) * t[a][i] * t[b][l];
                worst = std::max(worst, (v - q * (q.transpose() * v)).norm());
            }
        w.update(worst, x);
    }
    return w.result("C totally geodesic", threshold);
}

std::string format_table(const Chart& chart, const std::string& corner, const std::function<Vec<double>(int, int)>& entry) {
    const int n = chart.dim();
    std::ostringstream os;
    os << corner;
    for (int c = 0; c < n; ++c) os << '\t' << "∂" << chart.coords[c];
    os << '\n';
    for (int r = 0; r < n; ++r) {
        os << "∂" << chart.coords[r];
        for (int c = 0; c < n; ++c) {
            const auto v = entry(r, c);
            std::string cell;
            for (int k = 0; k < n; ++k) {
                if (std::abs(v[k]) < 1e-12) continue;
                if (!cell.empty()) cell += v[k] < 0 ? " - " : " + ";
                else if (v[k] < 0) cell += "-";
                const double m = std::abs(v[k]);
                if (std::abs(m - 1.0) > 1e-12) cell += fmt::format("{:.6g} ", m);
                cell += "∂" + chart.coords[k];
            }
            os << '\t' << (cell.empty() ? "0" : cell);
        }
        os << '\n';
    }
    return os.str();
}

std::string connection_table(const ConnectionField& nabla, const Point& p) {
    const auto g = nabla.at(p);
    return format_table(nabla.chart(), "nabla(row, col)", [&](int r, int c) {
        Vec<double> v(static_cast<std::size_t>(g.dim()));
        for (int k = 0; k < g.dim(); ++k) v[k] = g(k, r, c);
        return v;
    });
}

std::string nijenhuis_table(const AlmostComplexField& j, const Point& p) {
    const auto t = nijenhuis_at(j, p);
    return format_table(j.chart(), "N(row, col)", [&](int r, int c) { return t.on_basis(r, c); });
}

}  // namespace acx
