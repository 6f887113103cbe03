#include "acx/frames.hpp"

#include <cmath>

namespace acx {

namespace {

constexpr int kFrameOrder = 3;
using FJet = Jet<kFrameOrder>;

template <int K>
struct PlaneJets {
    Mat<Jet<K>> j;
    Tensor21<Jet<K>> n;
    Vec<Jet<K>> w, jw;
    Eigen::MatrixXd image;  // columns N(∂_i, ∂_j), i < j
};

template <class S>
Vec<S> normalized(const Vec<S>& v) {
    using std::sqrt;
    const S len = sqrt(dot(v, v));
    return scaled(v, S(1.0) / len);
}

template <int K = kFrameOrder>
std::optional<PlaneJets<K>> plane_jets(const AlmostComplexField& jf, const Point& p, const FrameOptions& opt = {}) {
    PlaneJets<K> d;
    d.j = jf.jets<K>(p);
    d.n = nijenhuis_jets(d.j);
    const int n = jf.dim();
    d.image.resize(n, n * (n - 1) / 2);
    int best_i = -1, best_j = -1, col = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++col) {
            const auto v = values(d.n.on_basis(i, j));
            for (int k = 0; k < n; ++k) d.image(k, col) = v[k];
            const double len = to_eigen(v).norm();
            if (len > best) {
                best = len;
                best_i = i;
                best_j = j;
            }
        }
    if (d.image.cwiseAbs().maxCoeff() < kNijenhuisZero) return std::nullopt;
    Vec<Jet<K>> w = normalized(d.n.on_basis(best_i, best_j));
    if (opt.span_scale != 1.0 || opt.span_rotation != 0.0) {
        const Vec<Jet<K>> jw0 = d.j * w;
        w = scaled(scaled(w, std::cos(opt.span_rotation)) + scaled(jw0, std::sin(opt.span_rotation)), opt.span_scale);
    }
    d.w = w;
    d.jw = d.j * w;
    return d;
}

Eigen::MatrixXd columns(const std::vector<Vec<double>>& cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(cols[0].size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t r = 0; r < cols[c].size(); ++r) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cols[c][r];
    return m;
}

std::vector<Vec<double>> orthonormal_basis(const Eigen::MatrixXd& m, int rank) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
    std::vector<Vec<double>> out;
    for (int k = 0; k < rank; ++k) {
        Vec<double> v(static_cast<std::size_t>(m.rows()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = svd.matrixU()(r, k);
        out.push_back(std::move(v));
    }
    return out;
}

int first_significant_sign(const Vec<double>& v) {
    for (double x : v)
        if (std::abs(x) > 1e-12) return x > 0 ? 1 : -1;
    return 1;
}

}  // namespace

std::string to_string(const FlagRanks& r) {
    return "(" + std::to_string(r.pi2) + "," + std::to_string(r.pi3) + "," + std::to_string(r.pi4) + ")";
}

std::optional<std::array<Vec<double>, 2>> characteristic_plane(const AlmostComplexField& jf, const Point& p) {
    const auto d = plane_jets(jf, p);
    if (!d) return std::nullopt;
    const auto basis = orthonormal_basis(d->image, 2);
    return std::array<Vec<double>, 2>{basis[0], basis[1]};
}

namespace {

// Π⁴ needs one more derivative than Π³.
template <int K>
DerivedFlag flag_from_jets(const AlmostComplexField& jf, const Point& p, bool with_pi4) {
    DerivedFlag out;
    const auto d = plane_jets<K>(jf, p);
    if (!d) return out;
    out.ranks.pi2 = numerical_rank(d->image, kRankTolerance);
    if (out.ranks.pi2 < 2) {
        out.pi2 = orthonormal_basis(d->image, out.ranks.pi2);
        return out;
    }
    using J = Jet<K>;
    const Vec<J> e1 = normalized(d->w);
    const Vec<J> e2 = normalized(d->jw - scaled(e1, dot(d->jw, e1)));
    const Vec<J> e3 = bracket(e1, e2);
    const Eigen::MatrixXd m2 = columns({values(e1), values(e2)});
    const Eigen::MatrixXd m3 = columns({values(e1), values(e2), values(e3)});
    out.ranks.pi3 = numerical_rank(m3, kRankTolerance);
    out.pi2 = orthonormal_basis(m2, 2);
    out.pi3 = orthonormal_basis(m3, out.ranks.pi3);
    if (with_pi4) {
        const Vec<J> b13 = bracket(e1, e3), b23 = bracket(e2, e3);
        const Eigen::MatrixXd m4 = columns({values(e1), values(e2), values(e3), values(b13), values(b23)});
        out.ranks.pi4 = numerical_rank(m4, kRankTolerance);
        out.pi4 = orthonormal_basis(m4, out.ranks.pi4);
    }
    return out;
}

}  // namespace

DerivedFlag derived_flag(const AlmostComplexField& jf, const Point& p) { return flag_from_jets<kFrameOrder>(jf, p, true); }

DerivedFlag derived_flag_pi3(const AlmostComplexField& jf, const Point& p) { return flag_from_jets<2>(jf, p, false); }

CanonicalFrame canonical_frame(const AlmostComplexField& jf, const Point& p, const FrameOptions& opt,
                               const Vec<double>* reference) {
    if (jf.dim() != 4) throw std::invalid_argument("canonical_frame: needs a 4-dimensional chart");
    const auto d = plane_jets(jf, p, opt);
    if (!d) throw DegenerateFlag("canonical_frame: N_J vanishes at the point", {});
    const Vec<FJet> u = bracket(d->w, d->jw);
    {
        const Eigen::MatrixXd m3 = columns({values(d->w), values(d->jw), values(u)});
        const int r2 = numerical_rank(d->image, kRankTolerance);
        const int r3 = numerical_rank(m3, kRankTolerance);
        if (r2 != 2 || r3 != 3)
            throw DegenerateFlag("canonical_frame: flag ranks " + to_string(FlagRanks{r2, r3, 0}) + ", need rk Π² = 2 and rk Π³ = 3",
                                 {r2, r3, 0});
    }
    // N(·, u) restricted to Π² in the basis (w, Jw) is [[p, q], [q, -p]].
    const Vec<FJet> nwu = d->n.apply(d->w, u);
    Mat<FJet> g(2, 2);
    g(0, 0) = dot(d->w, d->w);
    g(0, 1) = g(1, 0) = dot(d->w, d->jw);
    g(1, 1) = dot(d->jw, d->jw);
    const Vec<FJet> pq = solve(g, Vec<FJet>{dot(d->w, nwu), dot(d->jw, nwu)});
    const FJet& pc = pq[0];
    const FJet& qc = pq[1];
    const FJet s = sqrt(pc * pc + qc * qc);
    if (s.value() < 1e-12) throw DegenerateFlag("canonical_frame: N_J(·, [w, Jw]) vanishes on Π²", {2, 3, 0});
    // Eigenvector for +s: (p + s, q) or, when that is small, (q, s - p).
    FJet a = pc + s, b = qc;
    if (pc.value() < 0) {
        a = qc;
        b = s - pc;
    }
    const FJet len = sqrt(a * a + b * b);
    a = a / len;
    b = b / len;
    // [e, Je] ≡ (a² + b²) u mod Π² = u, N(e, u) = s e, so ξ₁ = e / √s gives
    // N(ξ₁, [ξ₁, Jξ₁]) = ξ₁.
    Vec<FJet> xi1 = scaled(scaled(d->w, a) + scaled(d->jw, b), FJet(1.0) / sqrt(s));

    CanonicalFrame f;
    f.point = p;
    int sign;
    if (reference) {
        sign = dot(values(xi1), *reference) >= 0.0 ? 1 : -1;
        f.sign_rule = "aligned-to-reference";
    } else {
        sign = first_significant_sign(values(xi1));
        f.sign_rule = "first-nonzero-component-positive";
    }
    if (sign < 0) xi1 = scaled(xi1, -1.0);
    const Vec<FJet> xi2 = d->j * xi1;
    const Vec<FJet> xi3 = bracket(xi1, xi2);
    const Mat<double> jm = jf.at(p);
    f.xi[0] = values(xi1);
    f.xi[1] = values(xi2);
    f.xi[2] = values(xi3);
    f.xi[3] = jm * f.xi[2];
    f.s = s.value();
    return f;
}

std::vector<CanonicalFrame> frames_along_path(const AlmostComplexField& jf, const std::vector<Point>& path) {
    std::vector<CanonicalFrame> out;
    for (const Point& p : path) {
        if (out.empty()) out.push_back(canonical_frame(jf, p));
        else out.push_back(canonical_frame(jf, p, {}, &out.back().xi[0]));
    }
    return out;
}

namespace {

// dxi[a][m] = ∂_m ξ_a at p, central differences with Richardson.
std::array<std::vector<Vec<double>>, 4> frame_derivatives(const AlmostComplexField& jf, const CanonicalFrame& base, double h) {
    const int n = jf.dim();
    auto central = [&](int m, double step) {
        Point pp = base.point, pm = base.point;
        pp[m] += step;
        pm[m] -= step;
        const auto fp = canonical_frame(jf, pp, {}, &base.xi[0]);
        const auto fm = canonical_frame(jf, pm, {}, &base.xi[0]);
        std::array<Vec<double>, 4> d;
        for (int a = 0; a < 4; ++a) d[a] = scaled(fp.xi[a] - fm.xi[a], 1.0 / (2 * step));
        return d;
    };
    std::array<std::vector<Vec<double>>, 4> out;
    for (int m = 0; m < n; ++m) {
        const auto d1 = central(m, h);
        const auto d2 = central(m, h / 2);
        for (int a = 0; a < 4; ++a) out[a].push_back(scaled(scaled(d2[a], 4.0) - d1[a], 1.0 / 3.0));
    }
    return out;
}

Vec<double> bracket_from(const CanonicalFrame& f, const std::array<std::vector<Vec<double>>, 4>& d, int a, int b) {
    const std::size_t n = f.xi[a].size();
    Vec<double> r(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) r = r + scaled(d[b][m], f.xi[a][m]) - scaled(d[a][m], f.xi[b][m]);
    return r;
}

}  // namespace

Vec<double> frame_bracket(const AlmostComplexField& jf, const Point& p, int a, int b, double h) {
    const auto f = canonical_frame(jf, p);
    return bracket_from(f, frame_derivatives(jf, f, h), a, b);
}

StructureFunctions structure_functions(const AlmostComplexField& jf, const Point& p, double h,
                                       const Vec<double>* reference) {
    const auto f = canonical_frame(jf, p, {}, reference);
    StructureFunctions out;
    const Eigen::MatrixXd fm = columns({f.xi[0], f.xi[1], f.xi[2], f.xi[3]});
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(fm);
    const auto& sv = svd.singularValues();
    out.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    if (!(out.condition <= 1e8)) throw IllConditioned("structure_functions: frame matrix is ill-conditioned", out.condition);
    const auto d = frame_derivatives(jf, f, h);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(fm);
    for (int j = 0; j < 4; ++j)
        for (int k = j + 1; k < 4; ++k) {
            const Eigen::VectorXd c = lu.solve(to_eigen(bracket_from(f, d, j, k)));
            for (int i = 0; i < 4; ++i) {
                out.c[i][j][k] = c(i);
                out.c[i][k][j] = -c(i);
            }
        }
    return out;
}

SingularScan scan_singular_loci(const AlmostComplexField& jf, const std::vector<Point>& grid) {
    SingularScan out;
    for (const Point& p : grid) {
        const auto r = derived_flag(jf, p).ranks;
        if (r.pi2 < 2) out.nijenhuis_zero.push_back(p);
        if (r.pi3 < 3) out.pi3_degenerate.push_back(p);
        if (r.pi4 < 4) out.pi4_degenerate.push_back(p);
    }
    return out;
}

FrameResiduals frame_residuals(const AlmostComplexField& jf, const CanonicalFrame& f) {
    FrameResiduals r;
    const Mat<double> jm = jf.at(f.point);
    r.j_table = std::max(max_abs(f.xi[1] - jm * f.xi[0]), max_abs(f.xi[3] - jm * f.xi[2]));
    const auto n = nijenhuis_at(jf, f.point);
    const auto& x = f.xi;
    const Vec<double> res[] = {
        n.apply(x[0], x[2]) - x[0],        n.apply(x[0], x[3]) + x[1], n.apply(x[1], x[2]) + x[1],
        n.apply(x[1], x[3]) + x[0],        n.apply(x[0], x[1]),        n.apply(x[2], x[3]),
    };
    for (const auto& v : res) r.n_table = std::max(r.n_table, max_abs(v));
    r.bracket = max_abs(bracket_from(f, frame_derivatives(jf, f, 1e-4), 0, 1) - x[2]);
    return r;
}

}  // namespace acx
