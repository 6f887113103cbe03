#include "acx/geom.hpp"

#include <cmath>
#include <random>

namespace acx {

Chart::Chart(std::vector<std::string> names) : coords(std::move(names)) {
    periods.assign(coords.size(), 0.0);
    box.assign(coords.size(), {-1.0, 1.0});
    validate();
}

Chart::Chart(std::vector<std::string> names, std::vector<std::array<double, 2>> box_, std::vector<double> periods_)
    : coords(std::move(names)), periods(std::move(periods_)), box(std::move(box_)) {
    if (periods.empty()) periods.assign(coords.size(), 0.0);
    validate();
}

int Chart::index(std::string_view name) const {
    for (int i = 0; i < dim(); ++i)
        if (coords[i] == name) return i;
    throw std::out_of_range("unknown coordinate '" + std::string(name) + "'");
}

void Chart::validate() const {
    if (dim() < 2 || dim() > 4) throw std::invalid_argument("chart dimension must be 2, 3 or 4");
    if (periods.size() != coords.size() || box.size() != coords.size())
        throw std::invalid_argument("chart: periods/box size does not match coordinates");
    for (int i = 0; i < dim(); ++i) {
        if (periods[i] < 0.0 || !std::isfinite(periods[i]))
            throw std::invalid_argument("chart: period of '" + coords[i] + "' must be positive");
        if (!(box[i][0] <= box[i][1])) throw std::invalid_argument("chart: empty box for '" + coords[i] + "'");
        for (int j = 0; j < i; ++j)
            if (coords[j] == coords[i]) throw std::invalid_argument("chart: duplicate coordinate '" + coords[i] + "'");
    }
}

void require_same_chart(const Chart& a, const Chart& b) {
    if (!(a == b)) throw ChartMismatch("fields live on different charts");
}

// ---------------------------------------------------------------- fields

VectorField::VectorField(Chart chart, std::vector<Expr> components)
    : chart_(std::move(chart)), comp_(std::move(components)) {
    if (static_cast<int>(comp_.size()) != chart_.dim()) throw std::invalid_argument("vector field: wrong component count");
    tape_ = std::make_shared<const Tape>(std::span<const Expr>(comp_), chart_.coords);
}

VectorField VectorField::coordinate(const Chart& chart, int i) {
    std::vector<Expr> c(static_cast<std::size_t>(chart.dim()));
    c[static_cast<std::size_t>(i)] = Expr(1.0);
    return VectorField(chart, std::move(c));
}

VectorField VectorField::zero(const Chart& chart) {
    return VectorField(chart, std::vector<Expr>(static_cast<std::size_t>(chart.dim())));
}

Vec<double> VectorField::at(const Point& p) const { return (*tape_)(p); }

VectorField operator+(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart_, b.chart_);
    std::vector<Expr> c(a.comp_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comp_[i] + b.comp_[i];
    return VectorField(a.chart_, std::move(c));
}

VectorField operator-(const VectorField& a, const VectorField& b) {
    require_same_chart(a.chart_, b.chart_);
    std::vector<Expr> c(a.comp_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.comp_[i] - b.comp_[i];
    return VectorField(a.chart_, std::move(c));
}

VectorField operator*(const Expr& f, const VectorField& a) {
    std::vector<Expr> c(a.comp_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = f * a.comp_[i];
    return VectorField(a.chart_, std::move(c));
}

AlmostComplexField::AlmostComplexField(Chart chart, std::vector<Expr> entries)
    : chart_(std::move(chart)), entries_(std::move(entries)) {
    const auto n = static_cast<std::size_t>(chart_.dim());
    if (n % 2 != 0) throw std::invalid_argument("almost complex field: odd-dimensional chart");
    if (entries_.size() != n * n) throw std::invalid_argument("almost complex field: need dim*dim entries");
    tape_ = std::make_shared<const Tape>(std::span<const Expr>(entries_), chart_.coords);
}

AlmostComplexField AlmostComplexField::from_images(Chart chart, const std::vector<std::vector<Expr>>& images) {
    const int n = chart.dim();
    if (static_cast<int>(images.size()) != n) throw std::invalid_argument("almost complex field: need one image per coordinate");
    std::vector<Expr> e(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j) {
        if (static_cast<int>(images[j].size()) != n) throw std::invalid_argument("almost complex field: image has wrong length");
        for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i * n + j)] = images[j][i];
    }
    return AlmostComplexField(std::move(chart), std::move(e));
}

AlmostComplexField AlmostComplexField::standard(const Chart& chart) {
    const int n = chart.dim();
    if (n % 2 != 0) throw std::invalid_argument("almost complex field: odd-dimensional chart");
    std::vector<Expr> e(static_cast<std::size_t>(n * n));
    for (int a = 0; a < n; a += 2) {
        e[static_cast<std::size_t>((a + 1) * n + a)] = Expr(1.0);
        e[static_cast<std::size_t>(a * n + a + 1)] = Expr(-1.0);
    }
    return AlmostComplexField(chart, std::move(e));
}

Mat<double> AlmostComplexField::at(const Point& p) const { return reshape((*tape_)(p)); }

VectorField AlmostComplexField::apply(const VectorField& v) const {
    require_same_chart(chart_, v.chart());
    const int n = dim();
    std::vector<Expr> c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Expr s;
        for (int j = 0; j < n; ++j) s = s + entry(i, j) * v[j];
        c[static_cast<std::size_t>(i)] = s;
    }
    return VectorField(chart_, std::move(c));
}

TensorField21::TensorField21(Chart chart, std::vector<Expr> comps, bool antisymmetric)
    : chart_(std::move(chart)), comps_(std::move(comps)), antisymmetric_(antisymmetric) {
    const auto n = static_cast<std::size_t>(chart_.dim());
    if (comps_.size() != n * n * n) throw std::invalid_argument("tensor field: need dim^3 components");
    tape_ = std::make_shared<const Tape>(std::span<const Expr>(comps_), chart_.coords);
}

VectorField TensorField21::apply(const VectorField& x, const VectorField& y) const {
    require_same_chart(chart_, x.chart());
    require_same_chart(chart_, y.chart());
    const int n = dim();
    std::vector<Expr> c(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Expr s;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Expr& t = (*this)(k, i, j);
                if (t.is_num(0.0)) continue;
                s = s + t * x[i] * y[j];
            }
        c[static_cast<std::size_t>(k)] = s;
    }
    return VectorField(chart_, std::move(c));
}

Tensor21<double> TensorField21::at(const Point& p) const {
    const int n = dim();
    const auto v = (*tape_)(p);
    Tensor21<double> t(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) t(k, i, j) = v[static_cast<std::size_t>((k * n + i) * n + j)];
    return t;
}

// ---------------------------------------------------------------- operations

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
    require_same_chart(x.chart(), y.chart());
    const Chart& c = x.chart();
    const int n = c.dim();
    std::vector<Expr> r(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Expr s;
        for (int j = 0; j < n; ++j) {
            const std::string& v = c.coords[j];
            s = s + x[j] * differentiate(y[k], v) - y[j] * differentiate(x[k], v);
        }
        r[static_cast<std::size_t>(k)] = s;
    }
    return VectorField(c, std::move(r));
}

TensorField21 nijenhuis(const AlmostComplexField& jf) {
    const Chart& c = jf.chart();
    const int n = c.dim();
    // d[a][i*n+j] = ∂_a J^i_j
    std::vector<std::vector<Expr>> d(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        for (const Expr& e : jf.entries()) d[a].push_back(differentiate(e, c.coords[a]));
    auto dj = [&](int a, int i, int j) -> const Expr& { return d[a][static_cast<std::size_t>(i * n + j)]; };

    std::vector<Expr> comps(static_cast<std::size_t>(n * n * n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Expr s;
                for (int a = 0; a < n; ++a) {
                    s = s + jf.entry(a, i) * dj(a, k, j) - jf.entry(a, j) * dj(a, k, i);
                    s = s + jf.entry(k, a) * dj(j, a, i) - jf.entry(k, a) * dj(i, a, j);
                }
                comps[static_cast<std::size_t>((k * n + i) * n + j)] = s;
                comps[static_cast<std::size_t>((k * n + j) * n + i)] = -s;
            }
    return TensorField21(c, std::move(comps), true);
}

Tensor21<double> nijenhuis_at(const AlmostComplexField& jf, const Point& p) {
    const auto t = nijenhuis_jets<1>(jf.jets<1>(p));
    const int n = jf.dim();
    Tensor21<double> r(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(k, i, j) = t(k, i, j).value();
    return r;
}

CheckResult check_almost_complex(const AlmostComplexField& jf, std::span<const Point> grid, double threshold) {
    WorstCase worst;
    const int n = jf.dim();
    for (const Point& p : grid) {
        const Mat<double> j = jf.at(p);
        const Mat<double> sq = j * j;
        double res = 0.0;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int k = 0; k < n; ++k) row += std::abs(sq(i, k) + (i == k ? 1.0 : 0.0));
            res = std::max(res, row);
        }
        worst.update(res, p);
    }
    return worst.result("J^2 = -Id", threshold);
}

std::vector<Point> sample_grid(const Chart& chart, int per_axis) {
    const int n = chart.dim();
    std::vector<std::vector<double>> axis(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double lo = chart.box[i][0], hi = chart.box[i][1];
        for (int k = 0; k < per_axis; ++k) {
            double v;
            if (per_axis == 1) v = 0.5 * (lo + hi);
            else if (chart.periods[i] > 0.0) v = lo + chart.periods[i] * k / per_axis;
            else v = lo + (hi - lo) * k / (per_axis - 1);
            axis[i].push_back(v);
        }
    }
    std::vector<Point> pts;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
        Point p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p[i] = axis[i][idx[i]];
        pts.push_back(std::move(p));
        int i = n - 1;
        while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
        if (i < 0) break;
    }
    return pts;
}

std::vector<Point> evaluable_points(std::span<const Point> points, const Tape& tape) {
    std::vector<Point> out;
    for (const Point& p : points) {
        try {
            const auto v = tape(p);
            bool ok = true;
            for (double x : v) ok = ok && std::isfinite(x);
            if (ok) out.push_back(p);
        } catch (const DomainError&) {
        }
    }
    return out;
}

std::vector<Point> random_points(const Chart& chart, int count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::vector<Point> pts;
    for (int k = 0; k < count; ++k) {
        Point p(static_cast<std::size_t>(chart.dim()));
        for (int i = 0; i < chart.dim(); ++i)
            p[i] = std::uniform_real_distribution<double>(chart.box[i][0], chart.box[i][1])(rng);
        pts.push_back(std::move(p));
    }
    return pts;
}

namespace {

Expr det_expr(const std::vector<Expr>& m, int n, std::vector<int> rows, std::vector<int> cols) {
    if (rows.size() == 1) return m[static_cast<std::size_t>(rows[0] * n + cols[0])];
    Expr s;
    const int r0 = rows[0];
    std::vector<int> sub_rows(rows.begin() + 1, rows.end());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const Expr& e = m[static_cast<std::size_t>(r0 * n + cols[c])];
        if (e.is_num(0.0)) continue;
        std::vector<int> sub_cols = cols;
        sub_cols.erase(sub_cols.begin() + static_cast<std::ptrdiff_t>(c));
        const Expr minor = e * det_expr(m, n, sub_rows, sub_cols);
        s = c % 2 ? s - minor : s + minor;
    }
    return s;
}

std::vector<int> all_but(int n, int skip) {
    std::vector<int> v;
    for (int i = 0; i < n; ++i)
        if (i != skip) v.push_back(i);
    return v;
}

}  // namespace

std::vector<Expr> inverse_expr(const std::vector<Expr>& m, int n) {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[i] = i;
    const Expr det = det_expr(m, n, all, all);
    if (det.is_num(0.0)) throw std::domain_error("inverse_expr: matrix is structurally singular");
    std::vector<Expr> inv(static_cast<std::size_t>(n * n));
    if (n == 1) {
        inv[0] = Expr(1.0) / det;
        return inv;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            // inv(i, j) = (-1)^{i+j} M_{ji} / det
            const Expr minor = det_expr(m, n, all_but(n, j), all_but(n, i));
            inv[static_cast<std::size_t>(i * n + j)] = ((i + j) % 2 ? -minor : minor) / det;
        }
    return inv;
}

std::vector<Expr> matmul_expr(const std::vector<Expr>& a, const std::vector<Expr>& b, int n) {
    std::vector<Expr> r(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Expr s;
            for (int k = 0; k < n; ++k) s = s + a[static_cast<std::size_t>(i * n + k)] * b[static_cast<std::size_t>(k * n + j)];
            r[static_cast<std::size_t>(i * n + j)] = s;
        }
    return r;
}

AlmostComplexField conjugated(const AlmostComplexField& j, const std::vector<Expr>& p) {
    const int n = j.dim();
    return AlmostComplexField(j.chart(), matmul_expr(matmul_expr(p, j.entries(), n), inverse_expr(p, n), n));
}

Vec<double> apply(const Mat<double>& m, const Vec<double>& v) { return m * v; }

double max_abs(const Vec<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace acx
