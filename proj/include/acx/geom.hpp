#pragma once

// Charts, vector fields, almost complex structures and (2,1)-tensors in a
// single coordinate chart. Component conventions: J is stored as the matrix
// J^i_j with J∂_j = Σ_i J^i_j ∂_i (column j is the image of ∂_j); a
// (2,1)-tensor T stores T^k_ij with T(∂_i, ∂_j) = Σ_k T^k_ij ∂_k.

#include <algorithm>
#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "acx/expr.hpp"
#include "acx/linalg.hpp"
#include "acx/report.hpp"
#include "acx/tape.hpp"

namespace acx {

using Point = std::vector<double>;

struct ChartMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Chart {
    std::vector<std::string> coords;
    std::vector<double> periods;                // 0 for non-periodic coordinates
    std::vector<std::array<double, 2>> box;     // evaluation box per coordinate

    Chart() = default;
    // Non-periodic chart with box [-1, 1] in every coordinate.
    explicit Chart(std::vector<std::string> names);
    Chart(std::vector<std::string> names, std::vector<std::array<double, 2>> box_, std::vector<double> periods_ = {});

    int dim() const { return static_cast<int>(coords.size()); }
    int index(std::string_view name) const;  // throws std::out_of_range
    void validate() const;                   // throws std::invalid_argument

    friend bool operator==(const Chart& a, const Chart& b) { return a.coords == b.coords; }
};

void require_same_chart(const Chart& a, const Chart& b);

class VectorField {
public:
    VectorField() = default;
    VectorField(Chart chart, std::vector<Expr> components);
    static VectorField coordinate(const Chart& chart, int i);  // ∂_i
    static VectorField zero(const Chart& chart);

    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    const Expr& operator[](int i) const { return comp_[static_cast<std::size_t>(i)]; }
    const std::vector<Expr>& components() const { return comp_; }

    Vec<double> at(const Point& p) const;
    template <int K>
    Vec<Jet<K>> jets(const Point& p) const {
        return tape_->jets_at<K>(p);
    }

    friend VectorField operator+(const VectorField& a, const VectorField& b);
    friend VectorField operator-(const VectorField& a, const VectorField& b);
    friend VectorField operator*(const Expr& f, const VectorField& a);

private:
    Chart chart_;
    std::vector<Expr> comp_;
    std::shared_ptr<const Tape> tape_;
};

class AlmostComplexField {
public:
    AlmostComplexField() = default;
    // entries in row-major order: entries[i*n + j] = J^i_j.
    AlmostComplexField(Chart chart, std::vector<Expr> entries);
    // images[j] = components of J∂_j.
    static AlmostComplexField from_images(Chart chart, const std::vector<std::vector<Expr>>& images);
    // Block-diagonal standard structure J∂_{2a} = ∂_{2a+1}.
    static AlmostComplexField standard(const Chart& chart);

    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    const Expr& entry(int i, int j) const { return entries_[static_cast<std::size_t>(i * dim() + j)]; }
    const std::vector<Expr>& entries() const { return entries_; }
    const Tape& tape() const { return *tape_; }

    Mat<double> at(const Point& p) const;
    template <int K>
    Mat<Jet<K>> jets(const Point& p) const {
        return reshape(tape_->jets_at<K>(p));
    }
    template <int K>
    Mat<Jet<K>> jets(std::span<const Jet<K>> p) const {
        return reshape(tape_->jets<K>(p));
    }

    VectorField apply(const VectorField& v) const;

private:
    Chart chart_;
    std::vector<Expr> entries_;
    std::shared_ptr<const Tape> tape_;

    template <class S>
    Mat<S> reshape(const std::vector<S>& flat) const {
        const int n = dim();
        Mat<S> m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = flat[static_cast<std::size_t>(i * n + j)];
        return m;
    }
};

// Pointwise (2,1)-tensor over a scalar type.
template <class S>
class Tensor21 {
public:
    Tensor21() = default;
    explicit Tensor21(int n) : n_(n), v_(static_cast<std::size_t>(n * n * n), S(0.0)) {}
    int dim() const { return n_; }
    S& operator()(int k, int i, int j) { return v_[idx(k, i, j)]; }
    const S& operator()(int k, int i, int j) const { return v_[idx(k, i, j)]; }

    // T(∂_i, ∂_j) as a vector.
    Vec<S> on_basis(int i, int j) const {
        Vec<S> r(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) r[k] = (*this)(k, i, j);
        return r;
    }
    template <class A, class B>
    Vec<S> apply(const Vec<A>& x, const Vec<B>& y) const {
        Vec<S> r(static_cast<std::size_t>(n_), S(0.0));
        for (int k = 0; k < n_; ++k)
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j) r[k] += (*this)(k, i, j) * x[i] * y[j];
        return r;
    }
    double max_abs() const {
        double m = 0.0;
        for (const auto& x : v_) m = std::max(m, std::abs(value_of(x)));
        return m;
    }

private:
    int n_ = 0;
    std::vector<S> v_;
    std::size_t idx(int k, int i, int j) const { return static_cast<std::size_t>((k * n_ + i) * n_ + j); }
};

class TensorField21 {
public:
    TensorField21() = default;
    // comps[(k*n + i)*n + j] = T^k_ij
    TensorField21(Chart chart, std::vector<Expr> comps, bool antisymmetric);

    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    bool antisymmetric() const { return antisymmetric_; }
    const Expr& operator()(int k, int i, int j) const {
        return comps_[static_cast<std::size_t>((k * dim() + i) * dim() + j)];
    }
    const std::vector<Expr>& components() const { return comps_; }

    VectorField apply(const VectorField& x, const VectorField& y) const;
    Tensor21<double> at(const Point& p) const;

private:
    Chart chart_;
    std::vector<Expr> comps_;
    bool antisymmetric_ = false;
    std::shared_ptr<const Tape> tape_;
};

// [X, Y]^k = Σ_j X^j ∂_j Y^k − Y^j ∂_j X^k, symbolically.
VectorField lie_bracket(const VectorField& x, const VectorField& y);

// Jets of vector fields seeded in chart coordinates. The result is valid to
// one order less than the inputs.
template <int K>
Vec<Jet<K>> bracket(const Vec<Jet<K>>& x, const Vec<Jet<K>>& y) {
    const std::size_t n = x.size();
    Vec<Jet<K>> r(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            r[k] += x[j] * y[k].derivative(static_cast<int>(j)) - y[j] * x[k].derivative(static_cast<int>(j));
    return r;
}

// Nijenhuis tensor from the jet of J (coordinates seeded as jet variables):
// N^k_ij = Σ_a J^a_i ∂_aJ^k_j − J^a_j ∂_aJ^k_i + J^k_a ∂_jJ^a_i − J^k_a ∂_iJ^a_j.
template <int K>
Tensor21<Jet<K>> nijenhuis_jets(const Mat<Jet<K>>& jm) {
    const int n = jm.rows();
    std::vector<Mat<Jet<K>>> d(static_cast<std::size_t>(n), Mat<Jet<K>>(n, n));
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) d[a](i, j) = jm(i, j).derivative(a);
    Tensor21<Jet<K>> t(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Jet<K> s;
                for (int a = 0; a < n; ++a)
                    s += jm(a, i) * d[a](k, j) - jm(a, j) * d[a](k, i) + jm(k, a) * d[j](a, i) - jm(k, a) * d[i](a, j);
                t(k, i, j) = s;
                t(k, j, i) = -s;
            }
    return t;
}

TensorField21 nijenhuis(const AlmostComplexField& j);
Tensor21<double> nijenhuis_at(const AlmostComplexField& j, const Point& p);

// ‖J(p)² + Id‖_∞ (max row sum) maximized over the points.
CheckResult check_almost_complex(const AlmostComplexField& j, std::span<const Point> grid, double threshold = 1e-10);

// Tensor-product grid with per_axis points per coordinate spanning the chart
// box (endpoints included; periodic coordinates sample [lo, lo + period)).
std::vector<Point> sample_grid(const Chart& chart, int per_axis);
// Points where every output of the tape evaluates to a finite number.
std::vector<Point> evaluable_points(std::span<const Point> points, const Tape& tape);
std::vector<Point> random_points(const Chart& chart, int count, unsigned seed);

// Symbolic inverse of an n×n matrix (row-major) by cofactor expansion, n ≤ 4.
std::vector<Expr> inverse_expr(const std::vector<Expr>& m, int n);
std::vector<Expr> matmul_expr(const std::vector<Expr>& a, const std::vector<Expr>& b, int n);
// P J P⁻¹ for a symbolic invertible matrix P (row-major).
AlmostComplexField conjugated(const AlmostComplexField& j, const std::vector<Expr>& p);

// Pointwise matrices of J and helpers used by several modules.
Vec<double> apply(const Mat<double>& m, const Vec<double>& v);
double max_abs(const Vec<double>& v);

}  // namespace acx
