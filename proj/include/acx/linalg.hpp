#pragma once

// Small dense vectors and matrices over a generic scalar (double or Jet<K>).
// Sizes here never exceed 8, so everything is plain loops. Pivoting and
// branch decisions look only at the base value of a jet.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "acx/jet.hpp"

namespace acx {

template <class S>
using Vec = std::vector<S>;

template <class S>
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows * cols), S(0.0)) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = S(1.0);
        return m;
    }

    int rows() const { return r_; }
    int cols() const { return c_; }
    S& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * c_ + j)]; }
    const S& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * c_ + j)]; }

    Vec<S> col(int j) const {
        Vec<S> v(static_cast<std::size_t>(r_));
        for (int i = 0; i < r_; ++i) v[i] = (*this)(i, j);
        return v;
    }
    void set_col(int j, const Vec<S>& v) {
        for (int i = 0; i < r_; ++i) (*this)(i, j) = v[i];
    }

    Mat transpose() const {
        Mat t(c_, r_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    friend Mat operator*(const Mat& a, const Mat& b) {
        if (a.c_ != b.r_) throw std::invalid_argument("matrix shape mismatch");
        Mat m(a.r_, b.c_);
        for (int i = 0; i < a.r_; ++i)
            for (int k = 0; k < a.c_; ++k)
                for (int j = 0; j < b.c_; ++j) m(i, j) += a(i, k) * b(k, j);
        return m;
    }
    friend Vec<S> operator*(const Mat& a, const Vec<S>& v) {
        Vec<S> r(static_cast<std::size_t>(a.r_), S(0.0));
        for (int i = 0; i < a.r_; ++i)
            for (int k = 0; k < a.c_; ++k) r[i] += a(i, k) * v[k];
        return r;
    }
    friend Mat operator+(Mat a, const Mat& b) {
        for (std::size_t i = 0; i < a.a_.size(); ++i) a.a_[i] += b.a_[i];
        return a;
    }
    friend Mat operator-(Mat a, const Mat& b) {
        for (std::size_t i = 0; i < a.a_.size(); ++i) a.a_[i] -= b.a_[i];
        return a;
    }
    friend Mat operator*(double s, Mat a) {
        for (auto& x : a.a_) x = x * s;
        return a;
    }

private:
    int r_ = 0, c_ = 0;
    std::vector<S> a_;
};

template <class S>
Vec<S> operator+(Vec<S> a, const Vec<S>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}
template <class S>
Vec<S> operator-(Vec<S> a, const Vec<S>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}
template <class S, class T>
Vec<S> scaled(Vec<S> a, const T& s) {
    for (auto& x : a) x = x * s;
    return a;
}

template <class S>
S dot(const Vec<S>& a, const Vec<S>& b) {
    S r(0.0);
    for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
    return r;
}

template <class S>
S norm(const Vec<S>& a) {
    using std::sqrt;
    return sqrt(dot(a, a));
}

template <class S>
Vec<double> values(const Vec<S>& v) {
    Vec<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = value_of(v[i]);
    return r;
}

template <class S>
Eigen::MatrixXd to_eigen(const Mat<S>& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) e(i, j) = value_of(m(i, j));
    return e;
}

inline Eigen::VectorXd to_eigen(const Vec<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

template <class S>
Mat<S> from_columns(const std::vector<Vec<S>>& cols) {
    const int n = cols.empty() ? 0 : static_cast<int>(cols[0].size());
    Mat<S> m(n, static_cast<int>(cols.size()));
    for (int j = 0; j < m.cols(); ++j) m.set_col(j, cols[j]);
    return m;
}

// Solve A x = B (B has several right-hand sides) by Gaussian elimination with
// partial pivoting on base values.
template <class S>
Mat<S> solve(Mat<S> a, Mat<S> b) {
    const int n = a.rows();
    if (a.cols() != n || b.rows() != n) throw std::invalid_argument("solve: shape mismatch");
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(value_of(a(i, k))) > std::abs(value_of(a(piv, k)))) piv = i;
        if (value_of(a(piv, k)) == 0.0) throw std::domain_error("solve: singular matrix");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            for (int j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
        }
        const S inv = S(1.0) / a(k, k);
        for (int i = k + 1; i < n; ++i) {
            const S f = a(i, k) * inv;
            for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            for (int j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        const S inv = S(1.0) / a(k, k);
        for (int j = 0; j < b.cols(); ++j) {
            S s = b(k, j);
            for (int i = k + 1; i < n; ++i) s -= a(k, i) * b(i, j);
            b(k, j) = s * inv;
        }
    }
    return b;
}

template <class S>
Vec<S> solve(const Mat<S>& a, const Vec<S>& b) {
    Mat<S> rhs(static_cast<int>(b.size()), 1);
    rhs.set_col(0, b);
    return solve(a, rhs).col(0);
}

template <class S>
Mat<S> inverse(const Mat<S>& a) {
    return solve(a, Mat<S>::identity(a.rows()));
}

// Numerical rank: singular values below rel_tol * sigma_max count as zero.
// A matrix whose largest singular value is below abs_zero has rank 0.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-8, double abs_zero = 1e-10);

}  // namespace acx
