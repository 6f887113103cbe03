#pragma once

// Truncated multivariate Taylor jets in up to four variables. A Jet<K>
// stores the Taylor coefficients of a function around a base point up to
// total degree K; arithmetic propagates them exactly, which gives exact
// derivatives of anything built from the expression tape.

#include <array>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace acx {

inline constexpr int kJetVars = 4;

constexpr int jet_size(int order) {
    // C(order + 4, 4)
    return (order + 1) * (order + 2) * (order + 3) * (order + 4) / 24;
}

template <int K>
struct JetTables {
    static constexpr int size = jet_size(K);
    std::array<std::array<int, kJetVars>, size> exps{};
    std::array<int, size> degree{};
    int index[K + 1][K + 1][K + 1][K + 1];
    std::vector<std::tuple<int, int, int>> products;  // (out, lhs, rhs)
    std::array<std::array<int, kJetVars>, size> shift_up{};  // index of monomial * x_v, or -1

    JetTables() {
        int n = 0;
        for (int d = 0; d <= K; ++d)
            for (int a = d; a >= 0; --a)
                for (int b = d - a; b >= 0; --b)
                    for (int c = d - a - b; c >= 0; --c) {
                        const int e = d - a - b - c;
                        exps[n] = {a, b, c, e};
                        degree[n] = d;
                        index[a][b][c][e] = n;
                        ++n;
                    }
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j) {
                if (degree[i] + degree[j] > K) continue;
                const auto& x = exps[i];
                const auto& y = exps[j];
                products.emplace_back(index[x[0] + y[0]][x[1] + y[1]][x[2] + y[2]][x[3] + y[3]], i, j);
            }
        for (int i = 0; i < size; ++i)
            for (int v = 0; v < kJetVars; ++v) {
                auto e = exps[i];
                ++e[v];
                shift_up[i][v] = degree[i] + 1 <= K ? index[e[0]][e[1]][e[2]][e[3]] : -1;
            }
    }

    static const JetTables& get() {
        static const JetTables t;
        return t;
    }
};

template <int K>
class Jet {
public:
    static constexpr int order = K;
    static constexpr int size = jet_size(K);

    Jet() { c_.fill(0.0); }
    Jet(double v) {  // NOLINT(google-explicit-constructor)
        c_.fill(0.0);
        c_[0] = v;
    }

    static Jet variable(int v, double x0) {
        Jet j(x0);
        if (K >= 1) j.c_[1 + v] = 1.0;
        return j;
    }

    double value() const { return c_[0]; }
    double coeff(int i) const { return c_[i]; }
    double& coeff(int i) { return c_[i]; }
    const std::array<double, size>& coeffs() const { return c_; }

    // Partial derivative d^alpha f at the base point.
    double partial(std::array<int, kJetVars> alpha) const {
        int d = 0;
        double fact = 1.0;
        for (int a : alpha) {
            d += a;
            for (int k = 2; k <= a; ++k) fact *= k;
        }
        if (d > K) throw std::out_of_range("jet order exceeded");
        const auto& t = JetTables<K>::get();
        return fact * c_[t.index[alpha[0]][alpha[1]][alpha[2]][alpha[3]]];
    }
    double d(int v) const {
        std::array<int, kJetVars> a{};
        a[v] = 1;
        return partial(a);
    }

    // Jet of the partial derivative; the top-degree coefficients become zero
    // (their true values are unknown at this truncation order).
    Jet derivative(int v) const {
        const auto& t = JetTables<K>::get();
        Jet r;
        for (int i = 0; i < size; ++i) {
            const int up = t.shift_up[i][v];
            if (up >= 0) r.c_[i] = (t.exps[i][v] + 1) * c_[up];
        }
        return r;
    }

    // Value of the truncated Taylor polynomial at offset u from the base point.
    double taylor(const std::array<double, kJetVars>& u) const {
        const auto& t = JetTables<K>::get();
        double s = 0.0;
        for (int i = 0; i < size; ++i) {
            if (c_[i] == 0.0) continue;
            double m = c_[i];
            for (int v = 0; v < kJetVars; ++v)
                for (int k = 0; k < t.exps[i][v]; ++k) m *= u[v];
            s += m;
        }
        return s;
    }

    Jet& operator+=(const Jet& o) {
        for (int i = 0; i < size; ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int i = 0; i < size; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet& operator*=(double s) {
        for (auto& x : c_) x *= s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) {
        for (auto& x : a.c_) x = -x;
        return a;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (const auto& [o, i, j] : JetTables<K>::get().products) r.c_[o] += a.c_[i] * b.c_[j];
        return r;
    }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }
    friend Jet operator/(Jet a, double s) { return a *= (1.0 / s); }
    friend Jet operator/(double s, const Jet& b) { return b.reciprocal() * s; }
    friend Jet operator+(Jet a, double s) {
        a.c_[0] += s;
        return a;
    }
    friend Jet operator+(double s, Jet a) { return a + s; }
    friend Jet operator-(Jet a, double s) {
        a.c_[0] -= s;
        return a;
    }
    friend Jet operator-(double s, const Jet& a) { return -a + s; }

    // f(this) given the Taylor coefficients f_k = f^(k)(x0)/k! at x0 = value().
    Jet compose(const std::array<double, K + 1>& f) const {
        Jet h = *this;
        h.c_[0] = 0.0;
        Jet r(f[0]);
        Jet hk = h;
        for (int k = 1; k <= K; ++k) {
            if (f[k] != 0.0)
                for (int i = 0; i < size; ++i) r.c_[i] += f[k] * hk.c_[i];
            if (k < K) hk = hk * h;
        }
        return r;
    }

    Jet reciprocal() const {
        const double x = value();
        std::array<double, K + 1> f{};
        double p = 1.0 / x;
        for (int k = 0; k <= K; ++k) {
            f[k] = (k % 2 ? -1.0 : 1.0) * p;
            p /= x;
        }
        return compose(f);
    }

private:
    std::array<double, size> c_;
};

template <int K>
Jet<K> sin(const Jet<K>& a) {
    const double s = std::sin(a.value()), c = std::cos(a.value());
    std::array<double, K + 1> f{};
    const double cyc[4] = {s, c, -s, -c};
    double fact = 1.0;
    for (int k = 0; k <= K; ++k) {
        if (k > 0) fact *= k;
        f[k] = cyc[k % 4] / fact;
    }
    return a.compose(f);
}

template <int K>
Jet<K> cos(const Jet<K>& a) {
    const double s = std::sin(a.value()), c = std::cos(a.value());
    std::array<double, K + 1> f{};
    const double cyc[4] = {c, -s, -c, s};
    double fact = 1.0;
    for (int k = 0; k <= K; ++k) {
        if (k > 0) fact *= k;
        f[k] = cyc[k % 4] / fact;
    }
    return a.compose(f);
}

template <int K>
Jet<K> exp(const Jet<K>& a) {
    const double e = std::exp(a.value());
    std::array<double, K + 1> f{};
    double fact = 1.0;
    for (int k = 0; k <= K; ++k) {
        if (k > 0) fact *= k;
        f[k] = e / fact;
    }
    return a.compose(f);
}

template <int K>
Jet<K> log(const Jet<K>& a) {
    const double x = a.value();
    std::array<double, K + 1> f{};
    f[0] = std::log(x);
    double p = x;
    for (int k = 1; k <= K; ++k, p *= x) f[k] = (k % 2 ? 1.0 : -1.0) / (k * p);
    return a.compose(f);
}

// Real power with x0 > 0 (generalized binomial series).
template <int K>
Jet<K> pow(const Jet<K>& a, double p) {
    const double x = a.value();
    std::array<double, K + 1> f{};
    double binom = 1.0;
    for (int k = 0; k <= K; ++k) {
        f[k] = binom * std::pow(x, p - k);
        binom *= (p - k) / (k + 1);
    }
    return a.compose(f);
}

template <int K>
Jet<K> sqrt(const Jet<K>& a) {
    return pow(a, 0.5);
}

template <int K>
Jet<K> pow_int(const Jet<K>& a, int n) {
    if (n < 0) return pow_int(a, -n).reciprocal();
    Jet<K> r(1.0), b = a;
    while (n) {
        if (n & 1) r = r * b;
        n >>= 1;
        if (n) b = b * b;
    }
    return r;
}

inline double value_of(double x) { return x; }
template <int K>
double value_of(const Jet<K>& x) {
    return x.value();
}

}  // namespace acx
