#include "acx/torus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include <fmt/format.h>

#include "acx/tape.hpp"

namespace acx {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};

// Recursive descent over complex constants.
class ComplexParser {
public:
    explicit ComplexParser(std::string_view s) : s_(s) {}

    cplx parse() {
        const cplx v = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return v;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    cplx expr() {
        cplx v = term();
        for (;;) {
            if (eat('+')) v += term();
            else if (eat('-')) v -= term();
            else return v;
        }
    }
    cplx term() {
        cplx v = unary();
        for (;;) {
            if (eat('*')) v *= unary();
            else if (eat('/')) {
                const cplx d = unary();
                if (d == 0.0) fail("division by zero");
                v /= d;
            } else return v;
        }
    }
    cplx unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return power();
    }
    cplx power() {
        const cplx base = primary();
        if (eat('^')) {
            const cplx e = unary();
            if (e.imag() == 0.0 && e.real() == std::round(e.real()) && std::abs(e.real()) <= 64) {
                const int k = static_cast<int>(e.real());
                cplx r = 1.0;
                for (int i = 0; i < std::abs(k); ++i) r *= base;
                return k < 0 ? 1.0 / r : r;
            }
            return std::pow(base, e);
        }
        return base;
    }
    cplx primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (eat('(')) {
            const cplx v = expr();
            if (!eat(')')) fail("expected ')'");
            return v;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
                std::size_t q = pos_ + 1;
                if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
                if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
                    pos_ = q;
                    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
                }
            }
            double v = 0.0;
            try {
                v = std::stod(std::string(s_.substr(start, pos_ - start)));
            } catch (const std::exception&) {
                fail("bad number");
            }
            if (pos_ < s_.size() && s_[pos_] == 'i' &&
                (pos_ + 1 == s_.size() || !std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])))) {
                ++pos_;
                return {0.0, v};
            }
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name(s_.substr(start, pos_ - start));
            if (name == "i") return kI;
            if (name == "pi") return kPi;
            if (!eat('(')) fail("unknown identifier '" + name + "'");
            const cplx x = expr();
            if (!eat(')')) fail("expected ')'");
            if (name == "exp") return std::exp(x);
            if (name == "log") return std::log(x);
            if (name == "sin") return std::sin(x);
            if (name == "cos") return std::cos(x);
            if (name == "sqrt") return std::sqrt(x);
            if (name == "conj") return std::conj(x);
            if (name == "re") return x.real();
            if (name == "im") return x.imag();
            if (name == "abs") return std::abs(x);
            if (name == "arg") return std::arg(x);
            fail("unknown function '" + name + "'");
        }
        fail("unexpected character");
    }
};

// A complex coefficient given by real and imaginary expressions, evaluated
// on the lattice coordinates.
class Coefficient {
public:
    Coefficient(const std::array<Expr, 2>& parts, cplx nu) : nu_(nu) {
        const std::map<std::string, double, std::less<>> pi{{"pi", kPi}};
        const std::array<Expr, 2> bound{bind_constants(parts[0], pi), bind_constants(parts[1], pi)};
        tape_ = Tape(std::span<const Expr>(bound), {"phi1", "phi2", "s", "t"});
        constant_ = bound[0].is_num() && bound[1].is_num();
        zero_ = bound[0].is_num(0.0) && bound[1].is_num(0.0);
    }

    cplx operator()(double s, double t) const {
        const cplx phi = phi_of(nu_, s, t);
        const std::array<double, 4> in{phi.real(), phi.imag(), s, t};
        std::array<double, 2> out{};
        tape_.eval(in, out);
        return {out[0], out[1]};
    }
    bool zero() const { return zero_; }
    bool constant() const { return constant_; }

private:
    cplx nu_;
    Tape tape_;
    bool constant_ = false, zero_ = false;
};

void check_nu(cplx nu) {
    if (!(std::abs(nu.imag()) > 0.0) || !std::isfinite(nu.real()) || !std::isfinite(nu.imag()))
        throw InvalidTorusSpec(fmt::format("the period nu must have nonzero imaginary part (got {}{:+}i)", nu.real(), nu.imag()));
}

void check_unit_lambda(cplx lambda) {
    if (std::abs(std::abs(lambda) - 1.0) > 1e-12)
        throw InvalidTorusSpec(fmt::format(
            "|lambda| = {} but the twisted Fourier basis needs |lambda| = 1 (off the unit circle the gluing weight "
            "grows along the lattice and there is no bounded global basis)",
            std::abs(lambda)));
}

// Values of a section on the G × G grid s_j = j/G, t_k = k/G, row-major in j.
std::vector<cplx> sample(const TwistedSection& f, int g) {
    const int mm = f.m_max(), nn = f.n_max();
    std::vector<cplx> b(static_cast<std::size_t>((2 * mm + 1) * g), 0.0);
    for (int m = -mm; m <= mm; ++m)
        for (int k = 0; k < g; ++k) {
            const double t = static_cast<double>(k) / g;
            cplx acc = 0.0;
            for (int n = -nn; n <= nn; ++n) acc += f(m, n) * std::polar(1.0, 2 * kPi * n * t);
            b[static_cast<std::size_t>((m + mm) * g + k)] = acc;
        }
    std::vector<cplx> v(static_cast<std::size_t>(g * g), 0.0);
    for (int j = 0; j < g; ++j) {
        const double s = static_cast<double>(j) / g;
        for (int m = -mm; m <= mm; ++m) {
            const cplx e = std::polar(1.0, 2 * kPi * m * s);
            for (int k = 0; k < g; ++k) v[static_cast<std::size_t>(j * g + k)] += e * b[static_cast<std::size_t>((m + mm) * g + k)];
        }
        for (int k = 0; k < g; ++k) v[static_cast<std::size_t>(j * g + k)] *= std::polar(1.0, f.theta() * k / g);
    }
    return v;
}

}  // namespace

cplx parse_complex(std::string_view text) { return ComplexParser(text).parse(); }

std::array<Expr, 2> TorusBundleSpec::b_from_lambda_coefficient(cplx big_lambda) {
    const cplx b = -0.5 * kI * std::conj(big_lambda);
    return {Expr(b.real()), Expr(b.imag())};
}

cplx phi_of(cplx nu, double s, double t) { return 2 * kPi * s + nu * t; }

std::array<double, 2> lattice_of(cplx nu, cplx phi) {
    const double t = phi.imag() / nu.imag();
    return {(phi.real() - nu.real() * t) / (2 * kPi), t};
}

// ∂_φ̄ = (1 − iν₁/ν₂)/(4π) ∂_s + i/(2ν₂) ∂_t and ∂_φ its conjugate, on
// e^{iθt} e^{2πi(ms + nt)} where ∂_s ↦ 2πim, ∂_t ↦ i(θ + 2πn).
cplx dbar_symbol(int m, int n, double theta, cplx nu) {
    return {(m * nu.real() - theta - 2 * kPi * n) / (2 * nu.imag()), 0.5 * m};
}

cplx d_symbol(int m, int n, double theta, cplx nu) {
    return {(-m * nu.real() + theta + 2 * kPi * n) / (2 * nu.imag()), 0.5 * m};
}

void validate(const TorusBundleSpec& spec) {
    check_nu(spec.nu);
    if (spec.lambda == 0.0 || !std::isfinite(std::abs(spec.lambda))) throw InvalidTorusSpec("the gluing factor lambda must be nonzero");
    const std::set<std::string> allowed{"phi1", "phi2", "s", "t", "pi"};
    auto check = [&](const std::array<Expr, 2>& parts, const char* name) {
        for (const auto& p : parts)
            for (const auto& id : free_identifiers(p))
                if (!allowed.count(id))
                    throw InvalidTorusSpec(fmt::format("coefficient {} uses '{}'; only phi1, phi2, s, t, pi are bound", name, id));
        const Coefficient c(parts, spec.nu);
        if (c.constant()) return;
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 12; ++k) {
            const double s = u(rng), t = u(rng);
            const cplx v = c(s, t);
            if (!std::isfinite(std::abs(v)))
                throw InvalidTorusSpec(fmt::format("coefficient {} is not finite at s = {}, t = {}", name, s, t));
            const double scale = 1.0 + std::abs(v);
            if (std::abs(c(s + 1, t) - v) > 1e-9 * scale || std::abs(c(s, t + 1) - v) > 1e-9 * scale)
                throw InvalidTorusSpec(fmt::format(
                    "coefficient {} is not a function on the torus: it changes under phi -> phi + 2pi or phi + nu", name));
        }
    };
    check(spec.a, "a");
    check(spec.b, "b");
    if (spec.g) check(*spec.g, "g");
}

TwistedSection::TwistedSection(int m_max, int n_max, double theta)
    : TwistedSection(m_max, n_max, theta, std::vector<cplx>(static_cast<std::size_t>((2 * m_max + 1) * (2 * n_max + 1)))) {}

TwistedSection::TwistedSection(int m_max, int n_max, double theta, std::vector<cplx> coeffs)
    : m_(m_max), n_(n_max), theta_(theta), c_(std::move(coeffs)) {
    if (m_max < 0 || n_max < 0) throw std::invalid_argument("truncation orders must be nonnegative");
    if (c_.size() != static_cast<std::size_t>(modes())) throw std::invalid_argument("coefficient count does not match the truncation");
}

TwistedSection TwistedSection::random(int m_max, int n_max, double theta, unsigned seed, double decay) {
    TwistedSection f(m_max, n_max, theta);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    for (int m = -m_max; m <= m_max; ++m)
        for (int n = -n_max; n <= n_max; ++n) {
            const double w = std::pow(1.0 + m * m + n * n, -0.5 * decay);
            const double re = z(rng), im = z(rng);
            f(m, n) = w * cplx(re, im);
        }
    return f;
}

cplx TwistedSection::eval_st(double s, double t) const {
    cplx acc = 0.0;
    for (int m = -m_; m <= m_; ++m)
        for (int n = -n_; n <= n_; ++n) acc += (*this)(m, n) * std::polar(1.0, 2 * kPi * (m * s + n * t));
    return std::polar(1.0, theta_ * t) * acc;
}

TwistedSection TwistedSection::dbar(cplx nu) const {
    TwistedSection r(*this);
    for (int m = -m_; m <= m_; ++m)
        for (int n = -n_; n <= n_; ++n) r(m, n) *= dbar_symbol(m, n, theta_, nu);
    return r;
}

TwistedSection TwistedSection::d(cplx nu) const {
    TwistedSection r(*this);
    for (int m = -m_; m <= m_; ++m)
        for (int n = -n_; n <= n_; ++n) r(m, n) *= d_symbol(m, n, theta_, nu);
    return r;
}

Eigen::VectorXd TwistedSection::to_real() const {
    Eigen::VectorXd x(2 * modes());
    for (int k = 0; k < modes(); ++k) {
        x[2 * k] = c_[static_cast<std::size_t>(k)].real();
        x[2 * k + 1] = c_[static_cast<std::size_t>(k)].imag();
    }
    return x;
}

TwistedSection TwistedSection::from_real(int m_max, int n_max, double theta, const Eigen::VectorXd& x) {
    TwistedSection f(m_max, n_max, theta);
    if (x.size() != 2 * f.modes()) throw std::invalid_argument("real vector length does not match the truncation");
    for (int k = 0; k < f.modes(); ++k) f.c_[static_cast<std::size_t>(k)] = {x[2 * k], x[2 * k + 1]};
    return f;
}

double TwistedSection::norm() const {
    double s = 0.0;
    for (const auto& c : c_) s += std::norm(c);
    return std::sqrt(s);
}

std::vector<cplx> fourier_coefficients(const std::function<cplx(double, double)>& f, int p_max, int q_max) {
    const int gs = 3 * (2 * p_max + 1), gt = 3 * (2 * q_max + 1);
    std::vector<cplx> v(static_cast<std::size_t>(gs * gt));
    for (int j = 0; j < gs; ++j)
        for (int k = 0; k < gt; ++k) v[static_cast<std::size_t>(j * gt + k)] = f(static_cast<double>(j) / gs, static_cast<double>(k) / gt);
    // Transform along t, then along s.
    const int np = 2 * p_max + 1, nq = 2 * q_max + 1;
    std::vector<cplx> half(static_cast<std::size_t>(gs * nq));
    for (int j = 0; j < gs; ++j)
        for (int q = -q_max; q <= q_max; ++q) {
            cplx acc = 0.0;
            for (int k = 0; k < gt; ++k) acc += v[static_cast<std::size_t>(j * gt + k)] * std::polar(1.0, -2 * kPi * q * k / gt);
            half[static_cast<std::size_t>(j * nq + q + q_max)] = acc / static_cast<double>(gt);
        }
    std::vector<cplx> c(static_cast<std::size_t>(np * nq));
    for (int p = -p_max; p <= p_max; ++p)
        for (int q = 0; q < nq; ++q) {
            cplx acc = 0.0;
            for (int j = 0; j < gs; ++j) acc += half[static_cast<std::size_t>(j * nq + q)] * std::polar(1.0, -2 * kPi * p * j / gs);
            c[static_cast<std::size_t>((p + p_max) * nq + q)] = acc / static_cast<double>(gs);
        }
    return c;
}

CrOperator assemble_cr_operator(const TorusBundleSpec& spec, int m_max, int n_max) {
    check_nu(spec.nu);
    check_unit_lambda(spec.lambda);
    validate(spec);
    if (m_max < 0 || n_max < 0) throw std::invalid_argument("truncation orders must be nonnegative");
    CrOperator op;
    op.m_max = m_max;
    op.n_max = n_max;
    op.theta = std::arg(spec.lambda);
    op.nu = spec.nu;
    const TwistedSection shape(m_max, n_max, op.theta);
    const int k = shape.modes();
    op.matrix = Eigen::MatrixXd::Zero(2 * k, 2 * k);

    // Coefficient modes up to twice the truncation cover every difference
    // (and sum) of retained modes; the product is an exact convolution.
    const int pm = 2 * m_max, qm = 2 * n_max, nq = 2 * qm + 1;
    const Coefficient a(spec.a, spec.nu), b(spec.b, spec.nu);
    const auto ac = a.zero() ? std::vector<cplx>() : fourier_coefficients(a, pm, qm);
    const auto bc = b.zero() ? std::vector<cplx>() : fourier_coefficients(b, pm, qm);
    auto coef = [&](const std::vector<cplx>& c, int p, int q) { return c[static_cast<std::size_t>((p + pm) * nq + q + qm)]; };

    auto& mat = op.matrix;
    for (int m = -m_max; m <= m_max; ++m)
        for (int n = -n_max; n <= n_max; ++n) {
            const int row = 2 * shape.index(m, n);
            for (int p = -m_max; p <= m_max; ++p)
                for (int q = -n_max; q <= n_max; ++q) {
                    const int col = 2 * shape.index(p, q);
                    // f ↦ σ f + a f, complex linear
                    cplx alpha = (m == p && n == q) ? dbar_symbol(m, n, op.theta, spec.nu) : cplx(0.0);
                    if (!ac.empty()) alpha += coef(ac, m - p, n - q);
                    mat(row, col) += alpha.real();
                    mat(row, col + 1) -= alpha.imag();
                    mat(row + 1, col) += alpha.imag();
                    mat(row + 1, col + 1) += alpha.real();
                    // f ↦ b f̄: conj(c_pq) lands on mode (m, n) through b_{m+p, n+q}
                    if (!bc.empty()) {
                        const cplx beta = coef(bc, m + p, n + q);
                        mat(row, col) += beta.real();
                        mat(row, col + 1) += beta.imag();
                        mat(row + 1, col) += beta.imag();
                        mat(row + 1, col + 1) -= beta.real();
                    }
                }
        }
    return op;
}

TwistedSection apply(const CrOperator& op, const TwistedSection& f) {
    if (f.m_max() != op.m_max || f.n_max() != op.n_max) throw std::invalid_argument("section truncation does not match the operator");
    const Eigen::VectorXd y = op.matrix * f.to_real();
    return TwistedSection::from_real(op.m_max, op.n_max, op.theta, y);
}

KernelAnalysis kernel_analysis(const CrOperator& op) {
    KernelAnalysis r;
    if (op.matrix.size() == 0) return r;
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(op.matrix);
    const auto& sv = svd.singularValues();  // descending
    r.largest = sv[0];
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] < kKernelRelTolerance * r.largest) ++r.kernel_dim;
    for (Eigen::Index i = sv.size() - 1; i >= 0 && r.smallest.size() < 5; --i) r.smallest.push_back(sv[i]);
    return r;
}

InhomogeneousSolution solve_inhomogeneous(const CrOperator& op, const TwistedSection& g) {
    if (g.m_max() != op.m_max || g.n_max() != op.n_max) throw std::invalid_argument("right-hand side truncation does not match the operator");
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(op.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv[0], smin = sv[sv.size() - 1];
    if (smin < kKernelRelTolerance * smax)
        throw NearSingular(fmt::format("operator is near singular: min sigma {:.3e}, max sigma {:.3e}", smin, smax), smin, smax);
    const Eigen::VectorXd rhs = g.to_real();
    const Eigen::VectorXd x = svd.solve(rhs);
    InhomogeneousSolution out{TwistedSection::from_real(op.m_max, op.n_max, op.theta, x), 0.0, smin};
    const double gn = rhs.norm();
    out.residual = (op.matrix * x - rhs).norm() / (gn > 0.0 ? gn : 1.0);
    return out;
}

TwistedSection rhs_section(const TorusBundleSpec& spec, int m_max, int n_max) {
    const double theta = std::arg(spec.lambda);
    if (!spec.g) return TwistedSection(m_max, n_max, theta);
    const Coefficient g(*spec.g, spec.nu);
    return TwistedSection(m_max, n_max, theta, fourier_coefficients(g, m_max, n_max));
}

EnergyIdentity energy_identity_residual(const TwistedSection& f, const TorusBundleSpec& spec) {
    check_nu(spec.nu);
    EnergyIdentity r;
    const double twist = std::abs(std::abs(spec.lambda) - 1.0);
    r.hypotheses.push_back({"|lambda| = 1", twist, 1e-12, twist <= 1e-12, {}, ""});

    const Coefficient b(spec.b, spec.nu);
    const int mx = std::max(f.m_max(), f.n_max());
    {
        // b_φ in the twisted reading: b = e^{2iθt} b̃, so ∂_φ acts with twist 2θ.
        double bphi = 0.0;
        if (!b.zero()) {
            const auto bc = fourier_coefficients(b, mx, mx);
            for (int p = -mx; p <= mx; ++p)
                for (int q = -mx; q <= mx; ++q)
                    bphi += std::abs(bc[static_cast<std::size_t>((p + mx) * (2 * mx + 1) + q + mx)] *
                                     d_symbol(p, q, 2 * f.theta(), spec.nu));
        }
        r.hypotheses.push_back({"b_phi = 0", bphi, 1e-8, bphi <= 1e-8, {}, "bound on sup |b_phi| from the Fourier coefficients of b"});
    }

    const double area = 2 * kPi * std::abs(spec.nu.imag());
    const auto fd = f.dbar(spec.nu);
    const auto fdd = fd.d(spec.nu);
    r.grids = {4 * mx + 4, 8 * mx + 8};
    for (int level = 0; level < 2; ++level) {
        const int g = r.grids[static_cast<std::size_t>(level)];
        const auto fv = sample(f, g), fdv = sample(fd, g), fddv = sample(fdd, g);
        cplx sum = 0.0;
        double energy = 0.0;
        for (int j = 0; j < g; ++j)
            for (int k = 0; k < g; ++k) {
                const auto idx = static_cast<std::size_t>(j * g + k);
                // ∂_φ(f_φ̄ f̄) = f_φ̄φ f̄ + |f_φ̄|²
                sum += fddv[idx] * std::conj(fv[idx]) + std::norm(fdv[idx]);
                if (level == 1) {
                    const double bb = b.zero() ? 0.0 : std::norm(b(static_cast<double>(j) / g, static_cast<double>(k) / g));
                    energy += bb * std::norm(fv[idx]) + std::norm(fdv[idx]);
                }
            }
        const double cells = static_cast<double>(g) * g;
        r.boundary[static_cast<std::size_t>(level)] = std::abs(sum) / cells * area;
        if (level == 1) r.energy = energy / cells * area;
    }
    return r;
}

IntegrabilityResidual integrability_residual(const Expr& a1, const Expr& a2, const std::vector<std::array<double, 2>>& grid) {
    const std::map<std::string, double, std::less<>> pi{{"pi", kPi}};
    const Expr p = bind_constants(a1, pi), q = bind_constants(a2, pi);
    const Expr one(1.0);
    const Expr px = differentiate(p, "x"), py = differentiate(p, "y");
    const Expr qx = differentiate(q, "x"), qy = differentiate(q, "y");
    IntegrabilityResidual r;
    r.equations = {py - p * px + ((one + p * p) / (one + q)) * qx, qy - (one + q) * px + p * qx};
    const std::array<Expr, 3> outs{r.equations[0], r.equations[1], one + q};
    const Tape tape(std::span<const Expr>(outs), {"x", "y"});
    for (const auto& pt : grid) {
        std::array<double, 3> v{};
        tape.eval(pt, v);
        if (v[2] == 0.0 || !std::isfinite(v[2])) throw SingularCoefficient(fmt::format("1 + A2 vanishes at ({}, {})", pt[0], pt[1]), pt);
        for (int e = 0; e < 2; ++e) r.per_equation[e] = std::max(r.per_equation[e], std::abs(v[e]));
        const double res = std::max(std::abs(v[0]), std::abs(v[1]));
        if (!(res <= r.residual)) {
            r.residual = std::isnan(res) ? std::numeric_limits<double>::infinity() : res;
            r.witness = pt;
        }
    }
    const auto z0 = vanishes_identically(r.equations[0]), z1 = vanishes_identically(r.equations[1]);
    if (z0 && z1) r.symbolic_zero = *z0 && *z1;
    else if ((z0 && !*z0) || (z1 && !*z1)) r.symbolic_zero = false;
    return r;
}

}  // namespace acx
