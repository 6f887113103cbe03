#include "acx/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace acx {

ParamSurface::ParamSurface(Chart target, std::array<std::string, 2> params, std::vector<Expr> embedding,
                           std::array<std::array<double, 2>, 2> box, std::array<double, 2> periods)
    : target_(std::move(target)), params_(std::move(params)), embedding_(std::move(embedding)), box_(box), periods_(periods) {
    if (static_cast<int>(embedding_.size()) != target_.dim())
        throw ChartMismatch("ParamSurface: embedding has " + std::to_string(embedding_.size()) + " components for a " +
                            std::to_string(target_.dim()) + "-dimensional chart");
    if (params_[0] == params_[1]) throw std::invalid_argument("ParamSurface: duplicate parameter name");
    tape_ = std::make_shared<const Tape>(std::span<const Expr>(embedding_), std::vector<std::string>{params_[0], params_[1]});
}

Point ParamSurface::at(const ParamPoint& st) const { return (*tape_)(std::span<const double>(st)); }

std::array<Vec<double>, 2> ParamSurface::tangents(const ParamPoint& st) const {
    const auto jets = tape_->jets_at<1>(std::span<const double>(st));
    std::array<Vec<double>, 2> out;
    for (int a = 0; a < 2; ++a) {
        out[a].resize(jets.size());
        for (std::size_t i = 0; i < jets.size(); ++i) out[a][i] = jets[i].d(a);
    }
    return out;
}

std::array<Vec<double>, 3> ParamSurface::second_derivatives(const ParamPoint& st) const {
    const auto jets = tape_->jets_at<2>(std::span<const double>(st));
    const std::array<std::array<int, kJetVars>, 3> orders{{{2, 0, 0, 0}, {1, 1, 0, 0}, {0, 2, 0, 0}}};
    std::array<Vec<double>, 3> out;
    for (int a = 0; a < 3; ++a) {
        out[a].resize(jets.size());
        for (std::size_t i = 0; i < jets.size(); ++i) out[a][i] = jets[i].partial(orders[a]);
    }
    return out;
}

std::vector<ParamPoint> ParamSurface::grid(int n_s, int n_t) const {
    auto axis = [&](int a, int n) {
        std::vector<double> v;
        const double lo = box_[a][0], hi = box_[a][1];
        if (periods_[a] > 0.0) {
            for (int k = 0; k < n; ++k) v.push_back(lo + periods_[a] * k / n);
        } else if (n == 1) {
            v.push_back(0.5 * (lo + hi));
        } else {
            for (int k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * k / (n - 1));
        }
        return v;
    };
    std::vector<ParamPoint> out;
    for (double s : axis(0, n_s))
        for (double t : axis(1, n_t)) out.push_back({s, t});
    return out;
}

namespace {

Vec<double> unit(const Vec<double>& v) { return scaled(v, 1.0 / std::sqrt(dot(v, v))); }

std::string where(const ParamPoint& st) {
    return "(" + std::to_string(st[0]) + ", " + std::to_string(st[1]) + ")";
}

// Orthonormal basis of the tangent plane; throws on rank deficiency.
std::array<Vec<double>, 2> tangent_frame(const ParamSurface& c, const ParamPoint& st) {
    const auto [ds, dt] = c.tangents(st);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(ds.size()), 2);
    m.col(0) = to_eigen(ds);
    m.col(1) = to_eigen(dt);
    if (numerical_rank(m, kRankTolerance) < 2)
        throw RankDeficientParametrization("parametrization has rank < 2 at " + where(st), st);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), 2);
    std::array<Vec<double>, 2> out;
    for (int a = 0; a < 2; ++a) out[a] = Vec<double>(q.col(a).data(), q.col(a).data() + q.rows());
    return out;
}

Eigen::MatrixXd stack(const std::vector<Vec<double>>& cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(cols[0].size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = to_eigen(cols[k]);
    return m;
}

// Unit normal to a hyperplane given by an orthonormal basis.
Eigen::VectorXd hyperplane_normal(const std::vector<Vec<double>>& basis) {
    const Eigen::MatrixXd m = stack(basis);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
    return svd.matrixU().col(m.rows() - 1);
}

// Wrap a periodic parameter back into its box.
ParamPoint wrapped(const ParamSurface& c, ParamPoint st) {
    for (int a = 0; a < 2; ++a) {
        const double per = c.periods()[a];
        if (per > 0.0) st[a] = c.box()[a][0] + std::fmod(std::fmod(st[a] - c.box()[a][0], per) + per, per);
    }
    return st;
}

// Angle increment of a line field reduced to (−π/2, π/2].
double line_increment(double from, double to) {
    double d = std::remainder(to - from, std::numbers::pi);
    if (d <= -std::numbers::pi / 2) d += std::numbers::pi;
    return d;
}

double lifted_turning(const AlmostComplexField& j, const ParamSurface& c, ParamPoint start, int axis, int steps) {
    const double per = c.periods()[axis];
    if (per <= 0.0) return std::nan("");
    double total = 0.0, prev = 0.0;
    for (int k = 0; k <= steps; ++k) {
        ParamPoint st = start;
        st[axis] += per * k / steps;
        const auto d = l1_direction(j, c, wrapped(c, st)).param_direction;
        const double ang = std::atan2(d[1], d[0]);
        if (k > 0) total += line_increment(prev, ang);
        prev = ang;
    }
    return total / (2.0 * std::numbers::pi);
}

}  // namespace

namespace {

// Unit-speed leaf of L¹ in period-normalized coordinates (σ, τ) = (s/P_s, t/P_t),
// oriented continuously, integrated by RK4 on the universal cover until τ has
// advanced by opt.cycles; the last step is cut by linear interpolation.
double leaf_rotation(const AlmostComplexField& j, const ParamSurface& c, const ParamPoint& start, const L1Options& opt) {
    const double ps = c.periods()[0], pt = c.periods()[1];
    auto field = [&](const Eigen::Vector2d& y, const Eigen::Vector2d& orient) {
        const auto d = l1_direction(j, c, wrapped(c, {y[0] * ps, y[1] * pt})).param_direction;
        Eigen::Vector2d v(d[0] / ps, d[1] / pt);
        v.normalize();
        return v.dot(orient) < 0.0 ? Eigen::Vector2d(-v) : v;
    };
    const Eigen::Vector2d y0(start[0] / ps, start[1] / pt);
    Eigen::Vector2d y = y0, orient = field(y0, Eigen::Vector2d(0.0, 1.0));
    const double h = 1.0 / opt.steps_per_cycle;
    const long max_steps = 64L * opt.steps_per_cycle * opt.cycles;
    for (long k = 0; k < max_steps; ++k) {
        const Eigen::Vector2d k1 = field(y, orient);
        const Eigen::Vector2d k2 = field(y + h / 2 * k1, k1);
        const Eigen::Vector2d k3 = field(y + h / 2 * k2, k1);
        const Eigen::Vector2d k4 = field(y + h * k3, k1);
        const Eigen::Vector2d next = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        orient = k1;
        const double target = y0[1] + opt.cycles;
        if (next[1] >= target) {
            const double f = (target - y[1]) / (next[1] - y[1]);
            return (y[0] + f * (next[0] - y[0]) - y0[0]) / opt.cycles;
        }
        if (next[1] < y0[1] - 1.0)
            throw std::domain_error("L1 leaf through " + where(start) + " does not advance along the t-cycle");
        y = next;
    }
    throw std::domain_error("L1 leaf through " + where(start) + " does not complete the t-cycles");
}

}  // namespace

ParamPoint nearest_parameter(const ParamSurface& s, const Point& q) {
    auto dist2 = [&](const ParamPoint& st) {
        const Point x = s.at(st);
        double d = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - q[i]) * (x[i] - q[i]);
        return d;
    };
    ParamPoint best{};
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& st : s.grid(24, 24)) {
        const double d = dist2(st);
        if (d < best_d) {
            best_d = d;
            best = st;
        }
    }
    for (int it = 0; it < 30; ++it) {
        const auto [ds, dt] = s.tangents(best);
        Eigen::MatrixXd t(static_cast<Eigen::Index>(ds.size()), 2);
        t.col(0) = to_eigen(ds);
        t.col(1) = to_eigen(dt);
        const Point x = s.at(best);
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i) r[static_cast<Eigen::Index>(i)] = q[i] - x[i];
        const Eigen::Vector2d step = (t.transpose() * t).ldlt().solve(t.transpose() * r);
        best = wrapped(s, {best[0] + step[0], best[1] + step[1]});
        for (int a = 0; a < 2; ++a)
            if (s.periods()[a] <= 0.0) best[a] = std::clamp(best[a], s.box()[a][0], s.box()[a][1]);
        if (step.norm() < 1e-15) break;
    }
    return best;
}

double ph_residual_at(const ParamSurface& s, const AlmostComplexField& j, const ParamPoint& st) {
    require_same_chart(s.target(), j.chart());
    const auto q = tangent_frame(s, st);
    const Mat<double> jm = j.at(s.at(st));
    double sum = 0.0;
    for (const auto& qi : q) {
        Vec<double> r = acx::apply(jm, qi);
        for (const auto& qk : q) r = r - scaled(qk, dot(r, qk));
        sum += dot(r, r);
    }
    return std::sqrt(0.5 * sum);
}

CheckResult ph_residual(const ParamSurface& s, const AlmostComplexField& j, const std::vector<ParamPoint>& grid) {
    WorstCase worst;
    for (const auto& st : grid) worst.update(ph_residual_at(s, j, st), s.at(st));
    return worst.result("pseudoholomorphic", kPseudoholomorphicTolerance);
}

L1Sample l1_direction(const AlmostComplexField& j, const ParamSurface& c, const ParamPoint& st) {
    require_same_chart(c.target(), j.chart());
    const Point x = c.at(st);
    const auto flag = derived_flag_pi3(j, x);
    const auto q = tangent_frame(c, st);
    if (flag.ranks.pi2 == 2 && numerical_rank(stack({q[0], q[1], flag.pi2[0], flag.pi2[1]}), kRankTolerance) < 4)
        throw TangencyPoint("tangent plane meets Pi2 at " + where(st), st);
    if (flag.ranks.pi2 < 2 || flag.ranks.pi3 < 3)
        throw DegenerateFlag("L1 needs rk Pi3 = 3; ranks " + to_string(flag.ranks) + " at " + where(st), flag.ranks);
    const Eigen::VectorXd n = hyperplane_normal(flag.pi3);
    const auto [ds, dt] = c.tangents(st);
    // a ∂_s S + b ∂_t S ⊥ n
    double a = n.dot(to_eigen(dt)), b = -n.dot(to_eigen(ds));
    const double len = std::hypot(a, b);
    a /= len;
    b /= len;
    if (b < 0.0 || (b == 0.0 && a < 0.0)) {
        a = -a;
        b = -b;
    }
    L1Sample out;
    out.st = st;
    out.param_direction = {a, b};
    out.direction = unit(scaled(ds, a) + scaled(dt, b));
    return out;
}

L1Field l1_field(const AlmostComplexField& j, const ParamSurface& c, const std::vector<ParamPoint>& samples, const L1Options& opt) {
    L1Field out;
    for (const auto& st : samples) out.samples.push_back(l1_direction(j, c, st));
    if (samples.empty()) return out;
    const double ps = c.periods()[0], pt = c.periods()[1];
    out.rotation_number = std::nan("");
    if (ps > 0.0 && pt > 0.0) out.rotation_number = leaf_rotation(j, c, samples[0], opt);
    out.turning_s = lifted_turning(j, c, samples[0], 0, opt.steps_per_cycle);
    out.turning_t = lifted_turning(j, c, samples[0], 1, opt.steps_per_cycle);
    return out;
}

namespace {

struct CurvePair {
    Eigen::Vector2d alpha, beta;  // parameter-space preimages of v₁, v₂
    Vec<double> v1, v2;
    double gamma3 = 0.0;
};

CurvePair curve_pair(const AlmostComplexField& j, const ParamSurface& c, const ParamPoint& st) {
    const L1Sample l1 = l1_direction(j, c, st);
    const Point x = c.at(st);
    const CanonicalFrame f = canonical_frame(j, x);
    // Component orthogonal to Π² = ⟨ξ₁, ξ₂⟩.
    const Eigen::MatrixXd pi2 = stack({f.xi[0], f.xi[1]});
    const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(pi2.rows(), pi2.rows()) -
                                 pi2 * (pi2.transpose() * pi2).inverse() * pi2.transpose();
    const Eigen::VectorXd ql = proj * to_eigen(l1.direction), qx = proj * to_eigen(f.xi[2]);
    const double lambda = ql.dot(qx) / ql.squaredNorm();
    const auto [ds, dt] = c.tangents(st);
    // l1.direction = (a ∂_s S + b ∂_t S)/‖·‖
    const double len = std::sqrt(dot(scaled(ds, l1.param_direction[0]) + scaled(dt, l1.param_direction[1]),
                                     scaled(ds, l1.param_direction[0]) + scaled(dt, l1.param_direction[1])));
    CurvePair out;
    out.alpha = Eigen::Vector2d(l1.param_direction[0], l1.param_direction[1]) * (lambda / len);
    out.v1 = scaled(l1.direction, lambda);
    out.v2 = acx::apply(j.at(x), out.v1);
    Eigen::MatrixXd tan(static_cast<Eigen::Index>(ds.size()), 2);
    tan.col(0) = to_eigen(ds);
    tan.col(1) = to_eigen(dt);
    out.beta = tan.colPivHouseholderQr().solve(to_eigen(out.v2));
    const Vec<double> jv1 = acx::apply(j.at(x), out.v1);
    out.gamma3 = dot(jv1, out.v2) / dot(out.v2, out.v2);
    return out;
}

}  // namespace

CurveInvariants curve_invariants(const AlmostComplexField& j, const ParamSurface& c, const ParamPoint& st, double h) {
    const CurvePair base = curve_pair(j, c, st);
    // Partial derivatives of α, β in s and t with one Richardson level.
    std::array<Eigen::Vector2d, 2> da, db;
    for (int m = 0; m < 2; ++m) {
        auto diff = [&](double step) {
            ParamPoint plus = st, minus = st;
            plus[m] += step;
            minus[m] -= step;
            const CurvePair p = curve_pair(j, c, plus), q = curve_pair(j, c, minus);
            return std::pair{Eigen::Vector2d((p.alpha - q.alpha) / (2 * step)), Eigen::Vector2d((p.beta - q.beta) / (2 * step))};
        };
        const auto [a1, b1] = diff(h);
        const auto [a2, b2] = diff(h / 2);
        da[m] = (4 * a2 - a1) / 3;
        db[m] = (4 * b2 - b1) / 3;
    }
    Eigen::Vector2d br = Eigen::Vector2d::Zero();
    for (int m = 0; m < 2; ++m) br += base.alpha[m] * db[m] - base.beta[m] * da[m];
    Eigen::Matrix2d sys;
    sys.col(0) = base.alpha;
    sys.col(1) = base.beta;
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(sys);
    const double cond = svd.singularValues()(0) / svd.singularValues()(1);
    if (!(cond <= 1e8)) throw IllConditioned("v1, v2 nearly dependent at " + where(st), cond);
    const Eigen::Vector2d g = sys.partialPivLu().solve(br);
    CurveInvariants out;
    out.st = st;
    out.gamma1 = g[0];
    out.gamma2 = g[1];
    out.gamma3 = base.gamma3;
    out.v1 = base.v1;
    out.v2 = base.v2;
    return out;
}

Sigma0Scan sigma0_scan(const AlmostComplexField& j, const ParamSurface& c, const std::vector<ParamPoint>& grid) {
    require_same_chart(c.target(), j.chart());
    Sigma0Scan out;
    for (const auto& st : grid) {
        const auto flag = derived_flag(j, c.at(st));
        if (flag.ranks.pi2 == 2) {
            const auto q = tangent_frame(c, st);
            if (numerical_rank(stack({q[0], q[1], flag.pi2[0], flag.pi2[1]}), kRankTolerance) < 4) out.tangency.push_back(st);
        }
        if (flag.ranks.pi3 < 3) out.pi3_degenerate.push_back(st);
        if (flag.ranks.pi4 < 4) out.pi4_degenerate.push_back(st);
    }
    return out;
}

}  // namespace acx
