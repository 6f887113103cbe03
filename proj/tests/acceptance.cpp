// Acceptance run: the example bank grouped by criterion, then the randomized
// property suites. One line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "acx/bank.hpp"
#include "acx/curves.hpp"
#include "acx/frames.hpp"
#include "acx/geom.hpp"
#include "acx/tape.hpp"
#include "structures.hpp"
#include "support.hpp"

using namespace acx;

namespace {

struct Line {
    int criterion;
    bool pass;
    double seconds;
    double limit;  // runtime bound in seconds, 0 for none
    std::string detail;
};

double central_fd(const Expr& e, Bindings p, const std::string& var, double h) {
    const double x0 = p[var];
    p[var] = x0 + h;
    const double fp = evaluate(e, p);
    p[var] = x0 - h;
    const double fm = evaluate(e, p);
    return (fp - fm) / (2.0 * h);
}

// Each suite returns the number of failing cases out of 100 and its worst residual.
struct SuiteResult {
    int failures = 0;
    double worst = 0.0;
};

SuiteResult symbolic_vs_fd() {
    testsupport::ExprGen gen({"x", "y", "z"}, testsupport::kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SuiteResult r;
    for (int k = 0; k < 100; ++k) {
        const Expr e = gen(4);
        const Bindings p{{"x", u(gen.rng())}, {"y", u(gen.rng())}, {"z", u(gen.rng())}};
        bool bad = false;
        for (const char* v : {"x", "y", "z"}) {
            const double sym = evaluate(differentiate(e, v), p);
            const double d = std::abs(sym - central_fd(e, p, v, 1e-5)) / (1.0 + std::abs(sym));
            r.worst = std::max(r.worst, d);
            bad = bad || d > 1e-6;
        }
        if (bad) ++r.failures;
    }
    return r;
}

SuiteResult nijenhuis_symmetries() {
    std::mt19937_64 rng(testsupport::kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::vector<AlmostComplexField> bases = {teststructs::parallel_example(), teststructs::transversal_example()};
    SuiteResult r;
    for (int k = 0; k < 100; ++k) {
        const auto jf = teststructs::perturbed(bases[k % 2], static_cast<unsigned>(testsupport::kSeed + k));
        Point p(4);
        for (auto& x : p) x = 0.4 * u(rng);
        Vec<double> xi(4), eta(4), zeta(4);
        for (int i = 0; i < 4; ++i) {
            xi[i] = u(rng);
            eta[i] = u(rng);
            zeta[i] = u(rng);
        }
        const double a = u(rng), b = u(rng);
        const auto t = nijenhuis_at(jf, p);
        const Mat<double> jm = jf.at(p);
        const Vec<double> jn = jm * t.apply(xi, eta);
        double d = max_abs(t.apply(xi, eta) + t.apply(eta, xi));
        d = std::max(d, max_abs(t.apply(scaled(xi, a) + scaled(zeta, b), eta) - scaled(t.apply(xi, eta), a) -
                                scaled(t.apply(zeta, eta), b)));
        d = std::max(d, max_abs(t.apply(jm * xi, eta) + jn));
        d = std::max(d, max_abs(t.apply(xi, jm * eta) + jn));
        r.worst = std::max(r.worst, d);
        if (d > 1e-9) ++r.failures;
    }
    return r;
}

SuiteResult frame_sign_stability() {
    std::mt19937_64 rng(testsupport::kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto base = teststructs::winding(1.0);
    std::vector<AlmostComplexField> structs;
    for (unsigned s = 0; s < 10; ++s) structs.push_back(teststructs::perturbed(base, 100 + s));
    SuiteResult r;
    for (int k = 0; k < 100; ++k) {
        const auto& jf = structs[static_cast<std::size_t>(k % 10)];
        Point p(4);
        for (auto& x : p) x = 0.3 * u(rng);
        FrameOptions opt;
        opt.span_scale = std::exp(2.0 * u(rng));
        opt.span_rotation = std::numbers::pi * u(rng);
        const auto f0 = canonical_frame(jf, p);
        const auto f1 = canonical_frame(jf, p, opt);
        double d = 0.0;
        for (int a = 0; a < 4; ++a) d = std::max(d, max_abs(f0.xi[a] - f1.xi[a]));
        r.worst = std::max(r.worst, d);
        if (d > 1e-8) ++r.failures;
    }
    return r;
}

SuiteResult reparametrization() {
    std::mt19937_64 rng(testsupport::kSeed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SuiteResult r;
    for (int k = 0; k < 100; ++k) {
        const auto j = teststructs::perturbed(teststructs::winding(1.0), static_cast<unsigned>(k + 1));
        const double c0 = 0.2 * u(rng), c1 = 0.2 * u(rng), c2 = 0.2 * u(rng), c3 = 0.2 * u(rng);
        const double a = 0.3 * u(rng), b = 0.3 * u(rng);
        auto embed = [&](const Expr& s, const Expr& t) {
            return std::vector<Expr>{s, t, Expr(c0) * sin(Expr(3.0) * s) + Expr(c1) * t * t,
                                     Expr(c2) * s * t + Expr(c3) * cos(Expr(2.0) * t)};
        };
        const Expr uu = Expr::var("u"), vv = Expr::var("v");
        const ParamSurface base(j.chart(), {"s", "t"}, embed(Expr::var("s"), Expr::var("t")), {{{0.0, 1.0}, {0.0, 1.0}}});
        const ParamSurface re(j.chart(), {"u", "v"}, embed(uu + Expr(a) * sin(vv), vv + Expr(b) * uu * uu),
                              {{{0.0, 1.0}, {0.0, 1.0}}});
        const double pu = 0.5 * (u(rng) + 1), pv = 0.5 * (u(rng) + 1);
        const double d = std::abs(ph_residual_at(re, j, {pu, pv}) - ph_residual_at(base, j, {pu + a * std::sin(pv), pv + b * pu * pu}));
        r.worst = std::max(r.worst, d);
        if (d > 1e-9) ++r.failures;
    }
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    BankOptions opt;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--fd-only") opt.fd_only = true;

    const std::map<int, double> limits{{1, 1.0}, {2, 10.0}, {3, 10.0}, {4, 60.0}, {9, 60.0}};
    const auto rows = run_example_bank(opt);

    std::vector<Line> lines;
    for (int c = 1; c <= 10; ++c) {
        Line l{c, true, 0.0, limits.count(c) ? limits.at(c) : 0.0, {}};
        // Rows of one section share its wall time.
        std::map<std::string, double> per_group;
        int n = 0;
        std::vector<std::string> failed;
        for (const auto& r : rows) {
            if (r.criterion != c) continue;
            ++n;
            per_group[r.group] = std::max(per_group[r.group], r.seconds);
            if (!r.result.pass) failed.push_back(r.group + ": " + r.result.check);
        }
        for (const auto& [g, s] : per_group) l.seconds += s;
        l.pass = n > 0 && failed.empty();
        l.detail = fmt::format("{} checks", n);
        if (n == 0) l.detail = "no checks ran";
        for (const auto& f : failed) l.detail += "; failed " + f;
        if (l.limit > 0 && l.seconds > l.limit) {
            l.pass = false;
            l.detail += fmt::format("; over the {:.0f} s budget", l.limit);
        }
        lines.push_back(l);
    }

    const std::vector<std::pair<std::string, std::function<SuiteResult()>>> suites{
        {"symbolic vs finite-difference derivatives", symbolic_vs_fd},
        {"N_J antisymmetry and antilinearity", nijenhuis_symmetries},
        {"frame sign under respanning", frame_sign_stability},
        {"ph_residual reparametrization", reparametrization},
    };
    Line props{11, true, 0.0, 0.0, {}};
    for (const auto& [name, run] : suites) {
        const auto t0 = std::chrono::steady_clock::now();
        SuiteResult r;
        try {
            r = run();
        } catch (const std::exception& e) {
            r.failures = 100;
            props.detail += fmt::format("{}: threw {}; ", name, e.what());
        }
        props.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        props.pass = props.pass && r.failures == 0;
        props.detail += fmt::format("{}: {}/100 failed, worst {:.1e}; ", name, r.failures, r.worst);
    }
    if (props.detail.size() >= 2) props.detail.resize(props.detail.size() - 2);
    lines.push_back(props);

    bool all = true;
    fmt::print("acceptance (seed {}{})\n", opt.seed, opt.fd_only ? ", fd-only" : "");
    for (const auto& l : lines) {
        all = all && l.pass;
        fmt::print("criterion {:>2}: {}  {:7.2f} s  {}\n", l.criterion, l.pass ? "PASS" : "FAIL", l.seconds, l.detail);
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
