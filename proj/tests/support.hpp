#pragma once

#include <random>
#include <string>
#include <vector>

#include "acx/expr.hpp"

namespace testsupport {

inline constexpr unsigned kSeed = 42;

// Random expression over the given variables, built only from operations that
// stay finite and in-domain on [-1, 1]^n.
class ExprGen {
public:
    ExprGen(std::vector<std::string> vars, unsigned seed) : vars_(std::move(vars)), rng_(seed) {}

    acx::Expr operator()(int depth = 4) { return gen(depth); }

    std::mt19937_64& rng() { return rng_; }

private:
    std::vector<std::string> vars_;
    std::mt19937_64 rng_;

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    acx::Expr leaf() {
        if (pick(3) == 0) return acx::Expr(std::round(real(-2.0, 2.0) * 8.0) / 8.0 + 0.25);
        return acx::Expr::var(vars_[pick(static_cast<int>(vars_.size()))]);
    }

    // Values bounded by roughly 3 in magnitude keep exp and powers tame.
    acx::Expr bounded(int depth) { return acx::sin(gen(depth)) * acx::Expr(1.5); }

    acx::Expr gen(int depth) {
        using acx::Expr;
        if (depth <= 0) return leaf();
        switch (pick(11)) {
            case 0: return gen(depth - 1) + gen(depth - 1);
            case 1: return gen(depth - 1) - gen(depth - 1);
            case 2: return gen(depth - 1) * gen(depth - 1);
            case 3: {
                Expr d = bounded(depth - 1);
                return gen(depth - 1) / (Expr(1.0) + d * d);
            }
            case 4: return acx::pow(bounded(depth - 1), Expr(static_cast<double>(2 + pick(2))));
            case 5: return -gen(depth - 1);
            case 6: return acx::sin(gen(depth - 1));
            case 7: return acx::cos(gen(depth - 1));
            case 8: return acx::exp(bounded(depth - 1));
            case 9: {
                Expr a = bounded(depth - 1);
                return acx::log(Expr(1.0) + a * a);
            }
            default: {
                Expr a = bounded(depth - 1);
                return acx::sqrt(Expr(1.0) + a * a);
            }
        }
    }
};

}  // namespace testsupport
