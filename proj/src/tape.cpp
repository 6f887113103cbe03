#include "acx/tape.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>

namespace acx {

namespace {
std::atomic<DerivativeMode> g_mode{DerivativeMode::Exact};
}

DerivativeMode derivative_mode() { return g_mode.load(); }
void set_derivative_mode(DerivativeMode mode) { g_mode.store(mode); }

Tape::Tape(std::span<const Expr> outputs, const std::vector<std::string>& inputs) : num_inputs_(inputs.size()) {
    std::map<std::string, int, std::less<>> input_index;
    for (std::size_t i = 0; i < inputs.size(); ++i) input_index.emplace(inputs[i], static_cast<int>(i));

    using Key = std::tuple<int, int, int, std::uint64_t>;
    std::map<Key, int> cse;
    std::unordered_map<const ExprNode*, int> seen;

    auto emit = [&](Instr ins) -> int {
        const Key key{static_cast<int>(ins.code), ins.a, ins.b,
                      ins.code == Code::Const || ins.code == Code::PowReal ? std::bit_cast<std::uint64_t>(ins.c)
                                                                             : static_cast<std::uint64_t>(ins.n)};
        if (auto it = cse.find(key); it != cse.end()) return it->second;
        code_.push_back(std::move(ins));
        const int id = static_cast<int>(code_.size()) - 1;
        cse.emplace(key, id);
        return id;
    };

    // Iterative post-order walk; expression DAGs from symbolic work can be deep.
    auto compile = [&](const Expr& root) -> int {
        std::vector<std::pair<Expr, bool>> stack{{root, false}};
        while (!stack.empty()) {
            auto [e, expanded] = stack.back();
            stack.pop_back();
            if (seen.count(e.id())) continue;
            if (!expanded && e.arity() > 0) {
                stack.emplace_back(e, true);
                for (std::size_t i = 0; i < e.arity(); ++i)
                    if (!seen.count(e.arg(i).id())) stack.emplace_back(e.arg(i), false);
                continue;
            }
            Instr ins;
            ins.src = e;
            auto child = [&](std::size_t i) { return seen.at(e.arg(i).id()); };
            switch (e.op()) {
                case Op::Num:
                    ins.code = Code::Const;
                    ins.c = e.value();
                    break;
                case Op::Var: {
                    auto it = input_index.find(e.name());
                    if (it == input_index.end()) throw UnboundIdentifier(e.name());
                    ins.code = Code::Input;
                    ins.n = it->second;
                    break;
                }
                case Op::Add: ins.code = Code::Add; ins.a = child(0); ins.b = child(1); break;
                case Op::Sub: ins.code = Code::Sub; ins.a = child(0); ins.b = child(1); break;
                case Op::Mul: ins.code = Code::Mul; ins.a = child(0); ins.b = child(1); break;
                case Op::Div: ins.code = Code::Div; ins.a = child(0); ins.b = child(1); break;
                case Op::Pow: {
                    const Expr& p = e.arg(1);
                    ins.a = child(0);
                    if (p.is_num() && p.value() == std::floor(p.value()) && std::abs(p.value()) <= 64.0) {
                        ins.code = Code::PowInt;
                        ins.n = static_cast<int>(p.value());
                    } else if (p.is_num()) {
                        ins.code = Code::PowReal;
                        ins.c = p.value();
                    } else {
                        ins.code = Code::Pow;
                        ins.b = child(1);
                    }
                    break;
                }
                case Op::Neg: ins.code = Code::Neg; ins.a = child(0); break;
                case Op::Sin: ins.code = Code::Sin; ins.a = child(0); break;
                case Op::Cos: ins.code = Code::Cos; ins.a = child(0); break;
                case Op::Exp: ins.code = Code::Exp; ins.a = child(0); break;
                case Op::Log: ins.code = Code::Log; ins.a = child(0); break;
                case Op::Sqrt: ins.code = Code::Sqrt; ins.a = child(0); break;
            }
            seen.emplace(e.id(), emit(std::move(ins)));
        }
        return seen.at(root.id());
    };

    outputs_.reserve(outputs.size());
    for (const auto& e : outputs) outputs_.push_back(compile(e));
}

namespace {

double pow_int(double x, int n) {
    if (n < 0) return 1.0 / pow_int(x, -n);
    double r = 1.0;
    while (n) {
        if (n & 1) r *= x;
        n >>= 1;
        if (n) x *= x;
    }
    return r;
}

double fsin(double x) { return std::sin(x); }
double fcos(double x) { return std::cos(x); }
double fexp(double x) { return std::exp(x); }
double flog(double x) { return std::log(x); }
double fsqrt(double x) { return std::sqrt(x); }
double fpow(double x, double p) { return std::pow(x, p); }
template <int K> Jet<K> fsin(const Jet<K>& x) { return sin(x); }
template <int K> Jet<K> fcos(const Jet<K>& x) { return cos(x); }
template <int K> Jet<K> fexp(const Jet<K>& x) { return exp(x); }
template <int K> Jet<K> flog(const Jet<K>& x) { return log(x); }
template <int K> Jet<K> fsqrt(const Jet<K>& x) { return sqrt(x); }
template <int K> Jet<K> fpow(const Jet<K>& x, double p) { return pow(x, p); }

template <class S>
constexpr bool is_plain = std::is_same_v<S, double>;

}  // namespace

template <class S>
void Tape::run(const S* in, S* out) const {
    std::vector<S> w(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& ins = code_[i];
        switch (ins.code) {
            case Code::Const: w[i] = S(ins.c); break;
            case Code::Input: w[i] = in[ins.n]; break;
            case Code::Add: w[i] = w[ins.a] + w[ins.b]; break;
            case Code::Sub: w[i] = w[ins.a] - w[ins.b]; break;
            case Code::Mul: w[i] = w[ins.a] * w[ins.b]; break;
            case Code::Div:
                if (value_of(w[ins.b]) == 0.0) throw DomainError("division by zero", to_string(ins.src));
                w[i] = w[ins.a] / w[ins.b];
                break;
            case Code::PowInt:
                if (ins.n < 0 && value_of(w[ins.a]) == 0.0)
                    throw DomainError("zero to a negative power", to_string(ins.src));
                w[i] = pow_int(w[ins.a], ins.n);
                break;
            case Code::PowReal: {
                const double b = value_of(w[ins.a]);
                if (b < 0.0 || (b == 0.0 && (!is_plain<S> || ins.c < 0.0)))
                    throw DomainError("non-positive base in fractional power", to_string(ins.src));
                w[i] = fpow(w[ins.a], ins.c);
                break;
            }
            case Code::Pow: {
                if (value_of(w[ins.a]) <= 0.0)
                    throw DomainError("non-positive base in variable power", to_string(ins.src));
                w[i] = fexp(w[ins.b] * flog(w[ins.a]));
                break;
            }
            case Code::Neg: w[i] = -w[ins.a]; break;
            case Code::Sin: w[i] = fsin(w[ins.a]); break;
            case Code::Cos: w[i] = fcos(w[ins.a]); break;
            case Code::Exp: w[i] = fexp(w[ins.a]); break;
            case Code::Log:
                if (value_of(w[ins.a]) <= 0.0) throw DomainError("log of non-positive value", to_string(ins.src));
                w[i] = flog(w[ins.a]);
                break;
            case Code::Sqrt: {
                const double v = value_of(w[ins.a]);
                if (v < 0.0 || (v == 0.0 && !is_plain<S>))
                    throw DomainError("sqrt of non-positive value", to_string(ins.src));
                w[i] = fsqrt(w[ins.a]);
                break;
            }
        }
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = w[outputs_[k]];
}

void Tape::eval(std::span<const double> in, std::span<double> out) const {
    if (in.size() != num_inputs_ || out.size() != outputs_.size()) throw std::invalid_argument("Tape::eval: size mismatch");
    run(in.data(), out.data());
}

std::vector<double> Tape::operator()(std::span<const double> in) const {
    std::vector<double> out(outputs_.size());
    eval(in, out);
    return out;
}

template <int K>
std::vector<Jet<K>> Tape::jets(std::span<const Jet<K>> in) const {
    if (in.size() != num_inputs_) throw std::invalid_argument("Tape::jets: size mismatch");
    if (derivative_mode() == DerivativeMode::FiniteDifference) return fd_jets<K>(in);
    std::vector<Jet<K>> out(outputs_.size());
    run(in.data(), out.data());
    return out;
}

namespace {

// Second-order central stencils for the k-th derivative: (offset, weight) with
// the h^-k factor applied by the caller.
const std::vector<std::pair<int, double>>& stencil(int k) {
    static const std::vector<std::pair<int, double>> s[5] = {
        {{0, 1.0}},
        {{1, 0.5}, {-1, -0.5}},
        {{1, 1.0}, {0, -2.0}, {-1, 1.0}},
        {{2, 0.5}, {1, -1.0}, {-1, 1.0}, {-2, -0.5}},
        {{2, 1.0}, {1, -4.0}, {0, 6.0}, {-1, -4.0}, {-2, 1.0}},
    };
    return s[k];
}

double fd_step(int degree) {
    static const double h[5] = {0.0, 1e-3, 3e-2, 2e-2, 4e-2};
    return h[degree];
}

}  // namespace

template <int K>
std::vector<Jet<K>> Tape::fd_jets(std::span<const Jet<K>> in) const {
    const auto& tables = JetTables<K>::get();
    std::array<bool, kJetVars> active{};
    for (const auto& j : in)
        for (int v = 0; v < kJetVars; ++v)
            if (K >= 1 && j.coeff(1 + v) != 0.0) active[v] = true;

    const std::size_t m = outputs_.size();
    std::vector<Jet<K>> out(m);
    std::vector<double> xin(in.size()), xout(m);

    // Memoized composite evaluations keyed by (step, integer offsets).
    std::map<std::tuple<double, int, int, int, int>, std::vector<double>> memo;
    auto G = [&](double h, const std::array<int, kJetVars>& off) -> const std::vector<double>& {
        const auto key = std::make_tuple(h, off[0], off[1], off[2], off[3]);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::array<double, kJetVars> u{};
        for (int v = 0; v < kJetVars; ++v) u[v] = off[v] * h;
        for (std::size_t i = 0; i < in.size(); ++i) xin[i] = in[i].taylor(u);
        run(xin.data(), xout.data());
        return memo.emplace(key, xout).first->second;
    };

    auto derivative = [&](const std::array<int, kJetVars>& alpha, double h, std::vector<double>& acc) {
        acc.assign(m, 0.0);
        // Tensor product over the four variables.
        std::array<int, kJetVars> idx{};
        const std::vector<std::pair<int, double>>* st[kJetVars];
        for (int v = 0; v < kJetVars; ++v) st[v] = &stencil(alpha[v]);
        for (;;) {
            std::array<int, kJetVars> off{};
            double wgt = 1.0;
            for (int v = 0; v < kJetVars; ++v) {
                off[v] = (*st[v])[idx[v]].first;
                wgt *= (*st[v])[idx[v]].second;
            }
            const auto& g = G(h, off);
            for (std::size_t k = 0; k < m; ++k) acc[k] += wgt * g[k];
            int v = 0;
            while (v < kJetVars && ++idx[v] == static_cast<int>(st[v]->size())) idx[v++] = 0;
            if (v == kJetVars) break;
        }
        int deg = 0;
        for (int a : alpha) deg += a;
        const double scale = std::pow(h, -deg);
        for (auto& x : acc) x *= scale;
    };

    std::vector<double> d1, d2;
    for (int i = 0; i < Jet<K>::size; ++i) {
        const auto& alpha = tables.exps[i];
        bool ok = true;
        double fact = 1.0;
        for (int v = 0; v < kJetVars; ++v) {
            if (alpha[v] > 0 && !active[v]) ok = false;
            for (int k = 2; k <= alpha[v]; ++k) fact *= k;
        }
        if (!ok) continue;
        const int deg = tables.degree[i];
        if (deg == 0) {
            const auto& g = G(1.0, {0, 0, 0, 0});
            for (std::size_t k = 0; k < m; ++k) out[k].coeff(0) = g[k];
            continue;
        }
        const double h = fd_step(deg);
        derivative(alpha, h, d1);
        derivative(alpha, 0.5 * h, d2);
        for (std::size_t k = 0; k < m; ++k) out[k].coeff(i) = (4.0 * d2[k] - d1[k]) / 3.0 / fact;
    }
    return out;
}

template void Tape::run<double>(const double*, double*) const;
template std::vector<Jet<1>> Tape::jets<1>(std::span<const Jet<1>>) const;
template std::vector<Jet<2>> Tape::jets<2>(std::span<const Jet<2>>) const;
template std::vector<Jet<3>> Tape::jets<3>(std::span<const Jet<3>>) const;
template std::vector<Jet<4>> Tape::jets<4>(std::span<const Jet<4>>) const;

}  // namespace acx
