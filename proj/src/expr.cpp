#include "acx/expr.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace acx {

ParseError::ParseError(const std::string& msg, std::size_t offset)
    : std::runtime_error("parse error at byte " + std::to_string(offset) + ": " + msg), offset_(offset) {}

DomainError::DomainError(const std::string& what, std::string subexpression)
    : std::runtime_error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

UnboundIdentifier::UnboundIdentifier(std::string name)
    : std::runtime_error("unbound identifier '" + name + "'"), name_(std::move(name)) {}

namespace {

std::shared_ptr<const ExprNode> literal_node(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Num;
    n->value = v;
    return n;
}

const std::shared_ptr<const ExprNode>& zero_node() {
    static const auto z = literal_node(0.0);
    return z;
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

Expr make_node(Op op, std::vector<Expr> args) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->args = std::move(args);
    return Expr(std::shared_ptr<const ExprNode>(std::move(n)));
}

Expr::Expr() : node_(zero_node()) {}
Expr::Expr(double v) : node_(v == 0.0 ? zero_node() : literal_node(v)) {}

Expr Expr::num(double v) { return Expr(v); }

Expr Expr::var(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->name = std::move(name);
    return Expr(std::shared_ptr<const ExprNode>(std::move(n)));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::size_t Expr::arity() const { return node_->args.size(); }
const Expr& Expr::arg(std::size_t i) const { return node_->args.at(i); }

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && finite(a.value() + b.value())) return Expr(a.value() + b.value());
    if (a.is_num(0.0)) return b;
    if (b.is_num(0.0)) return a;
    return make_node(Op::Add, {a, b});
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && finite(a.value() - b.value())) return Expr(a.value() - b.value());
    if (b.is_num(0.0)) return a;
    if (a.is_num(0.0)) return -b;
    return make_node(Op::Sub, {a, b});
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && finite(a.value() * b.value())) return Expr(a.value() * b.value());
    if (a.is_num(0.0) || b.is_num(0.0)) return Expr(0.0);
    if (a.is_num(1.0)) return b;
    if (b.is_num(1.0)) return a;
    return make_node(Op::Mul, {a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_num() && b.is_num() && b.value() != 0.0 && finite(a.value() / b.value()))
        return Expr(a.value() / b.value());
    if (b.is_num(1.0)) return a;
    if (a.is_num(0.0) && b.is_num() && b.value() != 0.0) return Expr(0.0);
    return make_node(Op::Div, {a, b});
}

Expr operator-(const Expr& a) {
    if (a.is_num()) return Expr(-a.value());
    if (a.op() == Op::Neg) return a.arg(0);
    return make_node(Op::Neg, {a});
}

Expr pow(const Expr& base, const Expr& exponent) {
    if (exponent.is_num(0.0)) return Expr(1.0);
    if (exponent.is_num(1.0)) return base;
    if (base.is_num() && exponent.is_num()) {
        const double b = base.value(), e = exponent.value();
        if (b > 0.0 || (e == std::floor(e) && (b != 0.0 || e > 0.0))) {
            const double r = std::pow(b, e);
            if (finite(r)) return Expr(r);
        }
    }
    return make_node(Op::Pow, {base, exponent});
}

namespace {

Expr fold_unary(Op op, const Expr& a, double (*f)(double), bool ok) {
    if (a.is_num() && ok) {
        const double r = f(a.value());
        if (finite(r)) return Expr(r);
    }
    return make_node(op, {a});
}

}  // namespace

Expr sin(const Expr& e) { return fold_unary(Op::Sin, e, [](double x) { return std::sin(x); }, true); }
Expr cos(const Expr& e) { return fold_unary(Op::Cos, e, [](double x) { return std::cos(x); }, true); }
Expr exp(const Expr& e) { return fold_unary(Op::Exp, e, [](double x) { return std::exp(x); }, true); }
Expr log(const Expr& e) {
    return fold_unary(Op::Log, e, [](double x) { return std::log(x); }, e.is_num() && e.value() > 0.0);
}
Expr sqrt(const Expr& e) {
    return fold_unary(Op::Sqrt, e, [](double x) { return std::sqrt(x); }, e.is_num() && e.value() >= 0.0);
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse_all() {
        Expr e = expr();
        skip_ws();
        if (pos_ != s_.size()) throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr expr() {
        Expr lhs = term();
        for (;;) {
            if (accept('+')) lhs = lhs + term();
            else if (accept('-')) lhs = lhs - term();
            else return lhs;
        }
    }

    Expr term() {
        Expr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = lhs * unary();
            else if (accept('/')) lhs = lhs / unary();
            else return lhs;
        }
    }

    Expr unary() {
        if (accept('-')) return -unary();
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (accept('^')) return pow(base, unary());
        return base;
    }

    static bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }

    Expr primary() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (is_digit(c) || c == '.') return number();
        if (is_alpha(c)) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (is_alpha(s_[pos_]) || is_digit(s_[pos_]) || s_[pos_] == '_')) ++pos_;
            std::string name(s_.substr(start, pos_ - start));
            static const std::map<std::string, Expr (*)(const Expr&), std::less<>> funcs = {
                {"sin", &acx::sin}, {"cos", &acx::cos}, {"exp", &acx::exp}, {"log", &acx::log}, {"sqrt", &acx::sqrt}};
            if (auto it = funcs.find(name); it != funcs.end()) {
                if (!accept('(')) throw ParseError("expected '(' after " + name, pos_);
                Expr a = expr();
                if (!accept(')')) throw ParseError("expected ')'", pos_);
                return it->second(a);
            }
            return Expr::var(std::move(name));
        }
        throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    Expr number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
            if (p < s_.size() && is_digit(s_[p])) {
                pos_ = p;
                while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
            }
        }
        double v = 0.0;
        const auto* first = s_.data() + start;
        const auto* last = s_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
        return Expr(v);
    }
};

// ---------------------------------------------------------------- printer

int precedence(const Expr& e) {
    switch (e.op()) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Num: return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
        default: return 5;
    }
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void print(const Expr& e, std::string& out) {
    auto child = [&](const Expr& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
    };
    switch (e.op()) {
        case Op::Num: out += format_number(e.value()); return;
        case Op::Var: out += e.name(); return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const int p = precedence(e);
            child(e.arg(0), precedence(e.arg(0)) < p);
            static const char* sym[] = {" + ", " - ", "*", "/"};
            out += sym[static_cast<int>(e.op()) - static_cast<int>(Op::Add)];
            child(e.arg(1), precedence(e.arg(1)) <= p);
            return;
        }
        case Op::Pow:
            child(e.arg(0), precedence(e.arg(0)) <= 4);
            out += '^';
            child(e.arg(1), precedence(e.arg(1)) < 3);
            return;
        case Op::Neg:
            out += '-';
            child(e.arg(0), precedence(e.arg(0)) < 3);
            return;
        case Op::Sin: out += "sin("; break;
        case Op::Cos: out += "cos("; break;
        case Op::Exp: out += "exp("; break;
        case Op::Log: out += "log("; break;
        case Op::Sqrt: out += "sqrt("; break;
    }
    print(e.arg(0), out);
    out += ')';
}

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

std::string to_string(const Expr& e) {
    std::string out;
    print(e, out);
    return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.id() == b.id()) return true;
    if (a.op() != b.op()) return false;
    if (a.op() == Op::Num) return a.value() == b.value();
    if (a.op() == Op::Var) return a.name() == b.name();
    if (a.arity() != b.arity()) return false;
    for (std::size_t i = 0; i < a.arity(); ++i)
        if (!structurally_equal(a.arg(i), b.arg(i))) return false;
    return true;
}

// ---------------------------------------------------------------- calculus

namespace {

Expr rebuild(Op op, const std::vector<Expr>& a) {
    switch (op) {
        case Op::Add: return a[0] + a[1];
        case Op::Sub: return a[0] - a[1];
        case Op::Mul: return a[0] * a[1];
        case Op::Div: return a[0] / a[1];
        case Op::Pow: return pow(a[0], a[1]);
        case Op::Neg: return -a[0];
        case Op::Sin: return sin(a[0]);
        case Op::Cos: return cos(a[0]);
        case Op::Exp: return exp(a[0]);
        case Op::Log: return log(a[0]);
        case Op::Sqrt: return sqrt(a[0]);
        default: throw std::logic_error("rebuild: leaf op");
    }
}

class Differentiator {
public:
    explicit Differentiator(std::string_view var) : var_(var) {}

    Expr d(const Expr& e) {
        if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
        Expr r = compute(e);
        memo_.emplace(e.id(), r);
        return r;
    }

private:
    std::string_view var_;
    std::unordered_map<const ExprNode*, Expr> memo_;

    Expr compute(const Expr& e) {
        switch (e.op()) {
            case Op::Num: return Expr(0.0);
            case Op::Var: return Expr(e.name() == var_ ? 1.0 : 0.0);
            case Op::Add: return d(e.arg(0)) + d(e.arg(1));
            case Op::Sub: return d(e.arg(0)) - d(e.arg(1));
            case Op::Neg: return -d(e.arg(0));
            case Op::Mul: {
                const Expr &a = e.arg(0), &b = e.arg(1);
                return d(a) * b + a * d(b);
            }
            case Op::Div: {
                const Expr &a = e.arg(0), &b = e.arg(1);
                return (d(a) * b - a * d(b)) / pow(b, Expr(2.0));
            }
            case Op::Pow: {
                const Expr &a = e.arg(0), &b = e.arg(1);
                if (b.is_num()) return b * pow(a, Expr(b.value() - 1.0)) * d(a);
                const Expr db = d(b);
                if (a.is_num()) return e * log(a) * db;
                return e * (db * log(a) + b * d(a) / a);
            }
            case Op::Sin: return cos(e.arg(0)) * d(e.arg(0));
            case Op::Cos: return -(sin(e.arg(0)) * d(e.arg(0)));
            case Op::Exp: return e * d(e.arg(0));
            case Op::Log: return d(e.arg(0)) / e.arg(0);
            case Op::Sqrt: return d(e.arg(0)) / (Expr(2.0) * e);
        }
        throw std::logic_error("differentiate: bad op");
    }
};

}  // namespace

Expr differentiate(const Expr& e, std::string_view var) { return Differentiator(var).d(e); }

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& replacements) {
    std::unordered_map<const ExprNode*, Expr> memo;
    std::function<Expr(const Expr&)> go = [&](const Expr& x) -> Expr {
        if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
        Expr r;
        if (x.op() == Op::Num) {
            r = x;
        } else if (x.op() == Op::Var) {
            auto it = replacements.find(x.name());
            r = it == replacements.end() ? x : it->second;
        } else {
            std::vector<Expr> args;
            args.reserve(x.arity());
            bool changed = false;
            for (std::size_t i = 0; i < x.arity(); ++i) {
                args.push_back(go(x.arg(i)));
                changed = changed || args.back().id() != x.arg(i).id();
            }
            r = changed ? rebuild(x.op(), args) : x;
        }
        memo.emplace(x.id(), r);
        return r;
    };
    return go(e);
}

Expr bind_constants(const Expr& e, const std::map<std::string, double, std::less<>>& constants) {
    std::map<std::string, Expr, std::less<>> repl;
    for (const auto& [k, v] : constants) repl.emplace(k, Expr(v));
    return substitute(e, repl);
}

std::vector<std::string> free_identifiers(const Expr& e) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    std::unordered_set<const ExprNode*> visited;
    std::function<void(const Expr&)> go = [&](const Expr& x) {
        if (!visited.insert(x.id()).second) return;
        if (x.op() == Op::Var) {
            if (seen.insert(x.name()).second) out.push_back(x.name());
            return;
        }
        for (std::size_t i = 0; i < x.arity(); ++i) go(x.arg(i));
    };
    go(e);
    return out;
}

std::size_t node_count(const Expr& e) {
    std::unordered_set<const ExprNode*> visited;
    std::function<void(const Expr&)> go = [&](const Expr& x) {
        if (!visited.insert(x.id()).second) return;
        for (std::size_t i = 0; i < x.arity(); ++i) go(x.arg(i));
    };
    go(e);
    return visited.size();
}

double evaluate(const Expr& e, const Bindings& point) {
    std::unordered_map<const ExprNode*, double> memo;
    std::function<double(const Expr&)> go = [&](const Expr& x) -> double {
        if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
        double r = 0.0;
        switch (x.op()) {
            case Op::Num: r = x.value(); break;
            case Op::Var: {
                auto it = point.find(x.name());
                if (it == point.end()) throw UnboundIdentifier(x.name());
                r = it->second;
                break;
            }
            case Op::Add: r = go(x.arg(0)) + go(x.arg(1)); break;
            case Op::Sub: r = go(x.arg(0)) - go(x.arg(1)); break;
            case Op::Mul: r = go(x.arg(0)) * go(x.arg(1)); break;
            case Op::Div: {
                const double den = go(x.arg(1));
                if (den == 0.0) throw DomainError("division by zero", to_string(x));
                r = go(x.arg(0)) / den;
                break;
            }
            case Op::Pow: {
                const double b = go(x.arg(0)), p = go(x.arg(1));
                if (b < 0.0 && p != std::floor(p)) throw DomainError("negative base with non-integer exponent", to_string(x));
                if (b == 0.0 && p < 0.0) throw DomainError("zero to a negative power", to_string(x));
                r = std::pow(b, p);
                break;
            }
            case Op::Neg: r = -go(x.arg(0)); break;
            case Op::Sin: r = std::sin(go(x.arg(0))); break;
            case Op::Cos: r = std::cos(go(x.arg(0))); break;
            case Op::Exp: r = std::exp(go(x.arg(0))); break;
            case Op::Log: {
                const double a = go(x.arg(0));
                if (a <= 0.0) throw DomainError("log of non-positive value", to_string(x));
                r = std::log(a);
                break;
            }
            case Op::Sqrt: {
                const double a = go(x.arg(0));
                if (a < 0.0) throw DomainError("sqrt of negative value", to_string(x));
                r = std::sqrt(a);
                break;
            }
        }
        memo.emplace(x.id(), r);
        return r;
    };
    return go(e);
}

namespace {

constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t mod_mul(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    std::uint64_t r = static_cast<std::uint64_t>(p & kPrime) + static_cast<std::uint64_t>(p >> 61);
    if (r >= kPrime) r -= kPrime;
    return r;
}

std::uint64_t mod_pow(std::uint64_t a, std::uint64_t e) {
    std::uint64_t r = 1;
    for (; e; e >>= 1, a = mod_mul(a, a))
        if (e & 1) r = mod_mul(r, a);
    return r;
}

std::uint64_t mod_inv(std::uint64_t a) { return mod_pow(a, kPrime - 2); }

struct NotRational {};
struct Pole {};

// Doubles are dyadic rationals m·2^k.
std::uint64_t mod_of(double v) {
    if (!std::isfinite(v)) throw NotRational{};
    int k = 0;
    const double m = std::frexp(v, &k);
    const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    k -= 53;
    std::uint64_t r = static_cast<std::uint64_t>(mant < 0 ? -mant : mant) % kPrime;
    if (mant < 0 && r) r = kPrime - r;
    const std::uint64_t two = 2;
    return k >= 0 ? mod_mul(r, mod_pow(two, static_cast<std::uint64_t>(k)))
                  : mod_mul(r, mod_inv(mod_pow(two, static_cast<std::uint64_t>(-k))));
}

}  // namespace

std::optional<bool> vanishes_identically(const Expr& e, int trials, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> u(1, kPrime - 1);
    const auto vars = free_identifiers(e);
    int evaluated = 0;
    for (int trial = 0; trial < trials; ++trial) {
        std::unordered_map<std::string, std::uint64_t> point;
        for (const auto& v : vars) point[v] = u(rng);
        std::unordered_map<const ExprNode*, std::uint64_t> memo;
        std::function<std::uint64_t(const Expr&)> go = [&](const Expr& x) -> std::uint64_t {
            if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
            std::uint64_t r = 0;
            switch (x.op()) {
                case Op::Num: r = mod_of(x.value()); break;
                case Op::Var: r = point.at(x.name()); break;
                case Op::Add: r = (go(x.arg(0)) + go(x.arg(1))) % kPrime; break;
                case Op::Sub: r = (go(x.arg(0)) + kPrime - go(x.arg(1))) % kPrime; break;
                case Op::Mul: r = mod_mul(go(x.arg(0)), go(x.arg(1))); break;
                case Op::Neg: r = (kPrime - go(x.arg(0))) % kPrime; break;
                case Op::Div: {
                    const auto d = go(x.arg(1));
                    if (d == 0) throw Pole{};
                    r = mod_mul(go(x.arg(0)), mod_inv(d));
                    break;
                }
                case Op::Pow: {
                    const Expr& ex = x.arg(1);
                    if (!ex.is_num() || ex.value() != std::floor(ex.value()) || std::abs(ex.value()) > 1e6) throw NotRational{};
                    const auto b = go(x.arg(0));
                    const double k = ex.value();
                    if (k < 0 && b == 0) throw Pole{};
                    r = mod_pow(k < 0 ? mod_inv(b) : b, static_cast<std::uint64_t>(std::abs(k)));
                    break;
                }
                default: throw NotRational{};
            }
            memo.emplace(x.id(), r);
            return r;
        };
        try {
            if (go(e) != 0) return false;
            ++evaluated;
        } catch (const NotRational&) {
            return std::nullopt;
        } catch (const Pole&) {
        }
    }
    if (evaluated == 0) return std::nullopt;
    return true;
}

}  // namespace acx
