#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acx {

enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt };

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Raised by evaluation; carries the printed subexpression that failed.
class DomainError : public std::runtime_error {
public:
    DomainError(const std::string& what, std::string subexpression);
    const std::string& subexpression() const { return subexpression_; }

private:
    std::string subexpression_;
};

class UnboundIdentifier : public std::runtime_error {
public:
    explicit UnboundIdentifier(std::string name);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

struct ExprNode;

// Immutable scalar expression. Copies share structure.
class Expr {
public:
    Expr();  // literal 0
    Expr(double v);  // NOLINT(google-explicit-constructor)

    static Expr num(double v);
    static Expr var(std::string name);

    Op op() const;
    double value() const;             // Num only
    const std::string& name() const;  // Var only
    std::size_t arity() const;
    const Expr& arg(std::size_t i) const;

    bool is_num() const { return op() == Op::Num; }
    bool is_num(double v) const { return is_num() && value() == v; }
    const ExprNode* id() const { return node_.get(); }

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    Expr& operator+=(const Expr& b) { return *this = *this + b; }
    Expr& operator-=(const Expr& b) { return *this = *this - b; }
    Expr& operator*=(const Expr& b) { return *this = *this * b; }

private:
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
    friend Expr make_node(Op, std::vector<Expr>);
    std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
    Op op;
    double value = 0.0;
    std::string name;
    std::vector<Expr> args;
};

Expr pow(const Expr& base, const Expr& exponent);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr log(const Expr& e);
Expr sqrt(const Expr& e);

Expr parse(std::string_view text);
std::string to_string(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

Expr differentiate(const Expr& e, std::string_view var);
Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& replacements);
Expr bind_constants(const Expr& e, const std::map<std::string, double, std::less<>>& constants);

// Free identifiers in first-occurrence order.
std::vector<std::string> free_identifiers(const Expr& e);
std::size_t node_count(const Expr& e);

using Bindings = std::map<std::string, double, std::less<>>;
double evaluate(const Expr& e, const Bindings& point);

// Exact test that a rational expression (+, −, ×, ÷, integer powers, binary
// floating-point constants) is identically zero: evaluation modulo the prime
// 2^61 − 1 at random points. A nonzero rational function of total degree d
// vanishes at a random point with probability at most d / 2^61 per trial.
// nullopt when the expression uses other operations or every trial hits a
// pole.
std::optional<bool> vanishes_identically(const Expr& e, int trials = 6, unsigned seed = 1);

}  // namespace acx
