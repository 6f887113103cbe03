#pragma once

// Compiled multi-output evaluation program for expressions. Structurally
// equal subexpressions are evaluated once. Evaluation is templated over the
// scalar: double for values, Jet<K> for exact derivatives.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acx/expr.hpp"
#include "acx/jet.hpp"

namespace acx {

enum class DerivativeMode { Exact, FiniteDifference };

// Process-wide switch used by Tape::jets. FiniteDifference replaces jet
// propagation by Richardson-extrapolated central differences of the double
// evaluator (the --fd-only mode).
DerivativeMode derivative_mode();
void set_derivative_mode(DerivativeMode mode);

class ScopedDerivativeMode {
public:
    explicit ScopedDerivativeMode(DerivativeMode m) : saved_(derivative_mode()) { set_derivative_mode(m); }
    ~ScopedDerivativeMode() { set_derivative_mode(saved_); }
    ScopedDerivativeMode(const ScopedDerivativeMode&) = delete;
    ScopedDerivativeMode& operator=(const ScopedDerivativeMode&) = delete;

private:
    DerivativeMode saved_;
};

class Tape {
public:
    Tape() = default;
    // Throws UnboundIdentifier if an output refers to a name not in inputs.
    Tape(std::span<const Expr> outputs, const std::vector<std::string>& inputs);

    std::size_t num_inputs() const { return num_inputs_; }
    std::size_t num_outputs() const { return outputs_.size(); }
    std::size_t num_instructions() const { return code_.size(); }

    std::vector<double> operator()(std::span<const double> in) const;
    void eval(std::span<const double> in, std::span<double> out) const;

    // Evaluate with jet inputs (seeded coordinates or compositions).
    template <int K>
    std::vector<Jet<K>> jets(std::span<const Jet<K>> in) const;

    // Jets of the outputs at point x with input i seeded as jet variable i.
    template <int K>
    std::vector<Jet<K>> jets_at(std::span<const double> x) const {
        std::vector<Jet<K>> in;
        in.reserve(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) in.push_back(Jet<K>::variable(static_cast<int>(i), x[i]));
        return jets<K>(std::span<const Jet<K>>(in));
    }

    template <class S>
    void run(const S* in, S* out) const;

private:
    enum class Code : std::uint8_t { Const, Input, Add, Sub, Mul, Div, PowInt, PowReal, Pow, Neg, Sin, Cos, Exp, Log, Sqrt };
    struct Instr {
        Code code;
        int a = -1;
        int b = -1;
        double c = 0.0;
        int n = 0;
        Expr src;
    };
    std::vector<Instr> code_;
    std::vector<int> outputs_;
    std::size_t num_inputs_ = 0;

    template <int K>
    std::vector<Jet<K>> fd_jets(std::span<const Jet<K>> in) const;
};

extern template void Tape::run<double>(const double*, double*) const;
extern template std::vector<Jet<1>> Tape::jets<1>(std::span<const Jet<1>>) const;
extern template std::vector<Jet<2>> Tape::jets<2>(std::span<const Jet<2>>) const;
extern template std::vector<Jet<3>> Tape::jets<3>(std::span<const Jet<3>>) const;
extern template std::vector<Jet<4>> Tape::jets<4>(std::span<const Jet<4>>) const;

}  // namespace acx
