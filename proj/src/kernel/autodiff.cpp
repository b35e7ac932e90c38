#include "forge/kernel/autodiff.hpp"

#include <cmath>

#include "forge/kernel/tensor.hpp"

namespace forge::kernel {

std::size_t Tape::push(DiffNode node) {
    nodes_.push_back(node);
    return nodes_.size() - 1;
}

Var Tape::variable(double value) {
    DiffNode n;
    n.value = value;
    return Var(this, push(n), value);
}

Var Tape::stop_gradient(const Var& x) {
    if (x.is_constant()) return x;
    DiffNode n;
    n.value = x.value();
    n.parents[0] = x.index();
    n.parent_count = 1;
    n.stop_grad = true;
    return Var(this, push(n), x.value());
}

Var Tape::unary(const Var& x, double value, double partial) {
    DiffNode n;
    n.value = value;
    n.parents[0] = x.index();
    n.partials[0] = partial;
    n.parent_count = 1;
    return Var(this, push(n), value);
}

Var Tape::binary(const Var& a, const Var& b, double value, double partial_a, double partial_b) {
    DiffNode n;
    n.value = value;
    n.parent_count = 0;
    if (!a.is_constant()) {
        n.parents[n.parent_count] = a.index();
        n.partials[n.parent_count] = partial_a;
        ++n.parent_count;
    }
    if (!b.is_constant()) {
        n.parents[n.parent_count] = b.index();
        n.partials[n.parent_count] = partial_b;
        ++n.parent_count;
    }
    return Var(this, push(n), value);
}

std::vector<double> Tape::backward(const Var& output, std::span<const Var> params) const {
    std::vector<double> adjoint(nodes_.size(), 0.0);
    if (!output.is_constant()) {
        if (output.tape() != this) throw KernelError(KernelErrorCode::bad_argument, "output belongs to another tape");
        adjoint[output.index()] = 1.0;
        for (std::size_t i = output.index() + 1; i-- > 0;) {
            const DiffNode& n = nodes_[i];
            if (n.stop_grad || adjoint[i] == 0.0) continue;
            for (int p = 0; p < n.parent_count; ++p) adjoint[n.parents[p]] += adjoint[i] * n.partials[p];
        }
    }
    std::vector<double> grads;
    grads.reserve(params.size());
    for (const Var& p : params) {
        if (p.is_constant()) {
            grads.push_back(0.0);
        } else {
            if (p.tape() != this) throw KernelError(KernelErrorCode::bad_argument, "parameter belongs to another tape");
            grads.push_back(adjoint[p.index()]);
        }
    }
    return grads;
}

namespace {

Tape* tape_of(const Var& a, const Var& b) {
    if (a.tape() && b.tape() && a.tape() != b.tape()) {
        throw KernelError(KernelErrorCode::bad_argument, "operands live on different tapes");
    }
    return a.tape() ? a.tape() : b.tape();
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
    const double v = a.value() + b.value();
    Tape* t = tape_of(a, b);
    return t ? t->binary(a, b, v, 1.0, 1.0) : Var(v);
}

Var operator-(const Var& a, const Var& b) {
    const double v = a.value() - b.value();
    Tape* t = tape_of(a, b);
    return t ? t->binary(a, b, v, 1.0, -1.0) : Var(v);
}

Var operator*(const Var& a, const Var& b) {
    const double v = a.value() * b.value();
    Tape* t = tape_of(a, b);
    return t ? t->binary(a, b, v, b.value(), a.value()) : Var(v);
}

Var operator/(const Var& a, const Var& b) {
    const double v = a.value() / b.value();
    Tape* t = tape_of(a, b);
    return t ? t->binary(a, b, v, 1.0 / b.value(), -a.value() / (b.value() * b.value())) : Var(v);
}

Var operator-(const Var& a) {
    return a.is_constant() ? Var(-a.value()) : a.tape()->unary(a, -a.value(), -1.0);
}

Var exp(const Var& x) {
    const double v = std::exp(x.value());
    return x.is_constant() ? Var(v) : x.tape()->unary(x, v, v);
}

Var log(const Var& x) {
    const double v = std::log(x.value());
    return x.is_constant() ? Var(v) : x.tape()->unary(x, v, 1.0 / x.value());
}

Var tanh(const Var& x) {
    const double v = std::tanh(x.value());
    return x.is_constant() ? Var(v) : x.tape()->unary(x, v, 1.0 - v * v);
}

Var stop_gradient(const Var& x) { return x.is_constant() ? x : x.tape()->stop_gradient(x); }

std::vector<double> backward(const Var& output, std::span<const Var> params) {
    if (output.is_constant()) return std::vector<double>(params.size(), 0.0);
    return output.tape()->backward(output, params);
}

}  // namespace forge::kernel
