#pragma once

// Minimal scalar reverse-mode differentiation.
//
// A Tape owns an append-only list of DiffNodes; every node refers only to
// earlier nodes, so the graph is acyclic by construction. A Var is a handle
// (tape, node index, cached value). A Var without a tape is a plain constant.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace forge::kernel {

struct DiffNode {
    double value = 0.0;
    std::array<std::size_t, 2> parents{0, 0};
    std::array<double, 2> partials{0.0, 0.0};
    int parent_count = 0;
    // Forward value passes through; no gradient reaches the parents.
    bool stop_grad = false;
};

class Tape;

class Var {
public:
    Var() = default;
    Var(double constant) : value_(constant) {}  // NOLINT: implicit on purpose, lets templates mix literals

    double value() const { return value_; }
    Tape* tape() const { return tape_; }
    std::size_t index() const { return index_; }
    bool is_constant() const { return tape_ == nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t index, double value) : tape_(tape), index_(index), value_(value) {}

    Tape* tape_ = nullptr;
    std::size_t index_ = 0;
    double value_ = 0.0;
};

class Tape {
public:
    Var variable(double value);
    Var stop_gradient(const Var& x);

    Var unary(const Var& x, double value, double partial);
    Var binary(const Var& a, const Var& b, double value, double partial_a, double partial_b);

    const DiffNode& node(std::size_t i) const { return nodes_[i]; }
    std::size_t size() const { return nodes_.size(); }

    // d(output)/d(param) for each param, by reverse accumulation.
    std::vector<double> backward(const Var& output, std::span<const Var> params) const;

private:
    std::size_t push(DiffNode node);

    std::vector<DiffNode> nodes_;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var exp(const Var& x);
Var log(const Var& x);
Var tanh(const Var& x);

// sg(x): identity forward, zero derivative backward.
Var stop_gradient(const Var& x);
inline double stop_gradient(double x) { return x; }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

std::vector<double> backward(const Var& output, std::span<const Var> params);

}  // namespace forge::kernel
