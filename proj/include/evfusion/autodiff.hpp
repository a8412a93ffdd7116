#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "evfusion/matrix.hpp"

namespace evfusion::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid until the tape is cleared.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    /// Value of a 1 x 1 node.
    double item() const;

    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Recorded expression graph over dense matrices. Operations append nodes in
/// evaluation order; backward() sweeps them in reverse accumulating adjoints.
///
/// One tape per training run. Not thread-safe.
class Tape {
public:
    using Backprop = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf whose adjoint is tracked.
    Var variable(Matrix value);
    /// Leaf without an adjoint.
    Var constant(Matrix value);
    Var constant(double value) { return constant(Matrix::scalar(value)); }

    /// Adds an interior node. `backprop` reads the node's adjoint and accumulates into its inputs.
    Var record(Matrix value, std::vector<std::size_t> inputs, Backprop backprop);

    /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1 x 1 and on this tape.
    void backward(Var loss);

    /// Adjoint after backward(). Zero matrix for nodes not on the loss path.
    const Matrix& grad(Var v) const;
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    Matrix& adjoint(std::size_t id) { return nodes_[id].grad; }

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear() noexcept;

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::vector<std::size_t> inputs;
        Backprop backprop;
        bool requires_grad = false;
    };

    Var push(Node node);
    void check(Var v) const;

    std::vector<Node> nodes_;
    bool has_gradients_ = false;
};

// Elementwise binary operations broadcast dimensions of size 1 (scalars, row and column vectors).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
/// max(a, b); the adjoint goes to `a` on ties.
Var maximum(Var a, Var b);

Var neg(Var a);
Var exp(Var a);
Var log(Var a);
Var pow(Var a, double exponent);
/// Subgradient 0 at 0.
Var abs(Var a);
Var relu(Var a);
/// Elementwise evfusion::capped_exp.
Var capped_exp(Var a);
Var digamma(Var a);
Var lgamma(Var a);

Var matmul(Var a, Var b);
/// N x K -> N x 1.
Var row_sum(Var a);
/// Any shape -> 1 x 1.
Var sum(Var a);
Var mean(Var a);
/// Copy of the value with no path back to `a`.
Var stop_gradient(Var a);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

}  // namespace evfusion::ad
