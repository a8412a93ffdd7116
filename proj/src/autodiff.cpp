#include "evfusion/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evfusion/activation.hpp"
#include "evfusion/special.hpp"

namespace evfusion::ad {

namespace {

std::size_t broadcast_index(const Matrix& m, std::size_t r, std::size_t c)
{
    return (m.rows() == 1 ? 0 : r) * m.cols() + (m.cols() == 1 ? 0 : c);
}

std::size_t broadcast_dim(std::size_t a, std::size_t b, const char* what)
{
    if (a == b || b == 1) {
        return a;
    }
    if (a == 1) {
        return b;
    }
    std::ostringstream os;
    os << "cannot broadcast " << what << " " << a << " against " << b;
    throw std::invalid_argument(os.str());
}

Tape& tape_of(Var a)
{
    if (!a.valid()) {
        throw std::logic_error("operation on a Var that is not recorded on any tape");
    }
    return *a.tape();
}

Tape& tape_of(Var a, Var b)
{
    Tape& t = tape_of(a);
    if (&tape_of(b) != &t) {
        throw std::logic_error("operands recorded on different tapes");
    }
    return t;
}

/// Elementwise binary node. `da`/`db` give the local partials from (x, y, out).
template <class F, class DA, class DB>
Var binary(Var a, Var b, F f, DA da, DB db)
{
    Tape& tape = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    const std::size_t rows = broadcast_dim(x.rows(), y.rows(), "rows");
    const std::size_t cols = broadcast_dim(x.cols(), y.cols(), "cols");
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out(r, c) = f(x[broadcast_index(x, r, c)], y[broadcast_index(y, r, c)]);
        }
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return tape.record(std::move(out), {ia, ib}, [ia, ib, da, db](Tape& t, std::size_t self) {
        const Matrix& x = t.value(ia);
        const Matrix& y = t.value(ib);
        const Matrix& o = t.value(self);
        const Matrix& g = t.adjoint(self);
        const bool want_a = t.requires_grad(ia);
        const bool want_b = t.requires_grad(ib);
        for (std::size_t r = 0; r < o.rows(); ++r) {
            for (std::size_t c = 0; c < o.cols(); ++c) {
                const double gv = g(r, c);
                if (gv == 0.0) {
                    continue;
                }
                const std::size_t xi = broadcast_index(x, r, c);
                const std::size_t yi = broadcast_index(y, r, c);
                if (want_a) {
                    t.adjoint(ia)[xi] += gv * da(x[xi], y[yi], o(r, c));
                }
                if (want_b) {
                    t.adjoint(ib)[yi] += gv * db(x[xi], y[yi], o(r, c));
                }
            }
        }
    });
}

/// Elementwise unary node. `df` gives the local derivative from (x, out).
template <class F, class DF>
Var unary(Var a, F f, DF df)
{
    Tape& tape = tape_of(a);
    const Matrix& x = a.value();
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = f(x[i]);
    }
    const std::size_t ia = a.id();
    return tape.record(std::move(out), {ia}, [ia, df](Tape& t, std::size_t self) {
        const Matrix& x = t.value(ia);
        const Matrix& o = t.value(self);
        const Matrix& g = t.adjoint(self);
        Matrix& ga = t.adjoint(ia);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (g[i] != 0.0) {
                ga[i] += g[i] * df(x[i], o[i]);
            }
        }
    });
}

}  // namespace

const Matrix& Var::value() const
{
    if (!tape_) {
        throw std::logic_error("Var is not recorded on any tape");
    }
    return tape_->value(id_);
}

double Var::item() const
{
    const Matrix& v = value();
    if (v.size() != 1) {
        throw std::logic_error("item() on a non-scalar Var");
    }
    return v[0];
}

Var Tape::push(Node node)
{
    nodes_.push_back(std::move(node));
    has_gradients_ = false;
    return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Matrix value)
{
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::constant(Matrix value)
{
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, Backprop backprop)
{
    Node n;
    n.value = std::move(value);
    n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [this](std::size_t i) { return nodes_.at(i).requires_grad; });
    if (n.requires_grad) {
        n.backprop = std::move(backprop);
    }
    n.inputs = std::move(inputs);
    return push(std::move(n));
}

void Tape::check(Var v) const
{
    if (v.tape() != this || v.id() >= nodes_.size()) {
        throw std::logic_error("Var does not belong to this tape (was the forward pass recorded?)");
    }
}

void Tape::backward(Var loss)
{
    if (nodes_.empty()) {
        throw std::logic_error("backward called on an empty tape; run a forward pass first");
    }
    check(loss);
    if (nodes_[loss.id()].value.size() != 1) {
        throw std::logic_error("backward requires a scalar (1 x 1) loss");
    }
    for (auto& n : nodes_) {
        n.grad = Matrix(n.value.rows(), n.value.cols(), 0.0);
    }
    nodes_[loss.id()].grad[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        if (nodes_[i].backprop) {
            nodes_[i].backprop(*this, i);
        }
    }
    has_gradients_ = true;
}

const Matrix& Tape::grad(Var v) const
{
    check(v);
    if (!has_gradients_) {
        throw std::logic_error("gradients requested before backward()");
    }
    return nodes_[v.id()].grad;
}

void Tape::clear() noexcept
{
    nodes_.clear();
    has_gradients_ = false;
}

Var add(Var a, Var b)
{
    return binary(a, b, [](double x, double y) { return x + y; },
                  [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b)
{
    return binary(a, b, [](double x, double y) { return x - y; },
                  [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b)
{
    return binary(a, b, [](double x, double y) { return x * y; },
                  [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Var div(Var a, Var b)
{
    return binary(a, b, [](double x, double y) { return x / y; },
                  [](double, double y, double) { return 1.0 / y; },
                  [](double x, double y, double) { return -x / (y * y); });
}

Var maximum(Var a, Var b)
{
    return binary(a, b, [](double x, double y) { return x >= y ? x : y; },
                  [](double x, double y, double) { return x >= y ? 1.0 : 0.0; },
                  [](double x, double y, double) { return x >= y ? 0.0 : 1.0; });
}

Var neg(Var a)
{
    return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var exp(Var a)
{
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a)
{
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var pow(Var a, double exponent)
{
    return unary(a, [exponent](double x) { return std::pow(x, exponent); },
                 [exponent](double x, double) { return exponent * std::pow(x, exponent - 1.0); });
}

Var abs(Var a)
{
    return unary(a, [](double x) { return std::abs(x); },
                 [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var relu(Var a)
{
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var capped_exp(Var a)
{
    return unary(a, [](double x) { return evfusion::capped_exp(x); },
                 [](double, double y) { return y * (1.0 - y / kEvidenceCap); });
}

Var digamma(Var a)
{
    return unary(a, [](double x) { return evfusion::digamma(x); }, [](double x, double) { return evfusion::trigamma(x); });
}

Var lgamma(Var a)
{
    return unary(a, [](double x) { return evfusion::lgamma(x); }, [](double x, double) { return evfusion::digamma(x); });
}

Var matmul(Var a, Var b)
{
    Tape& tape = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    if (x.cols() != y.rows()) {
        std::ostringstream os;
        os << "matmul shape mismatch: " << x.rows() << "x" << x.cols() << " * " << y.rows() << "x" << y.cols();
        throw std::invalid_argument(os.str());
    }
    const std::size_t n = x.rows();
    const std::size_t m = x.cols();
    const std::size_t p = y.cols();
    Matrix out(n, p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            const double xik = x(i, k);
            if (xik == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < p; ++j) {
                out(i, j) += xik * y(k, j);
            }
        }
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return tape.record(std::move(out), {ia, ib}, [ia, ib, n, m, p](Tape& t, std::size_t self) {
        const Matrix& x = t.value(ia);
        const Matrix& y = t.value(ib);
        const Matrix& g = t.adjoint(self);
        if (t.requires_grad(ia)) {
            // dX = G Y^T
            Matrix& gx = t.adjoint(ia);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < m; ++k) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < p; ++j) {
                        acc += g(i, j) * y(k, j);
                    }
                    gx(i, k) += acc;
                }
            }
        }
        if (t.requires_grad(ib)) {
            // dY = X^T G
            Matrix& gy = t.adjoint(ib);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < m; ++k) {
                    const double xik = x(i, k);
                    if (xik == 0.0) {
                        continue;
                    }
                    for (std::size_t j = 0; j < p; ++j) {
                        gy(k, j) += xik * g(i, j);
                    }
                }
            }
        }
    });
}

Var row_sum(Var a)
{
    Tape& tape = tape_of(a);
    const Matrix& x = a.value();
    Matrix out(x.rows(), 1, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (double v : x.row(r)) {
            out(r, 0) += v;
        }
    }
    const std::size_t ia = a.id();
    return tape.record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
        Matrix& ga = t.adjoint(ia);
        const Matrix& g = t.adjoint(self);
        for (std::size_t r = 0; r < ga.rows(); ++r) {
            for (auto& v : ga.row(r)) {
                v += g(r, 0);
            }
        }
    });
}

Var sum(Var a)
{
    Tape& tape = tape_of(a);
    const Matrix& x = a.value();
    double total = 0.0;
    for (double v : x.data()) {
        total += v;
    }
    const std::size_t ia = a.id();
    return tape.record(Matrix::scalar(total), {ia}, [ia](Tape& t, std::size_t self) {
        const double g = t.adjoint(self)[0];
        for (auto& v : t.adjoint(ia).data()) {
            v += g;
        }
    });
}

Var mean(Var a)
{
    const double n = static_cast<double>(a.value().size());
    return sum(a) / n;
}

Var stop_gradient(Var a)
{
    return tape_of(a).constant(a.value());
}

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, Var b) { return mul(a, b); }
Var operator/(Var a, Var b) { return div(a, b); }
Var operator-(Var a) { return neg(a); }
Var operator+(Var a, double b) { return add(a, tape_of(a).constant(b)); }
Var operator+(double a, Var b) { return add(tape_of(b).constant(a), b); }
Var operator-(Var a, double b) { return sub(a, tape_of(a).constant(b)); }
Var operator-(double a, Var b) { return sub(tape_of(b).constant(a), b); }
Var operator*(Var a, double b) { return mul(a, tape_of(a).constant(b)); }
Var operator*(double a, Var b) { return mul(tape_of(b).constant(a), b); }
Var operator/(Var a, double b) { return div(a, tape_of(a).constant(b)); }
Var operator/(double a, Var b) { return div(tape_of(b).constant(a), b); }

}  // namespace evfusion::ad
