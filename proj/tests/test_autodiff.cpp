#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "evfusion/autodiff.hpp"

using namespace evfusion;
using doctest::Approx;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, double lo, double hi, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(lo, hi);
    Matrix m(r, c);
    for (auto& x : m.data()) {
        x = d(rng);
    }
    return m;
}

using Graph = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Reduces the graph output with sum() and compares every input adjoint with central differences.
void check_gradient(const Graph& f, std::vector<Matrix> inputs, double tol = 1e-6)
{
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& m : inputs) {
        vars.push_back(tape.variable(m));
    }
    const ad::Var loss = ad::sum(f(tape, vars));
    tape.backward(loss);

    const auto evaluate = [&](const std::vector<Matrix>& values) {
        ad::Tape t;
        std::vector<ad::Var> v;
        for (const auto& m : values) {
            v.push_back(t.constant(m));
        }
        return ad::sum(f(t, v)).item();
    };
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Matrix& g = tape.grad(vars[i]);
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            auto plus = inputs;
            auto minus = inputs;
            const double h = 1e-6 * std::max(1.0, std::abs(inputs[i][j]));
            plus[i][j] += h;
            minus[i][j] -= h;
            const double fd = (evaluate(plus) - evaluate(minus)) / (2 * h);
            INFO("input " << i << " element " << j);
            CHECK(std::abs(g[j] - fd) <= tol * std::max(1.0, std::abs(fd)));
        }
    }
}

}  // namespace

TEST_CASE("product rule on a scalar")
{
    ad::Tape tape;
    const auto w = tape.variable(Matrix::scalar(2.0));
    const auto x = tape.constant(3.0);
    const auto loss = w * x;
    tape.backward(loss);
    CHECK(tape.grad(w)[0] == 3.0);
    CHECK(loss.item() == 6.0);
}

TEST_CASE("elementwise primitives match finite differences")
{
    std::mt19937_64 rng(1);
    const Matrix a = random_matrix(3, 4, 0.5, 2.0, rng);
    const Matrix b = random_matrix(3, 4, 0.5, 2.0, rng);
    const Matrix signed_a = random_matrix(3, 4, -2.0, 2.0, rng);

    check_gradient([](ad::Tape&, const auto& v) { return v[0] + v[1]; }, {a, b});
    check_gradient([](ad::Tape&, const auto& v) { return v[0] - v[1]; }, {a, b});
    check_gradient([](ad::Tape&, const auto& v) { return v[0] * v[1]; }, {a, b});
    check_gradient([](ad::Tape&, const auto& v) { return v[0] / v[1]; }, {a, b});
    check_gradient([](ad::Tape&, const auto& v) { return ad::maximum(v[0], v[1]); }, {a, b});
    check_gradient([](ad::Tape&, const auto& v) { return -v[0]; }, {signed_a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::exp(v[0]); }, {signed_a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::log(v[0]); }, {a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::pow(v[0], 2.5); }, {a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::pow(v[0], 1.0 / 3.0); }, {a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::abs(v[0]); }, {signed_a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::relu(v[0]); }, {signed_a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::capped_exp(v[0]); }, {signed_a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::digamma(v[0]); }, {a});
    check_gradient([](ad::Tape&, const auto& v) { return ad::lgamma(v[0]); }, {a});
    check_gradient([](ad::Tape&, const auto& v) { return 2.0 / v[0] + v[0] * 3.0 - 1.0 + (4.0 - v[0]) / 2.0; }, {a});
}

TEST_CASE("reductions, matrix product and broadcasting")
{
    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(5, 3, -1.0, 1.0, rng);
    const Matrix w = random_matrix(3, 4, -1.0, 1.0, rng);
    const Matrix row = random_matrix(1, 4, -1.0, 1.0, rng);
    const Matrix col = random_matrix(5, 1, 0.5, 1.5, rng);

    check_gradient([](ad::Tape&, const auto& v) { return ad::matmul(v[0], v[1]); }, {x, w});
    check_gradient([](ad::Tape&, const auto& v) { return ad::matmul(v[0], v[1]) + v[2]; }, {x, w, row});
    check_gradient([](ad::Tape&, const auto& v) { return ad::matmul(v[0], v[1]) / v[2]; }, {x, w, col});
    check_gradient([](ad::Tape&, const auto& v) { return ad::row_sum(v[0]) * ad::row_sum(v[0]); }, {x});
    check_gradient([](ad::Tape&, const auto& v) { return ad::mean(v[0] * v[0]); }, {x});
    check_gradient([](ad::Tape&, const auto& v) { return ad::sum(v[0]) * v[1]; }, {x, col});
}

TEST_CASE("a composite expression reusing nodes")
{
    std::mt19937_64 rng(3);
    const Matrix a = random_matrix(4, 3, 0.1, 3.0, rng);
    check_gradient(
        [](ad::Tape&, const auto& v) {
            const auto s = ad::row_sum(v[0]) + 3.0;
            const auto b = v[0] / s;
            return ad::digamma(s) - ad::lgamma(v[0] + 1.0) + b * b + ad::log(s) * b;
        },
        {a});
}

TEST_CASE("stop_gradient and absolute-value subgradient")
{
    ad::Tape tape;
    const auto x = tape.variable(Matrix(1, 3, std::vector<double>{-1.0, 0.0, 2.0}));
    const auto loss = ad::sum(ad::abs(x) + ad::stop_gradient(x) * x);
    tape.backward(loss);
    const auto& g = tape.grad(x);
    CHECK(g[0] == Approx(-1.0 + -1.0));
    CHECK(g[1] == 0.0);
    CHECK(g[2] == Approx(1.0 + 2.0));
}

TEST_CASE("capped_exp gradient at 1 is about e")
{
    ad::Tape tape;
    const auto x = tape.variable(Matrix::scalar(1.0));
    tape.backward(ad::capped_exp(x));
    CHECK(std::abs(tape.grad(x)[0] - std::exp(1.0)) < 1e-6);
}

TEST_CASE("misuse is reported")
{
    ad::Tape tape;
    const auto x = tape.variable(Matrix(2, 2, 1.0));
    CHECK_THROWS_AS(tape.grad(x), std::logic_error);
    CHECK_THROWS_AS(tape.backward(x), std::logic_error);

    ad::Tape other;
    const auto y = other.variable(Matrix::scalar(1.0));
    CHECK_THROWS_AS(tape.backward(y), std::logic_error);
    CHECK_THROWS(x + y);

    ad::Tape empty;
    CHECK_THROWS_AS(empty.backward(ad::Var{}), std::logic_error);

    CHECK_THROWS(ad::matmul(x, tape.variable(Matrix(3, 1, 1.0))));
    CHECK_THROWS(x + tape.variable(Matrix(3, 3, 1.0)));
}

TEST_CASE("constants receive no gradient requirement")
{
    ad::Tape tape;
    const auto c = tape.constant(Matrix::scalar(2.0));
    const auto v = tape.variable(Matrix::scalar(3.0));
    tape.backward(c * v);
    CHECK_FALSE(tape.requires_grad(c.id()));
    CHECK(tape.requires_grad(v.id()));
    CHECK(tape.grad(v)[0] == 2.0);
}
