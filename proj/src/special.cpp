#include "evfusion/special.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evfusion {

namespace {

constexpr double kShift = 10.0;

void require_positive(double x, const char* name)
{
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error(std::string(name) + " requires a positive finite argument");
    }
}

}  // namespace

double digamma(double x)
{
    require_positive(x, "digamma");
    double acc = 0.0;
    while (x < kShift) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli terms B_2n / (2n x^2n), Horner in 1/x^2.
    const double series =
        inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x)
{
    require_positive(x, "trigamma");
    double acc = 0.0;
    while (x < kShift) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * (1.0 + inv * (0.5 + inv * (1.0 / 6 - inv2 * (1.0 / 30 - inv2 * (1.0 / 42 - inv2 * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * 7.0 / 6))))))));
    return acc + series;
}

double lgamma(double x)
{
    require_positive(x, "lgamma");
    double product = 1.0;
    while (x < kShift) {
        product *= x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * (1.0 / 12 - inv2 * (1.0 / 360 - inv2 * (1.0 / 1260 - inv2 * (1.0 / 1680 - inv2 * (1.0 / 1188 - inv2 * (691.0 / 360360 - inv2 / 156))))));
    const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
    return (x - 0.5) * std::log(x) - x + half_log_two_pi + series - std::log(product);
}

}  // namespace evfusion
