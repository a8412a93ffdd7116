#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "evfusion/activation.hpp"
#include "evfusion/special.hpp"

using namespace evfusion;

namespace {

// Absolute error near zeros of the function, relative elsewhere.
bool close(double got, double want, double tol)
{
    return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

struct Reference {
    double x;
    double value;
};

// Reference values computed with mpmath at 30 significant digits.
constexpr Reference kDigamma[] = {
    {0.1, -10.423754940411076795},
    {0.5, -1.9635100260214234794},
    {1.0, -0.57721566490153286061},
    {1.5, 0.036489973978576520559},
    {1.4616321449683623, -3.9928730412463132477e-17},
    {2.7, 0.7967831689911410155},
    {5.0, 1.5061176684318004727},
    {10.5, 2.3030010342976863753},
    {100.0, 4.6001618527380874002},
    {12345.5, 9.4210064020526849513},
};

constexpr Reference kTrigamma[] = {
    {0.5, 4.9348022005446793094},
    {1.0, 1.6449340668482264365},
    {3.3, 0.35350154184106181026},
    {50.0, 0.020201333226697125806},
};

constexpr Reference kLgamma[] = {
    {0.1, 2.2527126517342059599},
    {0.5, 0.57236494292470008707},
    {1.5, -0.12078223763524522235},
    {2.5, 0.28468287047291915963},
    {7.3, 7.1478925230222490328},
    {50.0, 144.56574394634488601},
    {1000.25, 5906.947268271117177},
};

}  // namespace

TEST_CASE("digamma against reference values")
{
    for (const auto& r : kDigamma) {
        INFO("x = " << r.x);
        CHECK(close(digamma(r.x), r.value, 1e-13));
    }
    CHECK(close(digamma(1.0), -0.5772156649, 1e-10));
}

TEST_CASE("trigamma against reference values")
{
    for (const auto& r : kTrigamma) {
        INFO("x = " << r.x);
        CHECK(close(trigamma(r.x), r.value, 1e-13));
    }
}

TEST_CASE("lgamma against reference values and the C library")
{
    for (const auto& r : kLgamma) {
        INFO("x = " << r.x);
        CHECK(close(evfusion::lgamma(r.x), r.value, 1e-13));
    }
    CHECK(close(evfusion::lgamma(5.0), std::log(24.0), 1e-14));
    CHECK(std::abs(evfusion::lgamma(1.0)) < 1e-14);
    CHECK(std::abs(evfusion::lgamma(2.0)) < 1e-14);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> x(0.01, 300.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = x(rng);
        INFO("x = " << v);
        CHECK(close(evfusion::lgamma(v), std::lgamma(v), 1e-12));
    }
}

TEST_CASE("recurrence identities")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> x(0.05, 60.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = x(rng);
        INFO("x = " << v);
        CHECK(close(digamma(v + 1.0) - digamma(v), 1.0 / v, 1e-12));
        CHECK(close(trigamma(v) - trigamma(v + 1.0), 1.0 / (v * v), 1e-12));
        CHECK(close(evfusion::lgamma(v + 1.0) - evfusion::lgamma(v), std::log(v), 1e-12));
    }
}

TEST_CASE("derivatives agree with finite differences")
{
    for (double v : {0.3, 1.0, 2.5, 9.9, 10.1, 40.0}) {
        const double h = 1e-6 * std::max(1.0, v);
        CHECK(close((evfusion::lgamma(v + h) - evfusion::lgamma(v - h)) / (2 * h), digamma(v), 1e-7));
        CHECK(close((digamma(v + h) - digamma(v - h)) / (2 * h), trigamma(v), 1e-6));
    }
}

TEST_CASE("domain errors")
{
    for (double bad : {0.0, -1.0, -2.5, std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::infinity()}) {
        CHECK_THROWS_AS(digamma(bad), std::domain_error);
        CHECK_THROWS_AS(trigamma(bad), std::domain_error);
        CHECK_THROWS_AS(evfusion::lgamma(bad), std::domain_error);
    }
}

TEST_CASE("capped exponential")
{
    CHECK(capped_exp(1e6) == kEvidenceCap);
    CHECK(capped_exp(-1e6) == 0.0);
    CHECK(std::abs(capped_exp(1.0) - std::exp(1.0)) / std::exp(1.0) < 1e-12);
    CHECK(std::abs(capped_exp(0.0) - 1e13 / (1.0 + 1e13)) < 1e-16);
    CHECK(std::abs(capped_exp_derivative(1.0) - std::exp(1.0)) < 1e-6);

    double previous = -1.0;
    for (double x = -50.0; x <= 60.0; x += 0.01) {
        const double f = capped_exp(x);
        CHECK(f >= previous);
        CHECK(f <= kEvidenceCap);
        previous = f;
    }

    // The cap pulls f below e^x by a factor 1/(1 + e^x / cap): within 1e-10 while e^x <= 1e3,
    // and bounded by e^x / cap all the way to x = 20.
    for (double x = -20.0; x <= 20.0; x += 0.05) {
        const double rel = std::abs(capped_exp(x) - std::exp(x)) / std::exp(x);
        INFO("x = " << x);
        if (x <= std::log(1e3)) {
            CHECK(rel < 1e-10);
        }
        CHECK(rel <= std::exp(x) / kEvidenceCap * (1.0 + 1e-9) + 1e-15);
    }
}
