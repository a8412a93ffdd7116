#pragma once

namespace evfusion {

/// psi(x) for x > 0: upward recurrence to x >= 10, then the asymptotic series.
double digamma(double x);
/// psi'(x) for x > 0.
double trigamma(double x);
/// log Gamma(x) for x > 0: recurrence shift plus Stirling series.
double lgamma(double x);

}  // namespace evfusion
