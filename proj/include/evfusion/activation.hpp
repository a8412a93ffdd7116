#pragma once

namespace evfusion {

/// Upper bound on per-class evidence produced by the output activation.
inline constexpr double kEvidenceCap = 1e13;

/// f(x) = cap / (1 + cap e^-x). Close to e^x for x well below log(cap) ~ 29.9, saturates at cap.
double capped_exp(double x);
/// f'(x) = f(x) (1 - f(x) / cap).
double capped_exp_derivative(double x);

}  // namespace evfusion
