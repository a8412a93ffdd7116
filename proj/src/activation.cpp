#include "evfusion/activation.hpp"

#include <cmath>

namespace evfusion {

double capped_exp(double x)
{
    return kEvidenceCap / (1.0 + kEvidenceCap * std::exp(-x));
}

double capped_exp_derivative(double x)
{
    const double y = capped_exp(x);
    return y * (1.0 - y / kEvidenceCap);
}

}  // namespace evfusion
