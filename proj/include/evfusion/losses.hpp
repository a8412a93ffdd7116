#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evfusion/autodiff.hpp"
#include "evfusion/fusion.hpp"
#include "evfusion/opinion.hpp"

namespace evfusion {

/// Expected cross-entropy under Dir(alpha): Sum_j y_j (psi(S) - psi(alpha_j)).
/// Requires alpha_j >= 1 and a one-hot y of the same length.
double loss_ace(std::span<const double> alpha, std::span<const double> one_hot);

/// KL(Dir(alpha~) || Dir(1)) with alpha~ = y + (1 - y) alpha, i.e. true-class evidence removed.
double loss_kl(std::span<const double> alpha, std::span<const double> one_hot);

/// min(1, epoch / step). Throws std::domain_error when step < 1.
double annealing_coef(std::size_t epoch, std::size_t step);

/// 1/(V-1) Sum_p Sum_{q != p} DC(w_p, w_q); 0 for a single view.
double loss_consistency(std::span<const SubjectiveOpinion> opinions);

namespace ad {

/// Per-sample opinion pieces derived from an N x K evidence node (uniform base rates).
struct BatchOpinion {
    Var evidence;     // N x K
    Var strength;     // N x 1, S = Sum(e + 1)
    Var beliefs;      // N x K, e / S
    Var uncertainty;  // N x 1, K / S
};

BatchOpinion batch_opinion(Var evidence);

/// Per-sample cross-entropy term, N x 1.
Var batch_loss_ace(Var alpha, Var one_hot);
/// Per-sample KL term, N x 1.
Var batch_loss_kl(Var alpha, Var one_hot);
/// Per-sample consistency term, N x 1. Zero (constant) for a single view.
Var batch_loss_consistency(std::span<const BatchOpinion> views);

/// Fused N x K evidence under `method`. Averaging operators work in evidence space; belief
/// constraint fusion folds pairwise in opinion space; DBF discounts each view by the row
/// product of its agreement matrix before averaging.
Var fuse_evidence(FusionMethod method, std::span<const BatchOpinion> views, double lambda = kDefaultLambda);

}  // namespace ad

}  // namespace evfusion
