#pragma once

#include <span>
#include <vector>

#include "evfusion/dataset.hpp"
#include "evfusion/fusion.hpp"
#include "evfusion/network.hpp"

namespace evfusion {

/// Mann-Whitney AUC: probability that a flagged score exceeds a clean one, ties counted as 1/2.
/// Throws std::invalid_argument unless both groups are non-empty.
double roc_auc(std::span<const double> scores, const std::vector<bool>& flags);

struct Predictions {
    /// Argmax of the fused projected probabilities (lowest index on ties).
    std::vector<std::size_t> predicted;
    /// Fused uncertainty mass per sample.
    std::vector<double> uncertainty;
};

/// Per-view evidence matrices (N x K each) for every sample of `batch`.
std::vector<Matrix> view_evidence(const EvidentialNetwork& network, const MultimodalBatch& batch);

/// Fuses per-sample opinions built from precomputed evidence.
Predictions fuse_predictions(std::span<const Matrix> evidence, FusionMethod method, double lambda);
Predictions predict(const EvidentialNetwork& network, const MultimodalBatch& batch, FusionMethod method,
                    double lambda);

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);

struct MeanStd {
    double mean = 0.0;
    /// Population standard deviation; 0 for a single value.
    double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

struct Evaluation {
    double accuracy_clean = 0.0;
    double accuracy_conflict = 0.0;
    MeanStd uncertainty_clean;
    MeanStd uncertainty_conflict;
    /// AUC of fused uncertainty over the union of both sets, conflict flags as positives.
    double auc = 0.0;
    std::vector<double> clean_scores;
    std::vector<double> conflict_scores;
};

/// `conflicted` is a conflict-injected copy of `clean`; its flags mark the positives.
Evaluation evaluate(const EvidentialNetwork& network, const MultimodalBatch& clean, const MultimodalBatch& conflicted,
                    FusionMethod method, double lambda);

}  // namespace evfusion
