#include "evfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace evfusion {

double roc_auc(std::span<const double> scores, const std::vector<bool>& flags)
{
    if (scores.size() != flags.size()) {
        throw std::invalid_argument("scores and flags differ in length");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        // Ranks i+1..j share their average.
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (flags[order[t]]) {
                positive_rank_sum += rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw std::invalid_argument("AUC needs at least one flagged and one unflagged sample");
    }
    const double p = static_cast<double>(positives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

std::vector<Matrix> view_evidence(const EvidentialNetwork& network, const MultimodalBatch& batch)
{
    batch.validate();
    if (batch.view_count() != network.view_count()) {
        throw std::invalid_argument("modality count differs from the network");
    }
    std::vector<Matrix> out;
    out.reserve(batch.view_count());
    for (std::size_t v = 0; v < batch.view_count(); ++v) {
        out.push_back(network.evidence(v, batch.views[v]));
    }
    return out;
}

Predictions fuse_predictions(std::span<const Matrix> evidence, FusionMethod method, double lambda)
{
    if (evidence.empty()) {
        throw std::invalid_argument("no modality evidence");
    }
    const std::size_t n = evidence.front().rows();
    Predictions p;
    p.predicted.reserve(n);
    p.uncertainty.reserve(n);
    std::vector<SubjectiveOpinion> opinions;
    for (std::size_t i = 0; i < n; ++i) {
        opinions.clear();
        for (const auto& e : evidence) {
            const auto row = e.row(i);
            opinions.push_back(opinion_from_evidence(EvidenceVector(std::vector<double>(row.begin(), row.end()))));
        }
        const SubjectiveOpinion fused = fuse(method, opinions, lambda);
        const auto probs = projected_probabilities(fused).probs;
        p.predicted.push_back(static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
        p.uncertainty.push_back(fused.uncertainty());
    }
    return p;
}

Predictions predict(const EvidentialNetwork& network, const MultimodalBatch& batch, FusionMethod method, double lambda)
{
    const auto evidence = view_evidence(network, batch);
    return fuse_predictions(evidence, method, lambda);
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> labels)
{
    if (predicted.size() != labels.size() || labels.empty()) {
        throw std::invalid_argument("accuracy needs equally sized, non-empty prediction and label lists");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hits += predicted[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

MeanStd mean_std(std::span<const double> values)
{
    MeanStd out;
    if (values.empty()) {
        return out;
    }
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : values) {
        ss += (x - out.mean) * (x - out.mean);
    }
    out.std = std::sqrt(ss / n);
    return out;
}

Evaluation evaluate(const EvidentialNetwork& network, const MultimodalBatch& clean, const MultimodalBatch& conflicted,
                    FusionMethod method, double lambda)
{
    if (clean.samples() != conflicted.samples() || clean.labels != conflicted.labels) {
        throw std::invalid_argument("conflict set must be a modified copy of the clean set");
    }
    const Predictions a = predict(network, clean, method, lambda);
    const Predictions b = predict(network, conflicted, method, lambda);

    Evaluation e;
    e.accuracy_clean = accuracy(a.predicted, clean.labels);
    e.accuracy_conflict = accuracy(b.predicted, conflicted.labels);
    e.uncertainty_clean = mean_std(a.uncertainty);
    e.uncertainty_conflict = mean_std(b.uncertainty);

    std::vector<double> scores = a.uncertainty;
    std::vector<bool> flags(a.uncertainty.size(), false);
    for (std::size_t i = 0; i < b.uncertainty.size(); ++i) {
        if (conflicted.conflict.empty() || conflicted.conflict[i]) {
            scores.push_back(b.uncertainty[i]);
            flags.push_back(true);
        }
    }
    e.auc = roc_auc(scores, flags);
    e.clean_scores = a.uncertainty;
    e.conflict_scores = b.uncertainty;
    return e;
}

}  // namespace evfusion
