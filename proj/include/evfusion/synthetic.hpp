#pragma once

#include <cstdint>
#include <vector>

#include "evfusion/config.hpp"
#include "evfusion/dataset.hpp"

namespace evfusion {

/// Class-conditional Gaussian clusters per modality. dims, separation and noise hold one entry per
/// modality; a single entry is broadcast to all of them.
struct SyntheticSpec {
    std::size_t classes = 4;
    std::size_t views = 3;
    std::vector<std::size_t> dims{8};
    std::vector<double> separation{6.0};
    std::vector<double> noise{1.0};
    std::size_t samples = 2000;
    std::uint64_t seed = 0;

    std::size_t dim(std::size_t v) const;
    double separation_of(std::size_t v) const;
    double noise_of(std::size_t v) const;

    /// Throws std::invalid_argument for K < 2, V < 1, separation <= 0, noise < 0 or bad list lengths.
    void validate() const;
};

/// Reads classes, views, dims, separation, noise, samples and `seed_key` from `cfg`.
SyntheticSpec synthetic_spec_from(const KeyValueConfig& cfg, const std::string& seed_key = "seed");

struct TrainTestSplit {
    MultimodalBatch train;
    MultimodalBatch test;
};

struct SyntheticData {
    TrainTestSplit split;
    /// centers[v] is K x d_v.
    std::vector<Matrix> centers;
};

/// Balanced labels, centers scaled so the closest pair sits exactly `separation` apart,
/// samples = center + noise * N(0, I). Stratified 80/20 split.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Per class, the first round(train_fraction * n_c) rows of a seeded shuffle go to train.
TrainTestSplit split_stratified(const MultimodalBatch& batch, double train_fraction, std::uint64_t seed);

/// Replaces one uniformly chosen modality in round(rate * N) samples (a seeded shuffle prefix) with the
/// same modality of a uniformly drawn sample of a different class. Labels are kept.
MultimodalBatch inject_conflict(const MultimodalBatch& batch, double rate, std::uint64_t seed);

/// Per-column affine map to zero mean and unit variance, fitted on one batch and applied to others.
class Standardizer {
public:
    static Standardizer fit(const MultimodalBatch& batch);
    void apply(MultimodalBatch& batch) const;

    const std::vector<std::vector<double>>& means() const noexcept { return mean_; }
    const std::vector<std::vector<double>>& scales() const noexcept { return scale_; }

private:
    std::vector<std::vector<double>> mean_;
    std::vector<std::vector<double>> scale_;
};

}  // namespace evfusion
