#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "evfusion/autodiff.hpp"
#include "evfusion/matrix.hpp"
#include "evfusion/opinion.hpp"

namespace evfusion {

/// Two fully connected layers for one modality: rectifier hidden layer, capped exponential output.
struct ViewParameters {
    Matrix w1;  // d x h
    Matrix b1;  // 1 x h
    Matrix w2;  // h x K
    Matrix b2;  // 1 x K
};

/// One evidential classifier per modality. Output evidence lies in [0, kEvidenceCap].
class EvidentialNetwork {
public:
    EvidentialNetwork() = default;

    /// Uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases, seeded.
    static EvidentialNetwork initialize(std::span<const std::size_t> input_dims, std::size_t classes,
                                        std::size_t hidden, std::uint64_t seed);

    std::size_t classes() const noexcept { return classes_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t view_count() const noexcept { return views_.size(); }
    std::vector<std::size_t> input_dims() const;

    ViewParameters& view(std::size_t v) { return views_.at(v); }
    const ViewParameters& view(std::size_t v) const { return views_.at(v); }

    /// All parameter matrices in a fixed order (w1, b1, w2, b2 per view).
    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    std::size_t parameter_count() const;

    /// N x K evidence for modality `v` from an N x d_v feature matrix.
    Matrix evidence(std::size_t v, const Matrix& features) const;
    /// Per-modality opinions (uniform base rates) for sample `row`.
    std::vector<SubjectiveOpinion> opinions(std::span<const Matrix> views, std::size_t row) const;

    nlohmann::json to_json() const;
    static EvidentialNetwork from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static EvidentialNetwork load(const std::filesystem::path& path);

private:
    std::size_t classes_ = 0;
    std::size_t hidden_ = 0;
    std::vector<ViewParameters> views_;
};

namespace ad {

/// Network parameters recorded as tape variables for one forward/backward pass.
struct BoundNetwork {
    std::vector<Var> parameters;  // same order as EvidentialNetwork::parameters()

    /// Evidence node for modality `v` given an N x d_v feature node.
    Var evidence(std::size_t v, Var features) const;
};

BoundNetwork bind(Tape& tape, const EvidentialNetwork& network);

}  // namespace ad

}  // namespace evfusion
