#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evfusion/matrix.hpp"

namespace evfusion {

/// Aligned samples from V modalities: views[v] is N x d_v, labels are class ids in [0, classes).
struct MultimodalBatch {
    std::vector<Matrix> views;
    std::vector<std::size_t> labels;
    std::size_t classes = 0;
    /// True where a modality was replaced by one from a different class.
    std::vector<bool> conflict;

    std::size_t samples() const noexcept { return labels.size(); }
    std::size_t view_count() const noexcept { return views.size(); }
    std::vector<std::size_t> dims() const;

    /// N x K one-hot label matrix.
    Matrix one_hot() const;
    /// Rows `rows` of every view, in order.
    MultimodalBatch subset(std::span<const std::size_t> rows) const;
    /// Throws std::invalid_argument on ragged views, bad labels or a flag count mismatch.
    void validate() const;
};

}  // namespace evfusion
