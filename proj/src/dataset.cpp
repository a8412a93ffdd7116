#include "evfusion/dataset.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace evfusion {

std::vector<std::size_t> MultimodalBatch::dims() const
{
    std::vector<std::size_t> d;
    d.reserve(views.size());
    for (const auto& v : views) {
        d.push_back(v.cols());
    }
    return d;
}

Matrix MultimodalBatch::one_hot() const
{
    Matrix y(samples(), classes, 0.0);
    for (std::size_t n = 0; n < samples(); ++n) {
        y(n, labels[n]) = 1.0;
    }
    return y;
}

MultimodalBatch MultimodalBatch::subset(std::span<const std::size_t> rows) const
{
    MultimodalBatch out;
    out.classes = classes;
    out.views.reserve(views.size());
    for (const auto& v : views) {
        Matrix m(rows.size(), v.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto src = v.row(rows[i]);
            std::copy(src.begin(), src.end(), m.row(i).begin());
        }
        out.views.push_back(std::move(m));
    }
    out.labels.reserve(rows.size());
    out.conflict.reserve(rows.size());
    for (std::size_t r : rows) {
        out.labels.push_back(labels.at(r));
        out.conflict.push_back(conflict.empty() ? false : conflict.at(r));
    }
    return out;
}

void MultimodalBatch::validate() const
{
    if (views.empty()) {
        throw std::invalid_argument("batch has no modalities");
    }
    if (classes < 1) {
        throw std::invalid_argument("batch has no classes");
    }
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (views[v].rows() != labels.size()) {
            std::ostringstream os;
            os << "modality " << v << " has " << views[v].rows() << " rows, labels have " << labels.size();
            throw std::invalid_argument(os.str());
        }
    }
    for (std::size_t n = 0; n < labels.size(); ++n) {
        if (labels[n] >= classes) {
            std::ostringstream os;
            os << "label " << labels[n] << " at row " << n << " is outside [0, " << classes << ")";
            throw std::invalid_argument(os.str());
        }
    }
    if (!conflict.empty() && conflict.size() != labels.size()) {
        throw std::invalid_argument("conflict flag count differs from sample count");
    }
}

}  // namespace evfusion
