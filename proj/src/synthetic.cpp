#include "evfusion/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace evfusion {

namespace {

template <typename T>
const T& broadcast(const std::vector<T>& values, std::size_t v)
{
    return values.size() == 1 ? values.front() : values.at(v);
}

// Independent engines per purpose so adding one draw never shifts another stream.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

Matrix draw_centers(std::size_t classes, std::size_t dim, double separation, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    Matrix c(classes, dim);
    double closest = 0.0;
    // A degenerate draw (two coincident centers) is astronomically unlikely; redraw if it happens.
    while (!(closest > 1e-9)) {
        for (auto& x : c.data()) {
            x = normal(rng);
        }
        closest = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < classes; ++p) {
            for (std::size_t q = p + 1; q < classes; ++q) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < dim; ++j) {
                    const double diff = c(p, j) - c(q, j);
                    d2 += diff * diff;
                }
                closest = std::min(closest, std::sqrt(d2));
            }
        }
    }
    const double scale = separation / closest;
    for (auto& x : c.data()) {
        x *= scale;
    }
    return c;
}

}  // namespace

std::size_t SyntheticSpec::dim(std::size_t v) const
{
    return broadcast(dims, v);
}

double SyntheticSpec::separation_of(std::size_t v) const
{
    return broadcast(separation, v);
}

double SyntheticSpec::noise_of(std::size_t v) const
{
    return broadcast(noise, v);
}

void SyntheticSpec::validate() const
{
    if (classes < 2) {
        throw std::invalid_argument("synthetic data needs at least 2 classes");
    }
    if (views < 1) {
        throw std::invalid_argument("synthetic data needs at least 1 modality");
    }
    const auto check_len = [&](std::size_t n, const char* name) {
        if (n != 1 && n != views) {
            std::ostringstream os;
            os << name << " must list 1 or " << views << " values, got " << n;
            throw std::invalid_argument(os.str());
        }
    };
    check_len(dims.size(), "dims");
    check_len(separation.size(), "separation");
    check_len(noise.size(), "noise");
    for (std::size_t v = 0; v < views; ++v) {
        if (dim(v) < 1) {
            throw std::invalid_argument("modality dimension must be positive");
        }
        if (!(separation_of(v) > 0.0) || !std::isfinite(separation_of(v))) {
            throw std::invalid_argument("separation must be positive");
        }
        if (!(noise_of(v) >= 0.0) || !std::isfinite(noise_of(v))) {
            throw std::invalid_argument("noise must be non-negative");
        }
    }
    if (samples < classes) {
        throw std::invalid_argument("need at least one sample per class");
    }
}

SyntheticSpec synthetic_spec_from(const KeyValueConfig& cfg, const std::string& seed_key)
{
    SyntheticSpec s;
    s.classes = cfg.get_size("classes", s.classes);
    s.views = cfg.get_size("views", s.views);
    const auto dims = cfg.get_u64s("dims", {s.dims.begin(), s.dims.end()});
    s.dims.assign(dims.begin(), dims.end());
    s.separation = cfg.get_doubles("separation", s.separation);
    s.noise = cfg.get_doubles("noise", s.noise);
    s.samples = cfg.get_size("samples", s.samples);
    s.seed = cfg.get_u64(seed_key, s.seed);
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.source() + ": " + e.what());
    }
    return s;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    SyntheticData out;
    MultimodalBatch all;
    all.classes = spec.classes;

    auto label_rng = stream(spec.seed, 0);
    all.labels.resize(spec.samples);
    for (std::size_t n = 0; n < spec.samples; ++n) {
        all.labels[n] = n % spec.classes;
    }
    std::shuffle(all.labels.begin(), all.labels.end(), label_rng);
    all.conflict.assign(spec.samples, false);

    for (std::size_t v = 0; v < spec.views; ++v) {
        auto rng = stream(spec.seed, 1 + v);
        const std::size_t d = spec.dim(v);
        out.centers.push_back(draw_centers(spec.classes, d, spec.separation_of(v), rng));
        const Matrix& centers = out.centers.back();
        std::normal_distribution<double> normal;
        Matrix x(spec.samples, d);
        for (std::size_t n = 0; n < spec.samples; ++n) {
            for (std::size_t j = 0; j < d; ++j) {
                x(n, j) = centers(all.labels[n], j) + spec.noise_of(v) * normal(rng);
            }
        }
        all.views.push_back(std::move(x));
    }
    out.split = split_stratified(all, 0.8, spec.seed);
    return out;
}

TrainTestSplit split_stratified(const MultimodalBatch& batch, double train_fraction, std::uint64_t seed)
{
    batch.validate();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    }
    auto rng = stream(seed, 1000);
    std::vector<std::vector<std::size_t>> by_class(batch.classes);
    for (std::size_t n = 0; n < batch.samples(); ++n) {
        by_class[batch.labels[n]].push_back(n);
    }
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (auto& rows : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
        train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
        test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {batch.subset(train_rows), batch.subset(test_rows)};
}

MultimodalBatch inject_conflict(const MultimodalBatch& batch, double rate, std::uint64_t seed)
{
    batch.validate();
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw std::invalid_argument("conflict rate must lie in [0, 1]");
    }
    MultimodalBatch out = batch;
    const std::size_t n = batch.samples();
    out.conflict.assign(n, false);

    std::vector<std::vector<std::size_t>> by_class(batch.classes);
    for (std::size_t i = 0; i < n; ++i) {
        by_class[batch.labels[i]].push_back(i);
    }
    for (std::size_t k = 0; k < batch.classes; ++k) {
        if (by_class[k].size() == 1) {
            std::ostringstream os;
            os << "class " << k << " has a single sample; conflict injection needs at least 2 per class";
            throw std::invalid_argument(os.str());
        }
    }
    const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
    if (count == 0) {
        return out;
    }

    auto rng = stream(seed, 2000);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::size_t> pick_view(0, batch.view_count() - 1);

    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t i = order[s];
        const std::size_t own = batch.labels[i];
        const std::size_t others = n - by_class[own].size();
        if (others == 0) {
            throw std::invalid_argument("conflict injection needs samples from at least 2 classes");
        }
        // Index into the concatenation of every other class's rows.
        std::size_t r = std::uniform_int_distribution<std::size_t>(0, others - 1)(rng);
        std::size_t donor = 0;
        for (std::size_t k = 0; k < batch.classes; ++k) {
            if (k == own) {
                continue;
            }
            if (r < by_class[k].size()) {
                donor = by_class[k][r];
                break;
            }
            r -= by_class[k].size();
        }
        const std::size_t v = pick_view(rng);
        const auto src = batch.views[v].row(donor);
        std::copy(src.begin(), src.end(), out.views[v].row(i).begin());
        out.conflict[i] = true;
    }
    return out;
}

Standardizer Standardizer::fit(const MultimodalBatch& batch)
{
    batch.validate();
    if (batch.samples() == 0) {
        throw std::invalid_argument("cannot fit standardization on an empty batch");
    }
    Standardizer s;
    const double n = static_cast<double>(batch.samples());
    for (const auto& x : batch.views) {
        std::vector<double> mean(x.cols(), 0.0);
        std::vector<double> scale(x.cols(), 0.0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                mean[j] += x(i, j);
            }
        }
        for (double& m : mean) {
            m /= n;
        }
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                const double d = x(i, j) - mean[j];
                scale[j] += d * d;
            }
        }
        for (double& sd : scale) {
            sd = std::sqrt(sd / n);
            // Constant columns are centred only.
            if (!(sd > 0.0)) {
                sd = 1.0;
            }
        }
        s.mean_.push_back(std::move(mean));
        s.scale_.push_back(std::move(scale));
    }
    return s;
}

void Standardizer::apply(MultimodalBatch& batch) const
{
    if (batch.view_count() != mean_.size()) {
        throw std::invalid_argument("standardizer was fitted on a different modality count");
    }
    for (std::size_t v = 0; v < batch.view_count(); ++v) {
        Matrix& x = batch.views[v];
        if (x.cols() != mean_[v].size()) {
            throw std::invalid_argument("standardizer was fitted on a different feature dimension");
        }
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                x(i, j) = (x(i, j) - mean_[v][j]) / scale_[v][j];
            }
        }
    }
}

}  // namespace evfusion
