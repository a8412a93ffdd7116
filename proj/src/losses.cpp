#include "evfusion/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evfusion/special.hpp"

namespace evfusion {

namespace {

void check_label(std::span<const double> alpha, std::span<const double> one_hot)
{
    if (alpha.empty() || alpha.size() != one_hot.size()) {
        throw std::invalid_argument("label and Dirichlet parameters must have the same non-zero length");
    }
    std::size_t hot = 0;
    for (double y : one_hot) {
        if (y == 1.0) {
            ++hot;
        } else if (y != 0.0) {
            throw std::invalid_argument("label is not one-hot: entries must be 0 or 1");
        }
    }
    if (hot != 1) {
        throw std::invalid_argument("label is not one-hot: exactly one entry must be 1");
    }
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (!(alpha[k] >= 1.0) || !std::isfinite(alpha[k])) {
            std::ostringstream os;
            os << "Dirichlet parameter alpha[" << k << "] = " << alpha[k] << " must be >= 1";
            throw std::domain_error(os.str());
        }
    }
}

}  // namespace

double loss_ace(std::span<const double> alpha, std::span<const double> one_hot)
{
    check_label(alpha, one_hot);
    double strength = 0.0;
    for (double a : alpha) {
        strength += a;
    }
    const double psi_s = digamma(strength);
    double loss = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (one_hot[k] != 0.0) {
            loss += one_hot[k] * (psi_s - digamma(alpha[k]));
        }
    }
    return loss;
}

double loss_kl(std::span<const double> alpha, std::span<const double> one_hot)
{
    check_label(alpha, one_hot);
    const std::size_t k = alpha.size();
    std::vector<double> tilde(k);
    double strength = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        tilde[j] = one_hot[j] + (1.0 - one_hot[j]) * alpha[j];
        strength += tilde[j];
    }
    const double psi_s = digamma(strength);
    double loss = lgamma(strength) - lgamma(static_cast<double>(k));
    for (std::size_t j = 0; j < k; ++j) {
        loss -= lgamma(tilde[j]);
        loss += (tilde[j] - 1.0) * (digamma(tilde[j]) - psi_s);
    }
    return loss;
}

double annealing_coef(std::size_t epoch, std::size_t step)
{
    if (step < 1) {
        throw std::domain_error("annealing step must be at least 1");
    }
    return std::min(1.0, static_cast<double>(epoch) / static_cast<double>(step));
}

double loss_consistency(std::span<const SubjectiveOpinion> opinions)
{
    if (opinions.size() < 2) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t p = 0; p < opinions.size(); ++p) {
        for (std::size_t q = p + 1; q < opinions.size(); ++q) {
            total += 2.0 * degree_of_conflict(opinions[p], opinions[q]).degree;
        }
    }
    return total / static_cast<double>(opinions.size() - 1);
}

namespace ad {

BatchOpinion batch_opinion(Var evidence)
{
    const double k = static_cast<double>(evidence.cols());
    BatchOpinion o;
    o.evidence = evidence;
    o.strength = row_sum(evidence) + k;
    o.beliefs = evidence / o.strength;
    o.uncertainty = k / o.strength;
    return o;
}

Var batch_loss_ace(Var alpha, Var one_hot)
{
    const Var strength = row_sum(alpha);
    return row_sum(one_hot * (digamma(strength) - digamma(alpha)));
}

Var batch_loss_kl(Var alpha, Var one_hot)
{
    const double k = static_cast<double>(alpha.cols());
    const Var tilde = one_hot + (1.0 - one_hot) * alpha;
    const Var strength = row_sum(tilde);
    const Var log_norm = lgamma(strength) - evfusion::lgamma(k) - row_sum(lgamma(tilde));
    return log_norm + row_sum((tilde - 1.0) * (digamma(tilde) - digamma(strength)));
}

Var batch_loss_consistency(std::span<const BatchOpinion> views)
{
    if (views.empty()) {
        throw std::invalid_argument("consistency loss needs at least one view");
    }
    Tape& tape = *views.front().evidence.tape();
    const std::size_t n = views.front().evidence.rows();
    if (views.size() < 2) {
        return tape.constant(Matrix(n, 1, 0.0));
    }
    const double base_rate = 1.0 / static_cast<double>(views.front().evidence.cols());
    std::vector<Var> projected;
    projected.reserve(views.size());
    for (const auto& v : views) {
        projected.push_back(v.beliefs + v.uncertainty * base_rate);
    }
    Var total;
    for (std::size_t p = 0; p < views.size(); ++p) {
        for (std::size_t q = p + 1; q < views.size(); ++q) {
            const Var distance = 0.5 * row_sum(abs(projected[p] - projected[q]));
            const Var certainty = (1.0 - views[p].uncertainty) * (1.0 - views[q].uncertainty);
            const Var dc = distance * certainty;
            total = total.valid() ? total + dc : dc;
        }
    }
    // Ordered pairs count each unordered pair twice.
    return total * (2.0 / static_cast<double>(views.size() - 1));
}

namespace {

Var fold_bcf(std::span<const BatchOpinion> views)
{
    const double k = static_cast<double>(views.front().evidence.cols());
    Var b = views.front().beliefs;
    Var u = views.front().uncertainty;
    for (std::size_t v = 1; v < views.size(); ++v) {
        const Var& b2 = views[v].beliefs;
        const Var& u2 = views[v].uncertainty;
        const Var combined = b * b2 + b * u2 + b2 * u;
        const Var uu = u * u2;
        const Var normalizer = row_sum(combined) + uu;
        b = combined / normalizer;
        u = uu / normalizer;
    }
    return k * b / u;
}

Var discounted_average(std::span<const BatchOpinion> views, double lambda)
{
    const std::size_t count = views.size();
    const double k = static_cast<double>(views.front().evidence.cols());
    const double base_rate = 1.0 / k;

    std::vector<Var> projected;
    projected.reserve(count);
    for (const auto& v : views) {
        projected.push_back(v.beliefs + v.uncertainty * base_rate);
    }

    // agreement[p][q] for p != q, each N x 1.
    std::vector<std::vector<Var>> agreement(count, std::vector<Var>(count));
    for (std::size_t p = 0; p < count; ++p) {
        for (std::size_t q = p + 1; q < count; ++q) {
            const Var distance = 0.5 * row_sum(abs(projected[p] - projected[q]));
            const Var conflict = distance * ((1.0 - views[p].uncertainty) * (1.0 - views[q].uncertainty));
            const Var a = lambda == 1.0 ? 1.0 - conflict : pow(1.0 - pow(conflict, lambda), 1.0 / lambda);
            agreement[p][q] = a;
            agreement[q][p] = a;
        }
    }

    Var total;
    for (std::size_t v = 0; v < count; ++v) {
        Var eta;
        for (std::size_t q = 0; q < count; ++q) {
            if (q != v) {
                eta = eta.valid() ? eta * agreement[v][q] : agreement[v][q];
            }
        }
        // Discounted opinion (eta b, 1 - eta + eta u) mapped back to evidence K b' / u'.
        const Var u_discounted = 1.0 - eta + eta * views[v].uncertainty;
        const Var e = k * (eta * views[v].beliefs) / u_discounted;
        total = total.valid() ? total + e : e;
    }
    return total / static_cast<double>(count);
}

}  // namespace

Var fuse_evidence(FusionMethod method, std::span<const BatchOpinion> views, double lambda)
{
    if (views.empty()) {
        throw std::invalid_argument("fusion needs at least one view");
    }
    if (views.size() == 1) {
        return views.front().evidence;
    }
    switch (method) {
    case FusionMethod::gbaf:
    case FusionMethod::cbf: {
        Var total = views.front().evidence;
        for (std::size_t v = 1; v < views.size(); ++v) {
            total = total + views[v].evidence;
        }
        return method == FusionMethod::cbf ? total : total / static_cast<double>(views.size());
    }
    case FusionMethod::baf: {
        Var acc = views.front().evidence;
        for (std::size_t v = 1; v < views.size(); ++v) {
            acc = 0.5 * (acc + views[v].evidence);
        }
        return acc;
    }
    case FusionMethod::bcf: return fold_bcf(views);
    case FusionMethod::dbf:
        if (!(lambda > 0.0)) {
            throw std::domain_error("agreement lambda must be positive");
        }
        return discounted_average(views, lambda);
    }
    throw std::invalid_argument("unknown fusion method");
}

}  // namespace ad

}  // namespace evfusion
