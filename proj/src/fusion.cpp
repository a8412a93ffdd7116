#include "evfusion/fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace evfusion {

namespace {

void require_same_classes(std::span<const SubjectiveOpinion> opinions)
{
    if (opinions.empty()) {
        throw std::domain_error("fusion needs at least one opinion");
    }
    const std::size_t k = opinions.front().classes();
    for (std::size_t v = 1; v < opinions.size(); ++v) {
        if (opinions[v].classes() != k) {
            std::ostringstream os;
            os << "opinion " << v << " has " << opinions[v].classes() << " classes, expected " << k;
            throw std::domain_error(os.str());
        }
    }
}

void require_same_classes(const SubjectiveOpinion& a, const SubjectiveOpinion& b)
{
    if (a.classes() != b.classes()) {
        std::ostringstream os;
        os << "class count mismatch: " << a.classes() << " vs " << b.classes();
        throw std::domain_error(os.str());
    }
}

std::vector<double> mean_base_rates(std::span<const SubjectiveOpinion> opinions)
{
    std::vector<double> a(opinions.front().classes(), 0.0);
    for (const auto& o : opinions) {
        for (std::size_t k = 0; k < a.size(); ++k) {
            a[k] += o.base_rates()[k];
        }
    }
    for (auto& x : a) {
        x /= static_cast<double>(opinions.size());
    }
    return a;
}

/// Limit of the averaging/cumulative operators when some sources are dogmatic:
/// the dogmatic sources dominate and their beliefs are averaged.
SubjectiveOpinion dogmatic_limit(std::span<const SubjectiveOpinion> opinions)
{
    std::vector<double> b(opinions.front().classes(), 0.0);
    std::size_t count = 0;
    for (const auto& o : opinions) {
        if (!o.is_dogmatic()) {
            continue;
        }
        ++count;
        for (std::size_t k = 0; k < b.size(); ++k) {
            b[k] += o.beliefs()[k];
        }
    }
    for (auto& x : b) {
        x /= static_cast<double>(count);
    }
    return SubjectiveOpinion(std::move(b), 0.0, mean_base_rates(opinions));
}

bool any_dogmatic(std::span<const SubjectiveOpinion> opinions)
{
    return std::any_of(opinions.begin(), opinions.end(), [](const auto& o) { return o.is_dogmatic(); });
}

SubjectiveOpinion gbaf_reciprocal(std::span<const SubjectiveOpinion> opinions)
{
    const std::size_t k = opinions.front().classes();
    std::vector<double> b(k, 0.0);
    double weight_sum = 0.0;
    for (const auto& o : opinions) {
        const double w = 1.0 / o.uncertainty();
        weight_sum += w;
        for (std::size_t i = 0; i < k; ++i) {
            b[i] += w * o.beliefs()[i];
        }
    }
    for (auto& x : b) {
        x /= weight_sum;
    }
    const double u = static_cast<double>(opinions.size()) / weight_sum;
    return SubjectiveOpinion(std::move(b), u, mean_base_rates(opinions));
}

}  // namespace

std::string_view to_string(FusionMethod method) noexcept
{
    switch (method) {
    case FusionMethod::bcf: return "bcf";
    case FusionMethod::cbf: return "cbf";
    case FusionMethod::baf: return "baf";
    case FusionMethod::gbaf: return "gbaf";
    case FusionMethod::dbf: return "dbf";
    }
    return "unknown";
}

FusionMethod parse_fusion_method(std::string_view name)
{
    for (auto m : {FusionMethod::bcf, FusionMethod::cbf, FusionMethod::baf, FusionMethod::gbaf, FusionMethod::dbf}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw std::invalid_argument("unknown fusion method '" + std::string(name) + "' (expected bcf|cbf|baf|gbaf|dbf)");
}

ConflictDegree degree_of_conflict(const SubjectiveOpinion& first, const SubjectiveOpinion& second)
{
    require_same_classes(first, second);
    const auto p1 = projected_probabilities(first).probs;
    const auto p2 = projected_probabilities(second).probs;
    double l1 = 0.0;
    for (std::size_t k = 0; k < p1.size(); ++k) {
        l1 += std::abs(p1[k] - p2[k]);
    }
    ConflictDegree d;
    d.projected_distance = std::clamp(0.5 * l1, 0.0, 1.0);
    d.conjunctive_certainty = (1.0 - first.uncertainty()) * (1.0 - second.uncertainty());
    d.degree = d.projected_distance * d.conjunctive_certainty;
    return d;
}

SubjectiveOpinion fuse_baf_pair(const SubjectiveOpinion& first, const SubjectiveOpinion& second)
{
    require_same_classes(first, second);
    const std::array<SubjectiveOpinion, 2> pair{first, second};
    if (first.is_dogmatic() && second.is_dogmatic()) {
        return dogmatic_limit(pair);
    }
    const double u1 = first.uncertainty();
    const double u2 = second.uncertainty();
    const double denom = u1 + u2;
    std::vector<double> b(first.classes());
    for (std::size_t k = 0; k < b.size(); ++k) {
        b[k] = (first.beliefs()[k] * u2 + second.beliefs()[k] * u1) / denom;
    }
    return SubjectiveOpinion(std::move(b), 2.0 * u1 * u2 / denom, mean_base_rates(pair));
}

SubjectiveOpinion fuse_baf_sequential(std::span<const SubjectiveOpinion> opinions)
{
    if (opinions.size() < 2) {
        throw std::domain_error("sequential averaging fusion needs at least two opinions");
    }
    require_same_classes(opinions);
    SubjectiveOpinion acc = fuse_baf_pair(opinions[0], opinions[1]);
    for (std::size_t v = 2; v < opinions.size(); ++v) {
        acc = fuse_baf_pair(acc, opinions[v]);
    }
    return acc;
}

SubjectiveOpinion fuse_gbaf(std::span<const SubjectiveOpinion> opinions)
{
    require_same_classes(opinions);
    if (opinions.size() == 1) {
        return opinions.front();
    }
    if (any_dogmatic(opinions)) {
        return dogmatic_limit(opinions);
    }

    const std::size_t views = opinions.size();
    const std::size_t k = opinions.front().classes();
    std::vector<double> b(k, 0.0);
    double denom = 0.0;
    double all = 1.0;
    for (std::size_t v = 0; v < views; ++v) {
        double others = 1.0;
        for (std::size_t i = 0; i < views; ++i) {
            if (i != v) {
                others *= opinions[i].uncertainty();
            }
        }
        denom += others;
        all *= opinions[v].uncertainty();
        for (std::size_t j = 0; j < k; ++j) {
            b[j] += opinions[v].beliefs()[j] * others;
        }
    }
    // Products of many small uncertainties can underflow; the reciprocal form is the same quantity.
    if (!std::isnormal(denom) || !std::isnormal(all)) {
        return gbaf_reciprocal(opinions);
    }
    for (auto& x : b) {
        x /= denom;
    }
    return SubjectiveOpinion(std::move(b), static_cast<double>(views) * all / denom, mean_base_rates(opinions));
}

SubjectiveOpinion fuse_cbf(std::span<const SubjectiveOpinion> opinions)
{
    require_same_classes(opinions);
    if (opinions.size() == 1) {
        return opinions.front();
    }
    if (any_dogmatic(opinions)) {
        return dogmatic_limit(opinions);
    }
    std::vector<double> total(opinions.front().classes(), 0.0);
    for (const auto& o : opinions) {
        const auto e = evidence_from_opinion(o);
        for (std::size_t k = 0; k < total.size(); ++k) {
            total[k] += e[k];
        }
    }
    const auto rates = mean_base_rates(opinions);
    return opinion_from_evidence(EvidenceVector(std::move(total)), rates);
}

SubjectiveOpinion fuse_bcf(const SubjectiveOpinion& first, const SubjectiveOpinion& second)
{
    require_same_classes(first, second);
    const double u1 = first.uncertainty();
    const double u2 = second.uncertainty();
    std::vector<double> b(first.classes());
    double normalizer = u1 * u2;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double b1 = first.beliefs()[k];
        const double b2 = second.beliefs()[k];
        b[k] = b1 * b2 + b1 * u2 + b2 * u1;
        normalizer += b[k];
    }
    // normalizer == 1 - sum_{i != j} b1_i b2_j, accumulated from non-negative terms.
    if (normalizer < std::numeric_limits<double>::min()) {
        throw TotalConflictError();
    }
    for (auto& x : b) {
        x /= normalizer;
    }
    const std::array<SubjectiveOpinion, 2> pair{first, second};
    return SubjectiveOpinion(std::move(b), u1 * u2 / normalizer, mean_base_rates(pair));
}

SubjectiveOpinion fuse_bcf(std::span<const SubjectiveOpinion> opinions)
{
    require_same_classes(opinions);
    SubjectiveOpinion acc = opinions.front();
    for (std::size_t v = 1; v < opinions.size(); ++v) {
        acc = fuse_bcf(acc, opinions[v]);
    }
    return acc;
}

ConflictMatrix conflict_matrix(std::span<const SubjectiveOpinion> opinions)
{
    require_same_classes(opinions);
    const std::size_t views = opinions.size();
    ConflictMatrix c{SquareMatrix(views)};
    for (std::size_t i = 0; i < views; ++i) {
        for (std::size_t j = i + 1; j < views; ++j) {
            const double dc = degree_of_conflict(opinions[i], opinions[j]).degree;
            c.values(i, j) = dc;
            c.values(j, i) = dc;
        }
    }
    return c;
}

AgreementMatrix agreement_matrix(const ConflictMatrix& conflict, double lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::domain_error("agreement lambda must be a positive finite number");
    }
    const std::size_t views = conflict.values.size();
    AgreementMatrix a{SquareMatrix(views, 1.0), lambda};
    for (std::size_t i = 0; i < views; ++i) {
        for (std::size_t j = 0; j < views; ++j) {
            if (i == j) {
                continue;
            }
            const double c = conflict.values(i, j);
            a.values(i, j) = lambda == 1.0 ? 1.0 - c : std::pow(1.0 - std::pow(c, lambda), 1.0 / lambda);
        }
    }
    return a;
}

DiscountFactors discount_factors(const AgreementMatrix& agreement)
{
    const std::size_t views = agreement.values.size();
    DiscountFactors d{std::vector<double>(views, 1.0)};
    for (std::size_t v = 0; v < views; ++v) {
        for (double a : agreement.values.row(v)) {
            d.eta[v] *= a;
        }
    }
    return d;
}

SubjectiveOpinion discount_opinion(const SubjectiveOpinion& opinion, double eta)
{
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::domain_error("discount factor must lie in [0, 1]");
    }
    std::vector<double> b(opinion.beliefs().begin(), opinion.beliefs().end());
    for (auto& x : b) {
        x *= eta;
    }
    const double u = 1.0 - eta + eta * opinion.uncertainty();
    return SubjectiveOpinion(std::move(b), u, std::vector<double>(opinion.base_rates().begin(), opinion.base_rates().end()));
}

DbfResult fuse_dbf(std::span<const SubjectiveOpinion> opinions, double lambda)
{
    auto conflict = conflict_matrix(opinions);
    auto agreement = agreement_matrix(conflict, lambda);
    auto discounts = discount_factors(agreement);

    std::vector<SubjectiveOpinion> discounted;
    discounted.reserve(opinions.size());
    for (std::size_t v = 0; v < opinions.size(); ++v) {
        discounted.push_back(discount_opinion(opinions[v], discounts.eta[v]));
    }
    return {fuse_gbaf(discounted), std::move(conflict), std::move(agreement), std::move(discounts)};
}

SubjectiveOpinion fuse(FusionMethod method, std::span<const SubjectiveOpinion> opinions, double lambda)
{
    switch (method) {
    case FusionMethod::bcf: return fuse_bcf(opinions);
    case FusionMethod::cbf: return fuse_cbf(opinions);
    case FusionMethod::baf:
        require_same_classes(opinions);
        return opinions.size() == 1 ? opinions.front() : fuse_baf_sequential(opinions);
    case FusionMethod::gbaf: return fuse_gbaf(opinions);
    case FusionMethod::dbf: return fuse_dbf(opinions, lambda).fused;
    }
    throw std::invalid_argument("unknown fusion method");
}

nlohmann::json to_json(const SquareMatrix& m)
{
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

}  // namespace evfusion
