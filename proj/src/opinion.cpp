#include "evfusion/opinion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace evfusion {

namespace {

double sum(std::span<const double> v)
{
    return std::accumulate(v.begin(), v.end(), 0.0);
}

[[noreturn]] void throw_invalid(const ValidationResult& r)
{
    throw std::domain_error("invalid opinion: " + r.message());
}

}  // namespace

std::vector<double> uniform_base_rates(std::size_t classes)
{
    if (classes == 0) {
        throw std::domain_error("opinion needs at least one class");
    }
    return std::vector<double>(classes, 1.0 / static_cast<double>(classes));
}

SubjectiveOpinion::SubjectiveOpinion(std::vector<double> beliefs, double uncertainty)
    : SubjectiveOpinion(beliefs, uncertainty, uniform_base_rates(beliefs.empty() ? 1 : beliefs.size()))
{
}

SubjectiveOpinion::SubjectiveOpinion(std::vector<double> beliefs, double uncertainty, std::vector<double> base_rates)
    : beliefs_(std::move(beliefs)), uncertainty_(uncertainty), base_rates_(std::move(base_rates))
{
    if (const auto r = validate_opinion(beliefs_, uncertainty_, base_rates_); !r.ok()) {
        throw_invalid(r);
    }

    const double total = sum(beliefs_) + uncertainty_;
    if (total != 1.0 && std::abs(total - 1.0) <= kRenormalizeTolerance) {
        for (auto& b : beliefs_) {
            b /= total;
        }
        uncertainty_ /= total;
    }
    const double rates = sum(base_rates_);
    if (rates != 1.0 && std::abs(rates - 1.0) <= kRenormalizeTolerance) {
        for (auto& a : base_rates_) {
            a /= rates;
        }
    }
}

SubjectiveOpinion SubjectiveOpinion::vacuous(std::size_t classes)
{
    return SubjectiveOpinion(std::vector<double>(classes, 0.0), 1.0, uniform_base_rates(classes));
}

EvidenceVector::EvidenceVector(std::vector<double> evidence) : evidence_(std::move(evidence))
{
    if (evidence_.empty()) {
        throw std::domain_error("evidence vector needs at least one class");
    }
    for (std::size_t k = 0; k < evidence_.size(); ++k) {
        if (!std::isfinite(evidence_[k]) || evidence_[k] < 0.0) {
            std::ostringstream os;
            os << "evidence must be finite and non-negative, got " << evidence_[k] << " for class " << k;
            throw std::domain_error(os.str());
        }
    }
}

std::vector<double> EvidenceVector::alphas() const
{
    std::vector<double> out(evidence_.size());
    std::transform(evidence_.begin(), evidence_.end(), out.begin(), [](double e) { return e + 1.0; });
    return out;
}

double EvidenceVector::strength() const noexcept
{
    return sum(evidence_) + static_cast<double>(evidence_.size());
}

SubjectiveOpinion opinion_from_evidence(const EvidenceVector& evidence, std::span<const double> base_rates)
{
    const std::size_t k = evidence.classes();
    const double strength = evidence.strength();
    std::vector<double> beliefs(k);
    for (std::size_t i = 0; i < k; ++i) {
        beliefs[i] = evidence[i] / strength;
    }
    const double u = static_cast<double>(k) / strength;
    if (base_rates.empty()) {
        return SubjectiveOpinion(std::move(beliefs), u);
    }
    return SubjectiveOpinion(std::move(beliefs), u, std::vector<double>(base_rates.begin(), base_rates.end()));
}

EvidenceVector evidence_from_opinion(const SubjectiveOpinion& opinion)
{
    if (opinion.uncertainty() <= 0.0) {
        throw DogmaticOpinionError();
    }
    const double strength = static_cast<double>(opinion.classes()) / opinion.uncertainty();
    std::vector<double> e(opinion.classes());
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = opinion.belief(i) * strength;
    }
    return EvidenceVector(std::move(e));
}

ProjectedDistribution projected_probabilities(const SubjectiveOpinion& opinion)
{
    ProjectedDistribution p;
    p.probs.resize(opinion.classes());
    const auto b = opinion.beliefs();
    const auto a = opinion.base_rates();
    for (std::size_t k = 0; k < p.probs.size(); ++k) {
        p.probs[k] = b[k] + a[k] * opinion.uncertainty();
    }
    return p;
}

std::string ValidationResult::message() const
{
    std::ostringstream os;
    switch (violation) {
    case Violation::none: return "ok";
    case Violation::empty: os << "no classes"; break;
    case Violation::non_finite: os << "non-finite value"; break;
    case Violation::negative_belief: os << "negative belief"; break;
    case Violation::belief_above_one: os << "belief above 1"; break;
    case Violation::uncertainty_out_of_range: os << "uncertainty outside [0,1]"; break;
    case Violation::additivity: os << "additivity residual"; break;
    case Violation::base_rate_size: os << "base rate count differs from belief count"; break;
    case Violation::base_rate_out_of_range: os << "base rate outside [0,1]"; break;
    case Violation::base_rate_sum: os << "base rate sum residual"; break;
    }
    if (index) {
        os << " at class " << *index;
    }
    os << " (" << residual << ")";
    return os.str();
}

ValidationResult validate_opinion(std::span<const double> beliefs, double uncertainty,
                                  std::span<const double> base_rates)
{
    if (beliefs.empty()) {
        return {Violation::empty, std::nullopt, 0.0};
    }
    if (!std::isfinite(uncertainty)) {
        return {Violation::non_finite, std::nullopt, uncertainty};
    }
    for (std::size_t k = 0; k < beliefs.size(); ++k) {
        if (!std::isfinite(beliefs[k])) {
            return {Violation::non_finite, k, beliefs[k]};
        }
        if (beliefs[k] < 0.0) {
            return {Violation::negative_belief, k, beliefs[k]};
        }
        if (beliefs[k] > 1.0) {
            return {Violation::belief_above_one, k, beliefs[k]};
        }
    }
    if (uncertainty < 0.0 || uncertainty > 1.0) {
        return {Violation::uncertainty_out_of_range, std::nullopt, uncertainty};
    }
    if (const double r = std::abs(sum(beliefs) + uncertainty - 1.0); r > kInvariantTolerance) {
        return {Violation::additivity, std::nullopt, r};
    }
    if (base_rates.empty()) {
        return {};
    }
    if (base_rates.size() != beliefs.size()) {
        return {Violation::base_rate_size, std::nullopt, static_cast<double>(base_rates.size())};
    }
    for (std::size_t k = 0; k < base_rates.size(); ++k) {
        if (!std::isfinite(base_rates[k]) || base_rates[k] < 0.0 || base_rates[k] > 1.0) {
            return {Violation::base_rate_out_of_range, k, base_rates[k]};
        }
    }
    if (const double r = std::abs(sum(base_rates) - 1.0); r > kInvariantTolerance) {
        return {Violation::base_rate_sum, std::nullopt, r};
    }
    return {};
}

ValidationResult validate_opinion(const SubjectiveOpinion& opinion)
{
    return validate_opinion(opinion.beliefs(), opinion.uncertainty(), opinion.base_rates());
}

nlohmann::json opinion_to_json(const SubjectiveOpinion& opinion)
{
    return {
        {"beliefs", std::vector<double>(opinion.beliefs().begin(), opinion.beliefs().end())},
        {"uncertainty", opinion.uncertainty()},
        {"base_rates", std::vector<double>(opinion.base_rates().begin(), opinion.base_rates().end())},
    };
}

SubjectiveOpinion opinion_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("beliefs") || !j.contains("uncertainty")) {
        throw std::invalid_argument("opinion JSON needs \"beliefs\" and \"uncertainty\"");
    }
    auto beliefs = j.at("beliefs").get<std::vector<double>>();
    const double u = j.at("uncertainty").get<double>();
    if (j.contains("base_rates") && !j.at("base_rates").is_null()) {
        return SubjectiveOpinion(std::move(beliefs), u, j.at("base_rates").get<std::vector<double>>());
    }
    return SubjectiveOpinion(std::move(beliefs), u);
}

}  // namespace evfusion
