#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace evfusion {

/// Absolute tolerance for additivity and base-rate sums.
inline constexpr double kInvariantTolerance = 1e-9;
/// Residuals at or below this are renormalized away on construction.
inline constexpr double kRenormalizeTolerance = 1e-12;

/// Raised when an opinion with zero uncertainty is mapped to evidence.
class DogmaticOpinionError : public std::domain_error {
public:
    DogmaticOpinionError() : std::domain_error("dogmatic opinion: uncertainty is 0, evidence is unbounded") {}
};

/// Multinomial opinion over K classes: beliefs b, uncertainty u, base rates a.
/// Sum(b) + u = 1 and Sum(a) = 1 hold for every constructed value.
class SubjectiveOpinion {
public:
    /// Uniform base rates 1/K.
    SubjectiveOpinion(std::vector<double> beliefs, double uncertainty);
    SubjectiveOpinion(std::vector<double> beliefs, double uncertainty, std::vector<double> base_rates);

    /// u = 1, b = 0.
    static SubjectiveOpinion vacuous(std::size_t classes);

    std::size_t classes() const noexcept { return beliefs_.size(); }
    std::span<const double> beliefs() const noexcept { return beliefs_; }
    double belief(std::size_t k) const { return beliefs_.at(k); }
    double uncertainty() const noexcept { return uncertainty_; }
    std::span<const double> base_rates() const noexcept { return base_rates_; }

    bool is_dogmatic() const noexcept { return uncertainty_ == 0.0; }
    bool is_vacuous() const noexcept { return uncertainty_ == 1.0; }

    friend bool operator==(const SubjectiveOpinion&, const SubjectiveOpinion&) = default;

private:
    std::vector<double> beliefs_;
    double uncertainty_;
    std::vector<double> base_rates_;
};

/// Non-negative per-class evidence; alpha = e + 1, strength S = Sum(alpha).
class EvidenceVector {
public:
    explicit EvidenceVector(std::vector<double> evidence);

    std::size_t classes() const noexcept { return evidence_.size(); }
    std::span<const double> values() const noexcept { return evidence_; }
    double operator[](std::size_t k) const { return evidence_[k]; }
    double alpha(std::size_t k) const { return evidence_.at(k) + 1.0; }
    std::vector<double> alphas() const;
    double strength() const noexcept;

    friend bool operator==(const EvidenceVector&, const EvidenceVector&) = default;

private:
    std::vector<double> evidence_;
};

struct ProjectedDistribution {
    std::vector<double> probs;
};

std::vector<double> uniform_base_rates(std::size_t classes);

/// b_k = e_k / S, u = K / S. An empty base-rate span means uniform.
SubjectiveOpinion opinion_from_evidence(const EvidenceVector& evidence, std::span<const double> base_rates = {});

/// Inverse map S = K / u, e_k = b_k S. Throws DogmaticOpinionError when u = 0.
EvidenceVector evidence_from_opinion(const SubjectiveOpinion& opinion);

/// P_k = b_k + a_k u.
ProjectedDistribution projected_probabilities(const SubjectiveOpinion& opinion);

enum class Violation {
    none,
    empty,
    non_finite,
    negative_belief,
    belief_above_one,
    uncertainty_out_of_range,
    additivity,
    base_rate_size,
    base_rate_out_of_range,
    base_rate_sum,
};

struct ValidationResult {
    Violation violation = Violation::none;
    /// Offending index for per-class violations.
    std::optional<std::size_t> index;
    /// |observed - expected| for sum violations, the offending value otherwise.
    double residual = 0.0;

    bool ok() const noexcept { return violation == Violation::none; }
    std::string message() const;
};

/// Reports the first violated invariant. An empty base-rate span is treated as uniform.
ValidationResult validate_opinion(std::span<const double> beliefs, double uncertainty,
                                  std::span<const double> base_rates = {});
ValidationResult validate_opinion(const SubjectiveOpinion& opinion);

/// {"beliefs": [...], "uncertainty": u, "base_rates": [...]}; base_rates optional on input.
nlohmann::json opinion_to_json(const SubjectiveOpinion& opinion);
SubjectiveOpinion opinion_from_json(const nlohmann::json& j);

}  // namespace evfusion

namespace nlohmann {
template <>
struct adl_serializer<evfusion::SubjectiveOpinion> {
    static evfusion::SubjectiveOpinion from_json(const json& j) { return evfusion::opinion_from_json(j); }
    static void to_json(json& j, const evfusion::SubjectiveOpinion& o) { j = evfusion::opinion_to_json(o); }
};
}  // namespace nlohmann
