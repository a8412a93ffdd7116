#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evfusion/opinion.hpp"

namespace evfusion {

/// Raised by belief constraint fusion when the two sources fully contradict each other.
class TotalConflictError : public std::domain_error {
public:
    TotalConflictError() : std::domain_error("total belief conflict: Dempster normalizer is zero") {}
};

/// Dense row-major V x V matrix.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

    friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Pairwise degrees of conflict; symmetric with zero diagonal.
struct ConflictMatrix {
    SquareMatrix values;
};

/// A = (1 - C^lambda)^(1/lambda) elementwise; unit diagonal.
struct AgreementMatrix {
    SquareMatrix values;
    double lambda = 1.0;
};

/// eta_v = product of row v of the agreement matrix.
struct DiscountFactors {
    std::vector<double> eta;
};

struct ConflictDegree {
    double projected_distance = 0.0;
    double conjunctive_certainty = 0.0;
    double degree = 0.0;
};

struct DbfResult {
    SubjectiveOpinion fused;
    ConflictMatrix conflict;
    AgreementMatrix agreement;
    DiscountFactors discounts;
};

enum class FusionMethod { bcf, cbf, baf, gbaf, dbf };

inline constexpr double kDefaultLambda = 1.0;

std::string_view to_string(FusionMethod method) noexcept;
/// Accepts "bcf", "cbf", "baf", "gbaf", "dbf".
FusionMethod parse_fusion_method(std::string_view name);

/// PD = 1/2 Sum|P1_k - P2_k|, CC = (1 - u1)(1 - u2), DC = PD * CC.
ConflictDegree degree_of_conflict(const SubjectiveOpinion& first, const SubjectiveOpinion& second);

/// Averaging fusion of two opinions. Pairs of dogmatic opinions use the limit rule.
SubjectiveOpinion fuse_baf_pair(const SubjectiveOpinion& first, const SubjectiveOpinion& second);

/// Left fold of fuse_baf_pair. The result depends on the order of `opinions`.
SubjectiveOpinion fuse_baf_sequential(std::span<const SubjectiveOpinion> opinions);

/// Generalized averaging over all sources at once; fused evidence is the mean of the
/// source evidences and fused uncertainty the harmonic mean of source uncertainties.
SubjectiveOpinion fuse_gbaf(std::span<const SubjectiveOpinion> opinions);

/// Cumulative fusion: evidences add.
SubjectiveOpinion fuse_cbf(std::span<const SubjectiveOpinion> opinions);

/// Belief constraint (Dempster) fusion of two opinions.
SubjectiveOpinion fuse_bcf(const SubjectiveOpinion& first, const SubjectiveOpinion& second);
/// Left fold of the pairwise rule; the pairwise rule is associative.
SubjectiveOpinion fuse_bcf(std::span<const SubjectiveOpinion> opinions);

ConflictMatrix conflict_matrix(std::span<const SubjectiveOpinion> opinions);
AgreementMatrix agreement_matrix(const ConflictMatrix& conflict, double lambda = kDefaultLambda);
DiscountFactors discount_factors(const AgreementMatrix& agreement);

/// b' = eta b, u' = 1 - eta + eta u. Base rates are untouched.
SubjectiveOpinion discount_opinion(const SubjectiveOpinion& opinion, double eta);

/// Discounted belief fusion: conflict matrix, agreement, row-product discounts,
/// per-source discounting, then generalized averaging.
DbfResult fuse_dbf(std::span<const SubjectiveOpinion> opinions, double lambda = kDefaultLambda);

/// Dispatches to the operator named by `method`. BAF folds in the given order.
SubjectiveOpinion fuse(FusionMethod method, std::span<const SubjectiveOpinion> opinions,
                       double lambda = kDefaultLambda);

nlohmann::json to_json(const SquareMatrix& m);

}  // namespace evfusion
