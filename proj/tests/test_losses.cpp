#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "evfusion/losses.hpp"
#include "evfusion/train.hpp"
#include "oracle.hpp"

using namespace evfusion;
using doctest::Approx;

TEST_CASE("expected cross-entropy closed form")
{
    CHECK(loss_ace(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.0}) == Approx(1.0).epsilon(1e-14));
    CHECK(loss_ace(std::vector<double>{1001.0, 1.0}, std::vector<double>{1.0, 0.0}) < 0.01);
    const std::vector<double> sym{3.0, 3.0};
    CHECK(loss_ace(sym, std::vector<double>{1.0, 0.0}) == loss_ace(sym, std::vector<double>{0.0, 1.0}));
    CHECK_THROWS_AS(loss_ace(sym, std::vector<double>{0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(loss_ace(sym, std::vector<double>{1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(loss_ace(sym, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("expected cross-entropy matches Monte-Carlo within 3 standard errors")
{
    const std::vector<std::vector<double>> cases{{1.0, 1.0}, {2.5, 1.0, 4.0}, {7.0, 1.5, 1.0, 3.0}, {1.2, 20.0}};
    for (const auto& alpha : cases) {
        for (std::size_t y = 0; y < alpha.size(); ++y) {
            std::vector<double> one_hot(alpha.size(), 0.0);
            one_hot[y] = 1.0;
            std::mt19937_64 rng(alpha.size() * 100 + y);
            const auto [mean, se] = oracle::sampled_cross_entropy(alpha, y, 100000, rng);
            INFO("alpha[0] = " << alpha[0] << ", label " << y);
            CHECK(std::abs(loss_ace(alpha, one_hot) - mean) <= 3.0 * se);
        }
    }
}

TEST_CASE("KL regularizer")
{
    CHECK(std::abs(loss_kl(std::vector<double>{1.0, 1.0, 1.0}, std::vector<double>{0.0, 1.0, 0.0})) < 1e-13);
    CHECK(std::abs(loss_kl(std::vector<double>{5.0, 1.0}, std::vector<double>{1.0, 0.0})) < 1e-13);

    const double kl = loss_kl(std::vector<double>{1.0, 5.0}, std::vector<double>{1.0, 0.0});
    CHECK(kl > 0.0);
    CHECK(std::abs(kl - oracle::kl_quadrature(1.0, 5.0)) < 1e-4);
    for (auto [a, b] : {std::pair{2.0, 3.5}, std::pair{1.0, 1.7}, std::pair{9.0, 2.0}}) {
        CHECK(std::abs(loss_kl(std::vector<double>{1.0, b}, std::vector<double>{1.0, 0.0}) - oracle::kl_quadrature(1.0, b)) <
              1e-4);
        CHECK(std::abs(loss_kl(std::vector<double>{a, 1.0}, std::vector<double>{0.0, 1.0}) - oracle::kl_quadrature(a, 1.0)) <
              1e-4);
    }
    CHECK_THROWS_AS(loss_kl(std::vector<double>{0.5, 1.0}, std::vector<double>{1.0, 0.0}), std::domain_error);
}

TEST_CASE("annealing coefficient")
{
    CHECK(annealing_coef(0, 10) == 0.0);
    CHECK(annealing_coef(10, 10) == 1.0);
    CHECK(annealing_coef(5, 10) == 0.5);
    CHECK(annealing_coef(50, 10) == 1.0);
    double previous = 0.0;
    for (std::size_t t = 0; t < 40; ++t) {
        const double s = annealing_coef(t, 7);
        CHECK(s >= previous);
        CHECK(s <= 1.0);
        previous = s;
    }
    CHECK_THROWS_AS(annealing_coef(1, 0), std::domain_error);
}

TEST_CASE("consistency loss")
{
    const SubjectiveOpinion o({0.3, 0.2, 0.1}, 0.4);
    CHECK(loss_consistency(std::vector<SubjectiveOpinion>{o, o, o}) == 0.0);
    const std::vector<SubjectiveOpinion> z{SubjectiveOpinion({0.99, 0.0, 0.01}, 0.0),
                                           SubjectiveOpinion({0.0, 0.99, 0.01}, 0.0)};
    CHECK(loss_consistency(z) == Approx(1.98).epsilon(1e-14));

    // A vacuous view adds no conflict; the normaliser 1/(V-1) changes with V.
    const std::vector<SubjectiveOpinion> two{o, SubjectiveOpinion({0.0, 0.5, 0.3}, 0.2)};
    auto three = two;
    three.push_back(SubjectiveOpinion::vacuous(3));
    CHECK(loss_consistency(three) * 2.0 == Approx(loss_consistency(two) * 1.0).epsilon(1e-14));
}

TEST_CASE("batch losses agree with the per-sample functions")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> a(1.0, 12.0);
    Matrix alpha(6, 4);
    for (auto& x : alpha.data()) {
        x = a(rng);
    }
    Matrix y(6, 4, 0.0);
    for (std::size_t i = 0; i < 6; ++i) {
        y(i, i % 4) = 1.0;
    }
    ad::Tape tape;
    const auto ace = ad::batch_loss_ace(tape.constant(alpha), tape.constant(y));
    const auto kl = ad::batch_loss_kl(tape.constant(alpha), tape.constant(y));
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(ace.value()[i] == Approx(loss_ace(alpha.row(i), y.row(i))).epsilon(1e-13));
        CHECK(kl.value()[i] == Approx(loss_kl(alpha.row(i), y.row(i))).epsilon(1e-12));
    }
}

TEST_CASE("total loss special cases")
{
    std::mt19937_64 rng(4);
    const auto batch = oracle::random_batch(rng, 5, {3, 4}, 3);
    const auto net = EvidentialNetwork::initialize(batch.dims(), 3, 8, 1);

    LossSettings s;
    s.fusion = FusionMethod::gbaf;
    s.beta = 0.0;
    s.gamma = 0.0;
    s.sigma_t = 0.4;
    const auto only_fused = total_loss(net, batch, s);
    CHECK(only_fused.total == Approx(only_fused.l_ace_fused + 0.4 * only_fused.l_kl_fused).epsilon(1e-14));
    CHECK(only_fused.l_ace_per_view.size() == 2);

    const auto single = oracle::random_batch(rng, 5, {3}, 3);
    const auto net1 = EvidentialNetwork::initialize(single.dims(), 3, 8, 2);
    s.beta = 0.7;
    const auto one = total_loss(net1, single, s);
    CHECK(one.l_ace_fused == Approx(one.l_ace_per_view[0]).epsilon(1e-14));
    CHECK(one.l_con == 0.0);
    CHECK(one.total == Approx(1.7 * (one.l_ace_fused + 0.4 * one.l_kl_fused)).epsilon(1e-13));

    CHECK_THROWS(total_loss(net1, batch, s));
}

TEST_CASE("total loss matches the straight-line oracle")
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t v = 2 + trial % 2;
        std::vector<std::size_t> dims;
        for (std::size_t i = 0; i < v; ++i) {
            dims.push_back(2 + (trial + i) % 4);
        }
        const auto batch = oracle::random_batch(rng, 7, dims, 3);
        auto net = EvidentialNetwork::initialize(dims, 3, 8, static_cast<std::uint64_t>(trial));
        for (auto* m : net.parameters()) {
            for (double& x : m->data()) {
                x *= 2.0;
            }
        }
        for (auto method : {FusionMethod::gbaf, FusionMethod::dbf}) {
            LossSettings s;
            s.fusion = method;
            s.lambda = trial % 3 == 0 ? 1.0 : 2.5;
            s.beta = 0.8;
            s.gamma = 0.6;
            s.sigma_t = 0.3;
            const double expected = oracle::total_loss(net, batch, s);
            const double got = total_loss(net, batch, s).total;
            INFO("trial " << trial << " method " << to_string(method));
            CHECK(std::abs(got - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("loss breakdown sums to the total")
{
    std::mt19937_64 rng(12);
    const auto batch = oracle::random_batch(rng, 9, {4, 3, 5}, 4);
    const auto net = EvidentialNetwork::initialize(batch.dims(), 4, 8, 3);
    LossSettings s;
    s.beta = 0.5;
    s.gamma = 2.0;
    s.sigma_t = 0.25;
    const auto b = total_loss(net, batch, s);
    double expected = b.l_ace_fused + s.sigma_t * b.l_kl_fused + s.gamma * b.l_con;
    for (std::size_t v = 0; v < 3; ++v) {
        expected += s.beta * (b.l_ace_per_view[v] + s.sigma_t * b.l_kl_per_view[v]);
    }
    CHECK(b.total == Approx(expected).epsilon(1e-13));
}

TEST_CASE("gradients match central differences (2 views, K=3, h=8)")
{
    std::mt19937_64 rng(21);
    const auto batch = oracle::random_batch(rng, 6, {4, 3}, 3);
    auto net = EvidentialNetwork::initialize(batch.dims(), 3, 8, 5);
    for (auto method : {FusionMethod::gbaf, FusionMethod::dbf}) {
        LossSettings s;
        s.fusion = method;
        s.sigma_t = 0.5;
        const auto check = oracle::check_gradients(net, batch, s);
        INFO(to_string(method) << ": checked " << check.checked << ", skipped " << check.skipped);
        CHECK(check.checked >= 50);
        CHECK(check.max_relative_error < 1e-4);
    }
}

TEST_CASE("evidence-space fusion on the tape matches the opinion operators")
{
    std::mt19937_64 rng(30);
    std::exponential_distribution<double> ev(0.3);
    for (auto method : {FusionMethod::gbaf, FusionMethod::cbf, FusionMethod::baf, FusionMethod::bcf, FusionMethod::dbf}) {
        ad::Tape tape;
        std::vector<ad::BatchOpinion> views;
        std::vector<Matrix> raw;
        for (int v = 0; v < 3; ++v) {
            Matrix e(4, 3);
            for (auto& x : e.data()) {
                x = ev(rng);
            }
            raw.push_back(e);
            views.push_back(ad::batch_opinion(tape.constant(e)));
        }
        const auto fused = ad::fuse_evidence(method, views, 2.0).value();
        for (std::size_t i = 0; i < 4; ++i) {
            std::vector<SubjectiveOpinion> ops;
            for (const auto& e : raw) {
                ops.push_back(opinion_from_evidence(EvidenceVector({e(i, 0), e(i, 1), e(i, 2)})));
            }
            const auto expected = evidence_from_opinion(fuse(method, ops, 2.0));
            for (std::size_t k = 0; k < 3; ++k) {
                INFO(to_string(method) << " row " << i << " class " << k);
                CHECK(fused(i, k) == Approx(expected[k]).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("detached fusion blocks gradients through the fused term only")
{
    std::mt19937_64 rng(31);
    const auto batch = oracle::random_batch(rng, 4, {3, 3}, 3);
    const auto net = EvidentialNetwork::initialize(batch.dims(), 3, 8, 6);
    LossSettings s;
    s.beta = 0.0;
    s.gamma = 0.0;
    s.detach_fusion = true;
    for (double g : loss_gradient(net, batch, s)) {
        CHECK(g == 0.0);
    }
    s.detach_fusion = false;
    double norm = 0.0;
    for (double g : loss_gradient(net, batch, s)) {
        norm += g * g;
    }
    CHECK(norm > 0.0);
}
