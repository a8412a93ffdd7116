// Test-only reference implementations. Nothing here calls the tape, the batch loss code or the
// fusion operators; it recomputes the training objective one sample at a time from the formulas,
// and the Dirichlet expectations by sampling and quadrature.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "evfusion/dataset.hpp"
#include "evfusion/network.hpp"
#include "evfusion/special.hpp"
#include "evfusion/train.hpp"

namespace oracle {

using evfusion::EvidentialNetwork;
using evfusion::FusionMethod;
using evfusion::LossSettings;
using evfusion::MultimodalBatch;

inline std::vector<double> flatten(const EvidentialNetwork& net)
{
    std::vector<double> out;
    for (const auto* m : net.parameters()) {
        out.insert(out.end(), m->data().begin(), m->data().end());
    }
    return out;
}

inline void assign(EvidentialNetwork& net, const std::vector<double>& flat)
{
    std::size_t i = 0;
    for (auto* m : net.parameters()) {
        for (double& x : m->data()) {
            x = flat.at(i++);
        }
    }
}

/// Signs that decide which branch a piecewise term takes: rectifier inputs and projected-probability
/// differences inside the L1 distance.
using KinkSignature = std::vector<bool>;

struct ViewOutput {
    std::vector<double> evidence;
    std::vector<double> belief;
    double u = 0.0;
    std::vector<double> projected;
};

inline ViewOutput view_output(const evfusion::ViewParameters& p, std::span<const double> x, KinkSignature* kinks)
{
    const std::size_t h = p.w1.cols();
    const std::size_t k = p.w2.cols();
    std::vector<double> hidden(h);
    for (std::size_t j = 0; j < h; ++j) {
        double z = p.b1(0, j);
        for (std::size_t i = 0; i < x.size(); ++i) {
            z += x[i] * p.w1(i, j);
        }
        if (kinks) {
            kinks->push_back(z > 0.0);
        }
        hidden[j] = z > 0.0 ? z : 0.0;
    }
    ViewOutput o;
    double strength = static_cast<double>(k);
    for (std::size_t c = 0; c < k; ++c) {
        double z = p.b2(0, c);
        for (std::size_t j = 0; j < h; ++j) {
            z += hidden[j] * p.w2(j, c);
        }
        const double e = 1e13 / (1.0 + 1e13 * std::exp(-z));
        o.evidence.push_back(e);
        strength += e;
    }
    o.u = static_cast<double>(k) / strength;
    for (double e : o.evidence) {
        o.belief.push_back(e / strength);
        o.projected.push_back(e / strength + o.u / static_cast<double>(k));
    }
    return o;
}

inline double ace(const std::vector<double>& alpha, std::size_t label)
{
    double s = 0.0;
    for (double a : alpha) {
        s += a;
    }
    return evfusion::digamma(s) - evfusion::digamma(alpha[label]);
}

inline double kl(const std::vector<double>& alpha, std::size_t label)
{
    std::vector<double> t = alpha;
    t[label] = 1.0;
    double s = 0.0;
    for (double a : t) {
        s += a;
    }
    double out = std::lgamma(s) - std::lgamma(static_cast<double>(t.size()));
    for (double a : t) {
        out += -std::lgamma(a) + (a - 1.0) * (evfusion::digamma(a) - evfusion::digamma(s));
    }
    return out;
}

inline double conflict_degree(const ViewOutput& p, const ViewOutput& q, KinkSignature* kinks)
{
    double distance = 0.0;
    for (std::size_t c = 0; c < p.projected.size(); ++c) {
        const double d = p.projected[c] - q.projected[c];
        if (kinks) {
            kinks->push_back(d > 0.0);
        }
        distance += std::abs(d);
    }
    return 0.5 * distance * (1.0 - p.u) * (1.0 - q.u);
}

/// Averaging fusion written with products of uncertainties; returns the fused Dirichlet parameters.
inline std::vector<double> average_opinions(const std::vector<std::vector<double>>& beliefs, const std::vector<double>& u)
{
    const std::size_t v_count = u.size();
    const std::size_t k = beliefs.front().size();
    std::vector<double> others(v_count, 1.0);
    for (std::size_t v = 0; v < v_count; ++v) {
        for (std::size_t w = 0; w < v_count; ++w) {
            if (w != v) {
                others[v] *= u[w];
            }
        }
    }
    double denom = 0.0;
    double all = 1.0;
    for (std::size_t v = 0; v < v_count; ++v) {
        denom += others[v];
        all *= u[v];
    }
    const double fused_u = static_cast<double>(v_count) * all / denom;
    std::vector<double> alpha(k);
    for (std::size_t c = 0; c < k; ++c) {
        double b = 0.0;
        for (std::size_t v = 0; v < v_count; ++v) {
            b += beliefs[v][c] * others[v];
        }
        b /= denom;
        alpha[c] = static_cast<double>(k) * b / fused_u + 1.0;
    }
    return alpha;
}

/// Batch-mean training objective for GBAF or DBF fusion.
inline double total_loss(const EvidentialNetwork& net, const MultimodalBatch& batch, const LossSettings& s,
                         KinkSignature* kinks = nullptr)
{
    const std::size_t v_count = batch.view_count();
    const std::size_t n = batch.samples();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = batch.labels[i];
        std::vector<ViewOutput> views;
        for (std::size_t v = 0; v < v_count; ++v) {
            views.push_back(view_output(net.view(v), batch.views[v].row(i), kinks));
        }

        double per_view = 0.0;
        for (const auto& o : views) {
            std::vector<double> alpha;
            for (double e : o.evidence) {
                alpha.push_back(e + 1.0);
            }
            per_view += ace(alpha, y) + s.sigma_t * kl(alpha, y);
        }

        std::vector<std::vector<double>> c(v_count, std::vector<double>(v_count, 0.0));
        double con = 0.0;
        for (std::size_t p = 0; p < v_count; ++p) {
            for (std::size_t q = p + 1; q < v_count; ++q) {
                c[p][q] = c[q][p] = conflict_degree(views[p], views[q], kinks);
                con += 2.0 * c[p][q];
            }
        }
        if (v_count > 1) {
            con /= static_cast<double>(v_count - 1);
        }

        std::vector<std::vector<double>> beliefs;
        std::vector<double> u;
        for (std::size_t v = 0; v < v_count; ++v) {
            double eta = 1.0;
            if (s.fusion == FusionMethod::dbf) {
                for (std::size_t q = 0; q < v_count; ++q) {
                    if (q != v) {
                        eta *= std::pow(1.0 - std::pow(c[v][q], s.lambda), 1.0 / s.lambda);
                    }
                }
            } else if (s.fusion != FusionMethod::gbaf) {
                throw std::invalid_argument("oracle covers gbaf and dbf only");
            }
            std::vector<double> b = views[v].belief;
            for (double& x : b) {
                x *= eta;
            }
            beliefs.push_back(b);
            u.push_back(1.0 - eta + eta * views[v].u);
        }
        const auto fused = average_opinions(beliefs, u);
        const double fused_loss = ace(fused, y) + s.sigma_t * kl(fused, y);
        total += fused_loss + s.beta * per_view + s.gamma * con;
    }
    return total / static_cast<double>(n);
}

struct GradientCheck {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    double max_relative_error = 0.0;
};

/// Central differences of the oracle loss against the library's tape gradient. Parameters whose
/// perturbation flips a kink sign are skipped; relative error uses max(|analytic|, |numeric|, floor).
inline GradientCheck check_gradients(EvidentialNetwork net, const MultimodalBatch& batch, const LossSettings& s,
                                     double step = 1e-5, double floor = 1e-6)
{
    const auto analytic = evfusion::loss_gradient(net, batch, s);
    const auto theta = flatten(net);
    GradientCheck out;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        auto plus = theta;
        auto minus = theta;
        plus[i] += step;
        minus[i] -= step;
        KinkSignature kp;
        KinkSignature km;
        assign(net, plus);
        const double fp = total_loss(net, batch, s, &kp);
        assign(net, minus);
        const double fm = total_loss(net, batch, s, &km);
        if (kp != km) {
            ++out.skipped;
            continue;
        }
        const double numeric = (fp - fm) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic[i] - numeric) / denom);
        ++out.checked;
    }
    return out;
}

/// Small random multimodal batch with Gaussian features.
inline MultimodalBatch random_batch(std::mt19937_64& rng, std::size_t n, std::vector<std::size_t> dims, std::size_t classes)
{
    std::normal_distribution<double> normal;
    MultimodalBatch b;
    b.classes = classes;
    for (std::size_t d : dims) {
        evfusion::Matrix x(n, d);
        for (auto& v : x.data()) {
            v = normal(rng);
        }
        b.views.push_back(std::move(x));
    }
    std::uniform_int_distribution<std::size_t> label(0, classes - 1);
    for (std::size_t i = 0; i < n; ++i) {
        b.labels.push_back(label(rng));
    }
    b.conflict.assign(n, false);
    return b;
}

// Monte-Carlo mean and standard error of -log p_label under Dir(alpha).
inline std::pair<double, double> sampled_cross_entropy(const std::vector<double>& alpha, std::size_t label, int samples,
                                                       std::mt19937_64& rng)
{
    std::vector<std::gamma_distribution<double>> gammas;
    for (double a : alpha) {
        gammas.emplace_back(a, 1.0);
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int s = 0; s < samples; ++s) {
        double total = 0.0;
        double mine = 0.0;
        for (std::size_t k = 0; k < alpha.size(); ++k) {
            const double g = gammas[k](rng);
            total += g;
            if (k == label) {
                mine = g;
            }
        }
        const double x = -std::log(mine / total);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / samples;
    const double var = sum_sq / samples - mean * mean;
    return {mean, std::sqrt(var / samples)};
}

// KL(Beta(a, b) || uniform) by composite Simpson on [0, 1].
inline double kl_quadrature(double a, double b)
{
    const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const auto integrand = [&](double x) {
        if (x <= 0.0 || x >= 1.0) {
            const bool zero = (x <= 0.0 && a > 1.0) || (x >= 1.0 && b > 1.0);
            if (zero) {
                return 0.0;
            }
        }
        const double xs = std::clamp(x, 1e-300, 1.0 - 1e-16);
        const double log_p = log_norm + (a - 1.0) * std::log(xs) + (b - 1.0) * std::log1p(-xs);
        return std::exp(log_p) * log_p;
    };
    const int n = 200000;
    const double h = 1.0 / n;
    double s = integrand(0.0) + integrand(1.0);
    for (int i = 1; i < n; ++i) {
        s += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
    }
    return s * h / 3.0;
}

}  // namespace oracle
