#include "evfusion/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "evfusion/losses.hpp"

namespace evfusion {

namespace {

Optimizer parse_optimizer(const std::string& name)
{
    if (name == "sgd") {
        return Optimizer::sgd;
    }
    if (name == "adam") {
        return Optimizer::adam;
    }
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd|adam)");
}

std::string describe(const LossBreakdown& b)
{
    std::ostringstream os;
    os << "ace_fused=" << b.l_ace_fused << " kl_fused=" << b.l_kl_fused << " con=" << b.l_con << " total=" << b.total;
    return os.str();
}

void accumulate(LossBreakdown& acc, const LossBreakdown& b, double weight)
{
    if (acc.l_ace_per_view.empty()) {
        acc.l_ace_per_view.assign(b.l_ace_per_view.size(), 0.0);
        acc.l_kl_per_view.assign(b.l_kl_per_view.size(), 0.0);
    }
    acc.l_ace_fused += weight * b.l_ace_fused;
    acc.l_kl_fused += weight * b.l_kl_fused;
    for (std::size_t v = 0; v < b.l_ace_per_view.size(); ++v) {
        acc.l_ace_per_view[v] += weight * b.l_ace_per_view[v];
        acc.l_kl_per_view[v] += weight * b.l_kl_per_view[v];
    }
    acc.l_con += weight * b.l_con;
    acc.total += weight * b.total;
    acc.sigma_t = b.sigma_t;
}

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::size_t step = 0;
};

}  // namespace

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (weight_decay < 0.0) {
        throw std::invalid_argument("weight_decay must be non-negative");
    }
    if (annealing_step < 1) {
        throw std::invalid_argument("annealing_step must be at least 1");
    }
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("lambda must be positive");
    }
    if (beta < 0.0 || gamma < 0.0) {
        throw std::invalid_argument("beta and gamma must be non-negative");
    }
    if (batch_size < 1 || hidden < 1) {
        throw std::invalid_argument("batch_size and hidden must be positive");
    }
}

TrainConfig train_config_from(const KeyValueConfig& cfg, TrainConfig d)
{
    TrainConfig c;
    c.learning_rate = cfg.get_double("learning_rate", d.learning_rate);
    c.weight_decay = cfg.get_double("weight_decay", d.weight_decay);
    c.annealing_step = cfg.get_size("annealing_step", d.annealing_step);
    c.gamma = cfg.get_double("gamma", d.gamma);
    c.beta = cfg.get_double("beta", d.beta);
    c.lambda = cfg.get_double("lambda", d.lambda);
    c.epochs = cfg.get_size("epochs", d.epochs);
    c.batch_size = cfg.get_size("batch_size", d.batch_size);
    c.hidden = cfg.get_size("hidden", d.hidden);
    c.seed = cfg.get_u64("seed", d.seed);
    c.fusion = cfg.has("fusion") ? parse_fusion_method(cfg.get_string("fusion", "")) : d.fusion;
    c.optimizer = cfg.has("optimizer") ? parse_optimizer(cfg.get_string("optimizer", "")) : d.optimizer;
    c.detach_fusion = cfg.get_bool("detach_fusion", d.detach_fusion);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.source() + ": " + e.what());
    }
    return c;
}

TrainConfig load_train_config(const std::filesystem::path& path)
{
    const auto cfg = KeyValueConfig::load(path);
    auto c = train_config_from(cfg);
    cfg.reject_unknown_keys();
    return c;
}

LossSettings LossSettings::from(const TrainConfig& config, double sigma_t)
{
    return {config.fusion, config.lambda, config.beta, config.gamma, sigma_t, config.detach_fusion};
}

LossEvaluation total_loss(ad::Tape& tape, const ad::BoundNetwork& network, const MultimodalBatch& batch,
                          const LossSettings& settings)
{
    const std::size_t views = batch.view_count();
    if (network.parameters.size() != 4 * views) {
        throw std::invalid_argument("network modality count differs from the batch");
    }
    const ad::Var y = tape.constant(batch.one_hot());

    std::vector<ad::BatchOpinion> opinions;
    std::vector<ad::BatchOpinion> fusion_inputs;
    opinions.reserve(views);
    for (std::size_t v = 0; v < views; ++v) {
        const ad::Var x = tape.constant(batch.views[v]);
        opinions.push_back(ad::batch_opinion(network.evidence(v, x)));
        if (settings.detach_fusion) {
            fusion_inputs.push_back(ad::batch_opinion(ad::stop_gradient(opinions.back().evidence)));
        }
    }

    LossEvaluation out;
    auto& b = out.breakdown;
    b.sigma_t = settings.sigma_t;

    const ad::Var fused = ad::fuse_evidence(settings.fusion, settings.detach_fusion ? fusion_inputs : opinions,
                                            settings.lambda);
    const ad::Var fused_alpha = fused + 1.0;
    const ad::Var ace_fused = ad::mean(ad::batch_loss_ace(fused_alpha, y));
    const ad::Var kl_fused = ad::mean(ad::batch_loss_kl(fused_alpha, y));
    ad::Var total = ace_fused + settings.sigma_t * kl_fused;
    b.l_ace_fused = ace_fused.item();
    b.l_kl_fused = kl_fused.item();

    for (const auto& o : opinions) {
        const ad::Var alpha = o.evidence + 1.0;
        const ad::Var ace = ad::mean(ad::batch_loss_ace(alpha, y));
        const ad::Var kl = ad::mean(ad::batch_loss_kl(alpha, y));
        total = total + settings.beta * (ace + settings.sigma_t * kl);
        b.l_ace_per_view.push_back(ace.item());
        b.l_kl_per_view.push_back(kl.item());
    }

    const ad::Var con = ad::mean(ad::batch_loss_consistency(opinions));
    b.l_con = con.item();
    total = total + settings.gamma * con;
    b.total = total.item();
    out.total = total;
    return out;
}

LossBreakdown total_loss(const EvidentialNetwork& network, const MultimodalBatch& batch, const LossSettings& settings)
{
    ad::Tape tape;
    const auto bound = ad::bind(tape, network);
    return total_loss(tape, bound, batch, settings).breakdown;
}

std::vector<double> loss_gradient(const EvidentialNetwork& network, const MultimodalBatch& batch,
                                  const LossSettings& settings)
{
    ad::Tape tape;
    const auto bound = ad::bind(tape, network);
    const auto eval = total_loss(tape, bound, batch, settings);
    tape.backward(eval.total);
    std::vector<double> grad;
    for (const auto& p : bound.parameters) {
        const auto& g = tape.grad(p).data();
        grad.insert(grad.end(), g.begin(), g.end());
    }
    return grad;
}

TrainResult train(const MultimodalBatch& data, const TrainConfig& config)
{
    config.validate();
    data.validate();
    if (data.samples() == 0) {
        throw std::invalid_argument("training set is empty");
    }
    for (std::size_t v = 0; v < data.view_count(); ++v) {
        const Matrix& x = data.views[v];
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i])) {
                std::ostringstream os;
                os << "non-finite feature in modality " << v << ", row " << i / x.cols() << ", column " << i % x.cols();
                throw TrainingError(os.str());
            }
        }
    }

    TrainResult result;
    result.network = EvidentialNetwork::initialize(data.dims(), data.classes, config.hidden, config.seed);
    auto params = result.network.parameters();

    {
        auto initial = total_loss(result.network, data, LossSettings::from(config, annealing_coef(0, config.annealing_step)));
        initial.epoch = 0;
        result.history.push_back(std::move(initial));
    }

    // Separate stream from the initializer so shuffles do not depend on the parameter count.
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(data.samples());
    std::iota(order.begin(), order.end(), 0);

    AdamState adam;
    if (config.optimizer == Optimizer::adam) {
        for (const Matrix* p : params) {
            adam.m.emplace_back(p->rows(), p->cols(), 0.0);
            adam.v.emplace_back(p->rows(), p->cols(), 0.0);
        }
    }

    ad::Tape tape;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto settings = LossSettings::from(config, annealing_coef(epoch, config.annealing_step));
        std::shuffle(order.begin(), order.end(), rng);

        LossBreakdown epoch_loss;
        epoch_loss.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const auto rows = std::span<const std::size_t>(order).subspan(start, stop - start);
            const MultimodalBatch batch = data.subset(rows);

            tape.clear();
            const auto bound = ad::bind(tape, result.network);
            const auto eval = total_loss(tape, bound, batch, settings);
            if (!std::isfinite(eval.breakdown.total)) {
                std::ostringstream os;
                os << "non-finite loss at epoch " << epoch << ", batch starting at " << start << ": "
                   << describe(eval.breakdown);
                throw TrainingError(os.str());
            }
            tape.backward(eval.total);

            if (config.optimizer == Optimizer::adam) {
                ++adam.step;
            }
            for (std::size_t i = 0; i < params.size(); ++i) {
                Matrix& p = *params[i];
                const Matrix& g = tape.grad(bound.parameters[i]);
                if (config.optimizer == Optimizer::sgd) {
                    for (std::size_t j = 0; j < p.size(); ++j) {
                        p[j] -= config.learning_rate * (g[j] + config.weight_decay * p[j]);
                    }
                    continue;
                }
                constexpr double beta1 = 0.9;
                constexpr double beta2 = 0.999;
                constexpr double eps = 1e-8;
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
                for (std::size_t j = 0; j < p.size(); ++j) {
                    adam.m[i][j] = beta1 * adam.m[i][j] + (1.0 - beta1) * g[j];
                    adam.v[i][j] = beta2 * adam.v[i][j] + (1.0 - beta2) * g[j] * g[j];
                    const double step = (adam.m[i][j] / c1) / (std::sqrt(adam.v[i][j] / c2) + eps);
                    p[j] -= config.learning_rate * (step + config.weight_decay * p[j]);
                }
            }
            accumulate(epoch_loss, eval.breakdown, static_cast<double>(rows.size()) / static_cast<double>(order.size()));
        }
        result.history.push_back(std::move(epoch_loss));
    }
    return result;
}

namespace {

void write_history_header(std::ostream& out, std::size_t views, bool labelled)
{
    out << (labelled ? "method,epoch" : "epoch") << ",l_ace_fused,l_kl_fused";
    for (std::size_t v = 0; v < views; ++v) {
        out << ",l_ace_view" << v;
    }
    for (std::size_t v = 0; v < views; ++v) {
        out << ",l_kl_view" << v;
    }
    out << ",l_con,sigma_t,total\n";
}

void write_history_rows(std::ostream& out, const std::vector<LossBreakdown>& history, const std::string* label)
{
    out << std::setprecision(17);
    for (const auto& h : history) {
        if (label) {
            out << *label << ',';
        }
        out << h.epoch << ',' << h.l_ace_fused << ',' << h.l_kl_fused;
        for (double x : h.l_ace_per_view) {
            out << ',' << x;
        }
        for (double x : h.l_kl_per_view) {
            out << ',' << x;
        }
        out << ',' << h.l_con << ',' << h.sigma_t << ',' << h.total << '\n';
    }
}

}  // namespace

void write_loss_history_csv(std::ostream& out, const std::vector<LossBreakdown>& history)
{
    write_history_header(out, history.empty() ? 0 : history.front().l_ace_per_view.size(), false);
    write_history_rows(out, history, nullptr);
}

void write_loss_history_csv(std::ostream& out, const std::vector<LabelledHistory>& runs)
{
    std::size_t views = 0;
    if (!runs.empty() && !runs.front().history.empty()) {
        views = runs.front().history.front().l_ace_per_view.size();
    }
    write_history_header(out, views, true);
    for (const auto& r : runs) {
        write_history_rows(out, r.history, &r.label);
    }
}

}  // namespace evfusion
