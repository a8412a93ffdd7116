#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "evfusion/autodiff.hpp"
#include "evfusion/config.hpp"
#include "evfusion/dataset.hpp"
#include "evfusion/fusion.hpp"
#include "evfusion/network.hpp"

namespace evfusion {

enum class Optimizer { sgd, adam };

/// Training hyperparameters. Keys in the config file match the member names.
struct TrainConfig {
    double learning_rate = 0.05;
    double weight_decay = 1e-5;
    std::size_t annealing_step = 30;
    double gamma = 0.5;
    double beta = 1.0;
    double lambda = kDefaultLambda;
    std::size_t epochs = 60;
    std::size_t batch_size = 64;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
    FusionMethod fusion = FusionMethod::dbf;
    Optimizer optimizer = Optimizer::sgd;
    /// Compute the fused loss on per-view evidence with gradients stopped.
    bool detach_fusion = false;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

/// Reads TrainConfig keys from `cfg`; absent keys keep their defaults.
TrainConfig train_config_from(const KeyValueConfig& cfg, TrainConfig defaults = {});
/// Loads a file holding only TrainConfig keys.
TrainConfig load_train_config(const std::filesystem::path& path);

struct LossBreakdown {
    std::size_t epoch = 0;
    double l_ace_fused = 0.0;
    double l_kl_fused = 0.0;
    std::vector<double> l_ace_per_view;
    std::vector<double> l_kl_per_view;
    double l_con = 0.0;
    double sigma_t = 0.0;
    double total = 0.0;
};

struct LossSettings {
    FusionMethod fusion = FusionMethod::dbf;
    double lambda = kDefaultLambda;
    double beta = 1.0;
    double gamma = 0.5;
    double sigma_t = 0.0;
    bool detach_fusion = false;

    static LossSettings from(const TrainConfig& config, double sigma_t);
};

struct LossEvaluation {
    ad::Var total;
    LossBreakdown breakdown;
};

/// total = L_acc(fused) + beta Sum_v L_acc(view v) + gamma L_con with L_acc = L_ace + sigma_t L_KL,
/// every term averaged over the batch.
LossEvaluation total_loss(ad::Tape& tape, const ad::BoundNetwork& network, const MultimodalBatch& batch,
                          const LossSettings& settings);
/// Value-only convenience wrapper on a private tape.
LossBreakdown total_loss(const EvidentialNetwork& network, const MultimodalBatch& batch, const LossSettings& settings);

/// Flat gradient of the total loss with respect to every parameter, in EvidentialNetwork::parameters() order.
std::vector<double> loss_gradient(const EvidentialNetwork& network, const MultimodalBatch& batch,
                                  const LossSettings& settings);

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    EvidentialNetwork network;
    /// Entry 0 evaluates the initial network; entry t is the mean over epoch t's batches.
    std::vector<LossBreakdown> history;
};

/// Mini-batch gradient descent on `data`. Deterministic for a given config.seed.
TrainResult train(const MultimodalBatch& data, const TrainConfig& config);

/// CSV header plus one row per entry: epoch, l_ace_fused, l_kl_fused, l_ace_view<v>..., l_kl_view<v>..., l_con, sigma_t, total.
void write_loss_history_csv(std::ostream& out, const std::vector<LossBreakdown>& history);

struct LabelledHistory {
    std::string label;
    std::vector<LossBreakdown> history;
};
/// Same columns behind a leading `method` column, one block of rows per entry of `runs`.
void write_loss_history_csv(std::ostream& out, const std::vector<LabelledHistory>& runs);

}  // namespace evfusion
