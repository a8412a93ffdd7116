#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evfusion/metrics.hpp"
#include "evfusion/synthetic.hpp"
#include "evfusion/train.hpp"

namespace evfusion {

struct ExperimentConfig {
    /// Set for generated data; otherwise the CSV fields below are used.
    std::optional<SyntheticSpec> synthetic;
    std::vector<std::filesystem::path> features;
    std::filesystem::path labels;
    std::vector<std::filesystem::path> test_features;
    std::filesystem::path test_labels;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
    bool standardize = true;

    /// `fusion` and `seed` inside are overridden per run.
    TrainConfig train;
    std::vector<FusionMethod> methods{FusionMethod::gbaf, FusionMethod::dbf};
    std::vector<std::uint64_t> seeds{0};
    double conflict_rate = 1.0;
    /// DBF evaluated on the conflict set of each trained model at these lambdas.
    std::vector<double> lambda_sweep{1.0, 3.0, 10.0};
    std::filesystem::path output_dir = "bench_out";

    void validate() const;
    nlohmann::json to_json() const;
};

/// Relative paths in the file resolve against the file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunResult {
    std::uint64_t seed = 0;
    Evaluation evaluation;
    /// Mean fused DBF uncertainty on the conflict set, one entry per ExperimentConfig::lambda_sweep value.
    std::vector<double> sweep_uncertainty;
    std::vector<LossBreakdown> history;
    EvidentialNetwork network;
};

struct MethodSummary {
    FusionMethod method = FusionMethod::gbaf;
    std::vector<RunResult> runs;
    MeanStd accuracy_clean;
    MeanStd accuracy_conflict;
    MeanStd uncertainty_clean;
    MeanStd uncertainty_conflict;
    MeanStd auc;
    std::vector<MeanStd> sweep;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<MethodSummary> methods;
    double wall_time_seconds = 0.0;

    const MethodSummary& method(FusionMethod m) const;
    /// `include_timing` = false gives a deterministic document for identical inputs.
    nlohmann::json to_json(bool include_timing = true) const;
    void write_csv(std::ostream& out) const;
};

using ProgressLog = std::function<void(const std::string&)>;

ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressLog& log = {});

/// report.json, report.csv, uncertainty_<method>.svg and loss_history_<seed>.csv under `dir`.
void write_experiment_artifacts(const ExperimentReport& report, const std::filesystem::path& dir);

/// 30 equal-width bins on [0, 1]; clean and conflict histograms overlaid, heights as fractions of each set.
void write_uncertainty_svg(std::ostream& out, std::span<const double> clean, std::span<const double> conflict,
                           const std::string& title);

}  // namespace evfusion
