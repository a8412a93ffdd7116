// Command-line front end: opinion fusion, the Zadeh demo, training and the benchmark harness.
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "evfusion/experiment.hpp"
#include "evfusion/feature_io.hpp"
#include "evfusion/fusion.hpp"
#include "evfusion/synthetic.hpp"
#include "evfusion/train.hpp"

using namespace evfusion;
using nlohmann::json;

namespace {

std::vector<std::size_t> parse_order(const std::string& text, std::size_t n)
{
    std::vector<std::size_t> order;
    std::stringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        std::size_t pos = 0;
        const unsigned long value = std::stoul(cell, &pos);
        if (pos != cell.size()) {
            throw std::invalid_argument("--order: '" + cell + "' is not an index");
        }
        order.push_back(value);
    }
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), 0);
    if (sorted != expected) {
        std::ostringstream os;
        os << "--order must be a permutation of 0.." << n - 1;
        throw std::invalid_argument(os.str());
    }
    return order;
}

json read_json_input(const std::string& path)
{
    if (path == "-") {
        return json::parse(std::cin);
    }
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return json::parse(in);
}

int run_fuse(const std::string& method_name, double lambda, const std::string& order_text, const std::string& input)
{
    const FusionMethod method = parse_fusion_method(method_name);
    const json doc = read_json_input(input);
    if (!doc.is_array() || doc.empty()) {
        throw std::invalid_argument("input must be a non-empty JSON array of opinions");
    }
    std::vector<SubjectiveOpinion> opinions;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        try {
            opinions.push_back(opinion_from_json(doc[i]));
        } catch (const std::exception& e) {
            throw std::invalid_argument("opinion " + std::to_string(i) + ": " + e.what());
        }
    }
    if (!order_text.empty()) {
        const auto order = parse_order(order_text, opinions.size());
        std::vector<SubjectiveOpinion> reordered;
        for (std::size_t i : order) {
            reordered.push_back(opinions[i]);
        }
        opinions = std::move(reordered);
    }

    json out;
    out["method"] = std::string(to_string(method));
    SubjectiveOpinion fused = opinions.front();
    json diagnostics;
    if (method == FusionMethod::dbf) {
        out["lambda"] = lambda;
        const DbfResult r = fuse_dbf(opinions, lambda);
        fused = r.fused;
        diagnostics["conflict"] = to_json(r.conflict.values);
        diagnostics["agreement"] = to_json(r.agreement.values);
        diagnostics["discounts"] = r.discounts.eta;
    } else {
        fused = fuse(method, opinions, lambda);
        diagnostics["conflict"] = to_json(conflict_matrix(opinions).values);
    }
    out["fused"] = opinion_to_json(fused);
    out["projected"] = projected_probabilities(fused).probs;
    out["diagnostics"] = diagnostics;
    std::cout << std::setprecision(17) << out.dump(2) << '\n';
    return 0;
}

int run_demo_zadeh()
{
    const std::vector<SubjectiveOpinion> pair{
        SubjectiveOpinion({0.99, 0.0, 0.01}, 0.0),
        SubjectiveOpinion({0.0, 0.99, 0.01}, 0.0),
    };
    const auto row = [](const std::string& name, const SubjectiveOpinion& o) {
        std::printf("%-16s", name.c_str());
        for (double b : o.beliefs()) {
            std::printf(" %8.4f", b);
        }
        std::printf(" %8.4f\n", o.uncertainty());
    };
    std::printf("%-16s %8s %8s %8s %8s\n", "", "b1", "b2", "b3", "u");
    row("Modality 1", pair[0]);
    row("Modality 2", pair[1]);
    row("BCF", fuse_bcf(pair));
    row("CBF", fuse_cbf(pair));
    row("BAF", fuse_baf_sequential(pair));
    row("GBAF", fuse_gbaf(pair));
    row("DBF lambda=1", fuse_dbf(pair, 1.0).fused);
    row("DBF lambda=3", fuse_dbf(pair, 3.0).fused);
    return 0;
}

int run_train(const std::string& config_path, const std::vector<std::string>& features, const std::string& labels,
              const std::string& out_dir, bool standardize)
{
    const TrainConfig config = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
    std::vector<std::filesystem::path> paths(features.begin(), features.end());
    MultimodalBatch data = load_feature_csv(paths, labels);
    std::filesystem::create_directories(out_dir);
    if (standardize) {
        const auto z = Standardizer::fit(data);
        z.apply(data);
        std::ofstream(std::filesystem::path(out_dir) / "standardizer.json")
            << json{{"mean", z.means()}, {"scale", z.scales()}}.dump() << '\n';
    }
    const TrainResult result = train(data, config);
    result.network.save(std::filesystem::path(out_dir) / "model.json");
    std::ofstream history(std::filesystem::path(out_dir) / "loss_history.csv");
    write_loss_history_csv(history, result.history);
    const auto& last = result.history.back();
    std::cerr << "trained " << config.epochs << " epochs, final loss " << last.total << '\n';
    return 0;
}

int run_bench(const std::string& config_path, const std::string& out_override)
{
    ExperimentConfig config = load_experiment_config(config_path);
    if (!out_override.empty()) {
        config.output_dir = out_override;
    }
    const auto report = run_experiment(config, [](const std::string& line) { std::cerr << line << '\n'; });
    write_experiment_artifacts(report, config.output_dir);
    for (const auto& s : report.methods) {
        std::cout << std::fixed << std::setprecision(4) << to_string(s.method) << ": accuracy "
                  << s.accuracy_clean.mean << " +- " << s.accuracy_clean.std << ", conflict AUC " << s.auc.mean
                  << " +- " << s.auc.std << '\n';
    }
    std::cout << "artifacts written to " << config.output_dir.string() << '\n';
    return 0;
}

int run_gen(const std::string& spec_path, const std::string& out_dir)
{
    const auto cfg = KeyValueConfig::load(spec_path);
    const SyntheticSpec spec = synthetic_spec_from(cfg);
    cfg.reject_unknown_keys();
    const SyntheticData data = generate_synthetic(spec);
    write_feature_csv(data.split.train, out_dir, "train");
    write_feature_csv(data.split.test, out_dir, "test");
    std::cout << "wrote " << data.split.train.samples() << " train and " << data.split.test.samples()
              << " test samples to " << out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Subjective-logic fusion, evidential multimodal training and conflict benchmarks"};
    app.require_subcommand(1);

    auto* fuse_cmd = app.add_subcommand("fuse", "Fuse a JSON array of opinions");
    std::string method;
    double lambda = kDefaultLambda;
    std::string order;
    std::string input = "-";
    fuse_cmd->add_option("--method", method, "bcf|cbf|baf|gbaf|dbf")->required();
    fuse_cmd->add_option("--lambda", lambda, "DBF agreement exponent");
    fuse_cmd->add_option("--order", order, "comma separated permutation of the inputs, e.g. 2,0,1");
    fuse_cmd->add_option("input", input, "JSON file, or - for standard input");

    auto* demo_cmd = app.add_subcommand("demo", "Worked examples");
    demo_cmd->require_subcommand(1);
    auto* zadeh_cmd = demo_cmd->add_subcommand("zadeh", "Two conflicting dogmatic sources under every operator");

    auto* train_cmd = app.add_subcommand("train", "Train an evidential multimodal classifier from CSV features");
    std::string train_config;
    std::vector<std::string> features;
    std::string labels;
    std::string train_out = "train_out";
    bool no_standardize = false;
    train_cmd->add_option("--config", train_config, "key/value training config");
    train_cmd->add_option("--features", features, "one CSV per modality (repeat)")->required();
    train_cmd->add_option("--labels", labels, "CSV of integer class ids")->required();
    train_cmd->add_option("--out", train_out, "output directory");
    train_cmd->add_flag("--no-standardize", no_standardize, "use features as read");

    auto* bench_cmd = app.add_subcommand("bench", "Benchmark harness");
    bench_cmd->require_subcommand(1);
    auto* run_cmd = bench_cmd->add_subcommand("run", "Run an experiment config");
    std::string bench_config;
    std::string bench_out;
    run_cmd->add_option("--config", bench_config, "experiment config")->required();
    run_cmd->add_option("--out", bench_out, "override output_dir");
    auto* gen_cmd = bench_cmd->add_subcommand("gen", "Write synthetic data as CSV");
    std::string spec_path;
    std::string gen_out;
    gen_cmd->add_option("--spec", spec_path, "synthetic data spec")->required();
    gen_cmd->add_option("--out", gen_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fuse_cmd) {
            return run_fuse(method, lambda, order, input);
        }
        if (*zadeh_cmd) {
            return run_demo_zadeh();
        }
        if (*train_cmd) {
            return run_train(train_config, features, labels, train_out, !no_standardize);
        }
        if (*run_cmd) {
            return run_bench(bench_config, bench_out);
        }
        if (*gen_cmd) {
            return run_gen(spec_path, gen_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
