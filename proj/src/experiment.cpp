#include "evfusion/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "evfusion/feature_io.hpp"

namespace evfusion {

namespace {

std::vector<std::filesystem::path> resolve_all(const std::vector<std::string>& names, const std::filesystem::path& base)
{
    std::vector<std::filesystem::path> out;
    for (const auto& n : names) {
        const std::filesystem::path p(n);
        out.push_back(p.is_absolute() ? p : base / p);
    }
    return out;
}

nlohmann::json stats_json(const MeanStd& m)
{
    return {{"mean", m.mean}, {"std", m.std}};
}

TrainTestSplit load_data(const ExperimentConfig& config)
{
    if (config.synthetic) {
        return generate_synthetic(*config.synthetic).split;
    }
    MultimodalBatch all = load_feature_csv(config.features, config.labels);
    TrainTestSplit split;
    if (config.test_features.empty()) {
        split = split_stratified(all, config.train_fraction, config.split_seed);
    } else {
        MultimodalBatch test = load_feature_csv(config.test_features, config.test_labels, all.classes);
        split = {std::move(all), std::move(test)};
    }
    if (split.train.dims() != split.test.dims()) {
        throw DataFormatError("train and test modality dimensions differ");
    }
    return split;
}

MeanStd aggregate(const std::vector<RunResult>& runs, double (*field)(const RunResult&))
{
    std::vector<double> values;
    for (const auto& r : runs) {
        values.push_back(field(r));
    }
    return mean_std(values);
}

void write_svg_bars(std::ostream& out, const std::array<double, 30>& heights, double scale, double x0, double y0,
                    double width, const char* colour)
{
    const double bar = width / static_cast<double>(heights.size());
    for (std::size_t i = 0; i < heights.size(); ++i) {
        const double h = heights[i] * scale;
        out << "<rect x=\"" << x0 + bar * static_cast<double>(i) << "\" y=\"" << y0 - h << "\" width=\"" << bar
            << "\" height=\"" << h << "\" fill=\"" << colour << "\" fill-opacity=\"0.5\"/>\n";
    }
}

std::array<double, 30> histogram(std::span<const double> values)
{
    std::array<double, 30> h{};
    for (double x : values) {
        const auto bin = static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * 30.0);
        h[std::min<std::size_t>(bin, 29)] += 1.0;
    }
    if (!values.empty()) {
        for (double& c : h) {
            c /= static_cast<double>(values.size());
        }
    }
    return h;
}

}  // namespace

void ExperimentConfig::validate() const
{
    train.validate();
    if (synthetic) {
        synthetic->validate();
    } else {
        if (features.empty() || labels.empty()) {
            throw std::invalid_argument("experiment needs either synthetic data settings or features + labels");
        }
        if (test_features.empty() != test_labels.empty()) {
            throw std::invalid_argument("test_features and test_labels must be given together");
        }
        if (!test_features.empty() && test_features.size() != features.size()) {
            throw std::invalid_argument("test_features must list one file per modality");
        }
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie in (0, 1)");
    }
    if (methods.empty() || seeds.empty()) {
        throw std::invalid_argument("experiment needs at least one method and one seed");
    }
    if (!(conflict_rate > 0.0 && conflict_rate <= 1.0)) {
        throw std::invalid_argument("conflict_rate must lie in (0, 1]");
    }
    for (double l : lambda_sweep) {
        if (!(l > 0.0)) {
            throw std::invalid_argument("lambda_sweep values must be positive");
        }
    }
}

nlohmann::json ExperimentConfig::to_json() const
{
    nlohmann::json j;
    if (synthetic) {
        j["data"] = {{"source", "synthetic"},
                     {"classes", synthetic->classes},
                     {"views", synthetic->views},
                     {"dims", synthetic->dims},
                     {"separation", synthetic->separation},
                     {"noise", synthetic->noise},
                     {"samples", synthetic->samples},
                     {"data_seed", synthetic->seed}};
    } else {
        const auto names = [](const std::vector<std::filesystem::path>& ps) {
            std::vector<std::string> s;
            for (const auto& p : ps) {
                s.push_back(p.string());
            }
            return s;
        };
        j["data"] = {{"source", "csv"},
                     {"features", names(features)},
                     {"labels", labels.string()},
                     {"test_features", names(test_features)},
                     {"test_labels", test_labels.string()},
                     {"train_fraction", train_fraction},
                     {"split_seed", split_seed}};
    }
    j["data"]["standardize"] = standardize;
    std::vector<std::string> method_names;
    for (auto m : methods) {
        method_names.emplace_back(evfusion::to_string(m));
    }
    j["methods"] = method_names;
    j["seeds"] = seeds;
    j["conflict_rate"] = conflict_rate;
    j["lambda_sweep"] = lambda_sweep;
    j["train"] = {{"learning_rate", train.learning_rate},
                  {"weight_decay", train.weight_decay},
                  {"annealing_step", train.annealing_step},
                  {"gamma", train.gamma},
                  {"beta", train.beta},
                  {"lambda", train.lambda},
                  {"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"hidden", train.hidden},
                  {"optimizer", train.optimizer == Optimizer::adam ? "adam" : "sgd"},
                  {"detach_fusion", train.detach_fusion}};
    return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    const auto cfg = KeyValueConfig::load(path);
    const auto base = path.parent_path();
    for (const char* key : {"fusion", "seed"}) {
        if (cfg.has(key)) {
            throw ConfigError(cfg.source() + ": key '" + key + "' is set per run; use '" +
                              (std::string(key) == "fusion" ? "methods" : "seeds") + "' instead");
        }
    }

    ExperimentConfig c;
    if (cfg.has("features")) {
        c.features = resolve_all(cfg.get_list("features", {}), base);
        c.labels = resolve_all({cfg.get_string("labels", "")}, base).front();
        if (cfg.has("test_features")) {
            c.test_features = resolve_all(cfg.get_list("test_features", {}), base);
        }
        if (cfg.has("test_labels")) {
            c.test_labels = resolve_all({cfg.get_string("test_labels", "")}, base).front();
        }
        c.train_fraction = cfg.get_double("train_fraction", c.train_fraction);
        c.split_seed = cfg.get_u64("split_seed", c.split_seed);
    } else {
        c.synthetic = synthetic_spec_from(cfg, "data_seed");
    }
    c.standardize = cfg.get_bool("standardize", c.standardize);
    c.train = train_config_from(cfg);

    if (cfg.has("methods")) {
        c.methods.clear();
        for (const auto& name : cfg.get_list("methods", {})) {
            try {
                c.methods.push_back(parse_fusion_method(name));
            } catch (const std::exception& e) {
                throw ConfigError(cfg.source() + ": " + e.what());
            }
        }
    }
    c.seeds = cfg.get_u64s("seeds", c.seeds);
    c.conflict_rate = cfg.get_double("conflict_rate", c.conflict_rate);
    c.lambda_sweep = cfg.get_doubles("lambda_sweep", c.lambda_sweep);
    if (cfg.has("output_dir")) {
        c.output_dir = resolve_all({cfg.get_string("output_dir", "")}, base).front();
    }
    cfg.reject_unknown_keys();
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.source() + ": " + e.what());
    }
    return c;
}

const MethodSummary& ExperimentReport::method(FusionMethod m) const
{
    for (const auto& s : methods) {
        if (s.method == m) {
            return s;
        }
    }
    throw std::out_of_range("method not in report: " + std::string(evfusion::to_string(m)));
}

nlohmann::json ExperimentReport::to_json(bool include_timing) const
{
    nlohmann::json j;
    j["config"] = config.to_json();
    j["methods"] = nlohmann::json::object();
    for (const auto& s : methods) {
        nlohmann::json m;
        m["accuracy_clean"] = stats_json(s.accuracy_clean);
        m["accuracy_conflict"] = stats_json(s.accuracy_conflict);
        m["uncertainty_clean"] = stats_json(s.uncertainty_clean);
        m["uncertainty_conflict"] = stats_json(s.uncertainty_conflict);
        m["auc"] = stats_json(s.auc);
        m["lambda_sweep"] = nlohmann::json::array();
        for (std::size_t i = 0; i < s.sweep.size(); ++i) {
            m["lambda_sweep"].push_back(
                {{"lambda", config.lambda_sweep[i]}, {"uncertainty_conflict", stats_json(s.sweep[i])}});
        }
        m["runs"] = nlohmann::json::array();
        for (const auto& r : s.runs) {
            const auto& e = r.evaluation;
            m["runs"].push_back({{"seed", r.seed},
                                 {"accuracy_clean", e.accuracy_clean},
                                 {"accuracy_conflict", e.accuracy_conflict},
                                 {"uncertainty_clean", stats_json(e.uncertainty_clean)},
                                 {"uncertainty_conflict", stats_json(e.uncertainty_conflict)},
                                 {"auc", e.auc},
                                 {"lambda_sweep_uncertainty_conflict", r.sweep_uncertainty},
                                 {"final_loss", r.history.empty() ? 0.0 : r.history.back().total}});
        }
        j["methods"][std::string(evfusion::to_string(s.method))] = std::move(m);
    }
    if (include_timing) {
        j["wall_time_seconds"] = wall_time_seconds;
    }
    return j;
}

void ExperimentReport::write_csv(std::ostream& out) const
{
    out << "method,seed,accuracy_clean,accuracy_conflict,uncertainty_clean_mean,uncertainty_clean_std,"
           "uncertainty_conflict_mean,uncertainty_conflict_std,auc\n";
    out << std::setprecision(10);
    for (const auto& s : methods) {
        const auto name = evfusion::to_string(s.method);
        for (const auto& r : s.runs) {
            const auto& e = r.evaluation;
            out << name << ',' << r.seed << ',' << e.accuracy_clean << ',' << e.accuracy_conflict << ','
                << e.uncertainty_clean.mean << ',' << e.uncertainty_clean.std << ',' << e.uncertainty_conflict.mean
                << ',' << e.uncertainty_conflict.std << ',' << e.auc << '\n';
        }
        // Aggregate rows: the seed column holds the statistic and the uncertainty columns the spread across seeds.
        out << name << ",mean," << s.accuracy_clean.mean << ',' << s.accuracy_conflict.mean << ','
            << s.uncertainty_clean.mean << ',' << s.uncertainty_clean.std << ',' << s.uncertainty_conflict.mean << ','
            << s.uncertainty_conflict.std << ',' << s.auc.mean << '\n';
        out << name << ",std," << s.accuracy_clean.std << ',' << s.accuracy_conflict.std << ",,,,," << s.auc.std
            << '\n';
    }
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressLog& log)
{
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    TrainTestSplit data = load_data(config);
    if (config.standardize) {
        const auto z = Standardizer::fit(data.train);
        z.apply(data.train);
        z.apply(data.test);
    }

    ExperimentReport report;
    report.config = config;
    for (FusionMethod method : config.methods) {
        MethodSummary summary;
        summary.method = method;
        for (std::uint64_t seed : config.seeds) {
            TrainConfig tc = config.train;
            tc.fusion = method;
            tc.seed = seed;
            RunResult run;
            run.seed = seed;
            try {
                auto trained = train(data.train, tc);
                run.network = std::move(trained.network);
                run.history = std::move(trained.history);
            } catch (const std::exception& e) {
                std::ostringstream os;
                os << "training failed for method " << evfusion::to_string(method) << ", seed " << seed << ": "
                   << e.what();
                throw TrainingError(os.str());
            }
            const MultimodalBatch conflicted = inject_conflict(data.test, config.conflict_rate, seed);
            run.evaluation = evaluate(run.network, data.test, conflicted, method, tc.lambda);

            const auto evidence = view_evidence(run.network, conflicted);
            for (double lambda : config.lambda_sweep) {
                const auto p = fuse_predictions(evidence, FusionMethod::dbf, lambda);
                std::vector<double> flagged;
                for (std::size_t i = 0; i < p.uncertainty.size(); ++i) {
                    if (conflicted.conflict[i]) {
                        flagged.push_back(p.uncertainty[i]);
                    }
                }
                run.sweep_uncertainty.push_back(mean_std(flagged).mean);
            }
            if (log) {
                std::ostringstream os;
                os << std::fixed << std::setprecision(4) << evfusion::to_string(method) << " seed " << seed
                   << ": acc_clean=" << run.evaluation.accuracy_clean << " auc=" << run.evaluation.auc;
                log(os.str());
            }
            summary.runs.push_back(std::move(run));
        }
        summary.accuracy_clean = aggregate(summary.runs, [](const RunResult& r) { return r.evaluation.accuracy_clean; });
        summary.accuracy_conflict =
            aggregate(summary.runs, [](const RunResult& r) { return r.evaluation.accuracy_conflict; });
        summary.uncertainty_clean =
            aggregate(summary.runs, [](const RunResult& r) { return r.evaluation.uncertainty_clean.mean; });
        summary.uncertainty_conflict =
            aggregate(summary.runs, [](const RunResult& r) { return r.evaluation.uncertainty_conflict.mean; });
        summary.auc = aggregate(summary.runs, [](const RunResult& r) { return r.evaluation.auc; });
        for (std::size_t i = 0; i < config.lambda_sweep.size(); ++i) {
            std::vector<double> values;
            for (const auto& r : summary.runs) {
                values.push_back(r.sweep_uncertainty[i]);
            }
            summary.sweep.push_back(mean_std(values));
        }
        report.methods.push_back(std::move(summary));
    }
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

void write_uncertainty_svg(std::ostream& out, std::span<const double> clean, std::span<const double> conflict,
                           const std::string& title)
{
    constexpr double width = 600.0;
    constexpr double height = 360.0;
    constexpr double left = 60.0;
    constexpr double right = 20.0;
    constexpr double top = 40.0;
    constexpr double bottom = 50.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    const double y0 = height - bottom;

    const auto hc = histogram(clean);
    const auto hx = histogram(conflict);
    double peak = 0.0;
    for (std::size_t i = 0; i < hc.size(); ++i) {
        peak = std::max({peak, hc[i], hx[i]});
    }
    if (peak <= 0.0) {
        peak = 1.0;
    }
    const double scale = plot_h / peak;

    out << std::fixed << std::setprecision(2);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">"
        << title << "</text>\n";
    write_svg_bars(out, hc, scale, left, y0, plot_w, "#1f77b4");
    write_svg_bars(out, hx, scale, left, y0, plot_w, "#d62728");
    out << "<line x1=\"" << left << "\" y1=\"" << y0 << "\" x2=\"" << left + plot_w << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double x = left + plot_w * t / 5.0;
        out << "<text x=\"" << x << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">"
            << std::setprecision(1) << t / 5.0 << std::setprecision(2) << "</text>\n";
    }
    out << "<text x=\"" << left << "\" y=\"" << top - 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << "max fraction " << std::setprecision(3) << peak << std::setprecision(2) << "</text>\n";
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">fused uncertainty u</text>\n";
    out << "<rect x=\"" << left + plot_w - 130 << "\" y=\"" << top + 4
        << "\" width=\"12\" height=\"12\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n";
    out << "<text x=\"" << left + plot_w - 112 << "\" y=\"" << top + 14
        << "\" font-family=\"sans-serif\" font-size=\"12\">clean (" << clean.size() << ")</text>\n";
    out << "<rect x=\"" << left + plot_w - 130 << "\" y=\"" << top + 22
        << "\" width=\"12\" height=\"12\" fill=\"#d62728\" fill-opacity=\"0.5\"/>\n";
    out << "<text x=\"" << left + plot_w - 112 << "\" y=\"" << top + 32
        << "\" font-family=\"sans-serif\" font-size=\"12\">conflict (" << conflict.size() << ")</text>\n";
    out << "</svg>\n";
}

void write_experiment_artifacts(const ExperimentReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const auto open = [&](const std::string& name) {
        std::ofstream out(dir / name);
        if (!out) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        return out;
    };
    open("report.json") << report.to_json().dump(2) << '\n';
    {
        auto csv = open("report.csv");
        report.write_csv(csv);
    }
    for (const auto& s : report.methods) {
        const std::string name(evfusion::to_string(s.method));
        std::vector<double> clean;
        std::vector<double> conflict;
        for (const auto& r : s.runs) {
            const auto& e = r.evaluation;
            clean.insert(clean.end(), e.clean_scores.begin(), e.clean_scores.end());
            conflict.insert(conflict.end(), e.conflict_scores.begin(), e.conflict_scores.end());
        }
        auto svg = open("uncertainty_" + name + ".svg");
        write_uncertainty_svg(svg, clean, conflict, name + " fused uncertainty: clean vs conflict test sets");
    }
    for (std::uint64_t seed : report.config.seeds) {
        std::vector<LabelledHistory> runs;
        for (const auto& s : report.methods) {
            for (const auto& r : s.runs) {
                if (r.seed == seed) {
                    runs.push_back({std::string(evfusion::to_string(s.method)), r.history});
                }
            }
        }
        auto csv = open("loss_history_" + std::to_string(seed) + ".csv");
        write_loss_history_csv(csv, runs);
    }
}

}  // namespace evfusion
