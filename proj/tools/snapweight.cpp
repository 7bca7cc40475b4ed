#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snapweight/baselines.hpp"
#include "snapweight/errors.hpp"
#include "snapweight/eval.hpp"
#include "snapweight/io.hpp"
#include "snapweight/pipeline.hpp"
#include "snapweight/sim.hpp"
#include "snapweight/training.hpp"

namespace fs = std::filesystem;
using namespace snapweight;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "Run configuration (JSON); defaults apply when omitted")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Override the top-level seed");
    cmd->add_option("-j,--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

RunConfig load_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.jobs) cfg.jobs = *c.jobs;
    cfg.finalize();
    return cfg;
}

void log(const std::string& msg) { std::cerr << msg << '\n'; }

std::vector<TrainingSample> samples_for(const Dataset& data, Split split, FeatureSet set, const RunConfig& cfg,
                                        std::size_t stride) {
    const auto epochs = process_split(data, split, cfg.pipeline, cfg.jobs);
    return make_samples(epochs, set, stride);
}

WeightPredictor load_model(const std::string& path, Strategy strategy, FeatureSet expected) {
    if (path.empty() || !fs::exists(path))
        throw ConfigInvalid(std::string(to_string(strategy)),
                            path.empty() ? "strategy needs a model file" : "model file '" + path + "' not found");
    Checkpoint c = load_checkpoint(path);
    if (c.result.best.feature_set != expected)
        throw ConfigInvalid(std::string(to_string(strategy)), "model '" + path + "' was trained on feature set '" +
                                                                 std::string(to_string(c.result.best.feature_set)) +
                                                                 "'");
    return c.result.best;
}

void print_table(const std::vector<SummaryRow>& rows) {
    std::printf("%-16s %8s %8s %9s %9s %9s %9s %9s %9s\n", "strategy", "epochs", "failed", "h50_m", "h68_m",
                "h95_m", "v50_m", "v68_m", "v95_m");
    for (const auto& r : rows)
        std::printf("%-16s %8zu %8zu %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f\n", r.strategy.c_str(), r.count,
                    r.failures, r.h.q50, r.h.q68, r.h.q95, r.v.q50, r.v.q68, r.v.q95);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-epoch GNSS positioning with learned measurement weights"};
    app.require_subcommand(1);

    // config
    Common cfg_opts;
    auto* config_cmd = app.add_subcommand("config", "Print the fully expanded run configuration");
    add_common(config_cmd, cfg_opts);

    // simulate
    Common sim_opts;
    std::string sim_out;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic campaign dataset");
    add_common(sim_cmd, sim_opts);
    sim_cmd->add_option("-o,--out", sim_out, "Dataset file to write")->required();

    // featurize
    Common feat_opts;
    std::string feat_dataset, feat_out;
    std::vector<std::string> feat_splits = {"train", "validation", "test"};
    auto* feat_cmd = app.add_subcommand("featurize", "Write per-epoch feature rows and labels");
    add_common(feat_cmd, feat_opts);
    feat_cmd->add_option("-d,--dataset", feat_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    feat_cmd->add_option("-o,--out", feat_out, "Feature cache file to write")->required();
    feat_cmd->add_option("--splits", feat_splits, "Splits to featurize")
        ->check(CLI::IsMember({"train", "validation", "test"}));

    // train
    Common train_opts;
    std::string train_dataset, train_out, train_loss, train_resume, train_set = "full";
    std::optional<std::size_t> train_epochs, train_patience, train_hidden;
    auto* train_cmd = app.add_subcommand("train", "Train a weighting network on the train split");
    add_common(train_cmd, train_opts);
    train_cmd->add_option("-d,--dataset", train_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("-o,--out", train_out, "Checkpoint file to write")->required();
    train_cmd->add_option("--feature-set", train_set, "full, residual_only or label_leak")
        ->check(CLI::IsMember({"full", "residual_only", "label_leak"}));
    train_cmd->add_option("--loss-csv", train_loss, "Write the loss curve (epoch,train_loss,val_loss)");
    train_cmd->add_option("--resume", train_resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
    train_cmd->add_option("--epochs", train_epochs, "Override train.max_epochs");
    train_cmd->add_option("--patience", train_patience, "Override train.patience");
    train_cmd->add_option("--hidden", train_hidden, "Override train.hidden_width");

    // evaluate
    Common eval_opts;
    std::string eval_dataset, eval_out, eval_full, eval_residual;
    std::vector<std::string> eval_strategies;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compare weighting strategies on the test split");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("-d,--dataset", eval_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("-o,--out-dir", eval_out, "Directory for errors.csv and summary.json")->required();
    eval_cmd->add_option("--feature-model", eval_full, "Checkpoint for feature_matrix");
    eval_cmd->add_option("--residual-model", eval_residual, "Checkpoint for residual_matrix");
    eval_cmd->add_option("--strategies", eval_strategies, "Override evaluate.strategies")
        ->check(CLI::IsMember({"ground_truth", "feature_matrix", "residual_matrix", "sota_fde", "equal_weights"}));

    // report
    std::string report_summary;
    auto* report_cmd = app.add_subcommand("report", "Render a summary.json as a table");
    report_cmd->add_option("summary", report_summary, "summary.json from evaluate")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*config_cmd) {
            std::cout << dump_run_config(load_config(cfg_opts));
        } else if (*sim_cmd) {
            const RunConfig cfg = load_config(sim_opts);
            const Campaign c = generate_campaign(cfg.simulation);
            write_dataset(c.dataset, sim_out);
            log("wrote " + std::to_string(c.dataset.sessions.size()) + " sessions, " +
                std::to_string(c.dataset.epochs.size()) + " epochs to " + sim_out);
        } else if (*feat_cmd) {
            const RunConfig cfg = load_config(feat_opts);
            const Dataset data = read_dataset(feat_dataset);
            bool append = false;
            for (const auto& name : feat_splits) {
                const Split split = *parse_split(name);
                const auto epochs = process_split(data, split, cfg.pipeline, cfg.jobs);
                write_feature_cache(epochs, split, data.seed, feat_out, append);
                append = true;
                log(name + ": " + std::to_string(epochs.size()) + " epochs");
            }
        } else if (*train_cmd) {
            RunConfig cfg = load_config(train_opts);
            if (train_epochs) cfg.train.max_epochs = *train_epochs;
            if (train_patience) cfg.train.patience = *train_patience;
            if (train_hidden) cfg.train.hidden_width = *train_hidden;
            cfg.finalize();
            const FeatureSet set = *parse_feature_set(train_set);
            std::optional<Checkpoint> resume;
            if (!train_resume.empty()) {
                resume = load_checkpoint(train_resume);
                if (resume->result.best.feature_set != set)
                    throw ConfigInvalid("feature_set", "does not match the checkpoint being resumed");
            }
            const Dataset data = read_dataset(train_dataset);
            const auto train_set_samples = samples_for(data, Split::Train, set, cfg, cfg.train_stride);
            const auto val_samples = samples_for(data, Split::Validation, set, cfg, 1);
            log("train " + std::to_string(train_set_samples.size()) + " epochs, validation " +
                std::to_string(val_samples.size()));
            Checkpoint out;
            out.result = train(train_set_samples, val_samples, set, cfg.train, resume ? &resume->result : nullptr);
            out.config = cfg.train;
            out.pipeline = cfg.pipeline;
            out.dataset_seed = data.seed;
            save_checkpoint(out, train_out);
            if (!train_loss.empty()) write_loss_csv(out.result.state.history, train_loss);
            const auto& st = out.result.state;
            log("epochs " + std::to_string(st.epochs_done) + ", best validation loss " + format_double(st.best_val) +
                " at epoch " + std::to_string(st.best_epoch) + (out.result.stopped_early ? " (early stop)" : ""));
        } else if (*eval_cmd) {
            RunConfig cfg = load_config(eval_opts);
            if (!eval_strategies.empty()) {
                cfg.strategies.clear();
                for (const auto& s : eval_strategies) cfg.strategies.push_back(*parse_strategy(s));
            }
            StrategyModels models;
            models.label_clock = cfg.pipeline.label_clock;
            models.solver = cfg.pipeline.solver;
            models.fde = cfg.fde;
            for (Strategy s : cfg.strategies) {
                if (s == Strategy::FeatureMatrix) models.feature_matrix = load_model(eval_full, s, FeatureSet::Full);
                if (s == Strategy::ResidualMatrix)
                    models.residual_matrix = load_model(eval_residual, s, FeatureSet::ResidualOnly);
            }
            const Dataset data = read_dataset(eval_dataset);
            const SotaCalibration cal =
                calibrate_sota(calibration_samples(data, Split::Train, cfg.pipeline), cfg.calibration);
            models.fde.sota = cal.params;
            log("calibrated variance model: zenith " + format_double(cal.params.zenith) + ", cn0 " +
                format_double(cal.params.cn0) + ", accel " + format_double(cal.params.accel) +
                (cal.accel_identified ? "" : " (acceleration term not identifiable)"));
            const auto test = process_split(data, Split::Test, cfg.pipeline, cfg.jobs);
            const ComparisonReport report = compare_strategies(test, cfg.strategies, models, cfg.jobs);
            fs::create_directories(eval_out);
            write_error_csv(report, fs::path(eval_out) / "errors.csv");
            write_summary_json(report, cfg.seed, fs::path(eval_out) / "summary.json");
            print_table(read_summary_json(fs::path(eval_out) / "summary.json"));
        } else if (*report_cmd) {
            print_table(read_summary_json(report_summary));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
