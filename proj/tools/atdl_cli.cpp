// Command-line front end: pretrain sources, transfer, run baselines, screen
// candidate source models, convert datasets, evaluate saved models.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atdl/config.hpp"
#include "atdl/errors.hpp"
#include "atdl/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<double> epsilon;
    bool literal_sigma = false;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App *cmd, CommonFlags &flags, bool needs_config = true) {
    auto *opt = cmd->add_option("--config", flags.config_path, "experiment config file");
    if (needs_config) opt->required();
    cmd->add_option("--seed", [&flags](const CLI::results_t &r) {
        flags.seed = std::stoull(r[0]);
        return true;
    }, "override experiment.seed");
    cmd->add_option("--out", flags.out_dir, "override output directory");
    cmd->add_option("--epsilon", [&flags](const CLI::results_t &r) {
        flags.epsilon = std::stod(r[0]);
        return true;
    }, "override covariance regularizer");
    cmd->add_flag("--literal-sigma", flags.literal_sigma,
                  "score with the covariance itself instead of its inverse");
    cmd->add_option("--threads", [&flags](const CLI::results_t &r) {
        flags.threads = std::stoull(r[0]);
        return true;
    }, "worker threads for grids and screening");
}

atdl::ExperimentConfig load_config(const CommonFlags &flags) {
    const atdl::Config cfg = atdl::Config::parse_file(flags.config_path);
    atdl::ExperimentConfig e = atdl::ExperimentConfig::from_config(cfg);
    if (flags.seed) {
        e.seed = *flags.seed;
        e.plan.seed = *flags.seed;
    }
    if (!flags.out_dir.empty()) e.out_dir = flags.out_dir;
    if (flags.epsilon) e.epsilon = *flags.epsilon;
    if (flags.literal_sigma) e.literal_sigma = true;
    if (flags.threads) e.threads = *flags.threads;
    return e;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"All-transfer training, screening, and evaluation"};
    app.require_subcommand(1);

    CommonFlags pretrain_flags, transfer_flags, baseline_flags, screen_flags;

    auto *pretrain = app.add_subcommand("pretrain", "train a source model");
    add_common(pretrain, pretrain_flags);

    auto *transfer = app.add_subcommand("transfer", "transfer a source model to the target task");
    add_common(transfer, transfer_flags);
    std::string transfer_source;
    transfer->add_option("source_model", transfer_source, "source model file")->required();

    auto *baselines = app.add_subcommand("baselines", "run the comparison methods");
    add_common(baselines, baseline_flags);
    std::string baseline_source;
    baselines->add_option("--source-model", baseline_source,
                          "source model for agrawal/oquab");

    auto *screen = app.add_subcommand("screen", "rank candidate source models");
    add_common(screen, screen_flags);
    std::string screen_dir;
    bool with_performance = false;
    screen->add_option("candidates", screen_dir, "directory of candidate models")->required();
    screen->add_flag("--with-performance", with_performance,
                     "also fine-tune each candidate and report the correlation");

    auto *convert = app.add_subcommand("convert", "convert a dataset into the container format");
    std::string convert_kind, convert_out, convert_resize;
    std::vector<std::string> convert_inputs;
    bool convert_gray = false;
    convert->add_option("kind", convert_kind, "idx | cifar10 | csv")->required();
    convert->add_option("inputs", convert_inputs, "input files")->required();
    convert->add_option("--out", convert_out, "output container path")->required();
    convert->add_flag("--grayscale", convert_gray, "convert RGB to luma");
    convert->add_option("--resize", convert_resize, "resize to HxW");

    auto *eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
    std::string eval_model, eval_data, eval_out = "eval_report";
    bool eval_literal = false;
    eval->add_option("model", eval_model, "model file")->required();
    eval->add_option("data", eval_data, "dataset reference (kind:path)")->required();
    eval->add_option("--out", eval_out, "report base name");
    eval->add_flag("--literal-sigma", eval_literal, "printed-form distance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pretrain->parsed()) return atdl::cmd_pretrain(load_config(pretrain_flags));
        if (transfer->parsed())
            return atdl::cmd_transfer(load_config(transfer_flags), transfer_source);
        if (baselines->parsed())
            return atdl::cmd_baselines(load_config(baseline_flags), baseline_source);
        if (screen->parsed())
            return atdl::cmd_screen(load_config(screen_flags), screen_dir, with_performance);
        if (convert->parsed()) {
            std::size_t rh = 0, rw = 0;
            if (!convert_resize.empty()) {
                const auto x = convert_resize.find('x');
                if (x == std::string::npos) throw atdl::ArgumentError("--resize expects HxW");
                rh = std::stoull(convert_resize.substr(0, x));
                rw = std::stoull(convert_resize.substr(x + 1));
            }
            return atdl::cmd_convert(convert_kind, convert_inputs, convert_out, convert_gray, rh,
                                     rw);
        }
        if (eval->parsed()) return atdl::cmd_eval(eval_model, eval_data, eval_out, eval_literal);
    } catch (const atdl::DivergenceError &e) {
        std::cerr << "numeric error: " << e.what() << " (epoch " << e.epoch << ", learning rate "
                  << e.learning_rate << ")\n";
        return kExitNumeric;
    } catch (const atdl::SingularityError &e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const atdl::FormatError &e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const atdl::ArgumentError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
