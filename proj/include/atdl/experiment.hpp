#ifndef ATDL_EXPERIMENT_HPP
#define ATDL_EXPERIMENT_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atdl/atdl.hpp"
#include "atdl/baselines.hpp"
#include "atdl/config.hpp"
#include "atdl/dataset.hpp"
#include "atdl/metrics.hpp"
#include "atdl/model_io.hpp"

namespace atdl {

inline constexpr const char *kToolVersion = "atdl-1.0.0";

struct GridPoint {
    double lambda = 0.01;
    double mu = 0.99;
    std::size_t minibatch = 100;
};

struct OptimizerSettings {
    std::vector<double> lambdas{1e-3, 5e-3, 1e-2, 5e-2};
    std::vector<double> mus{0.7, 0.99};
    std::vector<std::size_t> minibatches{10, 100};
    GridPoint fixed; // used where no grid search runs (pretraining, screening)
    std::size_t pretrain_epochs = 50;
    std::size_t finetune_epochs = 100;
    std::size_t target_epochs = 100;
    std::size_t momentum_ramp = 0; // 0 = one epoch of updates

    std::vector<GridPoint> grid() const;
};

/// One side of an experiment: where the data lives and how to whip it into
/// model-ready shape.
struct DataSpec {
    std::string ref; // "container:p" | "idx:img,lab" | "cifar10:p,..." | "csv:p"
    bool grayscale = false;
    std::size_t resize_h = 0, resize_w = 0; // 0 = keep
    std::size_t subsample = 0;              // 0 = all rows
    std::vector<std::size_t> per_class;     // non-empty = per-class draw
    std::vector<std::uint32_t> keep_classes;
    bool relabel = false;
};

struct ExperimentConfig {
    std::uint64_t config_hash = 0;

    DataSpec source;
    std::string source_output = "linear"; // or "softmax" for baseline stacks
    std::vector<std::size_t> hidden_dims{100, 100, 100};
    CorruptionSpec corruption;
    bool tied_decoder = false;

    DataSpec target_train;
    std::optional<DataSpec> target_test;

    SplitPlan plan; // folds for CV mode, or the selection slice
    std::vector<std::string> methods{"atdl"};
    OptimizerSettings opt;
    std::uint64_t seed = 42;

    std::optional<double> epsilon; // empty = auto per relation set
    bool literal_sigma = false;
    bool diagonal_cov = false;
    bool recompute_relations = false;
    double pca_energy = 0.995;
    std::size_t oquab_adapt_dim = 0;

    std::string out_dir = ".";
    std::size_t threads = 1;

    static ExperimentConfig from_config(const Config &cfg);
};

Dataset load_data(const DataSpec &spec, std::uint64_t seed);

/// Runs `fn(0..n-1)` across at most `threads` workers; exceptions surface on
/// the caller thread.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)> &fn);

/// Writes `<base>.tsv` (machine-readable) and `<base>.txt` (aligned), both
/// prefixed with provenance comment lines. Byte-deterministic.
void write_table(const std::string &base, const std::vector<std::string> &provenance,
                 const std::vector<std::string> &header,
                 const std::vector<std::vector<std::string>> &rows);

struct FoldRecord {
    std::size_t grid_id = 0;
    GridPoint point;
    std::size_t fold = 0;
    double accuracy = 0.0;
    MetricReport metrics;
    Confusion confusion;
};

struct MethodResult {
    std::string method;
    GridPoint best;
    double selection_accuracy = 0.0; // mean over selection folds
    std::vector<FoldRecord> records;
    MetricReport final_metrics; // held-out test, or mean over CV folds
    double final_accuracy = 0.0;
};

/// Grid search + evaluation for ATDL and each baseline on shared folds.
/// When `test` is present the folds only pick the grid point and the final
/// model trains on all of `train` and reports on `test`; otherwise metrics
/// are cross-validated means.
std::vector<MethodResult> run_methods(const ExperimentConfig &cfg,
                                      const std::vector<std::string> &methods,
                                      const SourceModel *source_linear,
                                      const SourceModel *source_baseline,
                                      const Matrix *source_features, const Dataset &train,
                                      const Dataset *test,
                                      std::vector<ModelFile> *final_models = nullptr);

int cmd_pretrain(const ExperimentConfig &cfg);
int cmd_transfer(const ExperimentConfig &cfg, const std::string &source_model_path);
int cmd_baselines(const ExperimentConfig &cfg, const std::string &source_model_path);
int cmd_screen(const ExperimentConfig &cfg, const std::string &candidate_dir,
               bool with_performance);
int cmd_convert(const std::string &kind, const std::vector<std::string> &inputs,
                const std::string &out_path, bool grayscale, std::size_t resize_h,
                std::size_t resize_w);
int cmd_eval(const std::string &model_path, const std::string &dataset_ref,
             const std::string &out_base, bool literal_sigma);

} // namespace atdl

#endif
