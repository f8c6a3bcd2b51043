#include "atdl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "atdl/errors.hpp"
#include "atdl/stats.hpp"

namespace fs = std::filesystem;

namespace atdl {

namespace {

std::string format_double(double v, int precision = 6) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << v;
    return os.str();
}

std::string format_sci(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string hex_hash(std::uint64_t h) {
    std::ostringstream os;
    os << "0x" << std::hex << h;
    return os.str();
}

DataSpec parse_data_spec(const Config &cfg, const std::string &section,
                         const std::string &data_key) {
    DataSpec spec;
    spec.ref = cfg.get_string(section + "." + data_key);
    spec.grayscale = cfg.get_bool(section + ".grayscale", false);
    const std::string resize = cfg.get_string(section + ".resize", "");
    if (!resize.empty()) {
        const auto x = resize.find('x');
        if (x == std::string::npos)
            throw ArgumentError(section + ".resize must look like HxW, got '" + resize + "'");
        spec.resize_h = std::stoull(resize.substr(0, x));
        spec.resize_w = std::stoull(resize.substr(x + 1));
    }
    spec.subsample = cfg.get_u64(section + ".subsample", 0);
    if (cfg.has(section + ".per_class")) spec.per_class = cfg.get_sizes(section + ".per_class");
    if (cfg.has(section + ".keep_classes")) {
        for (std::size_t v : cfg.get_sizes(section + ".keep_classes"))
            spec.keep_classes.push_back(static_cast<std::uint32_t>(v));
    }
    spec.relabel = cfg.get_bool(section + ".relabel", false);
    return spec;
}

SplitPlan parse_split(const std::string &text, std::uint64_t seed) {
    SplitPlan plan;
    plan.seed = seed;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "kfold") {
        plan.kind = SplitKind::KFold;
        plan.folds = arg.empty() ? 2 : std::stoull(arg);
    } else if (kind == "holdout") {
        plan.kind = SplitKind::Holdout;
        plan.holdout_fraction = arg.empty() ? 0.1 : std::stod(arg);
    } else if (kind == "per_class") {
        plan.kind = SplitKind::PerClassSubsample;
        for (const std::string &c : split_list(arg)) plan.per_class_counts.push_back(std::stoull(c));
    } else {
        throw ArgumentError("unknown split kind '" + kind + "' (kfold|holdout|per_class)");
    }
    return plan;
}

TrainConfig stage_config(const GridPoint &gp, std::size_t epochs, std::uint64_t seed,
                         std::size_t momentum_ramp) {
    TrainConfig cfg;
    cfg.lambda0 = gp.lambda;
    cfg.mu_final = gp.mu;
    cfg.minibatch = gp.minibatch;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.momentum_ramp_iters = momentum_ramp;
    return cfg;
}

struct PointOutcome {
    Confusion confusion;
    double accuracy = 0.0;
};

PointOutcome evaluate_predictions(const std::vector<std::size_t> &preds,
                                  const std::vector<std::uint32_t> &truths,
                                  std::size_t num_classes) {
    std::vector<std::size_t> t(truths.begin(), truths.end());
    PointOutcome out;
    // Binary tasks report the diagnostic panel against class 0 as positive.
    if (num_classes == 2)
        out.confusion = confusion(preds, t, std::size_t{0});
    else
        out.confusion = confusion(preds, t);
    out.accuracy = accuracy(out.confusion);
    return out;
}

Confusion pool(const Confusion &a, const Confusion &b) {
    if (a.total() == 0) return b;
    Confusion out = a;
    if (a.binary != b.binary) throw ArgumentError("cannot pool mismatched confusions");
    if (a.binary) {
        out.tp += b.tp;
        out.fp += b.fp;
        out.fn += b.fn;
        out.tn += b.tn;
    } else {
        if (a.num_classes != b.num_classes)
            throw ArgumentError("cannot pool mismatched confusions");
        for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
    }
    return out;
}

} // namespace

std::vector<GridPoint> OptimizerSettings::grid() const {
    std::vector<GridPoint> out;
    for (double lambda : lambdas)
        for (double mu : mus)
            for (std::size_t mb : minibatches) out.push_back({lambda, mu, mb});
    return out;
}

ExperimentConfig ExperimentConfig::from_config(const Config &cfg) {
    ExperimentConfig e;
    e.config_hash = cfg.hash();

    if (cfg.has("source.data")) e.source = parse_data_spec(cfg, "source", "data");
    e.source_output = cfg.get_string("source.output", "linear");
    if (e.source_output != "linear" && e.source_output != "softmax")
        throw ArgumentError("source.output must be linear or softmax");

    if (cfg.has("network.hidden_dims")) e.hidden_dims = cfg.get_sizes("network.hidden_dims");
    const std::string corruption = cfg.get_string("network.corruption", "masking:0.3");
    {
        const auto colon = corruption.find(':');
        const std::string kind = corruption.substr(0, colon);
        if (kind == "masking")
            e.corruption.kind = CorruptionKind::Masking;
        else if (kind == "gaussian")
            e.corruption.kind = CorruptionKind::Gaussian;
        else
            throw ArgumentError("network.corruption must be masking:RATE or gaussian:STDDEV");
        e.corruption.rate = colon == std::string::npos ? 0.3 : std::stod(corruption.substr(colon + 1));
        e.corruption.validate();
    }
    e.tied_decoder = cfg.get_bool("network.tied_decoder", false);

    if (cfg.has("target.train")) e.target_train = parse_data_spec(cfg, "target", "train");
    if (cfg.has("target.test")) {
        DataSpec test = parse_data_spec(cfg, "target", "test");
        // The train-side row filters do not apply to the test reference.
        test.subsample = cfg.get_u64("target.test_subsample", 0);
        test.per_class.clear();
        if (cfg.has("target.test_per_class")) test.per_class = cfg.get_sizes("target.test_per_class");
        e.target_test = test;
    }

    e.seed = cfg.get_u64("experiment.seed", 42);
    e.plan = parse_split(cfg.get_string("experiment.split", "kfold:2"), e.seed);
    if (cfg.has("experiment.methods")) e.methods = split_list(cfg.get_string("experiment.methods"));

    if (cfg.has("optimizer.lambdas")) e.opt.lambdas = cfg.get_doubles("optimizer.lambdas");
    if (cfg.has("optimizer.mus")) e.opt.mus = cfg.get_doubles("optimizer.mus");
    if (cfg.has("optimizer.minibatches")) e.opt.minibatches = cfg.get_sizes("optimizer.minibatches");
    e.opt.fixed.lambda = cfg.get_double("optimizer.lambda", 0.01);
    e.opt.fixed.mu = cfg.get_double("optimizer.mu", 0.99);
    e.opt.fixed.minibatch = cfg.get_u64("optimizer.minibatch", 100);
    e.opt.pretrain_epochs = cfg.get_u64("optimizer.pretrain_epochs", 50);
    e.opt.finetune_epochs = cfg.get_u64("optimizer.finetune_epochs", 100);
    e.opt.target_epochs = cfg.get_u64("optimizer.target_epochs", 100);
    e.opt.momentum_ramp = cfg.get_u64("optimizer.momentum_ramp", 0);

    const std::string eps = cfg.get_string("experiment.epsilon", "auto");
    if (eps != "auto") e.epsilon = std::stod(eps);
    e.literal_sigma = cfg.get_bool("experiment.literal_sigma", false);
    e.diagonal_cov = cfg.get_bool("experiment.diagonal_cov", false);
    e.recompute_relations = cfg.get_bool("experiment.recompute_relations", false);
    e.pca_energy = cfg.get_double("experiment.pca_energy", 0.995);
    e.oquab_adapt_dim = cfg.get_u64("experiment.oquab_adapt_dim", 0);
    e.out_dir = cfg.get_string("experiment.out_dir", ".");
    e.threads = cfg.get_u64("experiment.threads", 1);
    return e;
}

Dataset load_data(const DataSpec &spec, std::uint64_t seed) {
    const auto colon = spec.ref.find(':');
    if (colon == std::string::npos)
        throw ArgumentError("dataset reference '" + spec.ref +
                            "' needs a kind prefix (container:|idx:|cifar10:|csv:)");
    const std::string kind = spec.ref.substr(0, colon);
    const std::vector<std::string> paths = split_list(spec.ref.substr(colon + 1));

    Dataset d;
    if (kind == "container") {
        if (paths.size() != 1) throw ArgumentError("container: takes exactly one path");
        d = load_container(paths[0]);
    } else if (kind == "idx") {
        if (paths.size() != 2) throw ArgumentError("idx: takes IMAGES,LABELS");
        d = load_idx(paths[0], paths[1]);
    } else if (kind == "cifar10") {
        if (paths.empty()) throw ArgumentError("cifar10: takes at least one batch path");
        d = load_cifar10(paths);
    } else if (kind == "csv") {
        if (paths.size() != 1) throw ArgumentError("csv: takes exactly one path");
        d = load_csv(paths[0]);
    } else {
        throw ArgumentError("unknown dataset kind '" + kind + "'");
    }

    if (!spec.keep_classes.empty()) d = filter_classes(d, spec.keep_classes, spec.relabel);
    if (spec.grayscale) d = to_grayscale(d);
    if (spec.resize_h > 0) d = resize(d, spec.resize_h, spec.resize_w);
    if (!spec.per_class.empty()) {
        SplitPlan draw;
        draw.kind = SplitKind::PerClassSubsample;
        draw.per_class_counts = spec.per_class;
        draw.seed = seed;
        d = split(d, draw)[0].train;
    } else if (spec.subsample > 0 && spec.subsample < d.rows()) {
        d = subsample(d, spec.subsample, seed);
    }
    return d;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)> &fn) {
    if (n == 0) return;
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void write_table(const std::string &base, const std::vector<std::string> &provenance,
                 const std::vector<std::string> &header,
                 const std::vector<std::vector<std::string>> &rows) {
    // Machine-readable.
    {
        std::ofstream tsv(base + ".tsv", std::ios::trunc);
        if (!tsv) throw FormatError("cannot write " + base + ".tsv");
        for (const auto &line : provenance) tsv << "# " << line << "\n";
        for (std::size_t c = 0; c < header.size(); ++c)
            tsv << header[c] << (c + 1 < header.size() ? '\t' : '\n');
        for (const auto &row : rows)
            for (std::size_t c = 0; c < row.size(); ++c)
                tsv << row[c] << (c + 1 < row.size() ? '\t' : '\n');
    }
    // Aligned.
    std::vector<std::size_t> widths(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto &row : rows)
        for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    std::ofstream txt(base + ".txt", std::ios::trunc);
    if (!txt) throw FormatError("cannot write " + base + ".txt");
    for (const auto &line : provenance) txt << "# " << line << "\n";
    auto emit = [&](const std::vector<std::string> &row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            txt << row[c];
            if (c + 1 < row.size())
                txt << std::string(widths[c] - row[c].size() + 2, ' ');
        }
        txt << "\n";
    };
    emit(header);
    for (const auto &row : rows) emit(row);
}

namespace {

struct MethodRun {
    std::vector<std::size_t> predictions;
    Network trained; // final network (for persistence)
    std::optional<RelationSet> relations;
    std::optional<PcaModel> pca;
    std::size_t pca_dims = 0;
};

// Trains one method at one grid point and classifies `test_x`.
MethodRun run_one(const std::string &method, const ExperimentConfig &cfg, const GridPoint &gp,
                  const SourceModel *source_linear, const SourceModel *source_baseline,
                  const Matrix *source_features, const Dataset &train, const Matrix &test_x,
                  const RelationSet *cached_relations) {
    const std::size_t k = train.num_classes();
    const TrainConfig pre = stage_config(gp, cfg.opt.pretrain_epochs, cfg.seed, cfg.opt.momentum_ramp);
    const TrainConfig fine = stage_config(gp, cfg.opt.finetune_epochs, cfg.seed, cfg.opt.momentum_ramp);
    const TrainConfig tgt = stage_config(gp, cfg.opt.target_epochs, cfg.seed, cfg.opt.momentum_ramp);

    MethodRun run;
    if (method == "atdl") {
        if (!source_linear) throw ArgumentError("atdl needs a linear-output source model");
        RelationSet rel;
        if (cached_relations)
            rel = *cached_relations;
        else {
            rel = compute_relations(*source_linear, train.x, train.labels, k, 0.0,
                                    cfg.diagonal_cov);
            rel.epsilon = cfg.epsilon ? *cfg.epsilon : auto_epsilon(rel);
        }
        TargetModel model =
            finetune_target(*source_linear, rel, train.x, train.labels, tgt,
                            cfg.recompute_relations);
        try {
            run.predictions = classify_batch(model, test_x, cfg.literal_sigma);
        } catch (const SingularityError &e) {
            throw SingularityError(std::string(e.what()) + " (suggested epsilon: " +
                                   format_sci(auto_epsilon(model.relations)) + ")");
        }
        run.relations = std::move(model.relations);
        run.trained = std::move(model.net);
        return run;
    }

    BaselineClassifier clf;
    if (method == "non_transfer") {
        clf = non_transfer(train.x, train.labels, k, cfg.hidden_dims, cfg.corruption, pre, fine);
    } else if (method == "ssl") {
        if (!source_features) throw ArgumentError("ssl needs the source dataset's features");
        clf = ssl(*source_features, train.x, train.labels, k, cfg.hidden_dims, cfg.corruption,
                  pre, fine);
    } else if (method == "agrawal") {
        if (!source_baseline) throw ArgumentError("agrawal needs a source model");
        clf = agrawal(*source_baseline, train.x, train.labels, k, fine);
    } else if (method == "oquab") {
        if (!source_baseline) throw ArgumentError("oquab needs a source model");
        clf = oquab(*source_baseline, train.x, train.labels, k, cfg.oquab_adapt_dim, fine);
    } else if (method == "pca_logistic") {
        clf = pca_logistic(train.x, train.labels, k, cfg.pca_energy, fine);
    } else {
        throw ArgumentError("unknown method '" + method + "'");
    }
    run.predictions = clf.predict_batch(test_x);
    run.trained = std::move(clf.net);
    run.pca = std::move(clf.pca);
    run.pca_dims = clf.pca_dims;
    return run;
}

} // namespace

std::vector<MethodResult> run_methods(const ExperimentConfig &cfg,
                                      const std::vector<std::string> &methods,
                                      const SourceModel *source_linear,
                                      const SourceModel *source_baseline,
                                      const Matrix *source_features, const Dataset &train,
                                      const Dataset *test, std::vector<ModelFile> *final_models) {
    const std::vector<Fold> folds = split(train, cfg.plan);
    const std::vector<GridPoint> grid = cfg.opt.grid();
    const std::size_t k = train.num_classes();

    std::vector<MethodResult> results;
    for (const std::string &method : methods) {
        MethodResult res;
        res.method = method;

        // Relation vectors depend on the fold, not the grid point.
        std::vector<RelationSet> fold_relations;
        if (method == "atdl") {
            if (!source_linear) throw ArgumentError("atdl needs a linear-output source model");
            for (const Fold &fold : folds) {
                RelationSet rel = compute_relations(*source_linear, fold.train.x,
                                                    fold.train.labels, k, 0.0, cfg.diagonal_cov);
                rel.epsilon = cfg.epsilon ? *cfg.epsilon : auto_epsilon(rel);
                fold_relations.push_back(std::move(rel));
            }
        }

        const std::size_t cells = grid.size() * folds.size();
        res.records.resize(cells);
        parallel_for(cells, cfg.threads, [&](std::size_t cell) {
            const std::size_t g = cell / folds.size();
            const std::size_t f = cell % folds.size();
            const Fold &fold = folds[f];
            MethodRun run = run_one(method, cfg, grid[g], source_linear, source_baseline,
                                    source_features, fold.train, fold.test.x,
                                    method == "atdl" ? &fold_relations[f] : nullptr);
            const PointOutcome outcome =
                evaluate_predictions(run.predictions, fold.test.labels, k);
            FoldRecord &rec = res.records[cell];
            rec.grid_id = g;
            rec.point = grid[g];
            rec.fold = f;
            rec.accuracy = outcome.accuracy;
            rec.metrics = report(outcome.confusion);
            rec.confusion = outcome.confusion;
        });

        // Grid selection by mean accuracy; ties prefer smaller lambda, then
        // smaller minibatch, then smaller momentum.
        std::size_t best_g = 0;
        double best_acc = -1.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double mean = 0.0;
            for (std::size_t f = 0; f < folds.size(); ++f)
                mean += res.records[g * folds.size() + f].accuracy;
            mean /= static_cast<double>(folds.size());
            const auto candidate = std::make_tuple(-mean, grid[g].lambda, grid[g].minibatch,
                                                   grid[g].mu);
            const auto incumbent = std::make_tuple(-best_acc, grid[best_g].lambda,
                                                   grid[best_g].minibatch, grid[best_g].mu);
            if (candidate < incumbent) {
                best_g = g;
                best_acc = mean;
            }
        }
        res.best = grid[best_g];
        res.selection_accuracy = best_acc;

        // Final fit on everything; judged on the held-out test when present,
        // otherwise on the pooled cross-validation predictions.
        MethodRun final_run = run_one(method, cfg, res.best, source_linear, source_baseline,
                                      source_features, train, test ? test->x : train.x, nullptr);
        if (test) {
            const PointOutcome outcome =
                evaluate_predictions(final_run.predictions, test->labels, k);
            res.final_metrics = report(outcome.confusion);
            res.final_accuracy = outcome.accuracy;
        } else {
            Confusion pooled;
            for (std::size_t f = 0; f < folds.size(); ++f)
                pooled = pool(pooled, res.records[best_g * folds.size() + f].confusion);
            res.final_metrics = report(pooled);
            res.final_accuracy = accuracy(pooled);
        }

        if (final_models) {
            ModelFile mf;
            if (method == "atdl") {
                mf.kind = ModelKind::Target;
                mf.loss = LossKind::VarianceToTargets;
                mf.relations = std::move(final_run.relations);
                mf.provenance = source_linear->provenance;
            } else {
                mf.kind = baseline_model_kind([&] {
                    if (method == "non_transfer") return BaselineKind::NonTransfer;
                    if (method == "ssl") return BaselineKind::Ssl;
                    if (method == "agrawal") return BaselineKind::Agrawal;
                    if (method == "oquab") return BaselineKind::Oquab;
                    return BaselineKind::PcaLogistic;
                }());
                mf.loss = LossKind::CrossEntropy;
                mf.pca = std::move(final_run.pca);
                mf.pca_dims = final_run.pca_dims;
            }
            mf.net = std::move(final_run.trained);
            mf.label_names = train.label_names;
            final_models->push_back(std::move(mf));
        }
        results.push_back(std::move(res));
    }
    return results;
}

namespace {

std::vector<std::string> provenance_lines(const ExperimentConfig &cfg) {
    return {
        std::string("tool=") + kToolVersion,
        "config_hash=" + hex_hash(cfg.config_hash),
        "seed=" + std::to_string(cfg.seed),
    };
}

void write_grid_table(const std::string &base, const ExperimentConfig &cfg,
                      const std::vector<MethodResult> &results) {
    std::vector<std::vector<std::string>> rows;
    for (const MethodResult &res : results) {
        for (const FoldRecord &rec : res.records) {
            rows.push_back({res.method, std::to_string(rec.grid_id), format_sci(rec.point.lambda),
                            format_double(rec.point.mu, 2), std::to_string(rec.point.minibatch),
                            std::to_string(rec.fold), format_metric(rec.metrics.ppv),
                            format_metric(rec.metrics.npv), format_metric(rec.metrics.mcc),
                            format_metric(rec.metrics.f1), format_double(rec.accuracy, 3)});
        }
    }
    write_table(base, provenance_lines(cfg),
                {"method", "grid", "lambda", "mu", "minibatch", "fold", "ppv", "npv", "mcc", "f1",
                 "acc"},
                rows);
}

void write_result_table(const std::string &base, const ExperimentConfig &cfg,
                        const std::vector<MethodResult> &results) {
    std::vector<std::vector<std::string>> rows;
    for (const MethodResult &res : results) {
        rows.push_back({res.method, format_sci(res.best.lambda), format_double(res.best.mu, 2),
                        std::to_string(res.best.minibatch),
                        format_double(res.selection_accuracy, 3),
                        format_metric(res.final_metrics.ppv), format_metric(res.final_metrics.npv),
                        format_metric(res.final_metrics.mcc), format_metric(res.final_metrics.f1),
                        format_metric(res.final_metrics.acc)});
    }
    write_table(base, provenance_lines(cfg),
                {"method", "lambda", "mu", "minibatch", "selection_acc", "ppv", "npv", "mcc",
                 "f1", "acc"},
                rows);
}

std::string source_provenance(const ExperimentConfig &cfg) {
    return cfg.source.ref + "#config=" + hex_hash(cfg.config_hash) +
           ",seed=" + std::to_string(cfg.seed);
}

} // namespace

int cmd_pretrain(const ExperimentConfig &cfg) {
    fs::create_directories(cfg.out_dir);
    const Dataset src = load_data(cfg.source, cfg.seed);
    std::cout << "source: " << src.rows() << " samples, " << src.feature_count()
              << " features, " << src.num_classes() << " labels\n";

    const TrainConfig pre =
        stage_config(cfg.opt.fixed, cfg.opt.pretrain_epochs, cfg.seed, cfg.opt.momentum_ramp);
    const TrainConfig fine =
        stage_config(cfg.opt.fixed, cfg.opt.finetune_epochs, cfg.seed, cfg.opt.momentum_ramp);

    std::vector<std::vector<double>> stage_traces;
    const Network stack = stack_pretrain(src.x, cfg.hidden_dims, cfg.corruption, pre,
                                         cfg.tied_decoder, &stage_traces);

    std::vector<double> finetune_trace;
    const Activation out_act =
        cfg.source_output == "linear" ? Activation::Linear : Activation::Softmax;
    SourceModel model = finetune_source(stack, src.x, one_hot(src.labels, src.num_classes()),
                                        fine, out_act, src.label_names, source_provenance(cfg),
                                        &finetune_trace);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t s = 0; s < stage_traces.size(); ++s)
        for (std::size_t e = 0; e < stage_traces[s].size(); ++e)
            rows.push_back({"pretrain_layer" + std::to_string(s + 1), std::to_string(e),
                            format_sci(stage_traces[s][e])});
    for (std::size_t e = 0; e < finetune_trace.size(); ++e)
        rows.push_back({"finetune", std::to_string(e), format_sci(finetune_trace[e])});
    write_table(cfg.out_dir + "/pretrain_trace", provenance_lines(cfg),
                {"stage", "epoch", "loss"}, rows);

    ModelFile mf;
    mf.kind = ModelKind::SourceLinear;
    mf.loss = out_act == Activation::Linear ? LossKind::SquaredError : LossKind::CrossEntropy;
    mf.net = std::move(model.net);
    mf.label_names = std::move(model.label_names);
    mf.provenance = std::move(model.provenance);
    const std::string path = cfg.out_dir + "/source.atdlnn";
    save_model(mf, path);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_transfer(const ExperimentConfig &cfg, const std::string &source_model_path) {
    fs::create_directories(cfg.out_dir);
    const ModelFile source_file = load_model(source_model_path);
    if (source_file.net.output_activation() != Activation::Linear)
        throw ArgumentError("transfer needs a linear-output source model (got " +
                            std::string(to_string(source_file.net.output_activation())) + ")");
    const SourceModel source = source_file.as_source_model();

    const Dataset train = load_data(cfg.target_train, cfg.seed);
    std::optional<Dataset> test;
    if (cfg.target_test) test = load_data(*cfg.target_test, cfg.seed + 1);

    std::vector<ModelFile> models;
    const std::vector<MethodResult> results =
        run_methods(cfg, {"atdl"}, &source, nullptr, nullptr, train,
                    test ? &*test : nullptr, &models);

    write_grid_table(cfg.out_dir + "/transfer_grid", cfg, results);
    write_result_table(cfg.out_dir + "/transfer_result", cfg, results);
    models[0].provenance = source.provenance;
    save_model(models[0], cfg.out_dir + "/target.atdlnn");
    std::cout << "atdl accuracy " << format_double(results[0].final_accuracy, 4) << " (lambda "
              << format_sci(results[0].best.lambda) << ", mu " << results[0].best.mu
              << ", minibatch " << results[0].best.minibatch << ")\n";
    std::cout << "wrote " << cfg.out_dir << "/target.atdlnn\n";
    return 0;
}

int cmd_baselines(const ExperimentConfig &cfg, const std::string &source_model_path) {
    fs::create_directories(cfg.out_dir);

    std::vector<std::string> methods;
    for (const std::string &m : cfg.methods)
        if (m != "atdl") methods.push_back(m);
    if (methods.empty())
        throw ArgumentError("no baseline methods configured (experiment.methods)");

    std::optional<SourceModel> source_baseline;
    if (!source_model_path.empty())
        source_baseline = load_model(source_model_path).as_source_model();

    std::optional<Matrix> source_features;
    if (std::find(methods.begin(), methods.end(), "ssl") != methods.end()) {
        if (cfg.source.ref.empty()) throw ArgumentError("ssl needs source.data");
        source_features = load_data(cfg.source, cfg.seed).x;
    }

    const Dataset train = load_data(cfg.target_train, cfg.seed);
    std::optional<Dataset> test;
    if (cfg.target_test) test = load_data(*cfg.target_test, cfg.seed + 1);

    // Per-method failures are recorded and the run continues.
    std::vector<MethodResult> results;
    std::vector<ModelFile> models;
    std::vector<std::string> failures;
    for (const std::string &method : methods) {
        try {
            std::vector<ModelFile> one_model;
            auto one = run_methods(cfg, {method}, nullptr,
                                   source_baseline ? &*source_baseline : nullptr,
                                   source_features ? &*source_features : nullptr, train,
                                   test ? &*test : nullptr, &one_model);
            results.push_back(std::move(one[0]));
            save_model(one_model[0], cfg.out_dir + "/baseline_" + method + ".atdlnn");
        } catch (const Error &e) {
            failures.push_back(method + ": " + e.what());
        }
    }

    write_grid_table(cfg.out_dir + "/baselines_grid", cfg, results);
    std::vector<std::string> prov = provenance_lines(cfg);
    for (const std::string &f : failures) prov.push_back("failed " + f);
    {
        std::vector<std::vector<std::string>> rows;
        for (const MethodResult &res : results) {
            rows.push_back({res.method, format_sci(res.best.lambda),
                            format_double(res.best.mu, 2), std::to_string(res.best.minibatch),
                            format_double(res.selection_accuracy, 3),
                            format_metric(res.final_metrics.ppv),
                            format_metric(res.final_metrics.npv),
                            format_metric(res.final_metrics.mcc),
                            format_metric(res.final_metrics.f1),
                            format_metric(res.final_metrics.acc)});
        }
        for (const std::string &f : failures) {
            const std::string name = f.substr(0, f.find(':'));
            rows.push_back({name, "-", "-", "-", "-", "-", "-", "-", "-", "error"});
        }
        write_table(cfg.out_dir + "/baselines_result", prov,
                    {"method", "lambda", "mu", "minibatch", "selection_acc", "ppv", "npv", "mcc",
                     "f1", "acc"},
                    rows);
    }
    for (const MethodResult &res : results)
        std::cout << res.method << " accuracy " << format_double(res.final_accuracy, 4) << "\n";
    for (const std::string &f : failures) std::cout << "failed " << f << "\n";
    return failures.empty() ? 0 : 0; // recorded, not fatal
}

int cmd_screen(const ExperimentConfig &cfg, const std::string &candidate_dir,
               bool with_performance) {
    fs::create_directories(cfg.out_dir);
    if (!fs::is_directory(candidate_dir))
        throw ArgumentError(candidate_dir + " is not a directory");

    std::vector<std::string> paths;
    for (const auto &entry : fs::directory_iterator(candidate_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".atdlnn")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty())
        throw ArgumentError("no .atdlnn candidate models in " + candidate_dir);

    std::vector<SourceModel> candidates;
    std::vector<std::string> ids;
    std::vector<std::string> broken;
    for (const std::string &p : paths) {
        try {
            const ModelFile mf = load_model(p);
            if (mf.net.output_activation() != Activation::Linear)
                throw FormatError(p + ": screening needs linear-output candidates");
            candidates.push_back(mf.as_source_model());
            ids.push_back(fs::path(p).stem().string());
        } catch (const Error &e) {
            broken.push_back(std::string(e.what()));
        }
    }
    if (candidates.empty()) throw ArgumentError("no readable candidates");

    const Dataset train = load_data(cfg.target_train, cfg.seed);
    const std::size_t k = train.num_classes();

    std::vector<std::optional<double>> performances;
    if (with_performance) {
        if (!cfg.target_test) throw ArgumentError("--with-performance needs target.test");
        const Dataset test = load_data(*cfg.target_test, cfg.seed + 1);
        const TrainConfig tgt =
            stage_config(cfg.opt.fixed, cfg.opt.target_epochs, cfg.seed, cfg.opt.momentum_ramp);
        performances.resize(candidates.size());
        parallel_for(candidates.size(), cfg.threads, [&](std::size_t i) {
            try {
                RelationSet rel = compute_relations(candidates[i], train.x, train.labels, k, 0.0,
                                                    cfg.diagonal_cov);
                rel.epsilon = cfg.epsilon ? *cfg.epsilon : auto_epsilon(rel);
                const TargetModel model = finetune_target(candidates[i], rel, train.x,
                                                          train.labels, tgt,
                                                          cfg.recompute_relations);
                const auto preds = classify_batch(model, test.x, cfg.literal_sigma);
                performances[i] =
                    evaluate_predictions(preds, test.labels, k).accuracy;
            } catch (const Error &) {
                performances[i] = std::nullopt;
            }
        });
    }

    const ScreenReport report = screen_sources(candidates, ids, train.x, train.labels, k,
                                               cfg.epsilon, performances);

    std::vector<std::string> prov = provenance_lines(cfg);
    if (report.correlation) {
        prov.push_back("pearson_r=" + format_double(*report.correlation, 4));
        prov.push_back("p_value=" + format_sci(*report.p_value));
    }
    for (const std::string &b : broken) prov.push_back("unreadable " + b);

    std::vector<std::vector<std::string>> rows;
    std::size_t rank = 1;
    for (const ScreenEntry &e : report.entries) {
        rows.push_back({std::to_string(rank++), e.source_id,
                        e.failed ? "error" : format_sci(e.d_m),
                        e.performance ? format_double(*e.performance, 4) : "-",
                        e.failed ? e.error : ""});
    }
    write_table(cfg.out_dir + "/screen_report", prov, {"rank", "source_id", "d_m", "t", "note"},
                rows);

    if (report.correlation)
        std::cout << "pearson R = " << format_double(*report.correlation, 4)
                  << " (p = " << format_sci(*report.p_value) << ")\n";
    std::cout << "wrote " << cfg.out_dir << "/screen_report.tsv\n";
    return 0;
}

int cmd_convert(const std::string &kind, const std::vector<std::string> &inputs,
                const std::string &out_path, bool grayscale, std::size_t resize_h,
                std::size_t resize_w) {
    Dataset d;
    if (kind == "idx") {
        if (inputs.size() != 2) throw ArgumentError("convert idx needs IMAGES LABELS");
        d = load_idx(inputs[0], inputs[1]);
    } else if (kind == "cifar10") {
        if (inputs.empty()) throw ArgumentError("convert cifar10 needs at least one batch");
        d = load_cifar10(inputs);
    } else if (kind == "csv") {
        if (inputs.size() != 1) throw ArgumentError("convert csv needs one input");
        d = load_csv(inputs[0]);
    } else {
        throw ArgumentError("convert: unsupported kind '" + kind + "' (idx|cifar10|csv)");
    }
    if (grayscale) d = to_grayscale(d);
    if (resize_h > 0) d = resize(d, resize_h, resize_w);
    save_container(d, out_path);
    std::cout << "wrote " << out_path << " (" << d.rows() << " rows, " << d.feature_count()
              << " features)\n";
    return 0;
}

int cmd_eval(const std::string &model_path, const std::string &dataset_ref,
             const std::string &out_base, bool literal_sigma) {
    const ModelFile mf = load_model(model_path);
    DataSpec spec;
    spec.ref = dataset_ref;
    const Dataset data = load_data(spec, 0);

    std::vector<std::size_t> preds;
    if (mf.kind == ModelKind::Target) {
        preds = classify_batch(mf.as_target_model(), data.x, literal_sigma);
    } else if (mf.kind == ModelKind::SourceLinear) {
        const Matrix out = mf.net.output_batch(data.x);
        preds.resize(out.rows());
        for (std::size_t r = 0; r < out.rows(); ++r) {
            const auto row = out.row(r);
            preds[r] = static_cast<std::size_t>(
                std::distance(row.begin(), std::max_element(row.begin(), row.end())));
        }
    } else {
        preds = mf.as_baseline().predict_batch(data.x);
    }

    const PointOutcome outcome = evaluate_predictions(preds, data.labels, data.num_classes());
    const MetricReport rep = report(outcome.confusion);
    write_table(out_base,
                {std::string("tool=") + kToolVersion, "model=" + fs::path(model_path).filename().string(),
                 "data=" + dataset_ref},
                {"ppv", "npv", "mcc", "f1", "acc"},
                {{format_metric(rep.ppv), format_metric(rep.npv), format_metric(rep.mcc),
                  format_metric(rep.f1), format_metric(rep.acc)}});
    std::cout << "accuracy " << format_double(outcome.accuracy, 4) << " over " << data.rows()
              << " samples\n";
    return 0;
}

} // namespace atdl
