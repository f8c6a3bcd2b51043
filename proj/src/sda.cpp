#include "atdl/sda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "atdl/errors.hpp"

namespace atdl {

namespace {

// Keeps the corruption draws on a stream of their own, away from the
// shuffle stream.
constexpr std::uint64_t kCorruptStream = 0x517cc1b727220a95ull;

void validate_one_hot(const Matrix &y) {
    for (std::size_t r = 0; r < y.rows(); ++r) {
        std::size_t ones = 0;
        for (double v : y.row(r)) {
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                throw ArgumentError("labels must be one-hot; row " + std::to_string(r) +
                                    " has entry " + std::to_string(v));
        }
        if (ones != 1)
            throw ArgumentError("labels must be one-hot; row " + std::to_string(r) + " has " +
                                std::to_string(ones) + " ones");
    }
}

} // namespace

void CorruptionSpec::validate() const {
    if (kind == CorruptionKind::Masking) {
        if (!(rate >= 0.0 && rate < 1.0))
            throw ArgumentError("masking rate must lie in [0, 1)");
    } else {
        if (!(rate >= 0.0)) throw ArgumentError("gaussian stddev must be nonnegative");
    }
}

std::vector<double> corrupt(const std::vector<double> &x, const CorruptionSpec &spec, Rng &rng) {
    spec.validate();
    std::vector<double> out = x;
    if (spec.rate == 0.0) return out;
    if (spec.kind == CorruptionKind::Masking) {
        for (double &v : out)
            if (rng.uniform() < spec.rate) v = 0.0;
    } else {
        for (double &v : out) v += spec.rate * rng.gaussian();
    }
    return out;
}

Matrix corrupt_rows(const Matrix &x, const CorruptionSpec &spec, Rng &rng) {
    spec.validate();
    Matrix out = x;
    if (spec.rate == 0.0) return out;
    double *p = out.data();
    if (spec.kind == CorruptionKind::Masking) {
        for (std::size_t i = 0; i < out.size(); ++i)
            if (rng.uniform() < spec.rate) p[i] = 0.0;
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) p[i] += spec.rate * rng.gaussian();
    }
    return out;
}

PretrainResult pretrain_layer(const Matrix &input_acts, std::size_t hidden_dim,
                              const CorruptionSpec &spec, const TrainConfig &cfg,
                              bool tied_decoder) {
    if (hidden_dim < 1) throw ArgumentError("pretrain_layer: hidden_dim must be at least 1");
    if (input_acts.rows() < 1) throw ArgumentError("pretrain_layer: empty input");
    spec.validate();
    cfg.validate();

    const std::size_t in_dim = input_acts.cols();
    Rng init_rng(cfg.seed);
    Network ae({LayerSpec{in_dim, hidden_dim, Activation::Sigmoid},
                LayerSpec{hidden_dim, in_dim, Activation::Sigmoid}},
               init_rng);
    if (tied_decoder) ae.layer(1).weights = ae.layer(0).weights.transposed();

    PretrainResult result;
    if (cfg.epochs == 0) {
        result.encoder = ae.layer(0);
        return result;
    }

    const std::size_t n = input_acts.rows();
    const std::size_t updates_per_epoch = (n + cfg.minibatch - 1) / cfg.minibatch;
    TrainConfig run_cfg = cfg;
    if (run_cfg.momentum_ramp_iters == 0) run_cfg.momentum_ramp_iters = updates_per_epoch;

    Velocity velocity = Velocity::zeros_like(ae);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng corrupt_rng(cfg.seed + kCorruptStream);

    std::size_t t = 1;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(cfg.seed + epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.minibatch) {
            const std::size_t count = std::min(cfg.minibatch, n - start);
            Matrix clean(count, in_dim);
            for (std::size_t i = 0; i < count; ++i)
                std::copy(input_acts.row(order[start + i]).begin(),
                          input_acts.row(order[start + i]).end(), clean.row(i).begin());
            const Matrix noisy = corrupt_rows(clean, spec, corrupt_rng);

            double batch_loss = 0.0;
            Gradients grads = backward(ae, noisy, clean, LossKind::SquaredError, 0, &batch_loss);
            if (tied_decoder) {
                grads.weights[0] += grads.weights[1].transposed();
                grads.weights[1] = grads.weights[0].transposed();
            }
            sgd_step(ae, grads, t, run_cfg, velocity);
            ++t;
            loss_sum += batch_loss;
            ++batches;
        }
        const double epoch_mean = loss_sum / static_cast<double>(batches);
        if (!std::isfinite(epoch_mean)) {
            std::ostringstream os;
            os << "layer pretraining diverged at epoch " << epoch;
            throw DivergenceError(os.str(), epoch, learning_rate_at(run_cfg, t - 1));
        }
        result.epoch_mean_losses.push_back(epoch_mean);
    }
    result.encoder = ae.layer(0);
    return result;
}

Network stack_pretrain(const Matrix &x_source, const std::vector<std::size_t> &hidden_dims,
                       const CorruptionSpec &spec, const TrainConfig &cfg, bool tied_decoder,
                       std::vector<std::vector<double>> *stage_traces) {
    if (hidden_dims.empty()) throw ArgumentError("stack_pretrain: no hidden layers requested");

    Network stack;
    Matrix acts = x_source;
    for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
        TrainConfig layer_cfg = cfg;
        layer_cfg.seed = cfg.seed + 7919 * i; // distinct draw streams per stage
        PretrainResult pr = pretrain_layer(acts, hidden_dims[i], spec, layer_cfg, tied_decoder);
        if (stage_traces) stage_traces->push_back(pr.epoch_mean_losses);
        stack.append_layer(std::move(pr.encoder));
        if (i + 1 < hidden_dims.size()) acts = stack.output_batch(x_source);
    }
    return stack;
}

SourceModel finetune_source(const Network &stack, const Matrix &x_source,
                            const Matrix &y_source_one_hot, const TrainConfig &cfg,
                            Activation output_activation, std::vector<std::string> label_names,
                            std::string provenance, std::vector<double> *loss_trace) {
    if (stack.empty()) throw ArgumentError("finetune_source: empty stack");
    if (output_activation == Activation::Sigmoid)
        throw ArgumentError("finetune_source: output layer must be linear or softmax");
    if (x_source.rows() != y_source_one_hot.rows())
        throw ShapeError("finetune_source: " + std::to_string(x_source.rows()) + " inputs vs " +
                         std::to_string(y_source_one_hot.rows()) + " label rows");
    validate_one_hot(y_source_one_hot);

    SourceModel model;
    model.net = stack;
    Rng init_rng(cfg.seed);
    model.net.append_layer(
        LayerSpec{stack.layer(stack.depth() - 1).spec.out_dim, y_source_one_hot.cols(),
                  output_activation},
        init_rng);

    const LossKind kind = output_activation == Activation::Linear ? LossKind::SquaredError
                                                                  : LossKind::CrossEntropy;
    const TrainResult tr = train(model.net, x_source, y_source_one_hot, kind, cfg);
    if (loss_trace) *loss_trace = tr.loss_trace;

    if (label_names.empty())
        for (std::size_t i = 0; i < y_source_one_hot.cols(); ++i)
            label_names.push_back(std::to_string(i));
    model.label_names = std::move(label_names);
    model.provenance = std::move(provenance);
    return model;
}

} // namespace atdl
