#include "atdl/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "atdl/errors.hpp"

namespace atdl {

namespace {

constexpr double kProbFloor = 1e-12;

void apply_sigmoid(Matrix &m) {
    double *p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-p[i]));
}

void apply_softmax_rows(Matrix &m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        double mx = row[0];
        for (double v : row) mx = std::max(mx, v);
        double sum = 0.0;
        for (double &v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double &v : row) v /= sum;
    }
}

void apply_activation(Matrix &m, Activation act) {
    switch (act) {
    case Activation::Sigmoid: apply_sigmoid(m); break;
    case Activation::Linear: break;
    case Activation::Softmax: apply_softmax_rows(m); break;
    }
}

Matrix affine(const Matrix &x, const Layer &layer) {
    Matrix z = matmul(x, layer.weights);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < z.cols(); ++c) row[c] += layer.bias[c];
    }
    return z;
}

double init_scale(const LayerSpec &spec) {
    const double base = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
    return spec.activation == Activation::Sigmoid ? 4.0 * base : base;
}

void check_loss_pairing(LossKind kind, Activation out_act) {
    const bool ok = (kind == LossKind::CrossEntropy && out_act == Activation::Softmax) ||
                    (kind != LossKind::CrossEntropy &&
                     (out_act == Activation::Linear || out_act == Activation::Sigmoid));
    if (!ok) {
        std::ostringstream os;
        os << "loss " << to_string(kind) << " is incompatible with " << to_string(out_act)
           << " output";
        throw ArgumentError(os.str());
    }
}

} // namespace

const char *to_string(Activation a) {
    switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
    case Activation::Softmax: return "softmax";
    }
    return "?";
}

const char *to_string(LossKind k) {
    switch (k) {
    case LossKind::SquaredError: return "squared_error";
    case LossKind::CrossEntropy: return "cross_entropy";
    case LossKind::VarianceToTargets: return "variance_to_targets";
    }
    return "?";
}

Network::Network(const std::vector<LayerSpec> &specs, Rng &rng) {
    for (const auto &spec : specs) append_layer(spec, rng);
}

void Network::validate_append(const LayerSpec &spec) const {
    if (spec.in_dim < 1 || spec.out_dim < 1)
        throw ArgumentError("layer dims must be at least 1");
    if (!layers_.empty()) {
        if (layers_.back().spec.out_dim != spec.in_dim) {
            std::ostringstream os;
            os << "layer chain broken: previous out_dim " << layers_.back().spec.out_dim
               << " != new in_dim " << spec.in_dim;
            throw ShapeError(os.str());
        }
        if (layers_.back().spec.activation != Activation::Sigmoid)
            throw ArgumentError("linear/softmax layers are permitted only at the end");
    }
}

void Network::append_layer(const LayerSpec &spec, Rng &rng) {
    validate_append(spec);
    Layer layer;
    layer.spec = spec;
    layer.weights = Matrix(spec.in_dim, spec.out_dim);
    layer.bias.assign(spec.out_dim, 0.0);
    const double scale = init_scale(spec);
    double *w = layer.weights.data();
    for (std::size_t i = 0; i < layer.weights.size(); ++i) w[i] = rng.uniform(-scale, scale);
    layers_.push_back(std::move(layer));
}

void Network::append_layer(Layer layer) {
    validate_append(layer.spec);
    if (layer.weights.rows() != layer.spec.in_dim || layer.weights.cols() != layer.spec.out_dim ||
        layer.bias.size() != layer.spec.out_dim)
        throw ShapeError("layer parameters do not match its spec");
    layers_.push_back(std::move(layer));
}

std::size_t Network::input_dim() const {
    if (layers_.empty()) throw ArgumentError("empty network");
    return layers_.front().spec.in_dim;
}

std::size_t Network::output_dim() const {
    if (layers_.empty()) throw ArgumentError("empty network");
    return layers_.back().spec.out_dim;
}

Activation Network::output_activation() const {
    if (layers_.empty()) throw ArgumentError("empty network");
    return layers_.back().spec.activation;
}

std::vector<std::vector<double>> Network::forward(const std::vector<double> &x) const {
    Matrix row(1, x.size(), x);
    std::vector<Matrix> acts = forward_batch(row);
    std::vector<std::vector<double>> out;
    out.reserve(acts.size());
    for (const Matrix &a : acts) out.push_back(a.row_vec(0));
    return out;
}

std::vector<Matrix> Network::forward_batch(const Matrix &x) const {
    if (layers_.empty()) throw ArgumentError("empty network");
    if (x.cols() != input_dim()) {
        std::ostringstream os;
        os << "forward: input has " << x.cols() << " features, network expects " << input_dim();
        throw ShapeError(os.str());
    }
    std::vector<Matrix> acts;
    acts.reserve(layers_.size());
    const Matrix *cur = &x;
    for (const Layer &layer : layers_) {
        Matrix z = affine(*cur, layer);
        apply_activation(z, layer.spec.activation);
        acts.push_back(std::move(z));
        cur = &acts.back();
    }
    return acts;
}

Matrix Network::output_batch(const Matrix &x) const {
    if (layers_.empty()) throw ArgumentError("empty network");
    if (x.cols() != input_dim()) {
        std::ostringstream os;
        os << "forward: input has " << x.cols() << " features, network expects " << input_dim();
        throw ShapeError(os.str());
    }
    Matrix cur = x;
    for (const Layer &layer : layers_) {
        Matrix z = affine(cur, layer);
        apply_activation(z, layer.spec.activation);
        cur = std::move(z);
    }
    return cur;
}

std::vector<double> Network::output(const std::vector<double> &x) const {
    return output_batch(Matrix(1, x.size(), x)).row_vec(0);
}

std::size_t Network::predict(const std::vector<double> &x) const {
    const std::vector<double> out = output(x);
    return static_cast<std::size_t>(
        std::distance(out.begin(), std::max_element(out.begin(), out.end())));
}

bool Network::same_shape(const Network &other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (!(layers_[i].spec == other.layers_[i].spec)) return false;
    return true;
}

void TrainConfig::validate() const {
    if (!(lambda0 > 0.0)) throw ArgumentError("lambda0 must be positive");
    if (!(mu_final >= 0.0 && mu_final < 1.0)) throw ArgumentError("mu_final must lie in [0, 1)");
    if (minibatch < 1) throw ArgumentError("minibatch must be at least 1");
}

Velocity Velocity::zeros_like(const Network &net) {
    Velocity v;
    v.weights.reserve(net.depth());
    v.bias.reserve(net.depth());
    for (std::size_t i = 0; i < net.depth(); ++i) {
        const Layer &layer = net.layer(i);
        v.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
        v.bias.emplace_back(layer.bias.size(), 0.0);
    }
    return v;
}

double loss(LossKind kind, const Matrix &outputs, const Matrix &targets) {
    if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
        std::ostringstream os;
        os << "loss: outputs " << outputs.rows() << "x" << outputs.cols() << " vs targets "
           << targets.rows() << "x" << targets.cols();
        throw ShapeError(os.str());
    }
    if (outputs.rows() == 0) throw ArgumentError("loss: empty batch");
    double total = 0.0;
    if (kind == LossKind::CrossEntropy) {
        for (std::size_t r = 0; r < outputs.rows(); ++r) {
            const auto o = outputs.row(r);
            const auto t = targets.row(r);
            for (std::size_t c = 0; c < outputs.cols(); ++c)
                total -= t[c] * std::log(std::max(o[c], kProbFloor));
        }
    } else {
        for (std::size_t r = 0; r < outputs.rows(); ++r) {
            const auto o = outputs.row(r);
            const auto t = targets.row(r);
            for (std::size_t c = 0; c < outputs.cols(); ++c) {
                const double d = t[c] - o[c];
                total += d * d;
            }
        }
    }
    return total / static_cast<double>(outputs.rows());
}

Gradients backward(const Network &net, const Matrix &batch_x, const Matrix &batch_t,
                   LossKind kind, std::size_t needed_from, double *batch_loss) {
    if (batch_x.rows() == 0) throw ArgumentError("backward: empty batch");
    if (batch_x.rows() != batch_t.rows()) {
        std::ostringstream os;
        os << "backward: " << batch_x.rows() << " inputs vs " << batch_t.rows() << " targets";
        throw ShapeError(os.str());
    }
    check_loss_pairing(kind, net.output_activation());

    const std::vector<Matrix> acts = net.forward_batch(batch_x);
    const std::size_t depth = net.depth();
    if (batch_t.cols() != acts.back().cols())
        throw ShapeError("backward: target width " + std::to_string(batch_t.cols()) +
                         " != output width " + std::to_string(acts.back().cols()));
    if (batch_loss) *batch_loss = loss(kind, acts.back(), batch_t);

    Gradients grads;
    grads.weights.resize(depth);
    grads.bias.resize(depth);

    const double inv_n = 1.0 / static_cast<double>(batch_x.rows());

    // Delta at the output pre-activation. Softmax+cross-entropy and the
    // squared losses both reduce to (output - target) up to scale.
    Matrix delta = acts.back();
    delta -= batch_t;
    delta *= (kind == LossKind::CrossEntropy ? inv_n : 2.0 * inv_n);
    if (net.output_activation() == Activation::Sigmoid) {
        const Matrix &h = acts.back();
        double *d = delta.data();
        const double *hv = h.data();
        for (std::size_t i = 0; i < delta.size(); ++i) d[i] *= hv[i] * (1.0 - hv[i]);
    }

    for (std::size_t li = depth; li-- > needed_from;) {
        const Matrix &input = (li == 0) ? batch_x : acts[li - 1];
        grads.weights[li] = matmul_tn(input, delta);
        auto &db = grads.bias[li];
        db.assign(delta.cols(), 0.0);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            const auto row = delta.row(r);
            for (std::size_t c = 0; c < delta.cols(); ++c) db[c] += row[c];
        }
        if (li > needed_from) {
            Matrix prev_delta = matmul_nt(delta, net.layer(li).weights);
            const Matrix &h = acts[li - 1]; // hidden layers are sigmoid
            double *d = prev_delta.data();
            const double *hv = h.data();
            for (std::size_t i = 0; i < prev_delta.size(); ++i) d[i] *= hv[i] * (1.0 - hv[i]);
            delta = std::move(prev_delta);
        }
    }
    return grads;
}

double learning_rate_at(const TrainConfig &cfg, std::size_t t) {
    return cfg.lambda0 / (1.00004 * static_cast<double>(t));
}

double momentum_at(const TrainConfig &cfg, std::size_t t) {
    const double ramp = static_cast<double>(std::max<std::size_t>(cfg.momentum_ramp_iters, 1));
    const double frac = std::min(1.0, static_cast<double>(t) / ramp);
    return 0.5 + (cfg.mu_final - 0.5) * frac;
}

void sgd_step(Network &net, const Gradients &grads, std::size_t t, const TrainConfig &cfg,
              Velocity &velocity, std::size_t trainable_from) {
    if (t < 1) throw ArgumentError("sgd_step: iteration counter starts at 1");
    const double eta = learning_rate_at(cfg, t);
    const double m = momentum_at(cfg, t);
    for (std::size_t li = trainable_from; li < net.depth(); ++li) {
        Layer &layer = net.layer(li);
        Matrix &vw = velocity.weights[li];
        const Matrix &gw = grads.weights[li];
        double *v = vw.data();
        double *w = layer.weights.data();
        const double *g = gw.data();
        for (std::size_t i = 0; i < vw.size(); ++i) {
            double gi = g[i];
            if (cfg.l2 != 0.0) gi += 2.0 * cfg.l2 * w[i];
            v[i] = m * v[i] - eta * gi;
            w[i] += v[i];
        }
        auto &vb = velocity.bias[li];
        const auto &gb = grads.bias[li];
        for (std::size_t i = 0; i < vb.size(); ++i) {
            vb[i] = m * vb[i] - eta * gb[i];
            layer.bias[i] += vb[i];
        }
    }
}

TrainResult train(Network &net, const Matrix &data_x, const Matrix &data_t, LossKind kind,
                  const TrainConfig &cfg, std::size_t trainable_from) {
    cfg.validate();
    if (data_x.rows() < 1) throw ArgumentError("train: empty dataset");
    if (data_x.rows() != data_t.rows())
        throw ShapeError("train: " + std::to_string(data_x.rows()) + " inputs vs " +
                         std::to_string(data_t.rows()) + " targets");
    check_loss_pairing(kind, net.output_activation());

    TrainResult result;
    if (cfg.epochs == 0) return result;

    const std::size_t n = data_x.rows();
    const std::size_t updates_per_epoch = (n + cfg.minibatch - 1) / cfg.minibatch;
    TrainConfig run_cfg = cfg;
    if (run_cfg.momentum_ramp_iters == 0) run_cfg.momentum_ramp_iters = updates_per_epoch;

    Velocity velocity = Velocity::zeros_like(net);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::size_t t = 1;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(cfg.seed + epoch);
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0; start < n; start += cfg.minibatch) {
            const std::size_t count = std::min(cfg.minibatch, n - start);
            Matrix bx(count, data_x.cols());
            Matrix bt(count, data_t.cols());
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[start + i];
                std::copy(data_x.row(src).begin(), data_x.row(src).end(), bx.row(i).begin());
                std::copy(data_t.row(src).begin(), data_t.row(src).end(), bt.row(i).begin());
            }
            const Gradients grads = backward(net, bx, bt, kind, trainable_from);
            sgd_step(net, grads, t, run_cfg, velocity, trainable_from);
            ++t;
        }

        const double epoch_loss = loss(kind, net.output_batch(data_x), data_t);
        if (!std::isfinite(epoch_loss)) {
            std::ostringstream os;
            os << "training diverged at epoch " << epoch << " (loss not finite)";
            throw DivergenceError(os.str(), epoch, learning_rate_at(run_cfg, t - 1));
        }
        result.loss_trace.push_back(epoch_loss);
    }
    return result;
}

} // namespace atdl
