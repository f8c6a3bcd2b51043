#ifndef ATDL_NETWORK_HPP
#define ATDL_NETWORK_HPP

#include <cstdint>
#include <vector>

#include "atdl/matrix.hpp"
#include "atdl/rng.hpp"

namespace atdl {

enum class Activation : std::uint32_t { Sigmoid = 0, Linear = 1, Softmax = 2 };

enum class LossKind : std::uint32_t {
    SquaredError = 0,
    CrossEntropy = 1,
    VarianceToTargets = 2,
};

const char *to_string(Activation a);
const char *to_string(LossKind k);

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::Sigmoid;

    bool operator==(const LayerSpec &) const = default;
};

struct Layer {
    LayerSpec spec;
    Matrix weights; // in_dim x out_dim, so a batch row maps as h = act(x * W + b)
    std::vector<double> bias;
};

/// Dense feedforward stack. Hidden layers are sigmoid; a linear or softmax
/// layer may appear only at the end.
class Network {
public:
    Network() = default;

    /// Builds and initializes all layers: uniform +-4*sqrt(6/(fan_in+fan_out))
    /// for sigmoid layers, +-sqrt(6/(fan_in+fan_out)) for linear/softmax,
    /// biases zero.
    Network(const std::vector<LayerSpec> &specs, Rng &rng);

    /// Appends a freshly initialized layer; its in_dim must chain.
    void append_layer(const LayerSpec &spec, Rng &rng);

    /// Appends an already trained layer (greedy stacking).
    void append_layer(Layer layer);

    std::size_t depth() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    Activation output_activation() const;

    const Layer &layer(std::size_t i) const { return layers_[i]; }
    Layer &layer(std::size_t i) { return layers_[i]; }
    const std::vector<Layer> &layers() const { return layers_; }

    /// Activations of every layer for one input, h_1 .. h_{L+1}.
    std::vector<std::vector<double>> forward(const std::vector<double> &x) const;

    /// Activations of every layer for a batch of input rows.
    std::vector<Matrix> forward_batch(const Matrix &x) const;

    /// Final-layer response only.
    Matrix output_batch(const Matrix &x) const;
    std::vector<double> output(const std::vector<double> &x) const;

    /// Index of the most active output unit.
    std::size_t predict(const std::vector<double> &x) const;

    bool same_shape(const Network &other) const;

private:
    void validate_append(const LayerSpec &spec) const;

    std::vector<Layer> layers_;
};

struct TrainConfig {
    double lambda0 = 0.01;     // initial learning rate
    double mu_final = 0.99;    // momentum ramps from 0.5 up to this
    std::size_t minibatch = 10;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    std::size_t momentum_ramp_iters = 0; // 0 = one epoch's worth of updates
    double l2 = 0.0;                     // weight penalty (logistic baseline)

    void validate() const;
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;
};

/// Momentum buffers, one per layer.
struct Velocity {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;

    static Velocity zeros_like(const Network &net);
};

/// Mean per-sample loss over the batch rows.
double loss(LossKind kind, const Matrix &outputs, const Matrix &targets);

/// Analytic gradients of `loss` w.r.t. every weight and bias.
/// Layers below `needed_from` are skipped (their entries stay empty).
/// When `batch_loss` is given it receives the loss of this batch.
Gradients backward(const Network &net, const Matrix &batch_x, const Matrix &batch_t,
                   LossKind kind, std::size_t needed_from = 0, double *batch_loss = nullptr);

double learning_rate_at(const TrainConfig &cfg, std::size_t t);
double momentum_at(const TrainConfig &cfg, std::size_t t);

/// One update: velocity <- m(t)*velocity - eta(t)*grad; params += velocity.
/// Layers below `trainable_from` are left untouched.
void sgd_step(Network &net, const Gradients &grads, std::size_t t, const TrainConfig &cfg,
              Velocity &velocity, std::size_t trainable_from = 0);

struct TrainResult {
    std::vector<double> loss_trace; // full-dataset loss after each epoch
};

/// Minibatch SGD over the dataset. Epoch e shuffles with seed+e; the update
/// counter t runs from 1 across the whole call. Throws DivergenceError when
/// the epoch loss goes non-finite.
TrainResult train(Network &net, const Matrix &data_x, const Matrix &data_t, LossKind kind,
                  const TrainConfig &cfg, std::size_t trainable_from = 0);

} // namespace atdl

#endif
