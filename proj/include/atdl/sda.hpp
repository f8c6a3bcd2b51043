#ifndef ATDL_SDA_HPP
#define ATDL_SDA_HPP

#include <string>
#include <vector>

#include "atdl/network.hpp"
#include "atdl/rng.hpp"

namespace atdl {

enum class CorruptionKind : std::uint32_t { Masking = 0, Gaussian = 1 };

/// Input corruption applied while a layer learns to reconstruct clean data.
/// Masking zeroes each coordinate independently with probability `rate`;
/// gaussian adds N(0, rate^2) noise.
struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::Masking;
    double rate = 0.3;

    void validate() const;
};

std::vector<double> corrupt(const std::vector<double> &x, const CorruptionSpec &spec, Rng &rng);

/// Corrupts every row; row order is the draw order.
Matrix corrupt_rows(const Matrix &x, const CorruptionSpec &spec, Rng &rng);

struct PretrainResult {
    Layer encoder;
    std::vector<double> epoch_mean_losses; // mean minibatch reconstruction loss
};

/// Trains a one-hidden-layer denoising autoencoder on the given activations
/// and keeps the encoder. The decoder reconstructs the clean input through a
/// sigmoid and is discarded; `tied_decoder` shares its weights with the
/// encoder (transposed) instead of training them separately.
PretrainResult pretrain_layer(const Matrix &input_acts, std::size_t hidden_dim,
                              const CorruptionSpec &spec, const TrainConfig &cfg,
                              bool tied_decoder = false);

/// Greedy layer-wise pretraining: layer i trains on the clean activations of
/// the stack built so far. Lower layers are frozen while upper ones train.
/// `stage_traces`, when given, collects each stage's reconstruction-loss
/// trace.
Network stack_pretrain(const Matrix &x_source, const std::vector<std::size_t> &hidden_dims,
                       const CorruptionSpec &spec, const TrainConfig &cfg,
                       bool tied_decoder = false,
                       std::vector<std::vector<double>> *stage_traces = nullptr);

/// A source-task network ready for transfer.
struct SourceModel {
    Network net;
    std::vector<std::string> label_names;
    std::string provenance; // dataset id + config hash
};

/// Appends an output layer to the pretrained stack and fine-tunes all layers
/// jointly: linear output under the squared-error cost, or softmax under
/// cross-entropy for baseline-mode models.
SourceModel finetune_source(const Network &stack, const Matrix &x_source,
                            const Matrix &y_source_one_hot, const TrainConfig &cfg,
                            Activation output_activation,
                            std::vector<std::string> label_names = {},
                            std::string provenance = {},
                            std::vector<double> *loss_trace = nullptr);

} // namespace atdl

#endif
