#ifndef ATDL_BASELINES_HPP
#define ATDL_BASELINES_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "atdl/network.hpp"
#include "atdl/sda.hpp"
#include "atdl/stats.hpp"

namespace atdl {

enum class BaselineKind : std::uint32_t {
    NonTransfer = 0,
    Ssl = 1,
    Agrawal = 2,
    Oquab = 3,
    PcaLogistic = 4,
};

const char *to_string(BaselineKind k);

/// A trained comparison classifier. PCA-backed models project the input
/// before the network sees it.
struct BaselineClassifier {
    BaselineKind kind = BaselineKind::NonTransfer;
    Network net;
    std::optional<PcaModel> pca;
    std::size_t pca_dims = 0;

    std::size_t predict(const std::vector<double> &x) const;
    std::vector<std::size_t> predict_batch(const Matrix &x) const;
};

/// Rows of a stacked on top of rows of b (column counts must match; either
/// side may be empty).
Matrix vcat(const Matrix &a, const Matrix &b);

/// Target-only stacked-autoencoder classifier with a softmax head.
BaselineClassifier non_transfer(const Matrix &x_target, const std::vector<std::uint32_t> &labels,
                                std::size_t num_classes,
                                const std::vector<std::size_t> &hidden_dims,
                                const CorruptionSpec &corruption, const TrainConfig &pretrain_cfg,
                                const TrainConfig &finetune_cfg);

/// Pretrains on source+target features together (no source labels), then
/// fine-tunes the softmax head on the target alone.
BaselineClassifier ssl(const Matrix &x_source, const Matrix &x_target,
                       const std::vector<std::uint32_t> &labels, std::size_t num_classes,
                       const std::vector<std::size_t> &hidden_dims,
                       const CorruptionSpec &corruption, const TrainConfig &pretrain_cfg,
                       const TrainConfig &finetune_cfg);

/// Replaces the source output layer with a fresh softmax head and fine-tunes
/// every layer on the target.
BaselineClassifier agrawal(const SourceModel &source, const Matrix &x_target,
                           const std::vector<std::uint32_t> &labels, std::size_t num_classes,
                           const TrainConfig &cfg);

/// Freezes the source hidden stack and trains only a new sigmoid adaptation
/// layer plus softmax head. adapt_dim 0 defaults to the last hidden width.
BaselineClassifier oquab(const SourceModel &source, const Matrix &x_target,
                         const std::vector<std::uint32_t> &labels, std::size_t num_classes,
                         std::size_t adapt_dim, const TrainConfig &cfg);

/// PCA projection to the requested energy, then multinomial logistic
/// regression trained with the shared SGD schedule.
BaselineClassifier pca_logistic(const Matrix &x_target, const std::vector<std::uint32_t> &labels,
                                std::size_t num_classes, double energy, const TrainConfig &cfg);

} // namespace atdl

#endif
