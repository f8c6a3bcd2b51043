#include "atdl/baselines.hpp"

#include <algorithm>

#include "atdl/dataset.hpp"
#include "atdl/errors.hpp"

namespace atdl {

const char *to_string(BaselineKind k) {
    switch (k) {
    case BaselineKind::NonTransfer: return "non_transfer";
    case BaselineKind::Ssl: return "ssl";
    case BaselineKind::Agrawal: return "agrawal";
    case BaselineKind::Oquab: return "oquab";
    case BaselineKind::PcaLogistic: return "pca_logistic";
    }
    return "?";
}

std::size_t BaselineClassifier::predict(const std::vector<double> &x) const {
    if (pca) {
        const Matrix projected = pca_project(*pca, Matrix(1, x.size(), x), pca_dims);
        return net.predict(projected.row_vec(0));
    }
    return net.predict(x);
}

std::vector<std::size_t> BaselineClassifier::predict_batch(const Matrix &x) const {
    const Matrix &input = pca ? pca_project(*pca, x, pca_dims) : x;
    const Matrix out = net.output_batch(input);
    std::vector<std::size_t> labels(out.rows());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        const auto row = out.row(r);
        labels[r] = static_cast<std::size_t>(
            std::distance(row.begin(), std::max_element(row.begin(), row.end())));
    }
    return labels;
}

Matrix vcat(const Matrix &a, const Matrix &b) {
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;
    if (a.cols() != b.cols())
        throw ShapeError("vcat: column mismatch " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()));
    Matrix out(a.rows() + b.rows(), a.cols());
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

BaselineClassifier non_transfer(const Matrix &x_target, const std::vector<std::uint32_t> &labels,
                                std::size_t num_classes,
                                const std::vector<std::size_t> &hidden_dims,
                                const CorruptionSpec &corruption, const TrainConfig &pretrain_cfg,
                                const TrainConfig &finetune_cfg) {
    const Network stack = stack_pretrain(x_target, hidden_dims, corruption, pretrain_cfg);
    SourceModel model = finetune_source(stack, x_target, one_hot(labels, num_classes),
                                        finetune_cfg, Activation::Softmax);
    BaselineClassifier clf;
    clf.kind = BaselineKind::NonTransfer;
    clf.net = std::move(model.net);
    return clf;
}

BaselineClassifier ssl(const Matrix &x_source, const Matrix &x_target,
                       const std::vector<std::uint32_t> &labels, std::size_t num_classes,
                       const std::vector<std::size_t> &hidden_dims,
                       const CorruptionSpec &corruption, const TrainConfig &pretrain_cfg,
                       const TrainConfig &finetune_cfg) {
    const Matrix mixed = vcat(x_source, x_target); // source labels never enter
    const Network stack = stack_pretrain(mixed, hidden_dims, corruption, pretrain_cfg);
    SourceModel model = finetune_source(stack, x_target, one_hot(labels, num_classes),
                                        finetune_cfg, Activation::Softmax);
    BaselineClassifier clf;
    clf.kind = BaselineKind::Ssl;
    clf.net = std::move(model.net);
    return clf;
}

BaselineClassifier agrawal(const SourceModel &source, const Matrix &x_target,
                           const std::vector<std::uint32_t> &labels, std::size_t num_classes,
                           const TrainConfig &cfg) {
    if (source.net.depth() < 2) throw ArgumentError("agrawal: source model has no hidden stack");

    BaselineClassifier clf;
    clf.kind = BaselineKind::Agrawal;
    for (std::size_t i = 0; i + 1 < source.net.depth(); ++i)
        clf.net.append_layer(source.net.layer(i));

    Rng head_rng(cfg.seed);
    clf.net.append_layer(LayerSpec{clf.net.layer(clf.net.depth() - 1).spec.out_dim, num_classes,
                                   Activation::Softmax},
                         head_rng);
    train(clf.net, x_target, one_hot(labels, num_classes), LossKind::CrossEntropy, cfg);
    return clf;
}

BaselineClassifier oquab(const SourceModel &source, const Matrix &x_target,
                         const std::vector<std::uint32_t> &labels, std::size_t num_classes,
                         std::size_t adapt_dim, const TrainConfig &cfg) {
    if (source.net.depth() < 2) throw ArgumentError("oquab: source model has no hidden stack");

    Network frozen;
    for (std::size_t i = 0; i + 1 < source.net.depth(); ++i)
        frozen.append_layer(source.net.layer(i));
    const std::size_t feat_dim = frozen.layer(frozen.depth() - 1).spec.out_dim;
    if (adapt_dim == 0) adapt_dim = feat_dim;

    // The frozen stack never receives updates, so its features are fixed; the
    // head trains on them directly.
    const Matrix features = frozen.output_batch(x_target);
    Rng head_rng(cfg.seed);
    Network head({LayerSpec{feat_dim, adapt_dim, Activation::Sigmoid},
                  LayerSpec{adapt_dim, num_classes, Activation::Softmax}},
                 head_rng);
    train(head, features, one_hot(labels, num_classes), LossKind::CrossEntropy, cfg);

    BaselineClassifier clf;
    clf.kind = BaselineKind::Oquab;
    clf.net = std::move(frozen);
    clf.net.append_layer(head.layer(0));
    clf.net.append_layer(head.layer(1));
    return clf;
}

BaselineClassifier pca_logistic(const Matrix &x_target, const std::vector<std::uint32_t> &labels,
                                std::size_t num_classes, double energy, const TrainConfig &cfg) {
    PcaFit fit = fit_pca(x_target, energy);
    if (fit.retained_dims == 0)
        throw ArgumentError("pca_logistic: input has no variance to project");

    const Matrix projected = pca_project(fit.model, x_target, fit.retained_dims);
    Rng init_rng(cfg.seed);
    Network logistic({LayerSpec{fit.retained_dims, num_classes, Activation::Softmax}}, init_rng);
    TrainConfig reg_cfg = cfg;
    reg_cfg.l2 = 1e-4; // stabilizes the tiny-sample fits
    train(logistic, projected, one_hot(labels, num_classes), LossKind::CrossEntropy, reg_cfg);

    BaselineClassifier clf;
    clf.kind = BaselineKind::PcaLogistic;
    clf.net = std::move(logistic);
    clf.pca = std::move(fit.model);
    clf.pca_dims = fit.retained_dims;
    return clf;
}

} // namespace atdl
