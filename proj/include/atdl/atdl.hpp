#ifndef ATDL_ATDL_HPP
#define ATDL_ATDL_HPP

#include <optional>
#include <string>
#include <vector>

#include "atdl/matrix.hpp"
#include "atdl/network.hpp"
#include "atdl/sda.hpp"

namespace atdl {

/// Per-target-label statistics of the source network's output responses:
/// row l of `relations` is the class-conditional mean, `covariances[l]` the
/// matching (unregularized) covariance, `counts[l]` the sample count.
struct RelationSet {
    Matrix relations; // num_target_labels x source_dim
    std::vector<Matrix> covariances;
    std::vector<std::size_t> counts;
    double epsilon = 0.0; // added to covariance diagonals wherever inverted

    std::size_t num_target_labels() const { return relations.rows(); }
    std::size_t source_dim() const { return relations.cols(); }
    std::size_t total_count() const;
};

/// Default regularizer: 1e-3 times the mean covariance diagonal (floored to
/// stay strictly positive, since classes smaller than the source dimension
/// make the covariances singular).
double auto_epsilon(const RelationSet &rel);

/// Class-conditional means and covariances of the source model's outputs on
/// the target samples. Every label in [0, num_target_labels) must occur.
/// `diagonal_only` drops off-diagonal covariance entries for tiny classes.
RelationSet compute_relations(const SourceModel &source, const Matrix &x_target,
                              const std::vector<std::uint32_t> &labels,
                              std::size_t num_target_labels, double epsilon,
                              bool diagonal_only = false);

/// The transferred network: all layers of the source are kept, including the
/// output layer, and classification happens against the relation vectors.
struct TargetModel {
    Network net;
    RelationSet relations;
    std::string source_provenance;
};

/// Fine-tunes every layer of the source network so that class-l samples map
/// close to the fixed relation vector r_l. Optionally recomputes the class
/// statistics with the tuned network afterwards (default keeps the originals).
TargetModel finetune_target(const SourceModel &source, const RelationSet &rel,
                            const Matrix &x_target, const std::vector<std::uint32_t> &labels,
                            const TrainConfig &cfg, bool recompute_relations_after = false);

/// Precomputed quadratic forms for repeated distance evaluations. The normal
/// reading inverts the regularized covariance; `literal_sigma` instead
/// multiplies by the covariance itself, kept for comparison.
class MahalanobisScorer {
public:
    explicit MahalanobisScorer(const RelationSet &rel, bool literal_sigma = false);

    /// Squared distance to each relation vector.
    std::vector<double> distances(const std::vector<double> &response) const;

    /// Argmin label; ties go to the lowest label index.
    std::size_t nearest(const std::vector<double> &response) const;

private:
    Matrix relations_;
    std::vector<Matrix> forms_;
};

struct Classification {
    std::size_t label = 0;
    std::vector<double> distances;
};

Classification classify(const TargetModel &model, const std::vector<double> &x,
                        bool literal_sigma = false);

std::vector<std::size_t> classify_batch(const TargetModel &model, const Matrix &x,
                                        bool literal_sigma = false);

/// Minimum pairwise Mahalanobis distance between relation vectors under the
/// count-weighted pooled covariance. Zero means some relations coincide.
double separation(const RelationSet &rel);

struct ScreenEntry {
    std::string source_id;
    double d_m = 0.0;
    std::optional<double> performance;
    bool failed = false;
    std::string error;
};

struct ScreenReport {
    std::vector<ScreenEntry> entries; // descending d_m, failures last
    std::optional<double> correlation;
    std::optional<double> p_value;
};

/// Ranks candidate source models by relation-vector separation on the target
/// data. A failing candidate is recorded, not fatal. When performances are
/// supplied (aligned with `candidates`), their Pearson correlation with d_m
/// is attached. Null epsilon picks auto_epsilon per candidate.
ScreenReport screen_sources(const std::vector<SourceModel> &candidates,
                            const std::vector<std::string> &ids, const Matrix &x_target,
                            const std::vector<std::uint32_t> &labels,
                            std::size_t num_target_labels, std::optional<double> epsilon,
                            const std::vector<std::optional<double>> &performances = {});

} // namespace atdl

#endif
