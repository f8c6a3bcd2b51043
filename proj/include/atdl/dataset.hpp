#ifndef ATDL_DATASET_HPP
#define ATDL_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "atdl/matrix.hpp"

namespace atdl {

/// Labeled sample matrix. One row per sample; features live in [0, 1].
/// Image data is stored channel-planar: feature index c*h*w + y*w + x.
struct Dataset {
    Matrix x;
    std::vector<std::uint32_t> labels;
    std::vector<std::string> label_names;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;

    std::size_t rows() const { return x.rows(); }
    std::size_t feature_count() const { return x.cols(); }
    std::size_t num_classes() const { return label_names.size(); }

    /// Enforces the row/label/feature-range invariants; loaders and
    /// transforms call this before handing a dataset out.
    void validate() const;

    /// Per-class sample counts, indexed by label id.
    std::vector<std::size_t> class_counts() const;
};

/// IDX (big-endian) image + label pair, pixel bytes scaled by 1/255.
Dataset load_idx(const std::string &images_path, const std::string &labels_path);

/// CIFAR-10 binary batches: 3073-byte records, RGB kept channel-planar.
Dataset load_cifar10(const std::vector<std::string> &batch_paths);

/// CSV with a header row; the "label" column (or the last column when no
/// header cell is named "label") holds integer class ids, every other column
/// a feature already scaled to [0, 1].
Dataset load_csv(const std::string &path);

/// Generic binary container (magic ATDLDS01).
Dataset load_container(const std::string &path);
void save_container(const Dataset &d, const std::string &path);

/// Luma conversion 0.299 R + 0.587 G + 0.114 B; input must be 3-channel.
Dataset to_grayscale(const Dataset &d);

/// Bilinear resize (half-pixel centers) of every channel plane.
Dataset resize(const Dataset &d, std::size_t out_h, std::size_t out_w);

enum class SplitKind { KFold, Holdout, PerClassSubsample };

struct SplitPlan {
    SplitKind kind = SplitKind::KFold;
    std::size_t folds = 2;
    double holdout_fraction = 0.5;             // test share, stratified
    std::vector<std::size_t> per_class_counts; // training draw per label
    std::uint64_t seed = 0;
};

struct Fold {
    Dataset train;
    Dataset test;
};

/// Seeded stratified splitting. KFold partitions the data into `folds`
/// pairs; the other kinds yield a single pair.
std::vector<Fold> split(const Dataset &d, const SplitPlan &plan);

/// New dataset from the selected rows (order preserved).
Dataset take_rows(const Dataset &d, const std::vector<std::size_t> &indices);

/// Random `n` rows without replacement.
Dataset subsample(const Dataset &d, std::size_t n, std::uint64_t seed);

/// Keeps only the listed classes. When `relabel` is set the kept classes are
/// renumbered 0..k-1 in the order given.
Dataset filter_classes(const Dataset &d, const std::vector<std::uint32_t> &keep, bool relabel);

/// One-hot rows over `num_classes` columns.
Matrix one_hot(const std::vector<std::uint32_t> &labels, std::size_t num_classes);

} // namespace atdl

#endif
