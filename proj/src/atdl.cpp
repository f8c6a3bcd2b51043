#include "atdl/atdl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "atdl/errors.hpp"
#include "atdl/stats.hpp"

namespace atdl {

namespace {

Matrix regularized(const Matrix &cov, double epsilon) {
    Matrix out = cov;
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, i) += epsilon;
    return out;
}

// Symmetric inverse through the eigendecomposition; rejects matrices that
// are singular to working precision.
Matrix symmetric_inverse(const Matrix &m, const char *what) {
    const EigenDecomposition eig = jacobi_eigen(m);
    const double lambda_max = eig.values.empty() ? 0.0 : eig.values.front();
    const double floor = std::max(lambda_max, 1.0) * 1e-14;
    Matrix inv(m.rows(), m.cols());
    for (std::size_t k = 0; k < eig.values.size(); ++k) {
        if (eig.values[k] <= floor) {
            std::ostringstream os;
            os << what << ": regularized covariance is singular (eigenvalue "
               << eig.values[k] << "); raise epsilon";
            throw SingularityError(os.str());
        }
        const double w = 1.0 / eig.values[k];
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j)
                inv(i, j) += w * eig.vectors(i, k) * eig.vectors(j, k);
    }
    return inv;
}

double quadratic_form(const std::vector<double> &diff, const Matrix &form) {
    double acc = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < diff.size(); ++j) row += form(i, j) * diff[j];
        acc += diff[i] * row;
    }
    return acc;
}

void check_labels(const std::vector<std::uint32_t> &labels, std::size_t num_target_labels,
                  std::size_t rows) {
    if (num_target_labels < 1) throw ArgumentError("need at least one target label");
    if (labels.size() != rows)
        throw ShapeError("label count " + std::to_string(labels.size()) + " != sample count " +
                         std::to_string(rows));
    for (std::uint32_t l : labels)
        if (l >= num_target_labels)
            throw ArgumentError("label " + std::to_string(l) + " outside the declared " +
                                std::to_string(num_target_labels) + " target labels");
}

} // namespace

std::size_t RelationSet::total_count() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

double auto_epsilon(const RelationSet &rel) {
    double diag_sum = 0.0;
    std::size_t diag_n = 0;
    for (const Matrix &cov : rel.covariances) {
        for (std::size_t i = 0; i < cov.rows(); ++i) diag_sum += cov(i, i);
        diag_n += cov.rows();
    }
    const double mean_diag = diag_n > 0 ? diag_sum / static_cast<double>(diag_n) : 0.0;
    return std::max(1e-3 * mean_diag, 1e-8);
}

RelationSet compute_relations(const SourceModel &source, const Matrix &x_target,
                              const std::vector<std::uint32_t> &labels,
                              std::size_t num_target_labels, double epsilon,
                              bool diagonal_only) {
    check_labels(labels, num_target_labels, x_target.rows());
    if (epsilon < 0.0) throw ArgumentError("epsilon must be nonnegative");

    const Matrix responses = source.net.output_batch(x_target);
    const std::size_t d = responses.cols();

    RelationSet rel;
    rel.epsilon = epsilon;
    rel.relations = Matrix(num_target_labels, d);
    rel.counts.assign(num_target_labels, 0);

    for (std::size_t r = 0; r < responses.rows(); ++r) {
        auto dst = rel.relations.row(labels[r]);
        const auto src = responses.row(r);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        ++rel.counts[labels[r]];
    }
    for (std::size_t l = 0; l < num_target_labels; ++l) {
        if (rel.counts[l] == 0)
            throw MissingClassError("target label " + std::to_string(l) +
                                        " has no samples; relation vector undefined",
                                    l);
        auto row = rel.relations.row(l);
        for (std::size_t j = 0; j < d; ++j) row[j] /= static_cast<double>(rel.counts[l]);
    }

    rel.covariances.reserve(num_target_labels);
    std::vector<std::vector<std::size_t>> members(num_target_labels);
    for (std::size_t r = 0; r < responses.rows(); ++r) members[labels[r]].push_back(r);
    for (std::size_t l = 0; l < num_target_labels; ++l) {
        Matrix class_rows(members[l].size(), d);
        for (std::size_t i = 0; i < members[l].size(); ++i)
            std::copy(responses.row(members[l][i]).begin(), responses.row(members[l][i]).end(),
                      class_rows.row(i).begin());
        Matrix cov = covariance(class_rows, rel.relations.row_vec(l));
        if (diagonal_only) {
            for (std::size_t i = 0; i < cov.rows(); ++i)
                for (std::size_t j = 0; j < cov.cols(); ++j)
                    if (i != j) cov(i, j) = 0.0;
        }
        rel.covariances.push_back(std::move(cov));
    }
    return rel;
}

TargetModel finetune_target(const SourceModel &source, const RelationSet &rel,
                            const Matrix &x_target, const std::vector<std::uint32_t> &labels,
                            const TrainConfig &cfg, bool recompute_relations_after) {
    if (source.net.output_activation() != Activation::Linear)
        throw ArgumentError("finetune_target: transfer needs a linear-output source model");
    if (rel.source_dim() != source.net.output_dim())
        throw ShapeError("relation vectors have dim " + std::to_string(rel.source_dim()) +
                         " but the source model outputs " +
                         std::to_string(source.net.output_dim()));
    check_labels(labels, rel.num_target_labels(), x_target.rows());

    // Each sample is pulled toward its class relation vector; the vectors
    // themselves stay fixed throughout.
    Matrix targets(x_target.rows(), rel.source_dim());
    for (std::size_t r = 0; r < x_target.rows(); ++r)
        std::copy(rel.relations.row(labels[r]).begin(), rel.relations.row(labels[r]).end(),
                  targets.row(r).begin());

    TargetModel model;
    model.net = source.net;
    model.source_provenance = source.provenance;
    train(model.net, x_target, targets, LossKind::VarianceToTargets, cfg);

    if (recompute_relations_after) {
        SourceModel tuned{model.net, source.label_names, source.provenance};
        model.relations = compute_relations(tuned, x_target, labels, rel.num_target_labels(),
                                            rel.epsilon);
        model.relations.epsilon = rel.epsilon;
    } else {
        model.relations = rel;
    }
    return model;
}

MahalanobisScorer::MahalanobisScorer(const RelationSet &rel, bool literal_sigma)
    : relations_(rel.relations) {
    forms_.reserve(rel.covariances.size());
    for (const Matrix &cov : rel.covariances) {
        if (literal_sigma)
            forms_.push_back(cov); // printed form: no inverse, no regularizer
        else
            forms_.push_back(symmetric_inverse(regularized(cov, rel.epsilon), "classify"));
    }
}

std::vector<double> MahalanobisScorer::distances(const std::vector<double> &response) const {
    if (response.size() != relations_.cols())
        throw ShapeError("response dim " + std::to_string(response.size()) +
                         " != relation dim " + std::to_string(relations_.cols()));
    std::vector<double> out(relations_.rows());
    std::vector<double> diff(response.size());
    for (std::size_t l = 0; l < relations_.rows(); ++l) {
        const auto r = relations_.row(l);
        for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = r[j] - response[j];
        out[l] = quadratic_form(diff, forms_[l]);
    }
    return out;
}

std::size_t MahalanobisScorer::nearest(const std::vector<double> &response) const {
    const std::vector<double> d = distances(response);
    std::size_t best = 0;
    for (std::size_t l = 1; l < d.size(); ++l)
        if (d[l] < d[best]) best = l;
    return best;
}

Classification classify(const TargetModel &model, const std::vector<double> &x,
                        bool literal_sigma) {
    const MahalanobisScorer scorer(model.relations, literal_sigma);
    Classification c;
    c.distances = scorer.distances(model.net.output(x));
    c.label = 0;
    for (std::size_t l = 1; l < c.distances.size(); ++l)
        if (c.distances[l] < c.distances[c.label]) c.label = l;
    return c;
}

std::vector<std::size_t> classify_batch(const TargetModel &model, const Matrix &x,
                                        bool literal_sigma) {
    const MahalanobisScorer scorer(model.relations, literal_sigma);
    const Matrix responses = model.net.output_batch(x);
    std::vector<std::size_t> out(responses.rows());
    for (std::size_t r = 0; r < responses.rows(); ++r)
        out[r] = scorer.nearest(responses.row_vec(r));
    return out;
}

double separation(const RelationSet &rel) {
    const std::size_t k = rel.num_target_labels();
    if (k < 2) throw ArgumentError("separation: need at least two target labels");

    const double total = static_cast<double>(rel.total_count());
    Matrix pooled(rel.source_dim(), rel.source_dim());
    for (std::size_t l = 0; l < k; ++l) {
        const double w = static_cast<double>(rel.counts[l]) / total;
        for (std::size_t i = 0; i < pooled.rows(); ++i)
            for (std::size_t j = 0; j < pooled.cols(); ++j)
                pooled(i, j) += w * rel.covariances[l](i, j);
    }
    const Matrix inv = symmetric_inverse(regularized(pooled, rel.epsilon), "separation");

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> diff(rel.source_dim());
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            const auto ra = rel.relations.row(a);
            const auto rb = rel.relations.row(b);
            for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = ra[j] - rb[j];
            best = std::min(best, quadratic_form(diff, inv));
        }
    }
    return best;
}

ScreenReport screen_sources(const std::vector<SourceModel> &candidates,
                            const std::vector<std::string> &ids, const Matrix &x_target,
                            const std::vector<std::uint32_t> &labels,
                            std::size_t num_target_labels, std::optional<double> epsilon,
                            const std::vector<std::optional<double>> &performances) {
    if (candidates.empty()) throw ArgumentError("screen_sources: no candidates");
    if (ids.size() != candidates.size())
        throw ArgumentError("screen_sources: id count does not match candidate count");
    if (!performances.empty() && performances.size() != candidates.size())
        throw ArgumentError("screen_sources: performance count does not match candidates");

    ScreenReport report;
    report.entries.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        ScreenEntry entry;
        entry.source_id = ids[i];
        if (!performances.empty()) entry.performance = performances[i];
        try {
            RelationSet rel =
                compute_relations(candidates[i], x_target, labels, num_target_labels, 0.0);
            rel.epsilon = epsilon ? *epsilon : auto_epsilon(rel);
            entry.d_m = separation(rel);
        } catch (const Error &e) {
            entry.failed = true;
            entry.error = e.what();
        }
        report.entries.push_back(std::move(entry));
    }

    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const ScreenEntry &a, const ScreenEntry &b) {
                         if (a.failed != b.failed) return !a.failed;
                         if (a.d_m != b.d_m) return a.d_m > b.d_m;
                         return a.source_id < b.source_id;
                     });

    std::vector<double> dm, perf;
    for (const ScreenEntry &e : report.entries) {
        if (!e.failed && e.performance) {
            dm.push_back(e.d_m);
            perf.push_back(*e.performance);
        }
    }
    if (dm.size() >= 3) {
        report.correlation = pearson(dm, perf);
        report.p_value = pearson_p_value(*report.correlation, dm.size());
    }
    return report;
}

} // namespace atdl
