#include <doctest.h>

#include <cmath>

#include "atdl/atdl.hpp"
#include "atdl/errors.hpp"
#include "atdl/rng.hpp"

using namespace atdl;

namespace {

// A linear-output model with hand-set parameters, depth 2.
SourceModel toy_source(std::uint64_t seed, std::size_t in = 3, std::size_t hidden = 5,
                       std::size_t out = 4) {
    Rng rng(seed);
    SourceModel m;
    m.net = Network({LayerSpec{in, hidden, Activation::Sigmoid},
                     LayerSpec{hidden, out, Activation::Linear}},
                    rng);
    m.label_names.resize(out);
    m.provenance = "toy";
    return m;
}

Matrix random_inputs(std::size_t n, std::size_t d, Rng &rng) {
    Matrix x(n, d);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
    return x;
}

std::vector<std::uint32_t> cyclic_labels(std::size_t n, std::uint32_t k) {
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(i % k);
    return labels;
}

// An identity-like "network" for directly scripting output responses: one
// linear layer with weights I, bias 0, fed the responses themselves.
SourceModel passthrough(std::size_t d) {
    SourceModel m;
    Layer l;
    l.spec = {d, d, Activation::Linear};
    l.weights = Matrix::identity(d);
    l.bias.assign(d, 0.0);
    m.net.append_layer(l);
    m.label_names.resize(d);
    m.provenance = "passthrough";
    return m;
}

} // namespace

TEST_SUITE_BEGIN("atdl");

TEST_CASE("a single-sample class pins the relation vector to that response") {
    const SourceModel m = passthrough(2);
    const Matrix x = Matrix::from_rows({{0.3, 0.7}});
    const RelationSet rel = compute_relations(m, x, {0}, 1, 0.0);
    CHECK(rel.relations(0, 0) == doctest::Approx(0.3));
    CHECK(rel.relations(0, 1) == doctest::Approx(0.7));
    CHECK(rel.counts[0] == 1);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(rel.covariances[0](i, j) == 0.0);
}

TEST_CASE("two samples average to the midpoint") {
    const SourceModel m = passthrough(2);
    const Matrix x = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}});
    const RelationSet rel = compute_relations(m, x, {0, 0}, 1, 0.0);
    CHECK(rel.relations(0, 0) == doctest::Approx(0.5));
    CHECK(rel.relations(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("relation vectors match a naive per-coordinate averaging oracle") {
    const SourceModel m = toy_source(61);
    Rng rng(62);
    const Matrix x = random_inputs(40, 3, rng);
    const auto labels = cyclic_labels(40, 3);
    const RelationSet rel = compute_relations(m, x, labels, 3, 0.0);

    const Matrix responses = m.net.output_batch(x);
    for (std::uint32_t l = 0; l < 3; ++l) {
        std::vector<double> sum(responses.cols(), 0.0);
        std::size_t n = 0;
        for (std::size_t r = 0; r < 40; ++r) {
            if (labels[r] != l) continue;
            for (std::size_t c = 0; c < responses.cols(); ++c) sum[c] += responses(r, c);
            ++n;
        }
        CHECK(n == rel.counts[l]);
        for (std::size_t c = 0; c < responses.cols(); ++c)
            CHECK(std::abs(rel.relations(l, c) - sum[c] / n) < 1e-12);
    }
}

TEST_CASE("an empty class is reported by label") {
    const SourceModel m = passthrough(2);
    const Matrix x = Matrix::from_rows({{0.1, 0.2}});
    try {
        compute_relations(m, x, {0}, 2, 0.0);
        FAIL("expected MissingClassError");
    } catch (const MissingClassError &e) {
        CHECK(e.label == 1);
    }
}

TEST_CASE("relation vectors live in the source label space") {
    const SourceModel m = toy_source(63, 4, 6, 9);
    Rng rng(64);
    const Matrix x = random_inputs(20, 4, rng);
    const RelationSet rel = compute_relations(m, x, cyclic_labels(20, 2), 2, 0.0);
    CHECK(rel.source_dim() == 9);
    CHECK(rel.num_target_labels() == 2);
}

TEST_CASE("the variance cost at initialization equals the weighted covariance traces") {
    const SourceModel m = toy_source(65);
    Rng rng(66);
    const Matrix x = random_inputs(50, 3, rng);
    const auto labels = cyclic_labels(50, 3);
    const RelationSet rel = compute_relations(m, x, labels, 3, 0.0);

    Matrix targets(50, rel.source_dim());
    for (std::size_t r = 0; r < 50; ++r)
        for (std::size_t c = 0; c < rel.source_dim(); ++c)
            targets(r, c) = rel.relations(labels[r], c);
    const double cost = loss(LossKind::VarianceToTargets, m.net.output_batch(x), targets);

    double expected = 0.0;
    for (std::size_t l = 0; l < 3; ++l) {
        double trace = 0.0;
        for (std::size_t j = 0; j < rel.source_dim(); ++j) trace += rel.covariances[l](j, j);
        expected += static_cast<double>(rel.counts[l]) / 50.0 * trace;
    }
    CHECK(std::abs(cost - expected) < 1e-10);
}

TEST_CASE("a model already at the relation vectors has zero cost and gradients") {
    const SourceModel m = passthrough(2);
    // Every class-l sample maps exactly to r_l (single point per class).
    const Matrix x = Matrix::from_rows({{0.2, 0.8}, {0.7, 0.3}});
    const std::vector<std::uint32_t> labels{0, 1};
    const RelationSet rel = compute_relations(m, x, labels, 2, 0.0);

    Matrix targets(2, 2);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) targets(r, c) = rel.relations(labels[r], c);
    CHECK(loss(LossKind::VarianceToTargets, m.net.output_batch(x), targets) == 0.0);
    const Gradients g = backward(m.net, x, targets, LossKind::VarianceToTargets);
    for (std::size_t i = 0; i < g.weights[0].size(); ++i) CHECK(g.weights[0].data()[i] == 0.0);
}

TEST_CASE("target fine-tuning lowers the variance cost on a toy task") {
    const SourceModel m = toy_source(67);
    Rng rng(68);
    const Matrix x = random_inputs(30, 3, rng);
    const auto labels = cyclic_labels(30, 2);
    RelationSet rel = compute_relations(m, x, labels, 2, 0.0);
    rel.epsilon = auto_epsilon(rel);

    TrainConfig cfg;
    cfg.lambda0 = 0.01;
    cfg.mu_final = 0.7;
    cfg.minibatch = 10;
    cfg.epochs = 3;
    cfg.seed = 69;

    Matrix targets(30, rel.source_dim());
    for (std::size_t r = 0; r < 30; ++r)
        for (std::size_t c = 0; c < rel.source_dim(); ++c)
            targets(r, c) = rel.relations(labels[r], c);
    const double before = loss(LossKind::VarianceToTargets, m.net.output_batch(x), targets);

    const TargetModel tuned = finetune_target(m, rel, x, labels, cfg);
    const double after = loss(LossKind::VarianceToTargets, tuned.net.output_batch(x), targets);
    CHECK(after <= before);

    // The relation set rides along unchanged.
    CHECK(Matrix::max_abs_diff(tuned.relations.relations, rel.relations) == 0.0);
}

TEST_CASE("hand-checked mahalanobis distances under identity covariance") {
    RelationSet rel;
    rel.relations = Matrix::from_rows({{0.0, 0.0}, {4.0, 4.0}});
    rel.covariances = {Matrix::identity(2), Matrix::identity(2)};
    rel.counts = {1, 1};
    rel.epsilon = 0.0;

    TargetModel model;
    model.relations = rel;
    Layer l;
    l.spec = {2, 2, Activation::Linear};
    l.weights = Matrix::identity(2);
    l.bias.assign(2, 0.0);
    model.net.append_layer(l);

    const Classification c = classify(model, {0.5, 0.0});
    CHECK(c.label == 0);
    CHECK(c.distances[0] == doctest::Approx(0.25));
    CHECK(c.distances[1] == doctest::Approx(28.25));
}

TEST_CASE("a sample sitting on its relation vector has zero distance") {
    const SourceModel m = passthrough(3);
    const Matrix x = Matrix::from_rows({{0.1, 0.5, 0.9}, {0.9, 0.1, 0.2}});
    const std::vector<std::uint32_t> labels{0, 1};
    RelationSet rel = compute_relations(m, x, labels, 2, 0.0);
    rel.epsilon = 1e-6;
    TargetModel model{m.net, rel, "toy"};
    const Classification c = classify(model, x.row_vec(0));
    CHECK(c.label == 0);
    CHECK(c.distances[0] == doctest::Approx(0.0));
}

TEST_CASE("identity covariance reduces the argmin to nearest euclidean relation") {
    Rng rng(71);
    RelationSet rel;
    rel.relations = Matrix(4, 3);
    for (std::size_t i = 0; i < rel.relations.size(); ++i)
        rel.relations.data()[i] = rng.uniform(-2, 2);
    for (int l = 0; l < 4; ++l) {
        rel.covariances.push_back(Matrix::identity(3));
        rel.counts.push_back(5);
    }
    rel.epsilon = 0.0;
    const MahalanobisScorer scorer(rel);

    for (int probe = 0; probe < 100; ++probe) {
        std::vector<double> f{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        std::size_t nearest_euclid = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < 4; ++l) {
            double dist = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double d = rel.relations(l, j) - f[j];
                dist += d * d;
            }
            if (dist < best) {
                best = dist;
                nearest_euclid = l;
            }
        }
        CHECK(scorer.nearest(f) == nearest_euclid);
    }
}

TEST_CASE("classification is invariant under a common translation") {
    Rng rng(73);
    RelationSet rel;
    rel.relations = Matrix(3, 2);
    for (std::size_t i = 0; i < rel.relations.size(); ++i)
        rel.relations.data()[i] = rng.uniform(-1, 1);
    for (int l = 0; l < 3; ++l) {
        Matrix cov = Matrix::identity(2);
        cov(0, 0) = 0.5 + rng.uniform();
        cov(1, 1) = 0.5 + rng.uniform();
        cov(0, 1) = cov(1, 0) = 0.2 * rng.uniform();
        rel.covariances.push_back(cov);
        rel.counts.push_back(7);
    }
    rel.epsilon = 1e-3;

    RelationSet shifted = rel;
    const double dx = 3.7, dy = -1.2;
    for (std::size_t l = 0; l < 3; ++l) {
        shifted.relations(l, 0) += dx;
        shifted.relations(l, 1) += dy;
    }
    const MahalanobisScorer a(rel), b(shifted);
    for (int probe = 0; probe < 50; ++probe) {
        const std::vector<double> f{rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const std::vector<double> g{f[0] + dx, f[1] + dy};
        CHECK(a.nearest(f) == b.nearest(g));
        const auto da = a.distances(f);
        const auto db = b.distances(g);
        for (std::size_t l = 0; l < 3; ++l) CHECK(da[l] == doctest::Approx(db[l]).epsilon(1e-9));
    }
}

TEST_CASE("singular covariance without regularization is refused with advice") {
    RelationSet rel;
    rel.relations = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}});
    rel.covariances = {Matrix(2, 2), Matrix(2, 2)}; // rank zero
    rel.counts = {1, 1};
    rel.epsilon = 0.0;
    try {
        MahalanobisScorer scorer(rel);
        FAIL("expected SingularityError");
    } catch (const SingularityError &e) {
        CHECK(std::string(e.what()).find("epsilon") != std::string::npos);
    }
}

TEST_CASE("literal-sigma mode reproduces the printed quadratic form") {
    RelationSet rel;
    rel.relations = Matrix::from_rows({{0.0, 0.0}, {2.0, 0.0}});
    Matrix cov = Matrix::identity(2);
    cov(0, 0) = 4.0; // stretched axis
    rel.covariances = {cov, cov};
    rel.counts = {3, 3};
    rel.epsilon = 0.0;

    const MahalanobisScorer inverse(rel, false);
    const MahalanobisScorer literal(rel, true);
    const std::vector<double> f{1.0, 0.0};
    // Inverse reading: (1)^2 / 4 = 0.25; printed form: 4 * 1 = 4.
    CHECK(inverse.distances(f)[0] == doctest::Approx(0.25));
    CHECK(literal.distances(f)[0] == doctest::Approx(4.0));
}

TEST_CASE("coincident relation vectors have zero separation") {
    RelationSet rel;
    rel.relations = Matrix(2, 2, 0.5);
    rel.covariances = {Matrix::identity(2), Matrix::identity(2)};
    rel.counts = {4, 4};
    rel.epsilon = 0.0;
    CHECK(separation(rel) == doctest::Approx(0.0));
}

TEST_CASE("separation under identity pooled covariance is squared distance") {
    RelationSet rel;
    rel.relations = Matrix::from_rows({{0.0, 0.0}, {2.0, 0.0}});
    rel.covariances = {Matrix::identity(2), Matrix::identity(2)};
    rel.counts = {10, 10};
    rel.epsilon = 0.0;
    CHECK(separation(rel) == doctest::Approx(4.0));
}

TEST_CASE("separation takes the minimum over unordered label pairs") {
    RelationSet rel;
    rel.relations = Matrix::from_rows({{0.0, 0.0}, {2.0, 0.0}, {0.0, 0.5}});
    for (int l = 0; l < 3; ++l) {
        rel.covariances.push_back(Matrix::identity(2));
        rel.counts.push_back(5);
    }
    rel.epsilon = 0.0;
    CHECK(separation(rel) == doctest::Approx(0.25)); // pair (0, 2)

    // Permuting the label order leaves the minimum unchanged.
    RelationSet perm = rel;
    perm.relations = Matrix::from_rows({{0.0, 0.5}, {0.0, 0.0}, {2.0, 0.0}});
    CHECK(separation(perm) == doctest::Approx(separation(rel)));
}

TEST_CASE("count weighting shapes the pooled covariance") {
    RelationSet rel;
    rel.relations = Matrix::from_rows({{0.0}, {1.0}});
    Matrix wide(1, 1), narrow(1, 1);
    wide(0, 0) = 4.0;
    narrow(0, 0) = 0.25;
    rel.covariances = {wide, narrow};
    rel.epsilon = 0.0;

    rel.counts = {3, 1}; // pooled = (3*4 + 1*0.25)/4 = 3.0625
    CHECK(separation(rel) == doctest::Approx(1.0 / 3.0625));
    rel.counts = {1, 3}; // pooled = (4 + 3*0.25)/4 = 1.1875
    CHECK(separation(rel) == doctest::Approx(1.0 / 1.1875));
}

TEST_CASE("byte-identical candidates screen to equal distances") {
    const SourceModel m = toy_source(75);
    Rng rng(76);
    const Matrix x = random_inputs(24, 3, rng);
    const auto labels = cyclic_labels(24, 2);
    const ScreenReport report =
        screen_sources({m, m}, {"a", "b"}, x, labels, 2, std::nullopt);
    REQUIRE(report.entries.size() == 2);
    CHECK(report.entries[0].d_m == doctest::Approx(report.entries[1].d_m));
    CHECK(report.entries[0].source_id == "a"); // id breaks the tie
}

TEST_CASE("a class-independent noise candidate ranks last") {
    // An informative candidate: passthrough of well-separated class clusters.
    const SourceModel informative = passthrough(2);
    Matrix x(40, 2);
    std::vector<std::uint32_t> labels;
    Rng rng(77);
    for (std::size_t i = 0; i < 40; ++i) {
        const bool pos = i % 2 == 0;
        x(i, 0) = (pos ? 0.9 : 0.1) + 0.02 * rng.uniform(-1, 1);
        x(i, 1) = (pos ? 0.1 : 0.9) + 0.02 * rng.uniform(-1, 1);
        labels.push_back(pos ? 0 : 1);
    }

    // A frozen random net whose outputs ignore the class structure: weights
    // map both clusters to nearly the same response region.
    SourceModel noise;
    Layer l;
    l.spec = {2, 2, Activation::Linear};
    l.weights = Matrix(2, 2);
    l.weights(0, 0) = 1e-4;
    l.weights(1, 1) = 1e-4;
    l.bias.assign(2, 0.5);
    noise.net.append_layer(l);
    noise.label_names.resize(2);
    noise.provenance = "noise";

    const ScreenReport report = screen_sources({informative, noise}, {"informative", "noise"}, x,
                                               labels, 2, 1e-4);
    REQUIRE(report.entries.size() == 2);
    CHECK(report.entries[0].source_id == "informative");
    CHECK(report.entries[1].source_id == "noise");
    CHECK(report.entries[1].d_m < 1e-2);
}

TEST_CASE("supplying the distances as performances gives perfect correlation") {
    Rng rng(79);
    std::vector<SourceModel> candidates;
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) {
        candidates.push_back(toy_source(100 + i));
        ids.push_back("cand" + std::to_string(i));
    }
    const Matrix x = random_inputs(30, 3, rng);
    const auto labels = cyclic_labels(30, 2);

    ScreenReport first = screen_sources(candidates, ids, x, labels, 2, std::nullopt);
    std::vector<std::optional<double>> perf(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (const ScreenEntry &e : first.entries)
            if (e.source_id == ids[i]) perf[i] = e.d_m;
    }
    const ScreenReport second = screen_sources(candidates, ids, x, labels, 2, std::nullopt, perf);
    REQUIRE(second.correlation);
    CHECK(*second.correlation == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(second.p_value);
    CHECK(*second.p_value < 0.05);
}

TEST_CASE("a failing candidate is recorded, not fatal") {
    const SourceModel good = toy_source(81);
    SourceModel bad = toy_source(82, 5, 4, 4); // wrong input width
    Rng rng(83);
    const Matrix x = random_inputs(12, 3, rng);
    const auto labels = cyclic_labels(12, 2);
    const ScreenReport report =
        screen_sources({good, bad}, {"good", "bad"}, x, labels, 2, std::nullopt);
    REQUIRE(report.entries.size() == 2);
    CHECK(!report.entries[0].failed);
    CHECK(report.entries[1].failed);
    CHECK(report.entries[1].source_id == "bad");
    CHECK(!report.entries[1].error.empty());
}

TEST_CASE("end-to-end transfer under fixed seeds is bit-identical") {
    const SourceModel m = toy_source(85);
    Rng rng(86);
    const Matrix x = random_inputs(26, 3, rng);
    const auto labels = cyclic_labels(26, 2);
    TrainConfig cfg;
    cfg.lambda0 = 0.02;
    cfg.epochs = 4;
    cfg.minibatch = 5;
    cfg.seed = 87;

    RelationSet rel = compute_relations(m, x, labels, 2, 0.0);
    rel.epsilon = auto_epsilon(rel);
    const TargetModel a = finetune_target(m, rel, x, labels, cfg);
    const TargetModel b = finetune_target(m, rel, x, labels, cfg);
    for (std::size_t li = 0; li < a.net.depth(); ++li)
        CHECK(Matrix::max_abs_diff(a.net.layer(li).weights, b.net.layer(li).weights) == 0.0);
    CHECK(Matrix::max_abs_diff(a.relations.relations, b.relations.relations) == 0.0);
}

TEST_SUITE_END();
