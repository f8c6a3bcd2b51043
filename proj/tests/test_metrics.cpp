#include <doctest.h>

#include <cmath>

#include "atdl/errors.hpp"
#include "atdl/metrics.hpp"
#include "atdl/rng.hpp"

using namespace atdl;

namespace {

struct LongReport {
    long double ppv, npv, mcc, f1, acc;
};

// Extended-precision reference evaluation of the five formulas.
LongReport reference(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
    const long double TP = tp, FP = fp, FN = fn, TN = tn;
    LongReport r{};
    r.ppv = TP / (TP + FP);
    r.npv = TN / (TN + FN);
    r.acc = (TP + TN) / (TP + FP + FN + TN);
    r.f1 = 2 * TP / (2 * TP + FP + FN);
    r.mcc = (TP * TN - FP * FN) / std::sqrt((TP + FP) * (TP + FN) * (TN + FP) * (TN + FN));
    return r;
}

} // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("an all-correct run has no false calls") {
    const std::vector<std::size_t> p{0, 1, 0, 1, 1};
    const Confusion c = confusion(p, p, std::size_t{1});
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.tp == 3);
    CHECK(c.tn == 2);
}

TEST_CASE("a single wrong positive call is one false positive") {
    const Confusion c = confusion({1}, {0}, std::size_t{1});
    CHECK(c.fp == 1);
    CHECK(c.tp == 0);
    CHECK(c.fn == 0);
    CHECK(c.tn == 0);
}

TEST_CASE("binary counts match a brute-force tally on random labelings") {
    Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> preds, truths;
        for (int i = 0; i < 200; ++i) {
            preds.push_back(rng.uniform_index(2));
            truths.push_back(rng.uniform_index(2));
        }
        std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (int i = 0; i < 200; ++i) {
            if (truths[i] == 1 && preds[i] == 1) ++tp;
            if (truths[i] == 0 && preds[i] == 1) ++fp;
            if (truths[i] == 1 && preds[i] == 0) ++fn;
            if (truths[i] == 0 && preds[i] == 0) ++tn;
        }
        const Confusion c = confusion(preds, truths, std::size_t{1});
        CHECK(c.tp == tp);
        CHECK(c.fp == fp);
        CHECK(c.fn == fn);
        CHECK(c.tn == tn);
    }
}

TEST_CASE("multiclass tally matches a loop oracle") {
    Rng rng(53);
    std::vector<std::size_t> preds, truths;
    for (int i = 0; i < 300; ++i) {
        preds.push_back(rng.uniform_index(4));
        truths.push_back(rng.uniform_index(4));
    }
    const Confusion c = confusion(preds, truths);
    REQUIRE(c.num_classes == 4);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t p = 0; p < 4; ++p) {
            std::uint64_t count = 0;
            for (int i = 0; i < 300; ++i)
                if (truths[i] == t && preds[i] == p) ++count;
            CHECK(c.at(t, p) == count);
        }
    CHECK(c.total() == 300);
}

TEST_CASE("the diagnostic panel reproduces a known confusion") {
    Confusion c;
    c.tp = 28;
    c.fp = 4;
    c.fn = 2;
    c.tn = 64;
    const MetricReport r = report(c);
    REQUIRE(r.ppv);
    REQUIRE(r.npv);
    REQUIRE(r.mcc);
    REQUIRE(r.f1);
    REQUIRE(r.acc);
    CHECK(*r.ppv == doctest::Approx(0.875).epsilon(5e-4));
    CHECK(*r.npv == doctest::Approx(0.970).epsilon(5e-4));
    CHECK(*r.mcc == doctest::Approx(0.859).epsilon(5e-4));
    CHECK(*r.f1 == doctest::Approx(0.903).epsilon(5e-4));
    CHECK(*r.acc == doctest::Approx(0.939).epsilon(5e-4));
}

TEST_CASE("a perfect classifier scores one on every metric") {
    Confusion c;
    c.tp = 10;
    c.tn = 20;
    const MetricReport r = report(c);
    CHECK(*r.ppv == 1.0);
    CHECK(*r.npv == 1.0);
    CHECK(*r.mcc == 1.0);
    CHECK(*r.f1 == 1.0);
    CHECK(*r.acc == 1.0);
}

TEST_CASE("an all-one-class predictor has undefined mcc, not NaN") {
    const Confusion c = confusion({1, 1, 1}, {1, 0, 1}, std::size_t{1});
    const MetricReport r = report(c);
    CHECK(!r.mcc);     // (tn+fn) and (tn+fp) collapse
    CHECK(!r.npv);
    REQUIRE(r.acc);
    CHECK(std::isfinite(*r.acc));
    CHECK(format_metric(r.mcc) == "-");
}

TEST_CASE("report matches extended-precision formulas on random confusions") {
    Rng rng(57);
    for (int trial = 0; trial < 200; ++trial) {
        Confusion c;
        c.tp = 1 + rng.uniform_index(500);
        c.fp = 1 + rng.uniform_index(500);
        c.fn = 1 + rng.uniform_index(500);
        c.tn = 1 + rng.uniform_index(500);
        const MetricReport r = report(c);
        const LongReport ref = reference(c.tp, c.fp, c.fn, c.tn);
        CHECK(std::abs(*r.ppv - static_cast<double>(ref.ppv)) < 1e-12);
        CHECK(std::abs(*r.npv - static_cast<double>(ref.npv)) < 1e-12);
        CHECK(std::abs(*r.mcc - static_cast<double>(ref.mcc)) < 1e-12);
        CHECK(std::abs(*r.f1 - static_cast<double>(ref.f1)) < 1e-12);
        CHECK(std::abs(*r.acc - static_cast<double>(ref.acc)) < 1e-12);
        CHECK(*r.ppv >= 0.0);
        CHECK(*r.ppv <= 1.0);
        CHECK(*r.mcc >= -1.0);
        CHECK(*r.mcc <= 1.0);
    }
}

TEST_CASE("swapping the positive label swaps ppv and npv, keeps acc and mcc") {
    Rng rng(59);
    std::vector<std::size_t> preds, truths;
    for (int i = 0; i < 150; ++i) {
        preds.push_back(rng.uniform_index(2));
        truths.push_back(rng.uniform_index(2));
    }
    const MetricReport a = report(confusion(preds, truths, std::size_t{1}));
    const MetricReport b = report(confusion(preds, truths, std::size_t{0}));
    CHECK(*a.ppv == doctest::Approx(*b.npv).epsilon(1e-15));
    CHECK(*a.npv == doctest::Approx(*b.ppv).epsilon(1e-15));
    CHECK(*a.acc == doctest::Approx(*b.acc).epsilon(1e-15));
    CHECK(*a.mcc == doctest::Approx(*b.mcc).epsilon(1e-15));
}

TEST_CASE("length mismatch is rejected") {
    CHECK_THROWS_AS(confusion({1, 0}, {1}, std::size_t{1}), ArgumentError);
}

TEST_SUITE_END();
