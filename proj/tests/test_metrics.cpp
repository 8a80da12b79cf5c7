#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "dsdkit/errors.hpp"
#include "dsdkit/metrics.hpp"
#include "dsdkit/rng.hpp"

using namespace dsdkit;

TEST_CASE("outcome counts partition and hand case") {
    const std::vector<int> preds = {0, 1, 1, 2, 0};
    const std::vector<int> labels = {0, 1, 2, 2, 1};
    const auto c0 = metrics::outcome_counts(preds, labels, 0);
    CHECK(c0.tp == 1);
    CHECK(c0.fp == 1);
    CHECK(c0.fn == 0);
    CHECK(c0.tn == 3);
    CHECK(c0.total() == 5);

    const auto c1 = metrics::outcome_counts(preds, labels, 1);
    CHECK(c1.tp == 1);
    CHECK(c1.fp == 1);
    CHECK(c1.fn == 1);
    CHECK(c1.tn == 2);

    const auto c2 = metrics::outcome_counts(preds, labels, 2);
    CHECK(c2.tp == 1);
    CHECK(c2.fp == 0);
    CHECK(c2.fn == 1);
    CHECK(c2.tn == 3);

    CHECK_THROWS_AS(metrics::outcome_counts({0, 1}, {0}, 0), DimensionError);
}

TEST_CASE("perfect and inverted predictors") {
    const std::vector<int> labels = {0, 1, 0, 1};
    const auto r = metrics::evaluate(labels, labels, 2);
    CHECK(r.accuracy == 100.0);
    CHECK(*r.macro_precision == 100.0);
    CHECK(*r.macro_recall == 100.0);
    CHECK(*r.macro_f1 == 100.0);

    const std::vector<int> inverted = {1, 0, 1, 0};
    const auto c = metrics::outcome_counts(inverted, labels, 0);
    CHECK(c.tp == 0);
    CHECK(c.tn == 0);
    CHECK(c.fp == 2);
    CHECK(c.fn == 2);
}

TEST_CASE("precision/recall/f1 hand arithmetic") {
    metrics::OutcomeCounts c;
    c.tp = 3;
    c.fp = 1;
    c.fn = 2;
    c.tn = 10;
    const auto m = metrics::class_metrics(c);
    CHECK(*m.precision == doctest::Approx(75.0));
    CHECK(*m.recall == doctest::Approx(60.0));
    CHECK(*m.f1 == doctest::Approx(2.0 * 0.75 * 0.6 / 1.35 * 100.0));
}

TEST_CASE("f1 sits between precision and recall") {
    Rng rng(60);
    for (int trial = 0; trial < 200; ++trial) {
        metrics::OutcomeCounts c;
        c.tp = rng.below(20);
        c.fp = rng.below(20);
        c.fn = rng.below(20);
        c.tn = rng.below(20);
        const auto m = metrics::class_metrics(c);
        if (!m.f1) continue;
        const double lo = std::min(*m.precision, *m.recall);
        const double hi = std::max(*m.precision, *m.recall);
        CHECK(*m.f1 >= lo - 1e-9);
        CHECK(*m.f1 <= hi + 1e-9);
        if (*m.precision == *m.recall) {
            CHECK(*m.f1 == doctest::Approx(*m.precision));
        }
    }
}

TEST_CASE("0/0 metrics are absent, not zero") {
    // class never predicted and never present
    const std::vector<int> preds = {0, 0};
    const std::vector<int> labels = {0, 0};
    const auto r = metrics::evaluate(preds, labels, 2);
    CHECK_FALSE(r.per_class[1].precision.has_value());
    CHECK_FALSE(r.per_class[1].recall.has_value());
    CHECK_FALSE(r.per_class[1].f1.has_value());
    // macro averages only the defined class
    CHECK(*r.macro_precision == 100.0);
}

TEST_CASE("accuracy is invariant under joint relabeling") {
    Rng rng(61);
    const int n = 100, m = 4;
    std::vector<int> preds(n), labels(n);
    for (int i = 0; i < n; ++i) {
        preds[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(m));
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(m));
    }
    const double acc = metrics::evaluate(preds, labels, m).accuracy;

    const int perm[m] = {2, 0, 3, 1};
    std::vector<int> p2(n), l2(n);
    for (int i = 0; i < n; ++i) {
        p2[static_cast<std::size_t>(i)] = perm[preds[static_cast<std::size_t>(i)]];
        l2[static_cast<std::size_t>(i)] = perm[labels[static_cast<std::size_t>(i)]];
    }
    CHECK(metrics::evaluate(p2, l2, m).accuracy == acc);
}

TEST_CASE("relative error reduction") {
    CHECK(*metrics::relative_error_reduction(20.0, 15.0) == doctest::Approx(25.0));
    CHECK(*metrics::relative_error_reduction(5.0, 5.0) == 0.0);
    CHECK_FALSE(metrics::relative_error_reduction(0.0, 1.0).has_value());

    // the paper's headline cell, from rounded accuracies
    const auto rer = metrics::relative_error_reduction(1.43, 0.98);
    CHECK(*rer == doctest::Approx(31.468531).epsilon(1e-6));
    CHECK(std::abs(*rer - 31.37) <= 0.15);
}
