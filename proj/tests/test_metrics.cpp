#include <doctest.h>

#include <cmath>

#include "sectlab/metrics.hpp"
#include "sectlab/rng.hpp"

using namespace sectlab;

TEST_CASE("confusion matrix counting") {
    SUBCASE("perfect predictions are diagonal") {
        const std::vector<std::string> truth{"a", "b", "c", "a", "b", "c"};
        const ConfusionMatrix cm = confusion_matrix(truth, truth);
        CHECK(cm.accuracy() == 1.0);
        CHECK(cm.trace() == 6);
        for (std::size_t i = 0; i < cm.labels.size(); ++i)
            for (std::size_t j = 0; j < cm.labels.size(); ++j)
                CHECK(cm.counts[i][j] == (i == j ? (i == 0 ? 2u : 2u) : 0u));
    }
    SUBCASE("collapsed predictions fill one column") {
        const std::vector<std::string> truth{"a", "b", "c", "b"};
        const std::vector<std::string> predicted{"b", "b", "b", "b"};
        const ConfusionMatrix cm = confusion_matrix(truth, predicted);
        const std::size_t col_b = 1;  // labels sorted: a, b, c
        for (std::size_t i = 0; i < cm.labels.size(); ++i)
            for (std::size_t j = 0; j < cm.labels.size(); ++j)
                CHECK(cm.counts[i][j] == (j == col_b ? (cm.labels[i] == "b" ? 2u : 1u) : 0u));
        CHECK(cm.accuracy() == doctest::Approx(0.5));
    }
    SUBCASE("hand-counted six-sample case") {
        const std::vector<std::string> truth{"x", "x", "y", "y", "z", "z"};
        const std::vector<std::string> predicted{"x", "y", "y", "y", "z", "x"};
        const ConfusionMatrix cm = confusion_matrix(truth, predicted);
        // rows/cols sorted x, y, z
        CHECK(cm.counts[0][0] == 1);
        CHECK(cm.counts[0][1] == 1);
        CHECK(cm.counts[1][1] == 2);
        CHECK(cm.counts[2][2] == 1);
        CHECK(cm.counts[2][0] == 1);
        CHECK(cm.total() == 6);
        CHECK(cm.accuracy() == doctest::Approx(4.0 / 6.0));
        const std::string csv = cm.to_csv();
        CHECK(csv.find("x,1,1,0") != std::string::npos);
    }
    SUBCASE("length mismatch is refused") {
        CHECK_THROWS_AS(confusion_matrix({"a"}, {"a", "b"}), MetricsError);
    }
}

TEST_CASE("precision-recall and average precision") {
    SUBCASE("perfectly separating scores reach AP 1.0") {
        std::vector<ScoredSample> samples;
        for (int i = 0; i < 10; ++i) {
            const bool pos = i < 5;
            samples.push_back({"s" + std::to_string(i), pos ? "p" : "q",
                               {{"p", pos ? 0.9 : 0.1}, {"q", pos ? 0.1 : 0.9}}});
        }
        const PrResult result = precision_recall(samples);
        for (const auto& curve : result.curves)
            CHECK(curve.average_precision == doctest::Approx(1.0));
        CHECK(result.macro_average_precision == doctest::Approx(1.0));
    }
    SUBCASE("hand-evaluated four-sample case gives 5/6") {
        std::vector<ScoredSample> samples = {
            {"s1", "p", {{"p", 0.9}, {"q", 0.1}}},
            {"s2", "q", {{"p", 0.8}, {"q", 0.2}}},
            {"s3", "p", {{"p", 0.7}, {"q", 0.3}}},
            {"s4", "q", {{"p", 0.1}, {"q", 0.9}}},
        };
        const PrResult result = precision_recall(samples);
        const PrCurve* p_curve = nullptr;
        for (const auto& c : result.curves)
            if (c.family == "p") p_curve = &c;
        REQUIRE(p_curve != nullptr);
        CHECK(std::abs(p_curve->average_precision - 5.0 / 6.0) < 1e-9);
        REQUIRE(p_curve->points.size() == 4);
        CHECK(p_curve->points[0].recall == doctest::Approx(0.5));
        CHECK(p_curve->points[0].precision == doctest::Approx(1.0));
        CHECK(p_curve->points[3].recall == doctest::Approx(1.0));
    }
    SUBCASE("truth-independent scores on a balanced set sit near prevalence") {
        Rng rng(41);
        std::vector<ScoredSample> samples;
        for (int i = 0; i < 10000; ++i) {
            const double s = rng.next_double();
            samples.push_back({"s" + std::to_string(i), i % 2 ? "a" : "b",
                               {{"a", s}, {"b", 1.0 - s}}});
        }
        const PrResult result = precision_recall(samples);
        for (const auto& curve : result.curves) {
            CHECK(curve.average_precision > 0.45);
            CHECK(curve.average_precision < 0.55);
        }
    }
    SUBCASE("ranking ties break by sample id") {
        std::vector<ScoredSample> a = {
            {"s1", "p", {{"p", 0.5}}},
            {"s2", "q", {{"p", 0.5}}},
        };
        std::vector<ScoredSample> b = {a[1], a[0]};  // reversed input order
        CHECK(precision_recall(a).curves[0].average_precision ==
              precision_recall(b).curves[0].average_precision);
    }
}
