#include "support.hpp"

#include "ata/metrics.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ata;
using namespace ata::testing;

namespace {

ResultPair pair(std::string id, std::string app, std::optional<std::size_t> ground_step, std::optional<std::size_t> agent_step) {
    ResultPair p;
    p.case_id = std::move(id);
    p.app_id = std::move(app);
    if (ground_step) p.ground = {Verdict::Fail, ground_step};
    p.agent = agent_step ? AgentVerdict::fail(*agent_step, FailureCause::Action) : AgentVerdict::pass();
    return p;
}

std::vector<ResultPair> random_pairs(std::mt19937& rng, std::size_t n) {
    std::uniform_int_distribution<int> coin(0, 1), step(1, 6), app(0, 2);
    std::vector<ResultPair> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::optional<std::size_t> g, a;
        if (coin(rng)) g = static_cast<std::size_t>(step(rng));
        if (coin(rng)) a = static_cast<std::size_t>(step(rng));
        out.push_back(pair("c" + std::to_string(i), "app" + std::to_string(app(rng)), g, a));
    }
    return out;
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("classification") {
        CHECK(classify(pair("a", "x", 3, 3)).alignment == Alignment::AFC);
        CHECK(classify(pair("a", "x", 3, 1)).alignment == Alignment::AFB);
        CHECK(classify(pair("a", "x", 3, 5)).alignment == Alignment::AFA);
        CHECK(classify(pair("a", "x", 3, std::nullopt)).outcome == Outcome::FN);
        CHECK(classify(pair("a", "x", std::nullopt, 2)).outcome == Outcome::FP);
        CHECK(classify(pair("a", "x", std::nullopt, std::nullopt)).outcome == Outcome::TN);

        auto bad = pair("a", "x", 3, 3);
        bad.ground.failure_step.reset();
        CHECK_THROWS_AS(classify(bad), ScoringError);
        bad = pair("a", "x", 3, 3);
        bad.agent.failed_step.reset();
        CHECK_THROWS_AS(classify(bad), ScoringError);
    }

    TEST_CASE("worked example") {
        // 4 FAIL cases (one AFC, one AFB, one AFA, one missed) and 2 PASS (one false alarm).
        std::vector<ResultPair> pairs = {pair("1", "a", 2, 2), pair("2", "a", 4, 1), pair("3", "a", 2, 5),
                                         pair("4", "a", 3, {}), pair("5", "a", {}, {}), pair("6", "a", {}, 1)};
        auto r = compute(aggregate(pairs));
        CHECK(r.accuracy == Rational(4, 6));
        CHECK(r.specificity == Rational(1, 2));
        CHECK(r.sensitivity == Rational(3, 4));
        CHECK(r.aer == Rational(1, 3));
        CHECK(r.her == Rational(1, 3));
        CHECK(r.smer == Rational(2, 3));
        CHECK(r.truacc == Rational(2, 6));
        CHECK(r.accuracy->fixed2() == "0.67");
        CHECK(r.truacc->fixed2() == "0.33");
    }

    TEST_CASE("undefined metrics render as n/a") {
        auto r = compute(aggregate(std::vector<ResultPair>{pair("1", "a", {}, {})}));
        CHECK_FALSE(r.sensitivity);
        CHECK_FALSE(r.aer);
        CHECK_FALSE(r.smer);
        CHECK(render_metric(r.sensitivity) == "n/a");
        CHECK(render_metric(r.specificity) == "1.00");
        auto empty = compute({});
        for (const auto& m : metric_values(empty)) CHECK_FALSE(m);
    }

    TEST_CASE("fixed2 rounds half up") {
        CHECK(Rational(1, 8).fixed2() == "0.13");
        CHECK(Rational(1, 200).fixed2() == "0.01");
        CHECK(Rational(1, 201).fixed2() == "0.00");
        CHECK(Rational(5, 4).fixed2() == "1.25");
        CHECK(Rational(1).fixed2() == "1.00");
        CHECK(Rational(-1, 8).fixed2() == "-0.13");
        CHECK(Rational(2, 4) == Rational(1, 2));
        CHECK(Rational(3, -6).str() == "-1/2");
        CHECK(Rational(1, 3) < Rational(1, 2));
        CHECK_THROWS(Rational(1, 0));
    }

    TEST_CASE("duplicates are rejected") {
        std::vector<ResultPair> dup = {pair("x", "a", {}, {}), pair("x", "b", {}, {})};
        CHECK_THROWS_AS(aggregate(dup), ScoringError);
        CHECK_THROWS_AS(score_by_app(dup), ScoringError);
    }

    TEST_CASE("table layout") {
        auto table = score_by_app(std::vector<ResultPair>{pair("1", "zeta", 1, 1), pair("2", "alpha", {}, {})});
        auto text = render_table(table);
        auto header = text.substr(0, text.find('\n'));
        std::size_t at = 0;
        for (auto col : kMetricColumns) {
            auto pos = header.find(col, at);
            REQUIRE(pos != std::string::npos);
            at = pos;
        }
        CHECK(text.find("alpha") < text.find("zeta"));
        CHECK(text.find("zeta") < text.find("Average"));

        auto none = render_table(score_by_app({}));
        CHECK(std::count(none.begin(), none.end(), '\n') == 1);
        CHECK(none.find("Average") == std::string::npos);
    }

    TEST_CASE("macro and pooled averages differ on unbalanced apps") {
        std::vector<ResultPair> pairs = {pair("1", "a", 1, 1)};
        for (int i = 0; i < 9; ++i) pairs.push_back(pair("b" + std::to_string(i), "b", {}, 1));
        auto pooled = score_by_app(pairs, AverageMode::Pooled).average.metrics;
        auto macro = score_by_app(pairs, AverageMode::Macro).average.metrics;
        CHECK(pooled.accuracy == Rational(1, 10));
        CHECK(macro.accuracy == Rational(1, 2));
        CHECK(macro.smer == Rational(0));
    }

    TEST_CASE("property: metric identities over random result sets") {
        std::mt19937 rng(5);
        for (int round = 0; round < 500; ++round) {
            auto pairs = random_pairs(rng, 1 + static_cast<std::size_t>(round % 40));
            auto c = aggregate(pairs);
            auto r = compute(c);
            REQUIRE(r.accuracy);
            REQUIRE(r.truacc);
            CHECK(*r.truacc <= *r.accuracy);
            CHECK(*r.accuracy - *r.truacc == Rational(c.afb + c.afa, c.total()));
            CHECK(c.afb + c.afa + c.afc == c.tp);
            if (r.smer) CHECK(*r.smer == *r.aer + *r.her);

            auto shuffled = pairs;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            CHECK(aggregate(shuffled) == c);
            CHECK(render_table(score_by_app(shuffled)) == render_table(score_by_app(pairs)));
            // Pooled Average equals the metrics of the whole set.
            CHECK(metric_values(score_by_app(pairs).average.metrics) == metric_values(r));
        }
    }
}
