#include <cmath>

#include <gtest/gtest.h>

#include "riskflow/error.hpp"
#include "riskflow/simharness.hpp"

using namespace riskflow;
using namespace riskflow::sim;

namespace {

DecisionRecord record(std::string id, Verdict v) {
    DecisionRecord r;
    r.applicant_id = std::move(id);
    r.decision.verdict = v;
    return r;
}

}  // namespace

TEST(Generator, EmptyStream) {
    ScenarioSpec spec = default_scenario(0, false, 1);
    GeneratedStream s = generate_stream(spec);
    EXPECT_TRUE(s.events.empty());
    EXPECT_TRUE(s.truth.empty());
}

TEST(Generator, DefaultRateMatchesLogistic) {
    ScenarioSpec spec;
    spec.n_events = 10'000;
    spec.feature_dim = 2;
    spec.true_intercept = -std::log(3.0);
    spec.true_coefficients = {0, 0};
    spec.seed = 17;
    GeneratedStream s = generate_stream(spec);
    double defaults = 0;
    for (const auto& t : s.truth) defaults += t.label;
    EXPECT_NEAR(defaults / 10'000.0, 0.25, 0.03);
    EXPECT_NEAR(s.truth[0].true_pd, 0.25, 1e-12);
}

TEST(Generator, SeedDeterminism) {
    ScenarioSpec spec = default_scenario(500, true, 4);
    GeneratedStream a = generate_stream(spec);
    GeneratedStream b = generate_stream(spec);
    EXPECT_EQ(a.events, b.events);
    spec.seed = 5;
    EXPECT_NE(generate_stream(spec).events, a.events);
}

TEST(Generator, OutcomesFollowTheirApplicationsAfterDelay) {
    ScenarioSpec spec = default_scenario(200, false, 3);
    spec.label_delay_events = 10;
    GeneratedStream s = generate_stream(spec);
    ASSERT_EQ(s.events.size(), 400u);
    std::unordered_map<std::string, std::size_t> applied;
    std::int64_t last = 0;
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        if (const auto* a = std::get_if<ApplicantEvent>(&s.events[i])) {
            applied[a->applicant_id] = i;
            EXPECT_GE(a->event_time_ms, last);
            last = a->event_time_ms;
        } else {
            const auto& o = std::get<OutcomeEvent>(s.events[i]);
            ASSERT_TRUE(applied.contains(o.applicant_id));
            EXPECT_GE(o.outcome_time_ms, last);
        }
    }
}

TEST(Generator, DriftSwitchesTruth) {
    ScenarioSpec spec = default_scenario(1000, true, 8);
    GeneratedStream s = generate_stream(spec);
    ASSERT_TRUE(spec.drift.has_value());
    EXPECT_EQ(spec.drift->at_event, 500u);
    for (std::size_t i = 0; i < spec.true_coefficients.size(); ++i) {
        EXPECT_EQ(spec.drift->new_coefficients[i], -spec.true_coefficients[i]);
    }
}

TEST(ValidateScenario, NamesField) {
    ScenarioSpec spec = default_scenario(10, false, 1);
    spec.true_coefficients.pop_back();
    try {
        validate_scenario(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
        EXPECT_EQ(e.detail(), "true_coefficients");
    }
}

TEST(Evaluate, CountingOracle) {
    std::vector<DecisionRecord> audit;
    TruthMap truth;
    auto add = [&](Verdict v, int label, int n) {
        for (int i = 0; i < n; ++i) {
            std::string id = "x" + std::to_string(audit.size());
            audit.push_back(record(id, v));
            truth[id] = label;
        }
    };
    add(Verdict::Reject, 1, 2);   // TP
    add(Verdict::Reject, 0, 1);   // FP
    add(Verdict::Approve, 0, 6);  // TN
    add(Verdict::Approve, 1, 1);  // FN
    add(Verdict::Review, 1, 2);
    MetricsReport r = evaluate(audit, truth, 5);
    EXPECT_EQ(r.confusion.tp, 2u);
    EXPECT_EQ(r.confusion.reviews, 2u);
    EXPECT_DOUBLE_EQ(*r.accuracy, 0.8);
    EXPECT_DOUBLE_EQ(*r.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(*r.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(*r.review_rate, 2.0 / 12.0);
    EXPECT_EQ(r.rolling.size(), 3u);
}

TEST(Evaluate, PerfectAndAllReview) {
    std::vector<DecisionRecord> audit{record("a", Verdict::Reject), record("b", Verdict::Approve)};
    TruthMap truth{{"a", 1}, {"b", 0}};
    EXPECT_EQ(evaluate(audit, truth).accuracy, 1.0);

    std::vector<DecisionRecord> reviews{record("a", Verdict::Review), record("b", Verdict::Review)};
    EXPECT_FALSE(evaluate(reviews, truth).accuracy.has_value());
}

TEST(Evaluate, MissingTruthIsJoinError) {
    std::vector<DecisionRecord> audit{record("ghost", Verdict::Approve)};
    try {
        evaluate(audit, TruthMap{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::JoinError);
    }
}

TEST(Comparison, EmptyScenarioGivesEmptyReports) {
    Comparison c = run_comparison(default_scenario(0, true, 1), default_config(4));
    EXPECT_EQ(c.adaptive.report.decisions, 0u);
    EXPECT_EQ(c.baseline.report.decisions, 0u);
}

TEST(Comparison, StationaryRunsConverge) {
    Comparison c = run_comparison(default_scenario(10'000, false, 21), default_config(4));
    ASSERT_TRUE(c.adaptive.report.final_quartile_accuracy.has_value());
    ASSERT_TRUE(c.baseline.report.final_quartile_accuracy.has_value());
    EXPECT_NEAR(*c.adaptive.report.final_quartile_accuracy,
                *c.baseline.report.final_quartile_accuracy, 0.02);
}

TEST(Comparison, AdaptiveRecoversFromFlip) {
    Comparison c = run_comparison(default_scenario(10'000, true, 22), default_config(4));
    EXPECT_GE(*c.adaptive.report.final_quartile_accuracy -
                  *c.baseline.report.final_quartile_accuracy,
              0.05);
}

TEST(Comparison, NoLearningMeansIdenticalAudits) {
    GeneratedStream s = generate_stream(default_scenario(2'000, false, 30));
    EngineConfig off = default_config(4);
    off.metric_window = 100;
    off.freeze_after_events = 0;
    EngineRun a = run_engine(s, off, 500);
    EngineRun b = run_engine(s, off, 500);
    EXPECT_EQ(a.audit, b.audit);
    for (const auto& e : a.audit) EXPECT_FALSE(std::holds_alternative<ParamsPublished>(e));
    MemorySink m;
    m.entries = a.audit;
    for (const auto& d : m.decisions()) EXPECT_EQ(d.assessment.params_version, 0u);
}
