#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "riskflow/error.hpp"
#include "riskflow/feedback.hpp"
#include "riskflow/scoring.hpp"

using namespace riskflow;

namespace {

EngineConfig small_config(std::size_t dim, std::size_t window) {
    EngineConfig c;
    c.feature_dim = dim;
    c.metric_window = window;
    c.learning_rate = 0.1;
    return c;
}

void register_one(FeedbackState& st, const std::string& id, std::vector<double> f, double pd,
                  Verdict v, std::int64_t t = 0) {
    FeatureFrame fr = synthesize_features(id, f, st.learning.current);
    DecisionRecord rec;
    rec.applicant_id = id;
    rec.assessment.applicant_id = id;
    rec.assessment.pd = pd;
    rec.decision.verdict = v;
    rec.decision.decided_at_ms = t;
    register_decision(st, std::move(fr), std::move(rec));
}

OutcomeEvent outcome(const std::string& id, Outcome o, std::int64_t t = 10) {
    return {id, t, o};
}

}  // namespace

TEST(RollingMetric, CoinFlipIsLn2) {
    std::vector<ScoredLabel> w{{0.5, 1}, {0.5, 0}};
    EXPECT_NEAR(rolling_metric(w, 1e-6), std::log(2.0), 1e-12);
}

TEST(RollingMetric, PerfectPredictionNearZero) {
    std::vector<ScoredLabel> w(5, ScoredLabel{1.0, 1});
    double m = rolling_metric(w, 1e-6);
    EXPECT_GT(m, 0.0);
    EXPECT_NEAR(m, 1e-6, 1e-9);
}

TEST(RollingMetric, EmptyWindowThrows) {
    try {
        rolling_metric({}, 1e-6);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyWindow);
    }
}

TEST(DetectDrift, StrictInequality) {
    EXPECT_TRUE(detect_drift(0.62, 0.50, 0.1));
    EXPECT_FALSE(detect_drift(0.5, 0.5, 0.1));
    EXPECT_FALSE(detect_drift(0.75, 0.5, 0.25));
    EXPECT_FALSE(detect_drift(0.25, 0.5, 0.25));
    EXPECT_TRUE(detect_drift(0.25, 0.5, std::nextafter(0.25, 0.0)));
    EXPECT_TRUE(detect_drift(0.3, 0.62, 0.1));
}

TEST(Sgd, ResidualStep) {
    ScorerParams p = ScorerParams::neutral(2);
    std::vector<double> f{1.0, 0.0};
    FeatureFrame fr = synthesize_features(f, p);
    ScorerParams q = sgd_update(p, fr, 1, 0.1);
    EXPECT_NEAR(q.coefficients[0] - p.coefficients[0], 0.05, 1e-15);
    EXPECT_EQ(q.coefficients[1], 0.0);
    EXPECT_NEAR(q.intercept, 0.05, 1e-15);
    EXPECT_EQ(q.version, p.version);
    EXPECT_EQ(q.fusion_coefficients, p.fusion_coefficients);
}

TEST(Sgd, VanishingResidual) {
    ScorerParams p = ScorerParams::neutral(1);
    p.intercept = 40.0;
    std::vector<double> f{1.0};
    FeatureFrame fr = synthesize_features(f, p);
    ScorerParams q = sgd_update(p, fr, 1, 0.1);
    EXPECT_LT(std::abs(q.coefficients[0] - p.coefficients[0]), 1e-15);
}

TEST(Sgd, StepLowersLoss) {
    ScorerParams p = ScorerParams::neutral(3);
    p.coefficients = {0.2, -0.4, 0.1};
    p.feature_weights = {1.0, 0.5, 2.0};
    p.fusion_coefficients = {0.1, 0.1, 0.1};
    p.fusion_gain = 0.3;
    std::vector<double> f{0.5, 1.5, -0.7};
    for (int label : {0, 1}) {
        auto loss = [&](const ScorerParams& s) {
            double pd = probability_of_default(synthesize_features(f, s), s);
            return label ? -std::log(pd) : -std::log(1 - pd);
        };
        ScorerParams q = sgd_update(p, synthesize_features(f, p), label, 0.01);
        EXPECT_LT(loss(q), loss(p)) << label;
    }
}

TEST(WindowLoss, Counting) {
    std::vector<VerdictLabel> w{{Verdict::Approve, 1},
                                {Verdict::Approve, 0},
                                {Verdict::Approve, 0},
                                {Verdict::Approve, 0},
                                {Verdict::Reject, 1},
                                {Verdict::Review, 1}};
    EXPECT_EQ(window_loss(w), 0.25);
    std::vector<VerdictLabel> none{{Verdict::Reject, 0}, {Verdict::Review, 1}};
    EXPECT_FALSE(window_loss(none).has_value());
    std::vector<VerdictLabel> bad{{Verdict::Approve, 1}, {Verdict::Approve, 1}};
    EXPECT_EQ(window_loss(bad), 1.0);
}

TEST(JoinBuffer, EvictsOldestAndReplacesDuplicates) {
    LabelJoinBuffer b(2);
    auto rec = [](std::string id) {
        DecisionRecord r;
        r.applicant_id = id;
        return r;
    };
    b.insert({}, rec("a"));
    b.insert({}, rec("b"));
    b.insert({}, rec("a"));
    EXPECT_EQ(b.size(), 2u);
    EXPECT_EQ(b.replaced(), 1u);
    b.insert({}, rec("c"));  // "b" is now the oldest
    EXPECT_EQ(b.evictions(), 1u);
    EXPECT_EQ(b.find("b"), nullptr);
    EXPECT_NE(b.find("a"), nullptr);
    EXPECT_TRUE(b.take("c").has_value());
    EXPECT_FALSE(b.take("c").has_value());
}

TEST(ProcessOutcome, OrphanLeavesStateUnchanged) {
    FeedbackState st = FeedbackState::from_config(small_config(1, 2));
    register_one(st, "a", {1.0}, 0.5, Verdict::Approve);
    ScorerParams before = st.learning.current;
    FeedbackEffects fx = process_outcome(st, outcome("zzz", Outcome::Defaulted));
    EXPECT_FALSE(fx.joined);
    EXPECT_EQ(st.counters.orphan_outcomes, 1u);
    EXPECT_EQ(st.learning.current, before);
    EXPECT_TRUE(st.monitor.window.empty());
    EXPECT_EQ(st.buffer.size(), 1u);
}

TEST(ProcessOutcome, OutcomeBeforeDecisionIsDropped) {
    FeedbackState st = FeedbackState::from_config(small_config(1, 2));
    register_one(st, "a", {1.0}, 0.5, Verdict::Approve, 100);
    FeedbackEffects fx = process_outcome(st, outcome("a", Outcome::Repaid, 50));
    EXPECT_FALSE(fx.joined);
    EXPECT_EQ(st.counters.invalid_outcomes, 1u);
}

TEST(ProcessOutcome, OneSnapshotPerWindow) {
    FeedbackState st = FeedbackState::from_config(small_config(1, 2));
    register_one(st, "a", {1.0}, 0.5, Verdict::Approve);
    register_one(st, "b", {-1.0}, 0.5, Verdict::Approve);
    FeedbackEffects first = process_outcome(st, outcome("a", Outcome::Defaulted));
    EXPECT_TRUE(first.joined);
    EXPECT_FALSE(first.published.has_value());
    FeedbackEffects second = process_outcome(st, outcome("b", Outcome::Repaid));
    ASSERT_TRUE(second.published.has_value());
    EXPECT_EQ(second.published->version, 1u);
    EXPECT_EQ(second.window_index, 0u);
    EXPECT_NEAR(*second.window_metric, std::log(2.0), 1e-12);
    EXPECT_EQ(second.loss, 0.5);
    EXPECT_FALSE(second.drift);
    EXPECT_EQ(st.counters.snapshots_published, 1u);
    EXPECT_EQ(st.learning.snapshots.newest().version, 1u);
    EXPECT_TRUE(st.monitor.window.empty());
}

TEST(ProcessOutcome, DriftBoostsNextWindowOnly) {
    EngineConfig c = small_config(1, 1);
    c.gamma = 0.1;
    c.drift_boost_factor = 3.0;
    FeedbackState st = FeedbackState::from_config(c);
    register_one(st, "a", {0.0}, 0.5, Verdict::Approve);
    process_outcome(st, outcome("a", Outcome::Repaid));
    register_one(st, "b", {0.0}, 0.99, Verdict::Reject);
    FeedbackEffects fx = process_outcome(st, outcome("b", Outcome::Repaid));
    EXPECT_TRUE(fx.drift);
    EXPECT_DOUBLE_EQ(st.learning.effective_learning_rate, 0.3);
    register_one(st, "c", {0.0}, 0.99, Verdict::Reject);
    fx = process_outcome(st, outcome("c", Outcome::Repaid));
    EXPECT_FALSE(fx.drift);
    EXPECT_DOUBLE_EQ(st.learning.effective_learning_rate, 0.1);
}

TEST(ProcessOutcome, FrozenMonitorsWithoutLearning) {
    EngineConfig c = small_config(1, 1);
    c.gamma = 0.1;
    FeedbackState st = FeedbackState::from_config(c);
    register_one(st, "a", {2.0}, 0.5, Verdict::Approve);
    process_outcome(st, outcome("a", Outcome::Repaid), false);
    register_one(st, "b", {2.0}, 0.99, Verdict::Approve);
    ScorerParams before = st.learning.current;
    FeedbackEffects fx = process_outcome(st, outcome("b", Outcome::Repaid), false);
    EXPECT_TRUE(fx.drift);
    EXPECT_FALSE(fx.published.has_value());
    EXPECT_FALSE(fx.loss.has_value());
    EXPECT_EQ(st.learning.current, before);
    EXPECT_EQ(st.counters.snapshots_published, 0u);
}
