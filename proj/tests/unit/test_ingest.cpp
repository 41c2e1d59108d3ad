#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "riskflow/error.hpp"
#include "riskflow/ingest.hpp"

using namespace riskflow;

namespace {

RunningStats feed(const std::vector<double>& xs) {
    RunningStats s;
    for (double x : xs) s = update_running_stats(s, x);
    return s;
}

// Two-pass batch oracle.
std::pair<double, double> batch(const std::vector<double>& xs) {
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, ss / static_cast<double>(xs.size())};
}

ApplicantEvent ev(std::int64_t t, std::vector<double> f = {0.0}) {
    return {"id" + std::to_string(t), t, std::move(f)};
}

}  // namespace

TEST(RunningStats, OneTwoThree) {
    RunningStats s = feed({1, 2, 3});
    EXPECT_EQ(s.count, 3u);
    EXPECT_NEAR(s.mean, 2.0, 1e-12);
    EXPECT_NEAR(s.variance(), 2.0 / 3.0, 1e-9);
}

TEST(RunningStats, SingleElement) {
    RunningStats s = feed({5});
    EXPECT_EQ(s.mean, 5.0);
    EXPECT_EQ(s.variance(), 0.0);
}

TEST(RunningStats, ConstantSequence) {
    for (double c : {-3.25, 0.0, 1e6, 7.1}) {
        EXPECT_EQ(feed({c, c, c}).variance(), 0.0) << c;
    }
}

TEST(RunningStats, MatchesBatchOnRandomSequences) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(2, 200);
    std::normal_distribution<double> x(3.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> xs(static_cast<std::size_t>(len(rng)));
        for (double& v : xs) v = x(rng);
        auto [mean, var] = batch(xs);
        RunningStats s = feed(xs);
        EXPECT_NEAR(s.mean, mean, 1e-9 * std::max(1.0, std::abs(mean)));
        EXPECT_NEAR(s.variance(), var, 1e-9 * std::max(1.0, var));
    }
}

TEST(Normalize, Examples) {
    RunningStats s;
    s.count = 10;
    s.mean = 4.0;
    s.m2 = 4.0 * 10;  // variance 4, sd 2
    EXPECT_DOUBLE_EQ(normalize(6.0, s), 1.0);
    EXPECT_EQ(normalize(4.0, s), 0.0);
    s.m2 = 0.0;
    EXPECT_EQ(normalize(123.0, s), 0.0);
}

TEST(Normalize, ColdStartIsZero) {
    EXPECT_EQ(normalize(9.0, RunningStats{}), 0.0);
    EXPECT_EQ(normalize(9.0, feed({1.0})), 0.0);
}

TEST(StreamWindow, EvictsOldestAtCapacity) {
    StreamWindow w;
    w.capacity = 3;
    for (std::int64_t t : {1, 2, 3, 4}) w = advance_window(w, ev(t));
    ASSERT_EQ(w.entries.size(), 3u);
    EXPECT_EQ(w.entries.front().event_time_ms, 2);
    EXPECT_EQ(w.entries.back().event_time_ms, 4);
    EXPECT_EQ(w.last_delta_ms, 1);
}

TEST(StreamWindow, ColdStartDeltaZero) {
    StreamWindow w;
    w.capacity = 3;
    w = advance_window(w, ev(100));
    EXPECT_EQ(w.entries.size(), 1u);
    EXPECT_EQ(w.last_delta_ms, 0);
}

TEST(StreamWindow, OutOfOrderLeavesStateUntouched) {
    StreamWindow w;
    w.capacity = 3;
    advance_window_in_place(w, ev(10));
    advance_window_in_place(w, ev(20));
    try {
        advance_window_in_place(w, ev(15));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfOrderEvent);
    }
    EXPECT_EQ(w.entries.size(), 2u);
    EXPECT_EQ(w.last_event_time_ms, 20);
}

TEST(StreamWindow, EqualTimestampsAccepted) {
    StreamWindow w;
    w.capacity = 2;
    advance_window_in_place(w, ev(5));
    EXPECT_NO_THROW(advance_window_in_place(w, ev(5)));
}

TEST(Synthesize, IdentityWeights) {
    ScorerParams p = ScorerParams::neutral(2);
    std::vector<double> f{0.5, -0.5};
    FeatureFrame fr = synthesize_features(f, p);
    EXPECT_EQ(fr.weighted, f);
    EXPECT_EQ(fr.fusion, 0.0);
}

TEST(Synthesize, ScaledWeights) {
    ScorerParams p = ScorerParams::neutral(2);
    p.feature_weights = {2, 0};
    std::vector<double> f{3, 7};
    FeatureFrame fr = synthesize_features(f, p);
    EXPECT_EQ(fr.weighted, (std::vector<double>{6, 0}));
    EXPECT_EQ(fr.fusion, 0.0);
}

TEST(Synthesize, QuadraticFusion) {
    ScorerParams p = ScorerParams::neutral(2);
    p.feature_weights = {0, 0};
    p.fusion_coefficients = {1, 1};
    std::vector<double> f{0.3, 0.4};
    FeatureFrame fr = synthesize_features(f, p);
    EXPECT_EQ(fr.weighted, (std::vector<double>{0, 0}));
    EXPECT_NEAR(fr.fusion, 0.25, 1e-15);
}

TEST(Synthesize, DimensionMismatchThrows) {
    ScorerParams p = ScorerParams::neutral(3);
    std::vector<double> f{1, 2};
    EXPECT_THROW(synthesize_features(f, p), Error);
}

TEST(FeatureNormalizer, NormalizesBeforeFolding) {
    FeatureNormalizer n(1, 10);
    EXPECT_EQ(n.accept(ev(1, {1.0}))[0], 0.0);
    EXPECT_EQ(n.accept(ev(2, {3.0}))[0], 0.0);
    // Stats over {1, 3}: mean 2, sd 1.
    EXPECT_DOUBLE_EQ(n.accept(ev(3, {4.0}))[0], 2.0);
    EXPECT_EQ(n.stats()[0].count, 3u);
}

TEST(FeatureNormalizer, RejectedEventChangesNothing) {
    FeatureNormalizer n(2, 10);
    n.accept(ev(5, {1.0, 2.0}));
    auto stats = n.stats();
    EXPECT_THROW(n.accept(ev(6, {1.0})), Error);
    EXPECT_THROW(n.accept(ev(6, {1.0, NAN})), Error);
    EXPECT_THROW(n.accept(ev(4, {1.0, 1.0})), Error);
    EXPECT_EQ(n.stats(), stats);
    EXPECT_EQ(n.window().entries.size(), 1u);
}
