#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "riskflow/domain.hpp"
#include "riskflow/ingest.hpp"
#include "riskflow/record.hpp"
#include "riskflow/scoring.hpp"

namespace riskflow {

struct ScoredLabel {
    double pd = 0.5;
    int label = 0;
};

struct VerdictLabel {
    Verdict verdict = Verdict::Review;
    int label = 0;
};

/// Decisions waiting for their repayment outcome. Bounded; the oldest pending
/// entry is evicted when a new one would exceed capacity.
class LabelJoinBuffer {
public:
    struct Pending {
        FeatureFrame frame;
        DecisionRecord record;
    };

    explicit LabelJoinBuffer(std::size_t capacity);

    /// A second insert for an id already pending replaces the first.
    void insert(FeatureFrame frame, DecisionRecord record);
    std::optional<Pending> take(const std::string& applicant_id);
    const Pending* find(const std::string& applicant_id) const;

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t evictions() const noexcept { return evictions_; }
    std::uint64_t replaced() const noexcept { return replaced_; }

private:
    struct Slot {
        Pending pending;
        std::uint64_t order;
    };
    std::size_t capacity_;
    std::uint64_t next_order_ = 0;
    std::uint64_t evictions_ = 0;
    std::uint64_t replaced_ = 0;
    std::unordered_map<std::string, Slot> entries_;
    std::map<std::uint64_t, std::string> arrival_;
};

/// Tumbling window of labeled scores. The metric is recomputed only when the
/// window fills.
struct DriftMonitor {
    std::size_t window_size = 1;
    double gamma = 0.2;
    double clip_epsilon = 1e-6;
    std::vector<ScoredLabel> window;
    std::vector<VerdictLabel> verdicts;
    std::optional<double> m_prev;
    std::optional<double> m_curr;
    std::uint64_t windows_completed = 0;
};

struct LearningState {
    ScorerParams current;
    double base_learning_rate = 0.02;
    double effective_learning_rate = 0.02;
    double drift_boost_factor = 2.0;
    std::uint64_t last_published_version = 0;
    ScorerEnsemble snapshots;
};

/// Mean binary cross-entropy with pd clamped to [eps, 1 - eps].
/// Throws EmptyWindow on an empty window.
double rolling_metric(std::span<const ScoredLabel> window, double clip_eps);

/// |m_curr - m_prev| > gamma (strict).
bool detect_drift(double m_curr, double m_prev, double gamma) noexcept;

/// One gradient step on the log-loss of the logistic scorer. The frame's
/// weighted and fused terms are re-derived from its normalized features under
/// `params`, so the step is the exact gradient at `params`. Fusion
/// coefficients are not updated and the version is unchanged.
ScorerParams sgd_update(const ScorerParams& params, const FeatureFrame& frame, int label, double lr);

/// Default rate among approved entries; nullopt when none were approved.
std::optional<double> window_loss(std::span<const VerdictLabel> decisions_with_outcomes);

struct FeedbackCounters {
    std::uint64_t outcomes_seen = 0;
    std::uint64_t outcomes_joined = 0;
    std::uint64_t orphan_outcomes = 0;
    std::uint64_t invalid_outcomes = 0;
    std::uint64_t drift_flags = 0;
    std::uint64_t snapshots_published = 0;
};

struct FeedbackState {
    LearningState learning;
    DriftMonitor monitor;
    LabelJoinBuffer buffer;
    FeedbackCounters counters;

    static FeedbackState from_config(const EngineConfig& config);
};

/// What one outcome caused, in emission order: published snapshot, window
/// loss, drift flag. All are absent unless the outcome completed a window.
struct FeedbackEffects {
    bool joined = false;
    std::optional<std::uint64_t> window_index;
    std::optional<double> window_metric;
    std::optional<double> previous_metric;
    std::optional<ScorerParams> published;
    std::optional<double> loss;
    bool drift = false;
};

void register_decision(FeedbackState& state, FeatureFrame frame, DecisionRecord record);

/// Joins the outcome to its pending decision, learns from it, and closes the
/// metric window when it fills. With `learning_enabled` false the outcome is
/// still joined and monitored but nothing is learned, published or adapted.
FeedbackEffects process_outcome(FeedbackState& state, const OutcomeEvent& outcome,
                                bool learning_enabled = true);

}  // namespace riskflow
