#include "riskflow/feedback.hpp"

#include <algorithm>
#include <cmath>

#include "riskflow/error.hpp"

namespace riskflow {

std::vector<ExplanationItem> explain(const AttributionVector& attributions, std::size_t k) {
    std::vector<ExplanationItem> out;
    for (std::size_t idx : attributions.top(k)) {
        out.push_back({idx, attributions.values[idx]});
    }
    return out;
}

LabelJoinBuffer::LabelJoinBuffer(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

void LabelJoinBuffer::insert(FeatureFrame frame, DecisionRecord record) {
    std::string id = record.applicant_id;
    if (auto it = entries_.find(id); it != entries_.end()) {
        arrival_.erase(it->second.order);
        entries_.erase(it);
        ++replaced_;
    }
    while (entries_.size() >= capacity_) {
        auto oldest = arrival_.begin();
        entries_.erase(oldest->second);
        arrival_.erase(oldest);
        ++evictions_;
    }
    const std::uint64_t order = next_order_++;
    arrival_.emplace(order, id);
    entries_.emplace(std::move(id), Slot{Pending{std::move(frame), std::move(record)}, order});
}

std::optional<LabelJoinBuffer::Pending> LabelJoinBuffer::take(const std::string& applicant_id) {
    auto it = entries_.find(applicant_id);
    if (it == entries_.end()) return std::nullopt;
    Pending p = std::move(it->second.pending);
    arrival_.erase(it->second.order);
    entries_.erase(it);
    return p;
}

const LabelJoinBuffer::Pending* LabelJoinBuffer::find(const std::string& applicant_id) const {
    auto it = entries_.find(applicant_id);
    return it == entries_.end() ? nullptr : &it->second.pending;
}

double rolling_metric(std::span<const ScoredLabel> window, double clip_eps) {
    if (window.empty()) throw Error(ErrorCode::EmptyWindow, "rolling metric over an empty window");
    double sum = 0.0;
    for (const ScoredLabel& s : window) {
        const double p = std::clamp(s.pd, clip_eps, 1.0 - clip_eps);
        sum += s.label == 1 ? std::log(p) : std::log1p(-p);
    }
    return -sum / static_cast<double>(window.size());
}

bool detect_drift(double m_curr, double m_prev, double gamma) noexcept {
    return std::fabs(m_curr - m_prev) > gamma;
}

ScorerParams sgd_update(const ScorerParams& params, const FeatureFrame& frame, int label, double lr) {
    const FeatureFrame f = synthesize_features(frame.normalized, params);
    const double r = probability_of_default(f, params) - static_cast<double>(label);

    ScorerParams next = params;
    next.intercept -= lr * r;
    for (std::size_t i = 0; i < params.coefficients.size(); ++i) {
        next.coefficients[i] -= lr * r * f.weighted[i];
        next.feature_weights[i] -= lr * r * params.coefficients[i] * f.normalized[i];
    }
    next.fusion_gain -= lr * r * f.fusion;
    return next;
}

std::optional<double> window_loss(std::span<const VerdictLabel> decisions_with_outcomes) {
    std::size_t approved = 0;
    std::size_t defaulted = 0;
    for (const VerdictLabel& v : decisions_with_outcomes) {
        if (v.verdict != Verdict::Approve) continue;
        ++approved;
        if (v.label == 1) ++defaulted;
    }
    if (approved == 0) return std::nullopt;
    return static_cast<double>(defaulted) / static_cast<double>(approved);
}

FeedbackState FeedbackState::from_config(const EngineConfig& config) {
    const EngineConfig c = validate_config(config);
    const ScorerParams& init = *c.initial_params;
    return FeedbackState{
        LearningState{init, c.learning_rate, c.learning_rate, c.drift_boost_factor, init.version,
                      ScorerEnsemble(c.ensemble_size, init)},
        DriftMonitor{c.metric_window, c.gamma, c.pd_clip_epsilon, {}, {}, std::nullopt, std::nullopt, 0},
        LabelJoinBuffer(c.join_capacity),
        FeedbackCounters{},
    };
}

void register_decision(FeedbackState& state, FeatureFrame frame, DecisionRecord record) {
    state.buffer.insert(std::move(frame), std::move(record));
}

FeedbackEffects process_outcome(FeedbackState& state, const OutcomeEvent& outcome,
                                bool learning_enabled) {
    FeedbackEffects fx;
    ++state.counters.outcomes_seen;

    const auto* pending = state.buffer.find(outcome.applicant_id);
    if (pending == nullptr) {
        ++state.counters.orphan_outcomes;
        return fx;
    }
    if (outcome.outcome_time_ms < pending->record.decision.decided_at_ms) {
        ++state.counters.invalid_outcomes;
        return fx;
    }
    LabelJoinBuffer::Pending joined = *state.buffer.take(outcome.applicant_id);
    fx.joined = true;
    ++state.counters.outcomes_joined;

    const int label = label_value(outcome.label);
    DriftMonitor& mon = state.monitor;
    LearningState& learn = state.learning;
    mon.window.push_back({joined.record.assessment.pd, label});
    mon.verdicts.push_back({joined.record.decision.verdict, label});

    if (learning_enabled) {
        learn.current = sgd_update(learn.current, joined.frame, label, learn.effective_learning_rate);
    }

    if (mon.window.size() < mon.window_size) return fx;

    // Window complete.
    const double metric = rolling_metric(mon.window, mon.clip_epsilon);
    fx.window_index = mon.windows_completed;
    fx.window_metric = metric;
    mon.m_curr = metric;
    fx.previous_metric = mon.m_prev;
    if (mon.m_prev) fx.drift = detect_drift(metric, *mon.m_prev, mon.gamma);
    if (fx.drift) ++state.counters.drift_flags;

    if (learning_enabled) {
        learn.effective_learning_rate =
            fx.drift ? learn.base_learning_rate * learn.drift_boost_factor : learn.base_learning_rate;
        learn.current.version = ++learn.last_published_version;
        learn.snapshots = learn.snapshots.with_published(learn.current);
        fx.published = learn.current;
        ++state.counters.snapshots_published;
        fx.loss = window_loss(mon.verdicts);
    }

    mon.m_prev = metric;
    mon.window.clear();
    mon.verdicts.clear();
    ++mon.windows_completed;
    return fx;
}

}  // namespace riskflow
