#include "riskflow/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "riskflow/channel.hpp"
#include "riskflow/error.hpp"
#include "riskflow/feedback.hpp"
#include "riskflow/policy.hpp"

namespace riskflow {

std::vector<DecisionRecord> MemorySink::decisions() const {
    std::vector<DecisionRecord> out;
    for (const AuditEntry& e : entries) {
        if (const auto* d = std::get_if<DecisionRecord>(&e)) out.push_back(*d);
    }
    return out;
}

double nearest_rank(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCode::NoSamples, "no latency samples");
    const double n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

LatencySummary measure_latency(const PipelineStats& stats) {
    if (stats.latency_us.empty()) throw Error(ErrorCode::NoSamples, "no latency samples");
    std::vector<double> sorted = stats.latency_us;
    std::sort(sorted.begin(), sorted.end());
    LatencySummary s;
    s.samples = sorted.size();
    s.p50_us = nearest_rank(sorted, 50.0);
    s.p99_us = nearest_rank(sorted, 99.0);
    s.max_us = sorted.back();
    s.mean_us = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.samples);
    s.throughput_per_s = stats.throughput();
    return s;
}

namespace {

DecisionRecord make_record(const RiskAssessment& assessment, const Decision& decision,
                           std::uint64_t seq) {
    DecisionRecord rec;
    rec.applicant_id = assessment.applicant_id;
    rec.decision = decision;
    rec.assessment = assessment;
    rec.ingress_seq = seq;
    return rec;
}

bool learning_enabled(const EngineConfig& config, std::uint64_t decided) {
    return !config.freeze_after_events || decided < *config.freeze_after_events;
}

void emit_feedback(const FeedbackEffects& fx, AuditSink& sink) {
    if (!fx.window_index) return;
    if (fx.published) sink.write(ParamsPublished{*fx.window_index, *fx.published});
    if (fx.loss) sink.write(LossWindow{*fx.window_index, *fx.loss});
    if (fx.drift) {
        sink.write(DriftFlag{*fx.window_index, *fx.window_metric, fx.previous_metric.value_or(0.0)});
    }
}

void copy_feedback_counters(const FeedbackState& fb, PipelineStats& stats) {
    stats.outcomes = fb.counters.outcomes_seen;
    stats.orphan_outcomes = fb.counters.orphan_outcomes;
    stats.invalid_outcomes = fb.counters.invalid_outcomes;
    stats.drift_flags = fb.counters.drift_flags;
    stats.snapshots_published = fb.counters.snapshots_published;
    stats.join_evictions = fb.buffer.evictions();
}

}  // namespace

// ---------------------------------------------------------------------------
// Reference executor

void reference_execute(EventSource& source, const EngineConfig& raw_config, AuditSink& sink) {
    const EngineConfig config = validate_config(raw_config);
    const ThresholdBounds bounds{config.tau_min, config.tau_max};

    FeatureNormalizer normalizer(config.feature_dim, config.window_capacity);
    FeedbackState feedback = FeedbackState::from_config(config);
    ThresholdState threshold{config.tau_init, std::nullopt, 0};
    std::uint64_t seq = 0;
    std::uint64_t decided = 0;

    try {
        while (auto event = source.next()) {
            const std::uint64_t this_seq = seq++;
            if (const auto* app = std::get_if<ApplicantEvent>(&*event)) {
                std::vector<double> normalized;
                try {
                    normalized = normalizer.accept(*app);
                } catch (const Error&) {
                    continue;
                }
                const ScorerEnsemble& ensemble = feedback.learning.snapshots;
                const ScorerParams& params = ensemble.newest();
                FeatureFrame frame = synthesize_features(app->applicant_id, normalized, params);
                RiskAssessment assessment = assess(frame, params, ensemble, app->event_time_ms);
                Decision decision = decide(assessment.pd, threshold, config.review_band,
                                           app->event_time_ms);
                DecisionRecord record = make_record(assessment, decision, this_seq);
                record.explanation = explain(record.assessment.attributions, config.top_k);
                sink.write(record);
                register_decision(feedback, std::move(frame), std::move(record));
                ++decided;
            } else {
                const auto& outcome = std::get<OutcomeEvent>(*event);
                const FeedbackEffects fx =
                    process_outcome(feedback, outcome, learning_enabled(config, decided));
                if (fx.loss) threshold = update_threshold(threshold, *fx.loss, config.eta, bounds);
                emit_feedback(fx, sink);
            }
        }
    } catch (const Error& e) {
        sink.abort(e.what());
        throw;
    }
}

std::vector<AuditEntry> reference_execute(const std::vector<StreamEvent>& events,
                                          const EngineConfig& config) {
    VectorSource source(events);
    MemorySink sink;
    reference_execute(source, config, sink);
    return std::move(sink.entries);
}

// ---------------------------------------------------------------------------
// Agent pipeline

namespace {

using Clock = std::chrono::steady_clock;
using Channel = BoundedChannel<AgentMessage>;

constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// Latest published ensemble, shared between the feedback agent (writer) and
/// the acquisition agent (reader).
class SnapshotBoard {
public:
    explicit SnapshotBoard(ScorerEnsemble initial)
        : current_(std::make_shared<const ScorerEnsemble>(std::move(initial))) {}

    std::shared_ptr<const ScorerEnsemble> get() const {
        std::lock_guard lock(mutex_);
        return current_;
    }
    void publish(ScorerEnsemble next) {
        auto p = std::make_shared<const ScorerEnsemble>(std::move(next));
        std::lock_guard lock(mutex_);
        current_ = std::move(p);
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const ScorerEnsemble> current_;
};

/// Count of messages that have left the pipeline; lets deterministic mode
/// admit one event at a time.
class Progress {
public:
    void complete() {
        {
            std::lock_guard lock(mutex_);
            ++completed_;
        }
        cv_.notify_all();
    }
    void wait_for(std::uint64_t n) {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return completed_ >= n; });
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t completed_ = 0;
};

class FirstError {
public:
    void record(std::exception_ptr e) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = e;
    }
    void rethrow_if_set() {
        std::lock_guard lock(mutex_);
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

class Pipeline {
public:
    Pipeline(const EngineConfig& config, AuditSink& sink)
        : config_(config),
          sink_(sink),
          shards_(config.scoring_shards),
          ingress_(config.queue_capacity),
          order_(config.queue_capacity * config.scoring_shards),
          decided_(config.queue_capacity),
          explained_(config.queue_capacity),
          loss_inbox_(kUnbounded),
          board_(ScorerEnsemble(config.ensemble_size, *config.initial_params)),
          normalizer_(config.feature_dim, config.window_capacity),
          feedback_(FeedbackState::from_config(config)),
          threshold_{config.tau_init, std::nullopt, 0} {
        for (std::size_t i = 0; i < shards_; ++i) {
            shard_in_.push_back(std::make_unique<Channel>(config.queue_capacity));
            shard_out_.push_back(std::make_unique<Channel>(config.queue_capacity));
        }
    }

    PipelineStats run(EventSource& source) {
        const auto start = Clock::now();
        start_agents();

        std::exception_ptr source_error;
        std::uint64_t seq = 0;
        try {
            while (auto event = source.next()) {
                AgentMessage msg;
                msg.seq = seq++;
                msg.ingress = Clock::now();
                std::visit([&](auto&& e) { msg.payload = std::move(e); }, std::move(*event));
                ingress_.push(std::move(msg));
                if (config_.deterministic_mode) progress_.wait_for(seq);
            }
        } catch (...) {
            source_error = std::current_exception();
        }

        ingress_.close();
        for (std::thread& t : threads_) t.join();

        stats_.events_in = seq;
        stats_.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
        copy_feedback_counters(feedback_, stats_);
        stats_.queue_high_water = std::max({ingress_.high_water(), decided_.high_water(),
                                            explained_.high_water()});
        for (std::size_t i = 0; i < shards_; ++i) {
            stats_.queue_high_water = std::max({stats_.queue_high_water, shard_in_[i]->high_water(),
                                                shard_out_[i]->high_water()});
        }

        if (source_error) {
            try {
                std::rethrow_exception(source_error);
            } catch (const std::exception& e) {
                sink_.abort(e.what());
            }
            std::rethrow_exception(source_error);
        }
        errors_.rethrow_if_set();
        return std::move(stats_);
    }

private:
    void start_agents() {
        threads_.emplace_back([this] { acquisition_agent(); });
        for (std::size_t i = 0; i < shards_; ++i) {
            threads_.emplace_back([this, i] { scoring_agent(i); });
        }
        threads_.emplace_back([this] { decision_agent(); });
        threads_.emplace_back([this] { explainability_agent(); });
        threads_.emplace_back([this] { feedback_agent(); });
    }

    std::size_t shard_of(const std::string& id) const {
        return shards_ == 1 ? 0 : std::hash<std::string>{}(id) % shards_;
    }

    void route(AgentMessage msg, const std::string& id) {
        const std::size_t shard = shard_of(id);
        shard_in_[shard]->push(std::move(msg));
        order_.push(shard);
    }

    void acquisition_agent() {
        while (auto msg = ingress_.pop()) {
            try {
                if (auto* app = std::get_if<ApplicantEvent>(&msg->payload)) {
                    std::vector<double> normalized;
                    try {
                        normalized = normalizer_.accept(*app);
                    } catch (const Error&) {
                        ++stats_.skipped_events;
                        progress_.complete();
                        continue;
                    }
                    auto ensemble = board_.get();
                    FrameMsg frame{synthesize_features(app->applicant_id, normalized,
                                                       ensemble->newest()),
                                   ensemble, app->event_time_ms};
                    std::string id = app->applicant_id;
                    msg->payload = std::move(frame);
                    route(std::move(*msg), id);
                } else {
                    std::string id = std::get<OutcomeEvent>(msg->payload).applicant_id;
                    route(std::move(*msg), id);
                }
            } catch (...) {
                errors_.record(std::current_exception());
                progress_.complete();
            }
        }
        for (auto& ch : shard_in_) ch->close();
        order_.close();
    }

    void scoring_agent(std::size_t shard) {
        Channel& in = *shard_in_[shard];
        Channel& out = *shard_out_[shard];
        while (auto msg = in.pop()) {
            if (auto* f = std::get_if<FrameMsg>(&msg->payload)) {
                try {
                    RiskAssessment a =
                        assess(f->frame, f->ensemble->newest(), *f->ensemble, f->event_time_ms);
                    msg->payload = AssessmentMsg{std::move(f->frame), std::move(a)};
                } catch (...) {
                    // The decision stage still expects a message for this slot.
                    errors_.record(std::current_exception());
                }
            }
            out.push(std::move(*msg));
        }
        out.close();
    }

    void decision_agent() {
        const ThresholdBounds bounds{config_.tau_min, config_.tau_max};
        while (auto shard = order_.pop()) {
            auto msg = shard_out_[*shard]->pop();
            if (!msg) break;
            while (auto loss = loss_inbox_.try_pop()) {
                threshold_ = update_threshold(threshold_, loss->loss, config_.eta, bounds);
            }
            if (auto* a = std::get_if<AssessmentMsg>(&msg->payload)) {
                const std::int64_t t = a->assessment.scored_at_ms;
                Decision d = decide(a->assessment.pd, threshold_, config_.review_band, t);
                DecisionRecord rec = make_record(a->assessment, d, msg->seq);
                msg->payload = DecidedMsg{std::move(a->frame), std::move(rec)};
            } else if (std::holds_alternative<FrameMsg>(msg->payload)) {
                progress_.complete();  // scoring failed; already recorded
                continue;
            }
            decided_.push(std::move(*msg));
        }
        decided_.close();
    }

    void explainability_agent() {
        while (auto msg = decided_.pop()) {
            if (auto* d = std::get_if<DecidedMsg>(&msg->payload)) {
                d->record.explanation = explain(d->record.assessment.attributions, config_.top_k);
                const double us =
                    std::chrono::duration<double, std::micro>(Clock::now() - msg->ingress).count();
                latency_.push_back(us);
                d->record.latency_us =
                    config_.deterministic_mode ? 0 : static_cast<std::int64_t>(std::llround(us));
            }
            explained_.push(std::move(*msg));
        }
        explained_.close();
    }

    void feedback_agent() {
        while (auto msg = explained_.pop()) {
            try {
                if (auto* d = std::get_if<DecidedMsg>(&msg->payload)) {
                    sink_.write(d->record);
                    register_decision(feedback_, std::move(d->frame), std::move(d->record));
                    ++decided_count_;
                } else if (auto* o = std::get_if<OutcomeEvent>(&msg->payload)) {
                    const FeedbackEffects fx =
                        process_outcome(feedback_, *o, learning_enabled(config_, decided_count_));
                    if (fx.published) board_.publish(feedback_.learning.snapshots);
                    if (fx.loss) loss_inbox_.push(LossWindow{*fx.window_index, *fx.loss});
                    emit_feedback(fx, sink_);
                }
            } catch (...) {
                errors_.record(std::current_exception());
            }
            progress_.complete();
        }
        stats_.decisions = decided_count_;
        stats_.latency_us = std::move(latency_);
    }

    const EngineConfig config_;
    AuditSink& sink_;
    const std::size_t shards_;

    Channel ingress_;
    std::vector<std::unique_ptr<Channel>> shard_in_;
    std::vector<std::unique_ptr<Channel>> shard_out_;
    BoundedChannel<std::size_t> order_;
    Channel decided_;
    Channel explained_;
    BoundedChannel<LossWindow> loss_inbox_;

    SnapshotBoard board_;
    Progress progress_;
    FirstError errors_;
    std::vector<std::thread> threads_;

    // Each field below is touched by exactly one agent thread.
    FeatureNormalizer normalizer_;
    FeedbackState feedback_;
    ThresholdState threshold_;
    std::vector<double> latency_;
    std::uint64_t decided_count_ = 0;
    PipelineStats stats_;
};

}  // namespace

PipelineStats run_pipeline(EventSource& source, const EngineConfig& config, AuditSink& sink) {
    Pipeline pipeline(validate_config(config), sink);
    return pipeline.run(source);
}

PipelineRun run_pipeline(const std::vector<StreamEvent>& events, const EngineConfig& config) {
    VectorSource source(events);
    MemorySink sink;
    PipelineStats stats = run_pipeline(source, config, sink);
    return PipelineRun{std::move(sink.entries), std::move(stats)};
}

}  // namespace riskflow
