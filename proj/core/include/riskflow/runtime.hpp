#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "riskflow/domain.hpp"
#include "riskflow/ingest.hpp"
#include "riskflow/record.hpp"
#include "riskflow/scoring.hpp"

namespace riskflow {

using StreamEvent = std::variant<ApplicantEvent, OutcomeEvent>;

// Audit entries besides decisions. Emitted by the feedback agent when a metric
// window closes, in the order params, loss, drift.
struct ParamsPublished {
    std::uint64_t window_index = 0;
    ScorerParams params;
    friend bool operator==(const ParamsPublished&, const ParamsPublished&) = default;
};

struct LossWindow {
    std::uint64_t window_index = 0;
    double loss = 0.0;
    friend bool operator==(const LossWindow&, const LossWindow&) = default;
};

struct DriftFlag {
    std::uint64_t window_index = 0;
    double metric = 0.0;
    double previous_metric = 0.0;
    friend bool operator==(const DriftFlag&, const DriftFlag&) = default;
};

using AuditEntry = std::variant<DecisionRecord, ParamsPublished, LossWindow, DriftFlag>;

/// Receives the audit stream in order. Called from a single thread.
class AuditSink {
public:
    virtual ~AuditSink() = default;
    virtual void write(const AuditEntry& entry) = 0;
    /// Called once when the run aborts; no entries follow.
    virtual void abort(const std::string& reason) { (void)reason; }
};

class MemorySink final : public AuditSink {
public:
    void write(const AuditEntry& entry) override { entries.push_back(entry); }
    void abort(const std::string& reason) override { error = reason; }

    std::vector<DecisionRecord> decisions() const;

    std::vector<AuditEntry> entries;
    std::optional<std::string> error;
};

/// Pull-based event stream. May throw Error(IoError/ParseError) mid-stream.
class EventSource {
public:
    virtual ~EventSource() = default;
    virtual std::optional<StreamEvent> next() = 0;
};

class VectorSource final : public EventSource {
public:
    explicit VectorSource(const std::vector<StreamEvent>& events) : events_(events) {}
    std::optional<StreamEvent> next() override {
        if (pos_ >= events_.size()) return std::nullopt;
        return events_[pos_++];
    }

private:
    const std::vector<StreamEvent>& events_;
    std::size_t pos_ = 0;
};

// Message passed between agents. `seq` is assigned at ingress.
struct FrameMsg {
    FeatureFrame frame;
    std::shared_ptr<const ScorerEnsemble> ensemble;
    std::int64_t event_time_ms = 0;
};

struct AssessmentMsg {
    FeatureFrame frame;
    RiskAssessment assessment;
};

struct DecidedMsg {
    FeatureFrame frame;
    DecisionRecord record;
};

struct AgentMessage {
    using Payload = std::variant<ApplicantEvent, FrameMsg, AssessmentMsg, DecidedMsg, OutcomeEvent,
                                 ParamsPublished, LossWindow, DriftFlag>;
    std::uint64_t seq = 0;
    std::chrono::steady_clock::time_point ingress{};
    Payload payload;
};

struct LatencySummary {
    double p50_us = 0.0;
    double p99_us = 0.0;
    double max_us = 0.0;
    double mean_us = 0.0;
    double throughput_per_s = 0.0;
    std::size_t samples = 0;
};

struct PipelineStats {
    std::vector<double> latency_us;
    double elapsed_s = 0.0;
    std::uint64_t events_in = 0;
    std::uint64_t decisions = 0;
    std::uint64_t skipped_events = 0;
    std::uint64_t outcomes = 0;
    std::uint64_t orphan_outcomes = 0;
    std::uint64_t invalid_outcomes = 0;
    std::uint64_t drift_flags = 0;
    std::uint64_t snapshots_published = 0;
    std::uint64_t join_evictions = 0;
    std::size_t queue_high_water = 0;

    double throughput() const noexcept {
        return elapsed_s > 0.0 ? static_cast<double>(decisions) / elapsed_s : 0.0;
    }
};

/// Nearest-rank order statistics over the recorded latencies.
/// Throws NoSamples when nothing was recorded.
LatencySummary measure_latency(const PipelineStats& stats);

/// Nearest-rank percentile of `sorted` (ascending, non-empty), p in (0, 100].
double nearest_rank(const std::vector<double>& sorted, double p);

/// Runs the five-agent pipeline (acquisition, scoring, decision,
/// explainability, feedback) on dedicated threads joined by bounded channels.
///
/// In deterministic mode each event traverses the whole pipeline before the
/// next is admitted, so results match `reference_execute` exactly and
/// latency_us is recorded as 0 in the audit (timings still go to the stats).
/// Otherwise stages run concurrently and the scoring stage may be sharded.
///
/// If the source throws, in-flight messages drain, `sink.abort` is called and
/// the error is rethrown.
PipelineStats run_pipeline(EventSource& source, const EngineConfig& config, AuditSink& sink);

struct PipelineRun {
    std::vector<AuditEntry> audit;
    PipelineStats stats;
};

PipelineRun run_pipeline(const std::vector<StreamEvent>& events, const EngineConfig& config);

/// Single-threaded straight-line executor. The behavioral oracle for
/// deterministic-mode `run_pipeline`.
void reference_execute(EventSource& source, const EngineConfig& config, AuditSink& sink);
std::vector<AuditEntry> reference_execute(const std::vector<StreamEvent>& events,
                                          const EngineConfig& config);

}  // namespace riskflow
