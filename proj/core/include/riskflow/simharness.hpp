#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "riskflow/domain.hpp"
#include "riskflow/record.hpp"
#include "riskflow/runtime.hpp"

namespace riskflow::sim {

struct DriftSpec {
    std::size_t at_event = 0;
    double new_intercept = 0.0;
    std::vector<double> new_coefficients;

    friend bool operator==(const DriftSpec&, const DriftSpec&) = default;
};

/// Synthetic borrower population: Gaussian features labeled by a ground-truth
/// logistic model, optionally switching to a different truth mid-stream.
struct ScenarioSpec {
    std::size_t n_events = 0;
    std::size_t feature_dim = 1;
    double true_intercept = 0.0;
    std::vector<double> true_coefficients;
    std::vector<double> feature_means;
    std::vector<double> feature_stds;
    std::size_t label_delay_events = 0;
    std::optional<DriftSpec> drift;
    std::uint64_t seed = 1;
    /// Decisions per point of the rolling-accuracy series.
    std::size_t series_window = 500;

    friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// Throws ConfigError naming the offending field.
ScenarioSpec validate_scenario(ScenarioSpec spec);

struct TruthRecord {
    std::string applicant_id;
    int label = 0;
    double true_pd = 0.0;  // generator probability; used for the Bayes-optimal scorer
    std::size_t event_index = 0;
};

using TruthMap = std::unordered_map<std::string, int>;

struct GeneratedStream {
    std::vector<StreamEvent> events;
    std::vector<TruthRecord> truth;

    TruthMap truth_map() const;
};

/// Application i is followed by the outcome of application i - delay; the
/// remaining outcomes are flushed after the last application.
GeneratedStream generate_stream(const ScenarioSpec& spec);

struct WindowAccuracy {
    std::size_t first_decision = 0;
    std::size_t decisions = 0;
    std::size_t scored = 0;  // non-Review
    std::optional<double> accuracy;
};

constexpr std::size_t kHistogramBins = 10;

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    std::size_t reviews = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

/// Classification metrics with Reject as the positive prediction and Review
/// excluded. Ratios are absent when their denominator is zero.
struct MetricsReport {
    std::size_t decisions = 0;
    ConfusionCounts confusion;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> review_rate;
    std::optional<double> final_quartile_accuracy;
    std::vector<WindowAccuracy> rolling;
    std::array<std::size_t, kHistogramBins> pd_hist_repaid{};
    std::array<std::size_t, kHistogramBins> pd_hist_defaulted{};
    std::optional<LatencySummary> latency;
};

ConfusionCounts confusion_over(const std::vector<DecisionRecord>& audit, const TruthMap& truth,
                               std::size_t first, std::size_t last);

std::optional<double> accuracy_of(const ConfusionCounts& c) noexcept;

/// Throws JoinError if a decision has no truth label.
MetricsReport evaluate(const std::vector<DecisionRecord>& audit, const TruthMap& truth,
                       std::size_t series_window = 500);

/// Accuracy of thresholding the generator's own probability at 0.5 over
/// truth records with event_index in [first, last).
std::optional<double> bayes_accuracy(const std::vector<TruthRecord>& truth, std::size_t first,
                                     std::size_t last);

struct EngineRun {
    std::vector<AuditEntry> audit;
    PipelineStats stats;
    MetricsReport report;
};

struct Comparison {
    EngineRun adaptive;
    EngineRun baseline;
};

/// Fraction of the stream after which the baseline stops learning.
constexpr double kBaselineWarmupFraction = 0.2;

EngineRun run_engine(const GeneratedStream& stream, const EngineConfig& config,
                     std::size_t series_window);

/// Runs the adaptive engine and a baseline frozen after the warmup prefix on
/// the identical stream, one after the other.
Comparison run_comparison(const ScenarioSpec& spec, const EngineConfig& config);

/// The default desk-scale scenario: 4 features, coefficient sign flip at the
/// midpoint when `with_drift`.
ScenarioSpec default_scenario(std::size_t n_events, bool with_drift, std::uint64_t seed);

/// Engine configuration used by the default scenario.
EngineConfig default_config(std::size_t feature_dim);

}  // namespace riskflow::sim
