#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace riskflow {

/// One incoming loan application. Feature values are raw (unnormalized).
struct ApplicantEvent {
    std::string applicant_id;
    std::int64_t event_time_ms = 0;
    std::vector<double> raw_features;

    friend bool operator==(const ApplicantEvent&, const ApplicantEvent&) = default;
};

enum class Outcome : int { Repaid = 0, Defaulted = 1 };

/// Delayed repayment label, joined back to a decision by applicant id.
struct OutcomeEvent {
    std::string applicant_id;
    std::int64_t outcome_time_ms = 0;
    Outcome label = Outcome::Repaid;

    friend bool operator==(const OutcomeEvent&, const OutcomeEvent&) = default;
};

constexpr int label_value(Outcome o) noexcept { return static_cast<int>(o); }

/// Versioned scorer parameters. Snapshots are published by the feedback agent
/// and never mutated afterwards.
struct ScorerParams {
    std::uint64_t version = 0;
    double intercept = 0.0;
    std::vector<double> coefficients;         // applied to the weighted features
    std::vector<double> feature_weights;      // per-feature importance
    std::vector<double> fusion_coefficients;  // quadratic fusion layer, frozen during learning
    double fusion_gain = 0.0;                 // coefficient on the fused term in the linear index

    std::size_t dim() const noexcept { return coefficients.size(); }

    /// Zero coefficients and intercept, unit feature weights, zero fusion.
    static ScorerParams neutral(std::size_t n);

    friend bool operator==(const ScorerParams&, const ScorerParams&) = default;
};

struct EngineConfig {
    std::size_t feature_dim = 1;
    double eta = -0.1;
    double gamma = 0.2;
    double review_band = 0.02;
    double tau_init = 0.5;
    double tau_min = 0.05;
    double tau_max = 0.95;
    std::size_t window_capacity = 1000;
    double learning_rate = 0.02;
    std::size_t ensemble_size = 4;
    std::size_t metric_window = 250;
    double pd_clip_epsilon = 1e-6;
    std::uint64_t seed = 42;
    bool deterministic_mode = true;

    // Engineering knobs with defaults; optional in config files.
    double drift_boost_factor = 2.0;
    std::size_t join_capacity = 100'000;
    std::size_t queue_capacity = 1024;
    std::size_t top_k = 3;
    std::size_t scoring_shards = 1;
    /// Learning, threshold adaptation and drift response stop once this many
    /// applications have been decided. Absent means never.
    std::optional<std::size_t> freeze_after_events;
    /// Starting parameters; `ScorerParams::neutral(feature_dim)` when absent.
    std::optional<ScorerParams> initial_params;

    friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

/// Returns the event unchanged iff it has `expected_dim` finite features.
/// Throws DimensionMismatch or NonFiniteFeature (with the feature index).
const ApplicantEvent& validate_event(const ApplicantEvent& event, std::size_t expected_dim);

/// Checks every range constraint in declaration order and throws ConfigError
/// naming the first offending key. The result has `initial_params` resolved,
/// so validating it again is a no-op.
EngineConfig validate_config(EngineConfig config);

bool all_finite(std::span<const double> values) noexcept;

}  // namespace riskflow
