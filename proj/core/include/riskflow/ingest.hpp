#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "riskflow/domain.hpp"

namespace riskflow {

/// Welford accumulator for one feature. Variance is the population variance.
struct RunningStats {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    double variance() const noexcept { return count == 0 ? 0.0 : m2 / static_cast<double>(count); }
    double stddev() const noexcept;

    friend bool operator==(const RunningStats&, const RunningStats&) = default;
};

RunningStats update_running_stats(RunningStats stats, double x) noexcept;

/// (x - mean) / stddev, or 0 while fewer than two values have been seen or the
/// spread is zero.
double normalize(double x, const RunningStats& stats) noexcept;

struct WindowEntry {
    std::int64_t event_time_ms = 0;
    std::string applicant_id;

    friend bool operator==(const WindowEntry&, const WindowEntry&) = default;
};

/// Count-bounded event-time window: grows by the inter-arrival gap and evicts
/// its oldest entries once `capacity` is reached.
struct StreamWindow {
    std::size_t capacity = 1;
    std::deque<WindowEntry> entries;
    std::int64_t last_event_time_ms = 0;
    std::int64_t last_delta_ms = 0;
    bool started = false;
};

/// Throws OutOfOrderEvent if the event is older than the newest entry.
StreamWindow advance_window(StreamWindow window, const ApplicantEvent& event);
/// Same as advance_window; leaves `window` untouched when it throws.
void advance_window_in_place(StreamWindow& window, const ApplicantEvent& event);

/// Normalized, weighted and fused features for one applicant.
struct FeatureFrame {
    std::string applicant_id;
    std::vector<double> normalized;
    std::vector<double> weighted;
    double fusion = 0.0;
    std::uint64_t params_version = 0;

    friend bool operator==(const FeatureFrame&, const FeatureFrame&) = default;
};

FeatureFrame synthesize_features(std::span<const double> normalized, const ScorerParams& params);
FeatureFrame synthesize_features(std::string applicant_id, std::span<const double> normalized,
                                 const ScorerParams& params);

/// State owned by the data acquisition agent. Each accepted event is
/// normalized against the statistics of the events before it, then folded in.
class FeatureNormalizer {
public:
    FeatureNormalizer(std::size_t feature_dim, std::size_t window_capacity);

    /// Validates, advances the window, and returns the normalized vector.
    /// Throws on invalid or out-of-order events without changing any state.
    std::vector<double> accept(const ApplicantEvent& event);

    const std::vector<RunningStats>& stats() const noexcept { return stats_; }
    const StreamWindow& window() const noexcept { return window_; }
    std::size_t feature_dim() const noexcept { return stats_.size(); }

private:
    std::vector<RunningStats> stats_;
    StreamWindow window_;
};

}  // namespace riskflow
