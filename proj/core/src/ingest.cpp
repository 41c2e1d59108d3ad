#include "riskflow/ingest.hpp"

#include <cmath>

#include "riskflow/error.hpp"

namespace riskflow {

double RunningStats::stddev() const noexcept { return std::sqrt(variance()); }

RunningStats update_running_stats(RunningStats s, double x) noexcept {
    s.count += 1;
    const double delta = x - s.mean;
    s.mean += delta / static_cast<double>(s.count);
    s.m2 += delta * (x - s.mean);
    if (s.m2 < 0.0) s.m2 = 0.0;
    return s;
}

double normalize(double x, const RunningStats& stats) noexcept {
    if (stats.count < 2) return 0.0;
    const double sd = stats.stddev();
    if (!(sd > 0.0)) return 0.0;
    return (x - stats.mean) / sd;
}

void advance_window_in_place(StreamWindow& w, const ApplicantEvent& event) {
    if (w.started && event.event_time_ms < w.last_event_time_ms) {
        throw Error(ErrorCode::OutOfOrderEvent,
                    "event '" + event.applicant_id + "' at t=" +
                        std::to_string(event.event_time_ms) + " precedes t=" +
                        std::to_string(w.last_event_time_ms));
    }
    w.last_delta_ms = w.started ? event.event_time_ms - w.last_event_time_ms : 0;
    w.last_event_time_ms = event.event_time_ms;
    w.started = true;
    w.entries.push_back({event.event_time_ms, event.applicant_id});
    while (w.entries.size() > w.capacity) w.entries.pop_front();
}

StreamWindow advance_window(StreamWindow w, const ApplicantEvent& event) {
    advance_window_in_place(w, event);
    return w;
}

FeatureFrame synthesize_features(std::span<const double> normalized, const ScorerParams& params) {
    return synthesize_features(std::string{}, normalized, params);
}

FeatureFrame synthesize_features(std::string applicant_id, std::span<const double> normalized,
                                 const ScorerParams& params) {
    const std::size_t n = normalized.size();
    if (params.feature_weights.size() != n) {
        throw_dimension_mismatch(n, params.feature_weights.size(), "feature_weights");
    }
    if (params.fusion_coefficients.size() != n) {
        throw_dimension_mismatch(n, params.fusion_coefficients.size(), "fusion_coefficients");
    }
    FeatureFrame f;
    f.applicant_id = std::move(applicant_id);
    f.normalized.assign(normalized.begin(), normalized.end());
    f.weighted.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.weighted[i] = params.feature_weights[i] * normalized[i];
        f.fusion += params.fusion_coefficients[i] * normalized[i] * normalized[i];
    }
    f.params_version = params.version;
    return f;
}

FeatureNormalizer::FeatureNormalizer(std::size_t feature_dim, std::size_t window_capacity)
    : stats_(feature_dim) {
    window_.capacity = window_capacity;
}

std::vector<double> FeatureNormalizer::accept(const ApplicantEvent& event) {
    validate_event(event, stats_.size());
    advance_window_in_place(window_, event);

    std::vector<double> out(stats_.size());
    for (std::size_t i = 0; i < stats_.size(); ++i) {
        out[i] = normalize(event.raw_features[i], stats_[i]);
        stats_[i] = update_running_stats(stats_[i], event.raw_features[i]);
    }
    return out;
}

}  // namespace riskflow
