#include "riskflow/domain.hpp"

#include <algorithm>
#include <cmath>

#include "riskflow/error.hpp"

namespace riskflow {

namespace {

[[noreturn]] void config_error(const char* key, const std::string& why) {
    throw Error(ErrorCode::ConfigError, std::string(key) + ": " + why, key);
}

void require(bool ok, const char* key, const char* why) {
    if (!ok) config_error(key, why);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

ScorerParams ScorerParams::neutral(std::size_t n) {
    ScorerParams p;
    p.coefficients.assign(n, 0.0);
    p.feature_weights.assign(n, 1.0);
    p.fusion_coefficients.assign(n, 0.0);
    return p;
}

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

const ApplicantEvent& validate_event(const ApplicantEvent& event, std::size_t expected_dim) {
    if (event.raw_features.size() != expected_dim) {
        throw_dimension_mismatch(expected_dim, event.raw_features.size(), "raw_features");
    }
    for (std::size_t i = 0; i < event.raw_features.size(); ++i) {
        if (!std::isfinite(event.raw_features[i])) {
            throw Error(ErrorCode::NonFiniteFeature,
                        "feature " + std::to_string(i) + " of '" + event.applicant_id +
                            "' is not finite",
                        "raw_features", i);
        }
    }
    return event;
}

EngineConfig validate_config(EngineConfig c) {
    require(c.feature_dim >= 1, "feature_dim", "must be >= 1");
    require(finite(c.eta), "eta", "must be finite");
    require(finite(c.gamma) && c.gamma > 0.0, "gamma", "must be > 0");
    require(finite(c.review_band) && c.review_band >= 0.0, "review_band", "must be >= 0");
    require(finite(c.tau_init) && c.tau_init > 0.0 && c.tau_init < 1.0, "tau_init",
            "must lie in (0, 1)");
    require(finite(c.tau_min) && c.tau_min > 0.0 && c.tau_min <= c.tau_init, "tau_min",
            "must satisfy 0 < tau_min <= tau_init");
    require(finite(c.tau_max) && c.tau_max >= c.tau_init && c.tau_max < 1.0, "tau_max",
            "must satisfy tau_init <= tau_max < 1");
    require(c.window_capacity >= 1, "window_capacity", "must be >= 1");
    require(finite(c.learning_rate) && c.learning_rate > 0.0, "learning_rate", "must be > 0");
    require(c.ensemble_size >= 1, "ensemble_size", "must be >= 1");
    require(c.metric_window >= 1, "metric_window", "must be >= 1");
    require(finite(c.pd_clip_epsilon) && c.pd_clip_epsilon > 0.0 && c.pd_clip_epsilon < 0.5,
            "pd_clip_epsilon", "must lie in (0, 0.5)");
    require(finite(c.drift_boost_factor) && c.drift_boost_factor >= 1.0, "drift_boost_factor",
            "must be >= 1");
    require(c.join_capacity >= 1, "join_capacity", "must be >= 1");
    require(c.queue_capacity >= 1, "queue_capacity", "must be >= 1");
    require(c.top_k >= 1, "top_k", "must be >= 1");
    require(c.scoring_shards >= 1, "scoring_shards", "must be >= 1");

    if (!c.initial_params) {
        c.initial_params = ScorerParams::neutral(c.feature_dim);
    }
    const ScorerParams& p = *c.initial_params;
    const std::size_t n = c.feature_dim;
    require(p.coefficients.size() == n && p.feature_weights.size() == n &&
                p.fusion_coefficients.size() == n,
            "initial_params", "vectors must have length feature_dim");
    require(finite(p.intercept) && finite(p.fusion_gain) && all_finite(p.coefficients) &&
                all_finite(p.feature_weights) && all_finite(p.fusion_coefficients),
            "initial_params", "values must be finite");
    return c;
}

}  // namespace riskflow
