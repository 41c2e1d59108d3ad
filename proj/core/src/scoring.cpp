#include "riskflow/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskflow/error.hpp"

namespace riskflow {

namespace {

constexpr double kPdFloor = std::numeric_limits<double>::min();
const double kPdCeiling = std::nextafter(1.0, 0.0);

void check_dims(const FeatureFrame& frame, const ScorerParams& params) {
    const std::size_t n = params.coefficients.size();
    if (frame.weighted.size() != n) throw_dimension_mismatch(n, frame.weighted.size(), "weighted");
    if (frame.normalized.size() != n) {
        throw_dimension_mismatch(n, frame.normalized.size(), "normalized");
    }
    if (params.feature_weights.size() != n) {
        throw_dimension_mismatch(n, params.feature_weights.size(), "feature_weights");
    }
    if (params.fusion_coefficients.size() != n) {
        throw_dimension_mismatch(n, params.fusion_coefficients.size(), "fusion_coefficients");
    }
}

}  // namespace

std::span<const std::size_t> AttributionVector::top(std::size_t k) const noexcept {
    return std::span<const std::size_t>(ranking).first(std::min(k, ranking.size()));
}

std::vector<std::size_t> rank_by_magnitude(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(values[a]) > std::fabs(values[b]);
    });
    return order;
}

ScorerEnsemble::ScorerEnsemble(std::size_t size, ScorerParams initial)
    : snapshots_(std::max<std::size_t>(size, 1), std::move(initial)) {}

ScorerEnsemble ScorerEnsemble::from_history(std::size_t size,
                                            std::span<const ScorerParams> newest_first) {
    if (newest_first.empty()) {
        throw Error(ErrorCode::ConfigError, "ensemble history is empty", "ensemble_size");
    }
    ScorerEnsemble e;
    const std::size_t k = std::max<std::size_t>(size, 1);
    const std::size_t take = std::min(k, newest_first.size());
    e.snapshots_.assign(newest_first.begin(), newest_first.begin() + static_cast<long>(take));
    while (e.snapshots_.size() < k) e.snapshots_.push_back(e.snapshots_.back());
    return e;
}

ScorerEnsemble ScorerEnsemble::with_published(ScorerParams latest) const {
    ScorerEnsemble e;
    e.snapshots_.reserve(snapshots_.size());
    e.snapshots_.push_back(std::move(latest));
    e.snapshots_.insert(e.snapshots_.end(), snapshots_.begin(), snapshots_.end() - 1);
    return e;
}

double linear_index(const FeatureFrame& frame, const ScorerParams& params) {
    check_dims(frame, params);
    double z = params.intercept;
    for (std::size_t i = 0; i < params.coefficients.size(); ++i) {
        z += params.coefficients[i] * frame.weighted[i];
    }
    return z + params.fusion_gain * frame.fusion;
}

double logistic(double z) noexcept {
    double p;
    if (z >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
    }
    return std::clamp(p, kPdFloor, kPdCeiling);
}

double probability_of_default(const FeatureFrame& frame, const ScorerParams& params) {
    return logistic(linear_index(frame, params));
}

AttributionVector attribute(const FeatureFrame& frame, const ScorerParams& params) {
    const double pd = probability_of_default(frame, params);
    const double slope = pd * (1.0 - pd);
    AttributionVector a;
    a.values.resize(params.coefficients.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        a.values[i] = slope * (params.coefficients[i] * params.feature_weights[i] +
                               2.0 * params.fusion_gain * params.fusion_coefficients[i] *
                                   frame.normalized[i]);
    }
    a.ranking = rank_by_magnitude(a.values);
    return a;
}

double confidence_from_pds(std::span<const double> pds) {
    if (pds.empty()) return 1.0;
    const double k = static_cast<double>(pds.size());
    const double mean = std::accumulate(pds.begin(), pds.end(), 0.0) / k;
    double ss = 0.0;
    for (double p : pds) ss += (p - mean) * (p - mean);
    return 1.0 - ss / k;
}

double confidence(const FeatureFrame& frame, const ScorerEnsemble& ensemble) {
    std::vector<double> pds;
    pds.reserve(ensemble.size());
    for (const ScorerParams& snap : ensemble.snapshots()) {
        pds.push_back(probability_of_default(synthesize_features(frame.normalized, snap), snap));
    }
    return confidence_from_pds(pds);
}

RiskAssessment assess(const FeatureFrame& frame, const ScorerParams& params,
                      const ScorerEnsemble& ensemble, std::int64_t scored_at_ms) {
    RiskAssessment r;
    r.applicant_id = frame.applicant_id;
    r.pd = probability_of_default(frame, params);
    r.attributions = attribute(frame, params);
    r.confidence = confidence(frame, ensemble);
    r.params_version = params.version;
    r.scored_at_ms = scored_at_ms;
    return r;
}

}  // namespace riskflow
