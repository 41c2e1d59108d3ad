#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "riskflow/domain.hpp"
#include "riskflow/ingest.hpp"

namespace riskflow {

/// Gradient of PD with respect to each normalized feature, plus the feature
/// indices ranked by |gradient| (descending, lower index first on ties).
struct AttributionVector {
    std::vector<double> values;
    std::vector<std::size_t> ranking;

    /// First min(k, n) entries of `ranking`.
    std::span<const std::size_t> top(std::size_t k) const noexcept;

    friend bool operator==(const AttributionVector&, const AttributionVector&) = default;
};

std::vector<std::size_t> rank_by_magnitude(std::span<const double> values);

/// The K most recently published parameter snapshots, newest first. Padded by
/// repeating the oldest snapshot until it holds exactly K entries.
class ScorerEnsemble {
public:
    ScorerEnsemble(std::size_t size, ScorerParams initial);

    /// `newest_first` must be non-empty with non-increasing versions.
    static ScorerEnsemble from_history(std::size_t size, std::span<const ScorerParams> newest_first);

    /// Returns the ensemble after publishing `latest`; drops the oldest entry.
    ScorerEnsemble with_published(ScorerParams latest) const;

    std::size_t size() const noexcept { return snapshots_.size(); }
    const ScorerParams& newest() const noexcept { return snapshots_.front(); }
    std::span<const ScorerParams> snapshots() const noexcept { return snapshots_; }

private:
    ScorerEnsemble() = default;
    std::vector<ScorerParams> snapshots_;
};

struct RiskAssessment {
    std::string applicant_id;
    double pd = 0.5;
    double confidence = 1.0;
    AttributionVector attributions;
    std::uint64_t params_version = 0;
    std::int64_t scored_at_ms = 0;

    friend bool operator==(const RiskAssessment&, const RiskAssessment&) = default;
};

/// intercept + coefficients . weighted + fusion_gain * fusion
double linear_index(const FeatureFrame& frame, const ScorerParams& params);

/// Numerically stable logistic; the result is clamped into the open interval
/// (0, 1) so extreme indices stay representable.
double logistic(double z) noexcept;

double probability_of_default(const FeatureFrame& frame, const ScorerParams& params);

/// dPD/dF_i through both the weighted-linear and the quadratic fusion paths.
AttributionVector attribute(const FeatureFrame& frame, const ScorerParams& params);

/// 1 - population variance of the values. Lies in [0.75, 1] for values in [0, 1].
double confidence_from_pds(std::span<const double> pds);

/// Scores the frame's normalized features under every ensemble snapshot.
double confidence(const FeatureFrame& frame, const ScorerEnsemble& ensemble);

RiskAssessment assess(const FeatureFrame& frame, const ScorerParams& params,
                      const ScorerEnsemble& ensemble, std::int64_t scored_at_ms = 0);

}  // namespace riskflow
