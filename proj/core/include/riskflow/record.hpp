#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "riskflow/policy.hpp"
#include "riskflow/scoring.hpp"

namespace riskflow {

struct ExplanationItem {
    std::size_t feature_index = 0;
    double attribution = 0.0;

    friend bool operator==(const ExplanationItem&, const ExplanationItem&) = default;
};

/// The audit unit: one per accepted application.
struct DecisionRecord {
    std::string applicant_id;
    Decision decision;
    RiskAssessment assessment;
    std::uint64_t ingress_seq = 0;
    std::int64_t latency_us = 0;
    std::vector<ExplanationItem> explanation;

    friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// Top-k (index, attribution) pairs in ranking order.
std::vector<ExplanationItem> explain(const AttributionVector& attributions, std::size_t k);

}  // namespace riskflow
