#include "riskflow/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "riskflow/error.hpp"

namespace riskflow {

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Approve: return "approve";
        case Verdict::Review: return "review";
        case Verdict::Reject: return "reject";
    }
    return "review";
}

std::optional<Verdict> parse_verdict(std::string_view s) noexcept {
    if (s == "approve") return Verdict::Approve;
    if (s == "review") return Verdict::Review;
    if (s == "reject") return Verdict::Reject;
    return std::nullopt;
}

ThresholdState update_threshold(ThresholdState state, double loss, double eta,
                                ThresholdBounds bounds) {
    if (!(loss >= 0.0 && loss <= 1.0)) {
        throw Error(ErrorCode::InvalidLoss, "loss " + std::to_string(loss) + " outside [0, 1]");
    }
    if (state.last_loss) {
        state.tau = std::clamp(state.tau + eta * (loss - *state.last_loss), bounds.tau_min,
                               bounds.tau_max);
    }
    state.last_loss = loss;
    ++state.updates_applied;
    return state;
}

Verdict classify(double pd, double tau, double band) noexcept {
    if (std::fabs(pd - tau) <= band) return Verdict::Review;
    return pd < tau ? Verdict::Approve : Verdict::Reject;
}

Decision decide(double pd, const ThresholdState& state, double review_band,
                std::int64_t decided_at_ms) {
    return Decision{classify(pd, state.tau, review_band), decided_at_ms, state.tau, review_band};
}

}  // namespace riskflow
