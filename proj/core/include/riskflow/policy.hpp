#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace riskflow {

enum class Verdict { Approve = 0, Review = 1, Reject = 2 };

std::string_view to_string(Verdict v) noexcept;
std::optional<Verdict> parse_verdict(std::string_view s) noexcept;

struct ThresholdBounds {
    double tau_min = 0.05;
    double tau_max = 0.95;
};

/// Approval threshold driven by the change in realized loss between
/// consecutive windows.
struct ThresholdState {
    double tau = 0.5;
    std::optional<double> last_loss;
    std::uint64_t updates_applied = 0;

    friend bool operator==(const ThresholdState&, const ThresholdState&) = default;
};

/// tau <- clamp(tau + eta * (loss - last_loss)). The first loss seen only
/// primes `last_loss`. Throws InvalidLoss for loss outside [0, 1].
ThresholdState update_threshold(ThresholdState state, double loss, double eta,
                                ThresholdBounds bounds);

struct Decision {
    Verdict verdict = Verdict::Review;
    std::int64_t decided_at_ms = 0;
    double tau_used = 0.5;
    double band_used = 0.0;

    friend bool operator==(const Decision&, const Decision&) = default;
};

/// Review when |pd - tau| <= band, otherwise Approve below tau and Reject above.
Verdict classify(double pd, double tau, double band) noexcept;

Decision decide(double pd, const ThresholdState& state, double review_band,
                std::int64_t decided_at_ms = 0);

}  // namespace riskflow
