#include "riskflow/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "riskflow/error.hpp"
#include "riskflow/scoring.hpp"

namespace riskflow::sim {

namespace {

constexpr std::int64_t kEpochMs = 1'700'000'000'000;
constexpr std::int64_t kStepMs = 10;

[[noreturn]] void scenario_error(const char* key, const std::string& why) {
    throw Error(ErrorCode::ConfigError, std::string(key) + ": " + why, key);
}

std::string applicant_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "app-%07zu", i);
    return buf;
}

double truth_index(double intercept, const std::vector<double>& coef, const std::vector<double>& x) {
    double z = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) z += coef[i] * x[i];
    return z;
}

}  // namespace

ScenarioSpec validate_scenario(ScenarioSpec s) {
    if (s.feature_dim < 1) scenario_error("feature_dim", "must be >= 1");
    if (s.true_coefficients.size() != s.feature_dim) {
        scenario_error("true_coefficients", "length must equal feature_dim");
    }
    if (s.feature_means.empty()) s.feature_means.assign(s.feature_dim, 0.0);
    if (s.feature_stds.empty()) s.feature_stds.assign(s.feature_dim, 1.0);
    if (s.feature_means.size() != s.feature_dim) {
        scenario_error("feature_means", "length must equal feature_dim");
    }
    if (s.feature_stds.size() != s.feature_dim) {
        scenario_error("feature_stds", "length must equal feature_dim");
    }
    for (double sd : s.feature_stds) {
        if (!(std::isfinite(sd) && sd > 0.0)) scenario_error("feature_stds", "must be > 0");
    }
    if (!all_finite(s.feature_means) || !all_finite(s.true_coefficients) ||
        !std::isfinite(s.true_intercept)) {
        scenario_error("true_coefficients", "values must be finite");
    }
    if (s.series_window < 1) scenario_error("series_window", "must be >= 1");
    if (s.drift) {
        if (s.drift->at_event > s.n_events) scenario_error("drift", "at_event must be <= n_events");
        if (s.drift->new_coefficients.size() != s.feature_dim) {
            scenario_error("drift", "new_coefficients length must equal feature_dim");
        }
        if (!all_finite(s.drift->new_coefficients) || !std::isfinite(s.drift->new_intercept)) {
            scenario_error("drift", "values must be finite");
        }
    }
    return s;
}

TruthMap GeneratedStream::truth_map() const {
    TruthMap m;
    m.reserve(truth.size());
    for (const TruthRecord& t : truth) m.emplace(t.applicant_id, t.label);
    return m;
}

GeneratedStream generate_stream(const ScenarioSpec& raw) {
    const ScenarioSpec spec = validate_scenario(raw);
    GeneratedStream out;
    out.truth.reserve(spec.n_events);
    out.events.reserve(2 * spec.n_events);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto emit_outcome = [&](std::size_t idx, std::int64_t t) {
        const TruthRecord& tr = out.truth[idx];
        out.events.emplace_back(OutcomeEvent{tr.applicant_id, t,
                                             tr.label == 1 ? Outcome::Defaulted : Outcome::Repaid});
    };

    std::vector<double> x(spec.feature_dim);
    std::int64_t t = kEpochMs;
    for (std::size_t i = 0; i < spec.n_events; ++i) {
        t = kEpochMs + static_cast<std::int64_t>(i) * kStepMs;
        for (std::size_t j = 0; j < spec.feature_dim; ++j) {
            x[j] = spec.feature_means[j] + spec.feature_stds[j] * gauss(rng);
        }
        const bool drifted = spec.drift && i >= spec.drift->at_event;
        const double z = drifted ? truth_index(spec.drift->new_intercept, spec.drift->new_coefficients, x)
                                 : truth_index(spec.true_intercept, spec.true_coefficients, x);
        const double p = logistic(z);
        const int label = unit(rng) < p ? 1 : 0;

        std::string id = applicant_id(i);
        out.truth.push_back(TruthRecord{id, label, p, i});
        out.events.emplace_back(ApplicantEvent{std::move(id), t, x});
        if (i >= spec.label_delay_events) emit_outcome(i - spec.label_delay_events, t);
    }
    const std::size_t flushed_from =
        spec.n_events > spec.label_delay_events ? spec.n_events - spec.label_delay_events : 0;
    for (std::size_t k = flushed_from; k < spec.n_events; ++k) {
        t += kStepMs;
        emit_outcome(k, t);
    }
    return out;
}

std::optional<double> accuracy_of(const ConfusionCounts& c) noexcept {
    if (c.total() == 0) return std::nullopt;
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

ConfusionCounts confusion_over(const std::vector<DecisionRecord>& audit, const TruthMap& truth,
                               std::size_t first, std::size_t last) {
    ConfusionCounts c;
    last = std::min(last, audit.size());
    for (std::size_t i = first; i < last; ++i) {
        const DecisionRecord& r = audit[i];
        auto it = truth.find(r.applicant_id);
        if (it == truth.end()) {
            throw Error(ErrorCode::JoinError, "no truth label for '" + r.applicant_id + "'",
                        r.applicant_id);
        }
        const bool defaulted = it->second == 1;
        switch (r.decision.verdict) {
            case Verdict::Review: ++c.reviews; break;
            case Verdict::Reject: defaulted ? ++c.tp : ++c.fp; break;
            case Verdict::Approve: defaulted ? ++c.fn : ++c.tn; break;
        }
    }
    return c;
}

MetricsReport evaluate(const std::vector<DecisionRecord>& audit, const TruthMap& truth,
                       std::size_t series_window) {
    MetricsReport m;
    m.decisions = audit.size();
    m.confusion = confusion_over(audit, truth, 0, audit.size());
    const ConfusionCounts& c = m.confusion;
    m.accuracy = accuracy_of(c);
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (!audit.empty()) {
        m.review_rate = static_cast<double>(c.reviews) / static_cast<double>(audit.size());
        const std::size_t q = audit.size() - audit.size() / 4;
        m.final_quartile_accuracy = accuracy_of(confusion_over(audit, truth, q, audit.size()));
    }

    series_window = std::max<std::size_t>(series_window, 1);
    for (std::size_t start = 0; start < audit.size(); start += series_window) {
        const std::size_t end = std::min(start + series_window, audit.size());
        const ConfusionCounts w = confusion_over(audit, truth, start, end);
        m.rolling.push_back(WindowAccuracy{start, end - start, w.total(), accuracy_of(w)});
    }

    for (const DecisionRecord& r : audit) {
        auto bin = static_cast<std::size_t>(r.assessment.pd * static_cast<double>(kHistogramBins));
        bin = std::min(bin, kHistogramBins - 1);
        if (truth.at(r.applicant_id) == 1) {
            ++m.pd_hist_defaulted[bin];
        } else {
            ++m.pd_hist_repaid[bin];
        }
    }
    return m;
}

std::optional<double> bayes_accuracy(const std::vector<TruthRecord>& truth, std::size_t first,
                                     std::size_t last) {
    std::size_t n = 0;
    std::size_t correct = 0;
    for (const TruthRecord& t : truth) {
        if (t.event_index < first || t.event_index >= last) continue;
        ++n;
        const int predicted = t.true_pd > 0.5 ? 1 : 0;
        if (predicted == t.label) ++correct;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(n);
}

EngineRun run_engine(const GeneratedStream& stream, const EngineConfig& config,
                     std::size_t series_window) {
    PipelineRun run = run_pipeline(stream.events, config);
    MemorySink view;
    view.entries = std::move(run.audit);
    EngineRun out;
    out.report = evaluate(view.decisions(), stream.truth_map(), series_window);
    if (!config.deterministic_mode && !run.stats.latency_us.empty()) {
        out.report.latency = measure_latency(run.stats);
    }
    out.audit = std::move(view.entries);
    out.stats = std::move(run.stats);
    return out;
}

Comparison run_comparison(const ScenarioSpec& raw_spec, const EngineConfig& config) {
    const ScenarioSpec spec = validate_scenario(raw_spec);
    const GeneratedStream stream = generate_stream(spec);

    EngineConfig frozen = config;
    frozen.freeze_after_events =
        static_cast<std::size_t>(kBaselineWarmupFraction * static_cast<double>(spec.n_events));

    Comparison c;
    c.adaptive = run_engine(stream, config, spec.series_window);
    c.baseline = run_engine(stream, frozen, spec.series_window);
    return c;
}

ScenarioSpec default_scenario(std::size_t n_events, bool with_drift, std::uint64_t seed) {
    ScenarioSpec s;
    s.n_events = n_events;
    s.feature_dim = 4;
    s.true_intercept = -1.0;
    s.true_coefficients = {1.5, -1.0, 0.8, 0.5};
    s.feature_means = {0.0, 1.0, -0.5, 2.0};
    s.feature_stds = {1.0, 0.5, 2.0, 1.0};
    s.label_delay_events = 50;
    s.seed = seed;
    s.series_window = 500;
    if (with_drift && n_events > 0) {
        DriftSpec d;
        d.at_event = n_events / 2;
        d.new_intercept = s.true_intercept;
        for (double b : s.true_coefficients) d.new_coefficients.push_back(-b);
        s.drift = d;
    }
    return s;
}

EngineConfig default_config(std::size_t feature_dim) {
    EngineConfig c;
    c.feature_dim = feature_dim;
    return c;
}

}  // namespace riskflow::sim
