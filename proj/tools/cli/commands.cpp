#include "cli/commands.hpp"

#include <chrono>
#include <ctime>
#include <ostream>
#include <random>
#include <sstream>

#include "cli/formats.hpp"
#include "riskflow/error.hpp"
#include "riskflow/runtime.hpp"
#include "riskflow/simharness.hpp"

namespace riskflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ConfigError: return kExitConfig;
        case ErrorCode::ParseError:
        case ErrorCode::IoError:
        case ErrorCode::JoinError: return kExitInput;
        default: return kExitFailure;
    }
}

std::string dump(const ordered_json& j) { return j.dump(2) + '\n'; }

fs::path sibling(const fs::path& report, const std::string& name) {
    return report.has_parent_path() ? report.parent_path() / name : fs::path(name);
}

std::string csv_value(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void write_series(const fs::path& report, const sim::MetricsReport& adaptive,
                  const sim::MetricsReport* baseline, const std::optional<LatencySummary>& latency,
                  const std::vector<double>* latency_samples) {
    {
        std::string csv = "window,first_decision,decisions,adaptive_accuracy";
        if (baseline) csv += ",baseline_accuracy";
        csv += '\n';
        for (std::size_t i = 0; i < adaptive.rolling.size(); ++i) {
            const sim::WindowAccuracy& w = adaptive.rolling[i];
            csv += std::to_string(i) + ',' + std::to_string(w.first_decision) + ',' +
                   std::to_string(w.decisions) + ',' + csv_value(w.accuracy);
            if (baseline) {
                csv += ',' + (i < baseline->rolling.size() ? csv_value(baseline->rolling[i].accuracy)
                                                          : std::string{});
            }
            csv += '\n';
        }
        write_file_atomic(sibling(report, "series_accuracy.csv"), csv);
    }
    {
        std::string csv = "bin_low,bin_high,repaid,defaulted\n";
        for (std::size_t b = 0; b < sim::kHistogramBins; ++b) {
            const double lo = static_cast<double>(b) / sim::kHistogramBins;
            const double hi = static_cast<double>(b + 1) / sim::kHistogramBins;
            csv += format_double(lo) + ',' + format_double(hi) + ',' +
                   std::to_string(adaptive.pd_hist_repaid[b]) + ',' +
                   std::to_string(adaptive.pd_hist_defaulted[b]) + '\n';
        }
        write_file_atomic(sibling(report, "series_scores.csv"), csv);
    }
    if (latency && latency_samples && !latency_samples->empty()) {
        std::vector<double> sorted = *latency_samples;
        std::sort(sorted.begin(), sorted.end());
        std::string csv = "percentile,latency_us\n";
        for (int p = 1; p <= 100; ++p) {
            csv += std::to_string(p) + ',' + format_double(nearest_rank(sorted, p)) + '\n';
        }
        write_file_atomic(sibling(report, "series_latency.csv"), csv);
    }
}

ordered_json run_block(const sim::EngineRun& run) {
    ordered_json j = metrics_to_json(run.report);
    j["counters"] = stats_to_json(run.stats);
    return j;
}

/// Re-runs the manifest's input deterministically and returns the canonical
/// audit text.
std::string regenerate_audit(const EngineConfig& config, const fs::path& input) {
    FileEventSource source(input);
    AuditTextSink sink(AuditHeader{std::string(kAuditFormat), config.feature_dim, config.seed});
    try {
        run_pipeline(source, config, sink);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseError) throw;
    }
    return sink.finish();
}

}  // namespace

fs::path default_manifest_path(const fs::path& audit) {
    fs::path p = audit;
    p.replace_extension(".manifest.json");
    return p;
}

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
    EngineConfig config;
    try {
        config = load_config(opts.config);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (opts.deterministic) config.deterministic_mode = true;

    const std::string started = utc_now();
    PipelineStats stats;
    int code = kExitOk;
    try {
        FileEventSource source(opts.input);
        AuditWriter writer(opts.audit, AuditHeader{std::string(kAuditFormat), config.feature_dim,
                                                   config.seed});
        try {
            stats = run_pipeline(source, config, writer);
        } catch (const Error& e) {
            err << "input error: " << e.what() << '\n';
            code = exit_code_for(e);
        }
        writer.finish();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }

    ordered_json manifest;
    manifest["engine_version"] = kEngineVersion;
    manifest["command"] = "score";
    manifest["config"] = config_to_json(config);
    manifest["seed"] = config.seed;
    manifest["deterministic_mode"] = config.deterministic_mode;
    manifest["input"] = fs::absolute(opts.input).string();
    manifest["audit"] = fs::absolute(opts.audit).string();
    manifest["started_at"] = started;
    manifest["finished_at"] = utc_now();
    manifest["completed"] = code == kExitOk;
    manifest["counters"] = stats_to_json(stats);
    const fs::path manifest_path = opts.manifest.value_or(default_manifest_path(opts.audit));
    try {
        write_file_atomic(manifest_path, dump(manifest));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    if (code == kExitOk) {
        out << "scored " << stats.decisions << " applications (" << stats.skipped_events
            << " skipped, " << stats.outcomes << " outcomes) -> " << opts.audit.string() << '\n';
    }
    return code;
}

int cmd_replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err) {
    json manifest;
    try {
        manifest = json::parse(read_file(opts.manifest));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const json::exception& e) {
        err << "manifest is not valid JSON: " << e.what() << '\n';
        return kExitInput;
    }
    if (!manifest.is_object() || !manifest.contains("config") || !manifest.contains("input") ||
        !manifest.contains("audit") || !manifest.contains("seed") ||
        !manifest["input"].is_string() || !manifest["audit"].is_string() ||
        !manifest["seed"].is_number_unsigned()) {
        err << "manifest is missing config, seed, input or audit\n";
        return kExitInput;
    }

    EngineConfig config;
    try {
        config = config_from_json(manifest["config"]);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    config.seed = manifest["seed"].get<std::uint64_t>();
    config.deterministic_mode = true;

    const fs::path input = manifest["input"].get<std::string>();
    const fs::path audit = manifest["audit"].get<std::string>();
    std::string regenerated;
    std::string recorded;
    try {
        regenerated = regenerate_audit(config, input);
        recorded = read_file(audit);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }

    if (regenerated == recorded) {
        out << "replay matches " << audit.string() << '\n';
        return kExitOk;
    }
    std::istringstream a(recorded);
    std::istringstream b(regenerated);
    std::string la;
    std::string lb;
    std::size_t line = 0;
    while (true) {
        ++line;
        const bool ha = static_cast<bool>(std::getline(a, la));
        const bool hb = static_cast<bool>(std::getline(b, lb));
        if (!ha || !hb || la != lb) {
            err << "replay diverges at line " << line << "\n  recorded:    "
                << (ha ? la : "<end of file>") << "\n  regenerated: " << (hb ? lb : "<end of file>")
                << '\n';
            break;
        }
    }
    return kExitMismatch;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    sim::ScenarioSpec spec;
    EngineConfig config;
    try {
        spec = load_scenario(opts.scenario);
        config = load_config(opts.config);
        if (opts.seed) spec.seed = *opts.seed;
        if (config.feature_dim != spec.feature_dim) {
            throw Error(ErrorCode::ConfigError, "feature_dim: config and scenario disagree",
                        "feature_dim");
        }
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitInput;
    }
    if (opts.pipelined) config.deterministic_mode = false;

    try {
        const sim::GeneratedStream stream = sim::generate_stream(spec);
        if (opts.events_out) write_events(*opts.events_out, stream.events);
        if (opts.truth_out) write_truth(*opts.truth_out, stream.truth);

        ordered_json report;
        report["engine_version"] = kEngineVersion;
        report["scenario"] = scenario_to_json(spec);
        report["config"] = config_to_json(config);

        sim::EngineRun adaptive = sim::run_engine(stream, config, spec.series_window);
        report["adaptive"] = run_block(adaptive);
        std::optional<sim::EngineRun> baseline;
        if (opts.compare_baseline) {
            EngineConfig frozen = config;
            frozen.freeze_after_events = static_cast<std::size_t>(
                sim::kBaselineWarmupFraction * static_cast<double>(spec.n_events));
            baseline = sim::run_engine(stream, frozen, spec.series_window);
            report["baseline"] = run_block(*baseline);
            const auto& fa = adaptive.report.final_quartile_accuracy;
            const auto& fb = baseline->report.final_quartile_accuracy;
            report["final_quartile_gain"] =
                fa && fb ? ordered_json(*fa - *fb) : ordered_json(nullptr);
        }
        write_file_atomic(opts.report, dump(report));
        write_series(opts.report, adaptive.report, baseline ? &baseline->report : nullptr,
                     adaptive.report.latency, &adaptive.stats.latency_us);

        out << "simulated " << spec.n_events << " applications";
        if (adaptive.report.accuracy) out << "; adaptive accuracy " << *adaptive.report.accuracy;
        if (baseline && baseline->report.accuracy) {
            out << ", baseline accuracy " << *baseline->report.accuracy;
        }
        out << " -> " << opts.report.string() << '\n';
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const AuditFile audit = read_audit(opts.audit);
        if (!audit.complete()) {
            err << "warning: audit ends with an error record; metrics cover the partial run\n";
        }
        const sim::TruthMap truth = load_truth(opts.truth);
        const sim::MetricsReport m = sim::evaluate(audit.decisions(), truth, opts.series_window);
        ordered_json report;
        report["engine_version"] = kEngineVersion;
        report["audit"] = opts.audit.string();
        report["metrics"] = metrics_to_json(m);
        write_file_atomic(opts.report, dump(report));
        out << "evaluated " << m.decisions << " decisions -> " << opts.report.string() << '\n';
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        sim::ScenarioSpec spec;
        spec.n_events = opts.events;
        spec.feature_dim = opts.features;
        spec.seed = opts.seed;
        spec.true_intercept = -1.0;
        spec.label_delay_events = 100;
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> coef(0.0, 0.5);
        for (std::size_t i = 0; i < opts.features; ++i) spec.true_coefficients.push_back(coef(rng));
        const sim::GeneratedStream stream = sim::generate_stream(spec);

        EngineConfig config = sim::default_config(opts.features);
        config.deterministic_mode = false;
        config.scoring_shards = opts.shards;
        PipelineRun run = run_pipeline(stream.events, config);
        const LatencySummary lat = measure_latency(run.stats);

        out << "decisions:   " << run.stats.decisions << '\n'
            << "features:    " << opts.features << '\n'
            << "elapsed_s:   " << run.stats.elapsed_s << '\n'
            << "throughput:  " << lat.throughput_per_s << " decisions/s\n"
            << "latency p50: " << lat.p50_us << " us\n"
            << "latency p99: " << lat.p99_us << " us\n"
            << "latency max: " << lat.max_us << " us\n";

        if (opts.report) {
            ordered_json j;
            j["engine_version"] = kEngineVersion;
            j["events"] = opts.events;
            j["features"] = opts.features;
            j["shards"] = opts.shards;
            j["elapsed_s"] = run.stats.elapsed_s;
            j["queue_high_water"] = run.stats.queue_high_water;
            j["latency"] = latency_to_json(lat);
            j["counters"] = stats_to_json(run.stats);
            write_file_atomic(*opts.report, dump(j));
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

}  // namespace riskflow::cli
