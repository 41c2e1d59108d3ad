#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace riskflow::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitMismatch = 4;

struct ScoreOptions {
    std::filesystem::path input;
    std::filesystem::path config;
    std::filesystem::path audit;
    /// Defaults to the audit path with a `.manifest.json` extension.
    std::optional<std::filesystem::path> manifest;
    bool deterministic = false;
};

struct SimulateOptions {
    std::filesystem::path scenario;
    std::filesystem::path config;
    std::filesystem::path report;
    std::optional<std::uint64_t> seed;
    bool compare_baseline = false;
    /// Run the pipelined (non-deterministic) executor and record latency.
    bool pipelined = false;
    std::optional<std::filesystem::path> events_out;
    std::optional<std::filesystem::path> truth_out;
};

struct ReplayOptions {
    std::filesystem::path manifest;
};

struct ReportOptions {
    std::filesystem::path audit;
    std::filesystem::path truth;
    std::filesystem::path report;
    std::size_t series_window = 500;
};

struct BenchOptions {
    std::size_t events = 50'000;
    std::size_t features = 16;
    std::size_t shards = 1;
    std::uint64_t seed = 7;
    std::optional<std::filesystem::path> report;
};

std::filesystem::path default_manifest_path(const std::filesystem::path& audit);

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace riskflow::cli
