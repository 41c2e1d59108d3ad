#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskflow/domain.hpp"
#include "riskflow/runtime.hpp"
#include "riskflow/simharness.hpp"

namespace riskflow::cli {

inline constexpr std::string_view kEngineVersion = "riskflow 0.1.0";
inline constexpr std::string_view kAuditFormat = "riskflow-audit/1";

// ---------------------------------------------------------------------------
// Canonical numbers

/// Shortest-free canonical form: 17 significant digits, which round-trips
/// every finite double exactly.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Config

/// Parses a config document. Every EngineConfig core key is required; the
/// engineering knobs are optional. Throws ConfigError naming the key.
EngineConfig config_from_json(const nlohmann::json& doc);
EngineConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const EngineConfig& config);

nlohmann::ordered_json params_to_json(const ScorerParams& params);
ScorerParams params_from_json(const nlohmann::json& j, const char* key);

// ---------------------------------------------------------------------------
// Event streams (JSON Lines)

/// Throws ParseError with the 1-based line number in `index()`.
StreamEvent parse_event_line(std::string_view line, std::size_t line_number);
std::string event_to_line(const StreamEvent& event);

/// Streams events from a JSONL file, skipping blank lines.
class FileEventSource final : public EventSource {
public:
    explicit FileEventSource(const std::filesystem::path& path);
    std::optional<StreamEvent> next() override;
    std::size_t line_number() const noexcept { return line_; }

private:
    std::ifstream in_;
    std::size_t line_ = 0;
};

std::vector<StreamEvent> load_events(const std::filesystem::path& path);
void write_events(const std::filesystem::path& path, const std::vector<StreamEvent>& events);

// ---------------------------------------------------------------------------
// Audit (JSON Lines, fixed key order)

struct AuditHeader {
    std::string format{kAuditFormat};
    std::size_t feature_dim = 0;
    std::uint64_t seed = 0;
    friend bool operator==(const AuditHeader&, const AuditHeader&) = default;
};

struct AuditEnd {
    std::uint64_t decisions = 0;
    std::uint64_t entries = 0;
    friend bool operator==(const AuditEnd&, const AuditEnd&) = default;
};

struct AuditError {
    std::string message;
    friend bool operator==(const AuditError&, const AuditError&) = default;
};

using AuditLine = std::variant<AuditHeader, AuditEntry, AuditEnd, AuditError>;

std::string audit_line(const AuditEntry& entry);
std::string audit_line(const AuditHeader& header);
std::string audit_line(const AuditEnd& end);
std::string audit_line(const AuditError& error);

/// Throws ParseError.
AuditLine parse_audit_line(std::string_view line);
DecisionRecord parse_decision_line(std::string_view line);

struct AuditFile {
    AuditHeader header;
    std::vector<AuditEntry> entries;
    std::optional<AuditEnd> end;
    std::optional<AuditError> error;

    bool complete() const noexcept { return end.has_value() && !error.has_value(); }
    std::vector<DecisionRecord> decisions() const;
};

/// Parses a whole audit. Throws ParseError unless the file is a header, any
/// number of entries, and exactly one terminal end or error record whose
/// counts agree with the body.
AuditFile read_audit(const std::filesystem::path& path);
AuditFile parse_audit(std::string_view text);

// ---------------------------------------------------------------------------
// Atomic output

/// Writes to a sibling temp file and renames over `path` on commit. A writer
/// destroyed without commit (or a killed process) never touches `path`.
class AtomicFile {
public:
    explicit AtomicFile(std::filesystem::path path);
    ~AtomicFile();
    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;

    void write(std::string_view text);
    void commit();
    const std::filesystem::path& temp_path() const noexcept { return temp_; }

private:
    std::filesystem::path path_;
    std::filesystem::path temp_;
    std::FILE* file_ = nullptr;
    bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// AuditSink writing the canonical audit. `finish` appends the end record and
/// commits; `abort` appends an error record and commits the partial audit.
class AuditWriter final : public AuditSink {
public:
    AuditWriter(std::filesystem::path path, AuditHeader header);

    void write(const AuditEntry& entry) override;
    void abort(const std::string& reason) override;
    void finish();

    std::uint64_t decisions() const noexcept { return decisions_; }
    std::uint64_t entries() const noexcept { return entries_; }

private:
    AtomicFile file_;
    std::uint64_t decisions_ = 0;
    std::uint64_t entries_ = 0;
    bool closed_ = false;
};

/// Same canonical text as AuditWriter, kept in memory.
class AuditTextSink final : public AuditSink {
public:
    explicit AuditTextSink(AuditHeader header);
    void write(const AuditEntry& entry) override;
    void abort(const std::string& reason) override;
    std::string finish();

private:
    std::string text_;
    std::uint64_t decisions_ = 0;
    std::uint64_t entries_ = 0;
    bool aborted_ = false;
};

// ---------------------------------------------------------------------------
// Scenario, truth and reports

sim::ScenarioSpec scenario_from_json(const nlohmann::json& doc);
sim::ScenarioSpec load_scenario(const std::filesystem::path& path);
nlohmann::ordered_json scenario_to_json(const sim::ScenarioSpec& spec);

/// Truth files are JSONL with {"id", "label"} objects; event files are also
/// accepted, in which case outcome lines supply the labels.
sim::TruthMap load_truth(const std::filesystem::path& path);
void write_truth(const std::filesystem::path& path, const std::vector<sim::TruthRecord>& truth);

nlohmann::ordered_json metrics_to_json(const sim::MetricsReport& report);
nlohmann::ordered_json stats_to_json(const PipelineStats& stats);
nlohmann::ordered_json latency_to_json(const LatencySummary& latency);

}  // namespace riskflow::cli
