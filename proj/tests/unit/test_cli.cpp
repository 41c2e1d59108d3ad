#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "cli/commands.hpp"
#include "cli/formats.hpp"
#include "riskflow/error.hpp"

using namespace riskflow;
using namespace riskflow::cli;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "feature_dim": 2, "eta": -0.1, "gamma": 0.2, "review_band": 0.02,
  "tau_init": 0.5, "tau_min": 0.05, "tau_max": 0.95, "window_capacity": 100,
  "learning_rate": 0.05, "ensemble_size": 4, "metric_window": 2,
  "pd_clip_epsilon": 1e-6, "seed": 42, "deterministic_mode": true
})";

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("riskflow_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path put(const std::string& name, const std::string& text) {
        fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir_;
};

std::string three_events() {
    return R"({"type":"application","id":"a","t_ms":1,"features":[0.1,0.2]}
{"type":"application","id":"b","t_ms":2,"features":[0.4,-0.2]}
{"type":"outcome","id":"a","t_ms":3,"label":1}
{"type":"application","id":"c","t_ms":4,"features":[1.5,0.7]}
)";
}

}  // namespace

TEST_F(CliTest, ScoreWritesOneDecisionPerApplication) {
    ScoreOptions o{put("in.jsonl", three_events()), put("cfg.json", kConfig), dir_ / "audit.jsonl",
                   std::nullopt, false};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_score(o, out, err), kExitOk) << err.str();
    AuditFile audit = read_audit(o.audit);
    EXPECT_TRUE(audit.complete());
    EXPECT_EQ(audit.decisions().size(), 3u);
    EXPECT_EQ(audit.header.feature_dim, 2u);
    EXPECT_TRUE(fs::exists(default_manifest_path(o.audit)));
}

TEST_F(CliTest, MalformedLineSevenIsInputError) {
    std::string text = three_events();
    text += R"({"type":"application","id":"d","t_ms":5,"features":[0.0,0.0]}
{"type":"application","id":"e","t_ms":6,"features":[0.0,0.0]}
{"type":"application","id":"f","t_ms":7,"features":[0.0,
)";
    ScoreOptions o{put("in.jsonl", text), put("cfg.json", kConfig), dir_ / "audit.jsonl",
                   std::nullopt, false};
    std::ostringstream out, err;
    EXPECT_EQ(cmd_score(o, out, err), kExitInput);
    EXPECT_NE(err.str().find("line 7"), std::string::npos) << err.str();
    AuditFile audit = read_audit(o.audit);
    EXPECT_FALSE(audit.complete());
    EXPECT_TRUE(audit.error.has_value());
}

TEST_F(CliTest, MissingGammaIsConfigError) {
    std::string cfg = kConfig;
    cfg.replace(cfg.find("\"gamma\": 0.2, "), 14, "");
    ScoreOptions o{put("in.jsonl", three_events()), put("cfg.json", cfg), dir_ / "audit.jsonl",
                   std::nullopt, false};
    std::ostringstream out, err;
    EXPECT_EQ(cmd_score(o, out, err), kExitConfig);
    EXPECT_NE(err.str().find("gamma"), std::string::npos) << err.str();
    EXPECT_FALSE(fs::exists(o.audit));
}

TEST_F(CliTest, UnknownConfigKeyIsRejected) {
    std::string cfg = kConfig;
    cfg.replace(cfg.find("\"gamma\""), 7, "\"gamma\": 0.2, \"gamme\"");
    try {
        config_from_json(nlohmann::json::parse(cfg));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
        EXPECT_EQ(e.detail(), "gamme");
    }
}

TEST_F(CliTest, ConfigRoundTrip) {
    EngineConfig c = config_from_json(nlohmann::json::parse(kConfig));
    EXPECT_EQ(config_from_json(nlohmann::json::parse(config_to_json(c).dump())), c);
}

TEST_F(CliTest, ReplayMatchesAndDetectsTampering) {
    ScoreOptions o{put("in.jsonl", three_events()), put("cfg.json", kConfig), dir_ / "audit.jsonl",
                   std::nullopt, true};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_score(o, out, err), kExitOk);
    ReplayOptions r{default_manifest_path(o.audit)};
    EXPECT_EQ(cmd_replay(r, out, err), kExitOk) << err.str();

    std::string audit = read_file(o.audit);
    audit.replace(audit.find("\"review\""), 8, "\"reject\"");
    std::ofstream(o.audit) << audit;
    std::ostringstream err2;
    EXPECT_EQ(cmd_replay(r, out, err2), kExitMismatch);
    EXPECT_NE(err2.str().find("line"), std::string::npos);
}

TEST_F(CliTest, ReplayMissingInput) {
    ScoreOptions o{put("in.jsonl", three_events()), put("cfg.json", kConfig), dir_ / "audit.jsonl",
                   std::nullopt, true};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_score(o, out, err), kExitOk);
    fs::remove(o.input);
    EXPECT_EQ(cmd_replay({default_manifest_path(o.audit)}, out, err), kExitInput);
}

TEST(AuditFormat, EveryLineRoundTrips) {
    sim::ScenarioSpec spec = sim::default_scenario(400, true, 3);
    EngineConfig c = sim::default_config(4);
    c.metric_window = 25;
    auto events = sim::generate_stream(spec).events;
    AuditTextSink sink(AuditHeader{std::string(kAuditFormat), 4, c.seed});
    auto entries = reference_execute(events, c);
    for (const auto& e : entries) sink.write(e);
    std::string text = sink.finish();
    AuditFile parsed = parse_audit(text);
    ASSERT_TRUE(parsed.complete());
    EXPECT_EQ(parsed.entries, entries);
    for (const auto& e : entries) {
        std::string line = audit_line(e);
        EXPECT_EQ(audit_line(std::get<AuditEntry>(parse_audit_line(line))), line);
    }
}

TEST(AuditFormat, TruncatedTextNeverParses) {
    AuditTextSink sink(AuditHeader{std::string(kAuditFormat), 1, 1});
    EngineConfig c;
    std::vector<StreamEvent> events{ApplicantEvent{"a", 1, {0.3}}, ApplicantEvent{"b", 2, {0.1}}};
    for (const auto& e : reference_execute(events, c)) sink.write(e);
    std::string text = sink.finish();
    for (std::size_t cut = 0; cut < text.size(); ++cut) {
        EXPECT_THROW(parse_audit(std::string_view(text).substr(0, cut)), Error) << cut;
    }
    EXPECT_NO_THROW(parse_audit(text));
}

TEST(EventFormat, RoundTrip) {
    auto events = sim::generate_stream(sim::default_scenario(50, false, 2)).events;
    for (std::size_t i = 0; i < events.size(); ++i) {
        EXPECT_EQ(parse_event_line(event_to_line(events[i]), i + 1), events[i]);
    }
    try {
        parse_event_line(R"({"type":"outcome","id":"a","t_ms":3,"label":2})", 9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_EQ(e.index(), 9u);
    }
}

TEST_F(CliTest, AtomicFileDiscardedWithoutCommit) {
    fs::path target = dir_ / "out.txt";
    {
        AtomicFile f(target);
        f.write("partial");
        EXPECT_TRUE(fs::exists(f.temp_path()));
    }
    EXPECT_FALSE(fs::exists(target));
    EXPECT_TRUE(fs::is_empty(dir_));
}

TEST_F(CliTest, KilledWriterLeavesPreviousAuditIntact) {
    fs::path target = dir_ / "audit.jsonl";
    AuditTextSink sink(AuditHeader{std::string(kAuditFormat), 1, 1});
    std::string good = sink.finish();
    write_file_atomic(target, good);

    pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        AuditWriter w(target, AuditHeader{std::string(kAuditFormat), 1, 2});
        DecisionRecord r;
        r.applicant_id = "x";
        r.assessment.attributions.values = {0.0};
        r.assessment.attributions.ranking = {0};
        for (int i = 0; i < 1000; ++i) w.write(r);
        ::kill(::getpid(), SIGKILL);
        ::_exit(0);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    ASSERT_TRUE(WIFSIGNALED(status));
    EXPECT_EQ(read_file(target), good);
    EXPECT_TRUE(parse_audit(read_file(target)).complete());
}

TEST_F(CliTest, SimulateIsReproducibleAndComparesBaseline) {
    fs::path scen = put("scenario.json", scenario_to_json(sim::default_scenario(10'000, true, 3)).dump(2));
    fs::path cfg = put("cfg.json", config_to_json(sim::default_config(4)).dump(2));
    SimulateOptions o;
    o.scenario = scen;
    o.config = cfg;
    o.compare_baseline = true;
    o.events_out = dir_ / "events.jsonl";
    o.truth_out = dir_ / "truth.jsonl";
    std::ostringstream out, err;

    o.report = dir_ / "r1.json";
    const auto t0 = std::chrono::steady_clock::now();
    ASSERT_EQ(cmd_simulate(o, out, err), kExitOk) << err.str();
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
    o.report = dir_ / "r2.json";
    ASSERT_EQ(cmd_simulate(o, out, err), kExitOk) << err.str();
    EXPECT_EQ(read_file(dir_ / "r1.json"), read_file(dir_ / "r2.json"));

    auto report = nlohmann::json::parse(read_file(dir_ / "r1.json"));
    EXPECT_TRUE(report.contains("adaptive"));
    EXPECT_TRUE(report.contains("baseline"));
    EXPECT_GE(report["final_quartile_gain"].get<double>(), 0.05);
    EXPECT_TRUE(fs::exists(dir_ / "series_accuracy.csv"));
    EXPECT_FALSE(fs::exists(dir_ / "series_latency.csv"));
}

TEST_F(CliTest, ReportRecomputesMetricsFromAudit) {
    fs::path scen = put("scenario.json", scenario_to_json(sim::default_scenario(600, false, 4)).dump(2));
    fs::path cfg = put("cfg.json", config_to_json(sim::default_config(4)).dump(2));
    SimulateOptions so;
    so.scenario = scen;
    so.config = cfg;
    so.report = dir_ / "sim.json";
    so.events_out = dir_ / "events.jsonl";
    so.truth_out = dir_ / "truth.jsonl";
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate(so, out, err), kExitOk) << err.str();

    ScoreOptions sc{dir_ / "events.jsonl", cfg, dir_ / "audit.jsonl", std::nullopt, true};
    ASSERT_EQ(cmd_score(sc, out, err), kExitOk) << err.str();
    ReportOptions ro{dir_ / "audit.jsonl", dir_ / "truth.jsonl", dir_ / "report.json", 500};
    ASSERT_EQ(cmd_report(ro, out, err), kExitOk) << err.str();

    auto sim_report = nlohmann::json::parse(read_file(dir_ / "sim.json"));
    auto report = nlohmann::json::parse(read_file(dir_ / "report.json"));
    EXPECT_EQ(report["metrics"]["accuracy"], sim_report["adaptive"]["accuracy"]);
    EXPECT_EQ(report["metrics"]["decisions"].get<int>(), 600);
}

TEST_F(CliTest, ReplayWithEditedSeedDiverges) {
    ScoreOptions o{put("in.jsonl", three_events()), put("cfg.json", kConfig), dir_ / "audit.jsonl",
                   std::nullopt, true};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_score(o, out, err), kExitOk);
    fs::path manifest = default_manifest_path(o.audit);
    auto j = nlohmann::json::parse(read_file(manifest));
    j["seed"] = 43;
    std::ofstream(manifest) << j.dump(2);
    EXPECT_EQ(cmd_replay({manifest}, out, err), kExitMismatch);
}
