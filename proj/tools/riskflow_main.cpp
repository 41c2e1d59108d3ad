#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli/commands.hpp"

using namespace riskflow::cli;

int main(int argc, char** argv) {
    CLI::App app{"riskflow: streaming credit-risk decision engine"};
    app.require_subcommand(1);

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "Score an event stream and write the audit log");
    score_cmd->add_option("--input", score.input, "Events file (JSON Lines)")->required();
    score_cmd->add_option("--config", score.config, "Engine config (JSON)")->required();
    score_cmd->add_option("--audit", score.audit, "Audit output (JSON Lines)")->required();
    score_cmd->add_option("--manifest", score.manifest, "Run manifest output");
    score_cmd->add_flag("--deterministic", score.deterministic, "Force deterministic mode");

    SimulateOptions simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic stream and evaluate the engine");
    sim_cmd->add_option("--scenario", simulate.scenario, "Scenario (JSON)")->required();
    sim_cmd->add_option("--config", simulate.config, "Engine config (JSON)")->required();
    sim_cmd->add_option("--report", simulate.report, "Report output (JSON)")->required();
    sim_cmd->add_option("--seed", simulate.seed, "Override the scenario seed");
    sim_cmd->add_flag("--compare-baseline", simulate.compare_baseline,
                      "Also run the frozen baseline on the same stream");
    sim_cmd->add_flag("--pipelined", simulate.pipelined,
                      "Use the concurrent executor and record latency");
    sim_cmd->add_option("--events-out", simulate.events_out, "Write the generated events");
    sim_cmd->add_option("--truth-out", simulate.truth_out, "Write the generated labels");

    ReplayOptions replay;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a scored stream and compare audits");
    replay_cmd->add_option("--manifest", replay.manifest, "Manifest written by score")->required();

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "Recompute metrics from an audit and labels");
    report_cmd->add_option("--audit", report.audit, "Audit file")->required();
    report_cmd->add_option("--truth", report.truth, "Truth labels (JSON Lines)")->required();
    report_cmd->add_option("--report", report.report, "Report output (JSON)")->required();
    report_cmd->add_option("--series-window", report.series_window, "Decisions per series point");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Measure pipelined throughput and latency");
    bench_cmd->add_option("--events", bench.events, "Applications to score");
    bench_cmd->add_option("--features", bench.features, "Feature dimension");
    bench_cmd->add_option("--shards", bench.shards, "Scoring shards");
    bench_cmd->add_option("--seed", bench.seed, "Generator seed");
    bench_cmd->add_option("--report", bench.report, "Write results as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*score_cmd) return cmd_score(score, std::cout, std::cerr);
    if (*sim_cmd) return cmd_simulate(simulate, std::cout, std::cerr);
    if (*replay_cmd) return cmd_replay(replay, std::cout, std::cerr);
    if (*report_cmd) return cmd_report(report, std::cout, std::cerr);
    if (*bench_cmd) return cmd_bench(bench, std::cout, std::cerr);
    return kExitFailure;
}
