#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "seccost/harness.hpp"
#include "seccost/timeutil.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    seccost::ExperimentConfig cfg =
        config_path.empty() ? seccost::default_config() : seccost::load_config(config_path);
    if (config_path.empty()) {
        if (const char* env_seed = std::getenv("SECCOST_SEED")) {
            cfg.seed = std::strtoull(env_seed, nullptr, 10);
            for (auto& wl : cfg.workloads) wl.seed = cfg.seed;
        }
    }

    auto source = std::make_shared<seccost::SystemResourceSource>();
    seccost::Experiment experiment(cfg, source);
    std::cout << "running " << cfg.workloads.size() << " workload(s)..." << std::endl;
    int64_t t0 = seccost::monotonic_ns();
    experiment.run();
    int64_t t1 = seccost::monotonic_ns();

    seccost::ExperimentReport report = experiment.report();
    seccost::write_experiment_dir(out_dir, experiment, report, cfg);

    size_t failures = 0;
    for (const auto& side : experiment.results())
        for (const auto& r : side)
            if (!r.ok) ++failures;

    std::cout << "completed in " << (t1 - t0) / 1e9 << " s, " << report.pairs.size()
              << " paired runs, " << failures << " failed runs\n";
    std::cout << "cumulative x_SC (cost units): " << report.cumulative_x_sc_cu << "\n";
    for (const auto& [metric, value] : report.cumulative_per_metric)
        std::cout << "  " << seccost::to_string(metric) << " differential: " << value << "\n";
    std::cout << "wrote " << out_dir << "/report.{csv,jsonl}" << std::endl;
    return failures == 0 ? 0 : 1;
}

int cmd_report(const std::string& in_dir, const std::string& format) {
    seccost::ExperimentReport report = seccost::recompute_report_offline(in_dir);
    if (format == "csv")
        std::cout << seccost::report_to_csv(report);
    else
        std::cout << seccost::report_to_jsonl(report);
    return 0;
}

int cmd_graph(const std::string& in_dir, const std::string& interaction,
              const std::string& out_file) {
    namespace fs = std::filesystem;
    auto records = seccost::RecordStore::load((fs::path(in_dir) / "records.tsv").string());
    auto traces = seccost::TraceStore::load((fs::path(in_dir) / "traces.tsv").string());
    std::ifstream manifest_in((fs::path(in_dir) / "manifest.json").string());
    if (!manifest_in) {
        std::cerr << "cannot read manifest.json in " << in_dir << "\n";
        return 1;
    }
    nlohmann::json manifest = nlohmann::json::parse(manifest_in);
    std::string dot = seccost::export_graph(records.snapshot(), traces.snapshot(),
                                            seccost::InteractionId(interaction),
                                            seccost::endpoint_names_from_manifest(manifest));
    if (out_file.empty() || out_file == "-") {
        std::cout << dot;
    } else {
        std::ofstream out(out_file);
        if (!out) {
            std::cerr << "cannot write " << out_file << "\n";
            return 1;
        }
        out << dot;
        std::cout << "wrote " << out_file << std::endl;
    }
    return 0;
}

int cmd_replay(const std::string& in_dir) {
    std::string diagnostic;
    if (seccost::replay_matches(in_dir, &diagnostic)) {
        std::cout << "replay: stored report reproduced bit-identically" << std::endl;
        return 0;
    }
    std::cerr << "replay mismatch: " << diagnostic << std::endl;
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"security cost measurement harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", in_dir, format = "csv";
    std::string interaction, dot_file;

    auto* run = app.add_subcommand("run", "execute the configured workloads");
    run->add_option("--config", config_path, "JSON config file (defaults baked in)");
    run->add_option("--out", out_dir, "output directory")->required();

    auto* report = app.add_subcommand("report", "print a report recomputed from stored files");
    report->add_option("--in", in_dir, "experiment directory")->required();
    report->add_option("--format", format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));

    auto* graph = app.add_subcommand("graph", "export one interaction as a DOT graph");
    graph->add_option("--in", in_dir, "experiment directory")->required();
    graph->add_option("--interaction", interaction, "interaction id")->required();
    graph->add_option("--out", dot_file, "output .dot file (- for stdout)");

    auto* replay = app.add_subcommand("replay", "recompute the report and verify it matches");
    replay->add_option("--in", in_dir, "experiment directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir);
        if (report->parsed()) return cmd_report(in_dir, format);
        if (graph->parsed()) return cmd_graph(in_dir, interaction, dot_file);
        if (replay->parsed()) return cmd_replay(in_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
