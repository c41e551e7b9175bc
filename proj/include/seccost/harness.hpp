#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "seccost/catalogue.hpp"
#include "seccost/channel.hpp"
#include "seccost/cloud.hpp"
#include "seccost/devices.hpp"
#include "seccost/ids.hpp"
#include "seccost/model.hpp"
#include "seccost/monitor.hpp"
#include "seccost/tracer.hpp"

namespace seccost {

// One Table-1 row: a protocol, a run count, and a metric set.
struct WorkloadConfig {
    std::string id;                // "WL1", "WL2"
    uint32_t runs = 1;             // n
    char protocol = 'I';           // 'S' secure, 'I' insecure
    std::vector<MetricId> metrics = {MetricId::M1, MetricId::M2, MetricId::M3, MetricId::M4};
    uint32_t loop_iterations = 10;
    uint64_t seed = 0;

    void validate() const;
};

// Everything one experiment needs: workloads plus the shared environment.
struct ExperimentConfig {
    uint64_t seed = 42;
    std::vector<uint8_t> psk;
    std::vector<AccessRule> acl;
    double room_temperature_c = 30.0;
    double room_heat_gain = 0.2;
    double room_cooling = 1.0;
    double threshold_c = 25.0;
    uint32_t request_period_ms = 0;
    std::string bind_ip = "127.0.0.1";
    uint16_t cloud_port = 0; // 0 = kernel-assigned
    uint16_t cloud_proxy_port = 0;
    uint16_t c1_port = 0;
    uint16_t c1_proxy_port = 0;
    uint16_t c2_nominal_port = 65001; // identity only; C2 never listens
    uint32_t warmup_runs = 1;
    std::vector<WorkloadConfig> workloads;

    void validate() const;
};

// JSON config file; the SECCOST_SEED environment variable overrides `seed`.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig default_config();
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

struct RunResult {
    std::string workload;
    uint32_t index = 0; // 1-based, pairing key across workloads
    std::map<MetricId, double> raw; // per-metric totals in native units
    double x_p_raw = 0.0;           // Eq. 2 literal: sum of raw totals
    double x_p_cu = 0.0;            // comparable variant in cost units
    InteractionId interaction{"-"};
    bool ok = false;
    std::string outcome;
};

struct PairDifferential {
    uint32_t index = 0;
    double x_sc_cu = 0.0;                  // x_S(i) - x_I(i) in cost units
    std::map<MetricId, double> per_metric; // native-unit differentials
};

struct ExperimentReport {
    std::vector<RunResult> runs; // first workload's runs, then second's
    std::vector<PairDifferential> pairs;
    double cumulative_x_sc_cu = 0.0;
    std::map<MetricId, double> cumulative_per_metric;
    NormalizationSpec normalization;
    nlohmann::json manifest;
};

// Per-run metric totals re-aggregated from the sample store (Eq. 1 with an
// interaction filter).
std::map<MetricId, double> run_metric_totals(const SampleStore& samples,
                                             const InteractionId& interaction,
                                             const std::vector<MetricId>& metrics);

// Eq. 2 for one run, raw native sum. Throws when the index is missing.
double x_p_raw(const std::vector<RunResult>& results, uint32_t index);
double x_p_cost_unit(const std::vector<RunResult>& results, uint32_t index,
                     const NormalizationSpec& spec);

// Bounds fitted over the pooled successful runs of both workloads.
NormalizationSpec fit_pooled_normalization(const std::vector<RunResult>& first,
                                           const std::vector<RunResult>& second);

// Eq. 3: pairs run i of the first (secure-slot) workload with run i of the
// second; indices where either side failed are skipped. Throws when either
// side has no successful run.
std::vector<PairDifferential> pair_differentials(const std::vector<RunResult>& secure_side,
                                                 const std::vector<RunResult>& insecure_side,
                                                 const NormalizationSpec& spec);

ExperimentReport build_report(std::vector<RunResult> first_workload,
                              std::vector<RunResult> second_workload, nlohmann::json manifest);

// CSV columns: workload,run,metric,raw_value,normalized_value,x_P_raw,x_P_cu,x_SC_cu.
// Successful runs only; failures live in the manifest.
std::string report_to_csv(const ExperimentReport& report);
std::string report_to_jsonl(const ExperimentReport& report);
ExperimentReport report_from_jsonl(const std::string& text);

// Parsed CSV rows re-export byte-identically.
struct CsvRow {
    std::string workload;
    uint32_t run = 0;
    std::string metric;
    std::string raw_value;
    std::string normalized_value;
    std::string x_p_raw;
    std::string x_p_cu;
    std::string x_sc_cu;
};
std::vector<CsvRow> csv_rows(const std::string& csv);
std::string csv_from_rows(const std::vector<CsvRow>& rows);

// Figure-4 style interaction graph: one node per component labelled with its
// performed tasks, one edge per distinct (sender, receiver, message type).
std::string export_graph(const std::vector<MessageRecord>& records,
                         const std::vector<TaskTrace>& traces, const InteractionId& interaction,
                         const std::map<Endpoint, std::string>& endpoint_names);

std::map<Endpoint, std::string> endpoint_names_from_manifest(const nlohmann::json& manifest);

// Executes all configured workloads sequentially over loopback, routing every
// message through the monitor proxies.
class Experiment {
public:
    Experiment(ExperimentConfig cfg, std::shared_ptr<ResourceSource> source);

    void run();

    const SampleStore& samples() const { return samples_; }
    const TraceStore& traces() const { return traces_; }
    const RecordStore& records() const { return records_; }
    const nlohmann::json& manifest() const { return manifest_; }

    // Results per workload, in config order; raw totals and x_P filled.
    const std::vector<std::vector<RunResult>>& results() const { return results_; }

    ExperimentReport report() const;

private:
    void run_workload(const WorkloadConfig& wl, std::vector<RunResult>& out,
                      nlohmann::json& run_entries);

    ExperimentConfig cfg_;
    std::shared_ptr<ResourceSource> source_;
    SampleStore samples_;
    TraceStore traces_;
    RecordStore records_;
    std::vector<std::vector<RunResult>> results_;
    nlohmann::json manifest_;
};

// On-disk layout of one experiment: config.json, manifest.json, samples.tsv,
// records.tsv, traces.tsv, norm.txt, report.csv, report.jsonl.
void write_experiment_dir(const std::string& dir, const Experiment& experiment,
                          const ExperimentReport& report, const ExperimentConfig& cfg);

// Rebuilds the report purely from the stored files.
ExperimentReport recompute_report_offline(const std::string& dir);

// True when the recomputed report matches the stored report files byte for byte.
bool replay_matches(const std::string& dir, std::string* diagnostic = nullptr);

std::string interaction_id_for_run(const std::string& workload_id, uint32_t index);

} // namespace seccost
