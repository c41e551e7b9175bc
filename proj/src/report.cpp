#include <sstream>

#include "seccost/harness.hpp"
#include "seccost/timeutil.hpp"

namespace seccost {

namespace {

const char* kCsvHeader = "workload,run,metric,raw_value,normalized_value,x_P_raw,x_P_cu,x_SC_cu";

double normalized_value(const NormalizationSpec& spec, MetricId id, double v) {
    auto it = spec.bounds.find(id);
    if (it == spec.bounds.end())
        throw std::invalid_argument("no normalization bounds for metric " + to_string(id));
    auto [lo, hi] = it->second;
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

// Metric order per workload comes from the manifest when present so CSV rows
// match the configured order; synthetic reports fall back to id order.
std::vector<MetricId> metric_order_for(const ExperimentReport& report,
                                       const RunResult& run) {
    if (report.manifest.is_object() && report.manifest.contains("workloads")) {
        for (const auto& wl : report.manifest.at("workloads")) {
            if (wl.at("id") != run.workload) continue;
            std::vector<MetricId> metrics;
            for (const auto& m : wl.at("metrics"))
                metrics.push_back(metric_from_string(m.get<std::string>()));
            return metrics;
        }
    }
    std::vector<MetricId> metrics;
    for (const auto& [id, value] : run.raw) metrics.push_back(id);
    return metrics;
}

} // namespace

std::string report_to_csv(const ExperimentReport& report) {
    std::map<uint32_t, double> pair_by_index;
    for (const auto& pair : report.pairs) pair_by_index[pair.index] = pair.x_sc_cu;

    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& run : report.runs) {
        if (!run.ok) continue; // failed runs are reported in the manifest
        auto pair = pair_by_index.find(run.index);
        std::string x_sc = pair != pair_by_index.end() ? format_double(pair->second) : "";
        for (MetricId metric : metric_order_for(report, run)) {
            auto raw = run.raw.find(metric);
            if (raw == run.raw.end()) continue;
            out << run.workload << ',' << run.index << ',' << to_string(metric) << ','
                << format_double(raw->second) << ','
                << format_double(normalized_value(report.normalization, metric, raw->second))
                << ',' << format_double(run.x_p_raw) << ',' << format_double(run.x_p_cu) << ','
                << x_sc << '\n';
        }
    }
    return out.str();
}

std::vector<CsvRow> csv_rows(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::invalid_argument("unexpected CSV header: " + line);
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) f.push_back(field);
        while (f.size() < 8) f.push_back(""); // trailing empty x_SC_cu
        if (f.size() != 8)
            throw std::invalid_argument("CSV row must have 8 fields: " + line);
        rows.push_back({f[0], static_cast<uint32_t>(std::stoul(f[1])), f[2], f[3], f[4], f[5],
                        f[6], f[7]});
    }
    return rows;
}

std::string csv_from_rows(const std::vector<CsvRow>& rows) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.workload << ',' << r.run << ',' << r.metric << ',' << r.raw_value << ','
            << r.normalized_value << ',' << r.x_p_raw << ',' << r.x_p_cu << ',' << r.x_sc_cu
            << '\n';
    return out.str();
}

namespace {

nlohmann::json metric_map_to_json(const std::map<MetricId, double>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, v] : m) j[to_string(id)] = v;
    return j;
}

std::map<MetricId, double> metric_map_from_json(const nlohmann::json& j) {
    std::map<MetricId, double> m;
    for (auto it = j.begin(); it != j.end(); ++it)
        m[metric_from_string(it.key())] = it.value().get<double>();
    return m;
}

} // namespace

std::string report_to_jsonl(const ExperimentReport& report) {
    std::ostringstream out;
    nlohmann::json head;
    head["kind"] = "report";
    head["manifest"] = report.manifest;
    nlohmann::json bounds = nlohmann::json::object();
    nlohmann::json weights = nlohmann::json::object();
    for (const auto& [id, mm] : report.normalization.bounds)
        bounds[to_string(id)] = {mm.first, mm.second};
    for (const auto& [id, w] : report.normalization.weights) weights[to_string(id)] = w;
    head["normalization"] = {{"scheme", "minmax"}, {"bounds", bounds}, {"weights", weights}};
    head["cumulative_x_sc_cu"] = report.cumulative_x_sc_cu;
    head["cumulative_per_metric"] = metric_map_to_json(report.cumulative_per_metric);
    out << head.dump() << '\n';

    for (const auto& run : report.runs) {
        nlohmann::json j;
        j["kind"] = "run";
        j["workload"] = run.workload;
        j["run"] = run.index;
        j["interaction"] = run.interaction.value;
        j["ok"] = run.ok;
        j["outcome"] = run.outcome;
        j["raw"] = metric_map_to_json(run.raw);
        j["x_p_raw"] = run.x_p_raw;
        j["x_p_cu"] = run.x_p_cu;
        out << j.dump() << '\n';
    }
    for (const auto& pair : report.pairs) {
        nlohmann::json j;
        j["kind"] = "pair";
        j["index"] = pair.index;
        j["x_sc_cu"] = pair.x_sc_cu;
        j["per_metric"] = metric_map_to_json(pair.per_metric);
        out << j.dump() << '\n';
    }
    return out.str();
}

ExperimentReport report_from_jsonl(const std::string& text) {
    ExperimentReport report;
    std::istringstream in(text);
    std::string line;
    bool saw_head = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "report") {
            saw_head = true;
            report.manifest = j.at("manifest");
            const auto& norm = j.at("normalization");
            for (auto it = norm.at("bounds").begin(); it != norm.at("bounds").end(); ++it)
                report.normalization.bounds[metric_from_string(it.key())] = {
                    it.value().at(0).get<double>(), it.value().at(1).get<double>()};
            for (auto it = norm.at("weights").begin(); it != norm.at("weights").end(); ++it)
                report.normalization.weights[metric_from_string(it.key())] =
                    it.value().get<double>();
            report.cumulative_x_sc_cu = j.at("cumulative_x_sc_cu").get<double>();
            report.cumulative_per_metric = metric_map_from_json(j.at("cumulative_per_metric"));
        } else if (kind == "run") {
            RunResult run;
            run.workload = j.at("workload").get<std::string>();
            run.index = j.at("run").get<uint32_t>();
            run.interaction = InteractionId(j.at("interaction").get<std::string>());
            run.ok = j.at("ok").get<bool>();
            run.outcome = j.at("outcome").get<std::string>();
            run.raw = metric_map_from_json(j.at("raw"));
            run.x_p_raw = j.at("x_p_raw").get<double>();
            run.x_p_cu = j.at("x_p_cu").get<double>();
            report.runs.push_back(std::move(run));
        } else if (kind == "pair") {
            PairDifferential pair;
            pair.index = j.at("index").get<uint32_t>();
            pair.x_sc_cu = j.at("x_sc_cu").get<double>();
            pair.per_metric = metric_map_from_json(j.at("per_metric"));
            report.pairs.push_back(std::move(pair));
        } else {
            throw std::invalid_argument("unknown JSONL record kind: " + kind);
        }
    }
    if (!saw_head)
        throw std::invalid_argument("JSONL report lacks the report header line");
    return report;
}

} // namespace seccost
