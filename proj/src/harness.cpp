#include "seccost/harness.hpp"

#include <time.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "seccost/timeutil.hpp"

namespace seccost {

namespace {

constexpr const char* kFrameworkName = "iot-framework";
constexpr const char* kSensorName = "C1";
constexpr const char* kControllerName = "C2";

uint64_t derive_run_seed(uint64_t base, uint32_t index) {
    // Paired runs of both workloads share index and therefore room dynamics.
    return base + index;
}

} // namespace

void WorkloadConfig::validate() const {
    if (id.empty())
        throw std::invalid_argument("workload id must be non-empty");
    if (runs < 1)
        throw std::invalid_argument("workload runs must be >= 1");
    if (protocol != 'S' && protocol != 'I')
        throw std::invalid_argument("workload protocol must be S or I");
    if (metrics.empty())
        throw std::invalid_argument("workload metric set must be non-empty");
    if (loop_iterations < 1)
        throw std::invalid_argument("loop_iterations must be >= 1");
}

void ExperimentConfig::validate() const {
    if (workloads.empty())
        throw std::invalid_argument("at least one workload required");
    for (const auto& wl : workloads) wl.validate();
    for (size_t a = 0; a < workloads.size(); ++a)
        for (size_t b = a + 1; b < workloads.size(); ++b)
            if (workloads[a].id == workloads[b].id)
                throw std::invalid_argument("duplicate workload id: " + workloads[a].id);
    bool any_secure = false;
    for (const auto& wl : workloads)
        if (wl.protocol == 'S') any_secure = true;
    if (any_secure && psk.size() != kPskBytes)
        throw std::invalid_argument("secure workloads require a 32-byte psk");
    if (room_heat_gain <= 0.0 || room_cooling <= 0.0)
        throw std::invalid_argument("room gain and cooling must be positive");
}

std::string interaction_id_for_run(const std::string& workload_id, uint32_t index) {
    char buf[16];
    snprintf(buf, sizeof buf, "-r%04u", index);
    return workload_id + buf;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.psk = psk_from_hex("000102030405060708090a0b0c0d0e0f"
                           "101112131415161718191a1b1c1d1e1f");
    cfg.acl = {{kControllerName, kTemperatureService}};
    WorkloadConfig wl1{"WL1", 50, 'S', {}, 10, 0};
    WorkloadConfig wl2{"WL2", 50, 'I', {}, 10, 0};
    wl1.metrics = wl2.metrics = {MetricId::M1, MetricId::M2, MetricId::M3, MetricId::M4};
    cfg.workloads = {wl1, wl2};
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["psk_hex"] = cfg.psk.empty() ? "" : psk_to_hex(cfg.psk);
    j["acl"] = nlohmann::json::array();
    for (const auto& rule : cfg.acl)
        j["acl"].push_back({{"consumer", rule.consumer}, {"service", rule.service_name}});
    j["room"] = {{"temperature_c", cfg.room_temperature_c},
                 {"heat_gain_c_per_tick", cfg.room_heat_gain},
                 {"cooling_c_per_tick", cfg.room_cooling}};
    j["controller"] = {{"threshold_c", cfg.threshold_c},
                       {"request_period_ms", cfg.request_period_ms}};
    j["ports"] = {{"bind_ip", cfg.bind_ip},
                  {"cloud", cfg.cloud_port},
                  {"cloud_proxy", cfg.cloud_proxy_port},
                  {"c1", cfg.c1_port},
                  {"c1_proxy", cfg.c1_proxy_port},
                  {"c2_nominal", cfg.c2_nominal_port}};
    j["warmup_runs"] = cfg.warmup_runs;
    j["workloads"] = nlohmann::json::array();
    for (const auto& wl : cfg.workloads) {
        nlohmann::json w;
        w["id"] = wl.id;
        w["runs"] = wl.runs;
        w["protocol"] = std::string(1, wl.protocol);
        w["metrics"] = nlohmann::json::array();
        for (MetricId m : wl.metrics) w["metrics"].push_back(to_string(m));
        w["loop_iterations"] = wl.loop_iterations;
        j["workloads"].push_back(w);
    }
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    std::string psk_hex = j.value("psk_hex", std::string());
    if (!psk_hex.empty()) cfg.psk = psk_from_hex(psk_hex);
    if (j.contains("acl"))
        for (const auto& rule : j.at("acl"))
            cfg.acl.push_back(
                {rule.at("consumer").get<std::string>(), rule.at("service").get<std::string>()});
    if (j.contains("room")) {
        const auto& room = j.at("room");
        cfg.room_temperature_c = room.value("temperature_c", cfg.room_temperature_c);
        cfg.room_heat_gain = room.value("heat_gain_c_per_tick", cfg.room_heat_gain);
        cfg.room_cooling = room.value("cooling_c_per_tick", cfg.room_cooling);
    }
    if (j.contains("controller")) {
        const auto& ctrl = j.at("controller");
        cfg.threshold_c = ctrl.value("threshold_c", cfg.threshold_c);
        cfg.request_period_ms = ctrl.value("request_period_ms", cfg.request_period_ms);
    }
    if (j.contains("ports")) {
        const auto& ports = j.at("ports");
        cfg.bind_ip = ports.value("bind_ip", cfg.bind_ip);
        cfg.cloud_port = ports.value("cloud", cfg.cloud_port);
        cfg.cloud_proxy_port = ports.value("cloud_proxy", cfg.cloud_proxy_port);
        cfg.c1_port = ports.value("c1", cfg.c1_port);
        cfg.c1_proxy_port = ports.value("c1_proxy", cfg.c1_proxy_port);
        cfg.c2_nominal_port = ports.value("c2_nominal", cfg.c2_nominal_port);
    }
    cfg.warmup_runs = j.value("warmup_runs", cfg.warmup_runs);
    if (j.contains("workloads")) {
        cfg.workloads.clear();
        for (const auto& w : j.at("workloads")) {
            WorkloadConfig wl;
            wl.id = w.at("id").get<std::string>();
            wl.runs = w.at("runs").get<uint32_t>();
            std::string protocol = w.at("protocol").get<std::string>();
            if (protocol.size() != 1)
                throw std::invalid_argument("workload protocol must be S or I");
            wl.protocol = protocol[0];
            if (w.contains("metrics")) {
                wl.metrics.clear();
                for (const auto& m : w.at("metrics"))
                    wl.metrics.push_back(metric_from_string(m.get<std::string>()));
            }
            wl.loop_iterations = w.value("loop_iterations", wl.loop_iterations);
            cfg.workloads.push_back(wl);
        }
    }
    for (auto& wl : cfg.workloads) wl.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    ExperimentConfig cfg = config_from_json(j);
    if (const char* env_seed = std::getenv("SECCOST_SEED")) {
        cfg.seed = std::strtoull(env_seed, nullptr, 10);
        for (auto& wl : cfg.workloads) wl.seed = cfg.seed;
    }
    return cfg;
}

std::map<MetricId, double> run_metric_totals(const SampleStore& samples,
                                             const InteractionId& interaction,
                                             const std::vector<MetricId>& metrics) {
    std::map<MetricId, double> totals;
    for (MetricId m : metrics) {
        CostQuery q;
        q.interactions = {interaction};
        q.metrics = {m};
        totals[m] = samples.total_cost(q);
    }
    return totals;
}

double x_p_raw(const std::vector<RunResult>& results, uint32_t index) {
    for (const auto& r : results) {
        if (r.index != index) continue;
        if (!r.ok)
            throw std::runtime_error("run " + std::to_string(index) + " failed: " + r.outcome);
        double sum = 0.0;
        for (const auto& [metric, value] : r.raw) sum += value;
        return sum;
    }
    throw std::invalid_argument("no run with index " + std::to_string(index));
}

double x_p_cost_unit(const std::vector<RunResult>& results, uint32_t index,
                     const NormalizationSpec& spec) {
    for (const auto& r : results) {
        if (r.index != index) continue;
        if (!r.ok)
            throw std::runtime_error("run " + std::to_string(index) + " failed: " + r.outcome);
        return to_cost_unit(r.raw, spec);
    }
    throw std::invalid_argument("no run with index " + std::to_string(index));
}

NormalizationSpec fit_pooled_normalization(const std::vector<RunResult>& first,
                                           const std::vector<RunResult>& second) {
    std::vector<std::map<MetricId, double>> population;
    for (const auto& r : first)
        if (r.ok) population.push_back(r.raw);
    for (const auto& r : second)
        if (r.ok) population.push_back(r.raw);
    return fit_minmax(population);
}

std::vector<PairDifferential> pair_differentials(const std::vector<RunResult>& secure_side,
                                                 const std::vector<RunResult>& insecure_side,
                                                 const NormalizationSpec& spec) {
    auto count_ok = [](const std::vector<RunResult>& rs) {
        size_t n = 0;
        for (const auto& r : rs)
            if (r.ok) ++n;
        return n;
    };
    if (count_ok(secure_side) == 0 || count_ok(insecure_side) == 0)
        throw std::runtime_error("each workload needs at least one successful run");

    std::map<uint32_t, const RunResult*> by_index_s, by_index_i;
    for (const auto& r : secure_side)
        if (r.ok) by_index_s[r.index] = &r;
    for (const auto& r : insecure_side)
        if (r.ok) by_index_i[r.index] = &r;

    std::vector<PairDifferential> pairs;
    for (const auto& [index, s] : by_index_s) {
        auto it = by_index_i.find(index);
        if (it == by_index_i.end()) continue;
        const RunResult* i_run = it->second;
        PairDifferential pair;
        pair.index = index;
        pair.x_sc_cu = to_cost_unit(s->raw, spec) - to_cost_unit(i_run->raw, spec);
        for (const auto& [metric, value] : s->raw) {
            auto other = i_run->raw.find(metric);
            double i_value = other != i_run->raw.end() ? other->second : 0.0;
            pair.per_metric[metric] = value - i_value;
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

ExperimentReport build_report(std::vector<RunResult> first_workload,
                              std::vector<RunResult> second_workload, nlohmann::json manifest) {
    ExperimentReport report;
    report.normalization = fit_pooled_normalization(first_workload, second_workload);
    for (auto* side : {&first_workload, &second_workload})
        for (auto& r : *side)
            if (r.ok) r.x_p_cu = to_cost_unit(r.raw, report.normalization);

    report.pairs = pair_differentials(first_workload, second_workload, report.normalization);
    for (const auto& pair : report.pairs) {
        report.cumulative_x_sc_cu += pair.x_sc_cu;
        for (const auto& [metric, value] : pair.per_metric)
            report.cumulative_per_metric[metric] += value;
    }

    report.runs = std::move(first_workload);
    report.runs.insert(report.runs.end(), second_workload.begin(), second_workload.end());
    report.manifest = std::move(manifest);
    return report;
}

Experiment::Experiment(ExperimentConfig cfg, std::shared_ptr<ResourceSource> source)
    : cfg_(std::move(cfg)), source_(std::move(source)) {
    cfg_.validate();
    if (!source_)
        throw std::invalid_argument("experiment requires a resource source");
}

void Experiment::run_workload(const WorkloadConfig& wl, std::vector<RunResult>& out,
                              nlohmann::json& run_entries) {
    ChannelConfig chan =
        wl.protocol == 'S' ? secure_channel(cfg_.psk) : insecure_channel();

    Registry registry;
    Acl acl;
    for (const auto& rule : cfg_.acl) acl.add(rule);

    // Bind service listeners first so component identities carry real ports.
    Socket cloud_listener = listen_on({cfg_.bind_ip, cfg_.cloud_port});
    Endpoint cloud_ep = cloud_listener.local_endpoint();
    Socket c1_listener = listen_on({cfg_.bind_ip, cfg_.c1_port});
    Endpoint c1_ep = c1_listener.local_endpoint();

    TaskTaxonomy taxonomy = artifact_taxonomy();
    Tracer cloud_tracer(ComponentId{kFrameworkName, cloud_ep}, taxonomy, source_, traces_,
                        samples_);
    Tracer c1_tracer(ComponentId{kSensorName, c1_ep}, taxonomy, source_, traces_, samples_);
    Tracer c2_tracer(ComponentId{kControllerName, {cfg_.bind_ip, cfg_.c2_nominal_port}},
                     taxonomy, source_, traces_, samples_);

    RoomModel room(cfg_.room_temperature_c, cfg_.room_heat_gain, cfg_.room_cooling, cfg_.seed);

    CloudService cloud(std::move(cloud_listener), chan, registry, acl, cloud_tracer);
    Proxy cloud_proxy({{cfg_.bind_ip, cfg_.cloud_proxy_port}, cloud_ep, kFrameworkName},
                      records_);
    SensorService c1(std::move(c1_listener), chan, room, c1_tracer);
    Proxy c1_proxy({{cfg_.bind_ip, cfg_.c1_proxy_port}, c1_ep, kSensorName}, records_);

    for (auto& [name, ep, role] :
         std::initializer_list<std::tuple<std::string, Endpoint, std::string>>{
             {kFrameworkName, cloud_ep, "service"},
             {kFrameworkName, cloud_proxy.listen_endpoint(), "proxy"},
             {kSensorName, c1_ep, "service"},
             {kSensorName, c1_proxy.listen_endpoint(), "proxy"},
             {kControllerName, {cfg_.bind_ip, cfg_.c2_nominal_port}, "nominal"}}) {
        manifest_["endpoints"].push_back(
            {{"component", name}, {"ip", ep.ip}, {"port", ep.port}, {"role", role}});
    }

    ControllerPolicy policy{cfg_.threshold_c, wl.loop_iterations, cfg_.request_period_ms};

    auto execute = [&](const InteractionId& interaction, uint64_t run_seed) {
        room.reset(cfg_.room_temperature_c, run_seed);
        c1.register_with_cloud(cloud_proxy.listen_endpoint(), interaction,
                               c1_proxy.listen_endpoint());
        InteractionOutcome outcome = run_controller(cloud_proxy.listen_endpoint(), policy, chan,
                                                    c2_tracer, interaction, room);
        if (!outcome.ok)
            throw std::runtime_error(outcome.error);
    };

    for (uint32_t w = 1; w <= cfg_.warmup_runs; ++w) {
        char buf[16];
        snprintf(buf, sizeof buf, "-w%04u", w);
        try {
            execute(InteractionId(wl.id + buf), derive_run_seed(cfg_.seed, 0));
        } catch (const std::exception&) {
            // Warmups only prime caches and code paths; measured runs report
            // real failures.
        }
    }

    for (uint32_t r = 1; r <= wl.runs; ++r) {
        InteractionId interaction{interaction_id_for_run(wl.id, r)};
        RunResult result;
        result.workload = wl.id;
        result.index = r;
        result.interaction = interaction;
        int64_t t_start = wall_utc_ms();
        try {
            execute(interaction, derive_run_seed(cfg_.seed, r));
            result.ok = true;
            result.outcome = "ok";
        } catch (const std::exception& e) {
            result.ok = false;
            result.outcome = e.what();
        }
        int64_t t_end = wall_utc_ms() + 1;
        run_entries.push_back({{"workload", wl.id},
                               {"index", r},
                               {"interaction", interaction.value},
                               {"ok", result.ok},
                               {"outcome", result.outcome},
                               {"t_start_ms", t_start},
                               {"t_end_ms", t_end}});
        out.push_back(std::move(result));
    }
}

void Experiment::run() {
    manifest_ = nlohmann::json::object();
    char host[256] = {0};
    gethostname(host, sizeof host - 1);
    manifest_["host"] = host;
    manifest_["cores"] = source_->core_count();
    timespec res{};
    clock_getres(CLOCK_MONOTONIC, &res);
    manifest_["clock_monotonic_res_ns"] = res.tv_sec * 1'000'000'000LL + res.tv_nsec;
    clock_getres(CLOCK_PROCESS_CPUTIME_ID, &res);
    manifest_["clock_cputime_res_ns"] = res.tv_sec * 1'000'000'000LL + res.tv_nsec;
    manifest_["aead_overhead_bytes"] = kAeadOverheadBytes;
    manifest_["seed"] = cfg_.seed;
    manifest_["warmup_runs"] = cfg_.warmup_runs;
    manifest_["endpoints"] = nlohmann::json::array();
    manifest_["workloads"] = nlohmann::json::array();
    for (const auto& wl : cfg_.workloads) {
        nlohmann::json w;
        w["id"] = wl.id;
        w["runs"] = wl.runs;
        w["protocol"] = std::string(1, wl.protocol);
        w["metrics"] = nlohmann::json::array();
        for (MetricId m : wl.metrics) w["metrics"].push_back(to_string(m));
        w["loop_iterations"] = wl.loop_iterations;
        manifest_["workloads"].push_back(w);
    }
    manifest_["runs"] = nlohmann::json::array();

    results_.clear();
    for (const auto& wl : cfg_.workloads) {
        std::vector<RunResult> results;
        run_workload(wl, results, manifest_["runs"]);
        results_.push_back(std::move(results));
    }

    // Raw totals re-aggregated from the sample store, per run and metric.
    for (size_t w = 0; w < cfg_.workloads.size(); ++w) {
        for (auto& r : results_[w]) {
            if (!r.ok) continue;
            r.raw = run_metric_totals(samples_, r.interaction, cfg_.workloads[w].metrics);
            r.x_p_raw = 0.0;
            for (MetricId m : cfg_.workloads[w].metrics) r.x_p_raw += r.raw[m];
        }
    }
}

ExperimentReport Experiment::report() const {
    if (results_.size() != 2)
        throw std::runtime_error("report requires exactly two workloads");
    return build_report(results_[0], results_[1], manifest_);
}

namespace {

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

void write_experiment_dir(const std::string& dir, const Experiment& experiment,
                          const ExperimentReport& report, const ExperimentConfig& cfg) {
    std::filesystem::create_directories(dir);
    auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    write_text_file(path("config.json"), config_to_json(cfg).dump(2) + "\n");
    write_text_file(path("manifest.json"), experiment.manifest().dump(2) + "\n");
    experiment.samples().save(path("samples.tsv"));
    experiment.records().save(path("records.tsv"));
    experiment.traces().save(path("traces.tsv"));
    report.normalization.save(path("norm.txt"));
    write_text_file(path("report.csv"), report_to_csv(report));
    write_text_file(path("report.jsonl"), report_to_jsonl(report));
}

ExperimentReport recompute_report_offline(const std::string& dir) {
    auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    nlohmann::json manifest = nlohmann::json::parse(read_text_file(path("manifest.json")));
    SampleStore samples = SampleStore::load(path("samples.tsv"));

    if (manifest.at("workloads").size() != 2)
        throw std::runtime_error("offline report requires exactly two workloads");

    std::vector<std::vector<RunResult>> sides(2);
    for (size_t w = 0; w < 2; ++w) {
        const auto& wl = manifest.at("workloads").at(w);
        std::vector<MetricId> metrics;
        for (const auto& m : wl.at("metrics")) metrics.push_back(metric_from_string(m));
        for (const auto& entry : manifest.at("runs")) {
            if (entry.at("workload") != wl.at("id")) continue;
            RunResult r;
            r.workload = entry.at("workload").get<std::string>();
            r.index = entry.at("index").get<uint32_t>();
            r.interaction = InteractionId(entry.at("interaction").get<std::string>());
            r.ok = entry.at("ok").get<bool>();
            r.outcome = entry.at("outcome").get<std::string>();
            if (r.ok) {
                r.raw = run_metric_totals(samples, r.interaction, metrics);
                for (MetricId m : metrics) r.x_p_raw += r.raw[m];
            }
            sides[w].push_back(std::move(r));
        }
    }
    return build_report(sides[0], sides[1], manifest);
}

bool replay_matches(const std::string& dir, std::string* diagnostic) {
    auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    ExperimentReport recomputed = recompute_report_offline(dir);
    std::string csv = report_to_csv(recomputed);
    std::string jsonl = report_to_jsonl(recomputed);
    std::string stored_csv = read_text_file(path("report.csv"));
    std::string stored_jsonl = read_text_file(path("report.jsonl"));
    if (csv != stored_csv) {
        if (diagnostic) *diagnostic = "report.csv differs from recomputed report";
        return false;
    }
    if (jsonl != stored_jsonl) {
        if (diagnostic) *diagnostic = "report.jsonl differs from recomputed report";
        return false;
    }
    return true;
}

} // namespace seccost
