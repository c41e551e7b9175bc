#include "seccost/tracer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "seccost/timeutil.hpp"

namespace seccost {

TaskTaxonomy::TaskTaxonomy(std::map<std::string, TaskCategory> entries)
    : entries_(std::move(entries)) {
    for (const auto& [name, category] : entries_)
        TaskKind{name, category}.validate();
}

TaskCategory TaskTaxonomy::category_of(const std::string& task_name) const {
    auto it = entries_.find(task_name);
    if (it == entries_.end())
        throw std::invalid_argument("task not in taxonomy: " + task_name);
    return it->second;
}

bool TaskTaxonomy::contains(const std::string& task_name) const {
    return entries_.count(task_name) > 0;
}

std::vector<std::string> TaskTaxonomy::security_related() const {
    std::vector<std::string> names;
    for (const auto& [name, category] : entries_)
        if (category == TaskCategory::SecurityRelated) names.push_back(name);
    return names;
}

TaskTaxonomy artifact_taxonomy() {
    return TaskTaxonomy({
        {"register", TaskCategory::UseCaseRelated},
        {"discover", TaskCategory::UseCaseRelated},
        {"lookup", TaskCategory::UseCaseRelated},
        {"request-temperature", TaskCategory::UseCaseRelated},
        {"measure-temperature", TaskCategory::UseCaseRelated},
        {"decide-actuate", TaskCategory::UseCaseRelated},
        {"authorise", TaskCategory::SecurityRelated},
        {"handshake", TaskCategory::SecurityRelated},
        {"encrypt", TaskCategory::SecurityRelated},
        {"decrypt", TaskCategory::SecurityRelated},
    });
}

void TraceStore::append(const TaskTrace& t) {
    std::lock_guard lock(mu_);
    traces_.push_back(t);
}

size_t TraceStore::size() const {
    std::lock_guard lock(mu_);
    return traces_.size();
}

std::vector<TaskTrace> TraceStore::snapshot() const {
    std::lock_guard lock(mu_);
    return traces_;
}

std::vector<TaskTrace> security_tasks(const TraceStore& store, const InteractionId& interaction) {
    std::vector<TaskTrace> out;
    for (const auto& t : store.snapshot())
        if (t.interaction == interaction && t.task.category == TaskCategory::SecurityRelated)
            out.push_back(t);
    std::stable_sort(out.begin(), out.end(), [](const TaskTrace& a, const TaskTrace& b) {
        return a.start_monotonic_ns < b.start_monotonic_ns;
    });
    return out;
}

Tracer::Tracer(ComponentId component, const TaskTaxonomy& taxonomy,
               std::shared_ptr<ResourceSource> source, TraceStore& traces, SampleStore& samples)
    : component_(std::move(component)), taxonomy_(taxonomy), source_(std::move(source)),
      traces_(traces), samples_(samples) {
    component_.validate();
    if (!source_)
        throw std::invalid_argument("tracer requires a resource source");
}

OpenTask Tracer::begin_task(const InteractionId& interaction, const std::string& task_name) {
    interaction.validate();
    TaskCategory category = taxonomy_.category_of(task_name); // throws on unknown names
    OpenTask token;
    token.kind_ = TaskKind{task_name, category};
    token.component_ = component_;
    token.interaction_ = interaction;
    token.start_wall_utc_ms_ = wall_utc_ms();
    token.probe_before_ = source_->take_probe();
    token.start_monotonic_ns_ = token.probe_before_.taken_at_ns;
    return token;
}

TaskTrace Tracer::end_task(OpenTask& token, uint64_t wire_bytes) {
    if (token.ended_)
        throw std::runtime_error("task already ended: " + token.kind_.name);
    token.ended_ = true;

    ResourceProbe after = source_->take_probe();
    TaskTrace trace;
    trace.task = token.kind_;
    trace.component = token.component_;
    trace.interaction = token.interaction_;
    trace.start_monotonic_ns = token.start_monotonic_ns_;
    trace.end_monotonic_ns = after.taken_at_ns;
    trace.start_wall_utc_ms = token.start_wall_utc_ms_;
    trace.wire_bytes = wire_bytes;
    trace.metrics = measure_task(token.probe_before_, after, wire_bytes, source_->core_count());

    traces_.append(trace);
    for (const auto& [metric, value] : trace.metrics) {
        CostSample s;
        s.interaction = trace.interaction;
        s.component = trace.component;
        s.task = trace.task;
        s.metric = metric;
        s.t_utc_ms = trace.start_wall_utc_ms;
        s.value = value;
        samples_.append(s);
    }
    return trace;
}

std::string trace_to_line(const TaskTrace& t) {
    std::ostringstream out;
    out << t.task.name << '\t' << to_string(t.task.category) << '\t' << t.component.name << '\t'
        << t.component.endpoint.ip << '\t' << t.component.endpoint.port << '\t'
        << t.interaction.value << '\t' << t.start_monotonic_ns << '\t' << t.end_monotonic_ns
        << '\t' << to_iso8601_ms(t.start_wall_utc_ms) << '\t';
    bool first = true;
    for (const auto& [metric, value] : t.metrics) {
        if (!first) out << ';';
        out << to_string(metric) << '=' << format_double(value);
        first = false;
    }
    out << '\t' << t.wire_bytes;
    return out.str();
}

TaskTrace trace_from_line(const std::string& line) {
    std::vector<std::string> f;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            f.push_back(line.substr(start));
            break;
        }
        f.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (f.size() != 11)
        throw std::invalid_argument("trace line must have 11 fields, got " +
                                    std::to_string(f.size()));
    TaskTrace t;
    t.task = TaskKind{f[0], task_category_from_string(f[1])};
    t.component = ComponentId{f[2], {f[3], static_cast<uint16_t>(std::stoi(f[4]))}};
    t.interaction = InteractionId(f[5]);
    t.start_monotonic_ns = std::stoll(f[6]);
    t.end_monotonic_ns = std::stoll(f[7]);
    t.start_wall_utc_ms = from_iso8601_ms(f[8]);
    std::istringstream metrics(f[9]);
    std::string pair;
    while (std::getline(metrics, pair, ';')) {
        size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("bad metric pair: " + pair);
        t.metrics[metric_from_string(pair.substr(0, eq))] = parse_double(pair.substr(eq + 1));
    }
    t.wire_bytes = std::stoull(f[10]);
    return t;
}

void TraceStore::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    std::lock_guard lock(mu_);
    for (const auto& t : traces_) out << trace_to_line(t) << '\n';
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

TraceStore TraceStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path);
    TraceStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        store.append(trace_from_line(line));
    }
    return store;
}

} // namespace seccost
