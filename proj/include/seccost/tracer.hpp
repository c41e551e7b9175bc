#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "seccost/catalogue.hpp"
#include "seccost/ids.hpp"
#include "seccost/model.hpp"

namespace seccost {

// One performed task with the metric values measured across its span.
struct TaskTrace {
    TaskKind task;
    ComponentId component;
    InteractionId interaction;
    int64_t start_monotonic_ns = 0;
    int64_t end_monotonic_ns = 0;
    int64_t start_wall_utc_ms = 0;
    std::map<MetricId, double> metrics;
    uint64_t wire_bytes = 0;
};

// Closed task-name -> category map. Every task name used at runtime must be
// declared here; begin_task rejects anything else.
class TaskTaxonomy {
public:
    TaskTaxonomy() = default;
    explicit TaskTaxonomy(std::map<std::string, TaskCategory> entries);

    TaskCategory category_of(const std::string& task_name) const;
    bool contains(const std::string& task_name) const;
    std::vector<std::string> security_related() const;
    const std::map<std::string, TaskCategory>& entries() const { return entries_; }

private:
    std::map<std::string, TaskCategory> entries_;
};

// The closed-loop taxonomy: register, discover, lookup, request-temperature,
// measure-temperature, decide-actuate, plus the security-related set
// {authorise, handshake, encrypt, decrypt}.
TaskTaxonomy artifact_taxonomy();

class TraceStore {
public:
    TraceStore() = default;
    TraceStore(TraceStore&& other) noexcept : traces_(std::move(other.traces_)) {}
    TraceStore& operator=(TraceStore&&) = delete;
    TraceStore(const TraceStore&) = delete;
    TraceStore& operator=(const TraceStore&) = delete;

    void append(const TaskTrace& t);
    size_t size() const;
    std::vector<TaskTrace> snapshot() const;

    void save(const std::string& path) const;
    static TraceStore load(const std::string& path);

private:
    mutable std::mutex mu_;
    std::vector<TaskTrace> traces_;
};

// Security-related traces of one interaction, in start order.
std::vector<TaskTrace> security_tasks(const TraceStore& store, const InteractionId& interaction);

class Tracer;

// Handle for a task in progress; finished exactly once via Tracer::end_task.
class OpenTask {
public:
    OpenTask(const OpenTask&) = delete;
    OpenTask& operator=(const OpenTask&) = delete;
    OpenTask(OpenTask&&) = default;
    OpenTask& operator=(OpenTask&&) = default;

    const TaskKind& kind() const { return kind_; }

private:
    friend class Tracer;
    OpenTask() = default;

    TaskKind kind_;
    ComponentId component_;
    InteractionId interaction_;
    ResourceProbe probe_before_;
    int64_t start_monotonic_ns_ = 0;
    int64_t start_wall_utc_ms_ = 0;
    bool ended_ = false;
};

// Per-component instrumentation surface. Each finished task is appended to the
// trace store and mirrored into the sample store as one CostSample per metric.
class Tracer {
public:
    Tracer(ComponentId component, const TaskTaxonomy& taxonomy,
           std::shared_ptr<ResourceSource> source, TraceStore& traces, SampleStore& samples);

    OpenTask begin_task(const InteractionId& interaction, const std::string& task_name);
    TaskTrace end_task(OpenTask& token, uint64_t wire_bytes);

    const ComponentId& component() const { return component_; }

private:
    ComponentId component_;
    TaskTaxonomy taxonomy_;
    std::shared_ptr<ResourceSource> source_;
    TraceStore& traces_;
    SampleStore& samples_;
};

std::string trace_to_line(const TaskTrace& t);
TaskTrace trace_from_line(const std::string& line);

} // namespace seccost
