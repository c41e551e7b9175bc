#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "seccost/ids.hpp"

namespace seccost {

// One x_{t,ijkl} cell: the value a metric measured for a task of a component
// within an interaction at wall time t.
struct CostSample {
    InteractionId interaction;
    ComponentId component;
    TaskKind task;
    MetricId metric = MetricId::M1;
    int64_t t_utc_ms = 0;
    double value = 0.0;

    void validate() const;
};

// A half-open time window plus optional filters over the four onion layers.
// Empty filters mean "all". A single point in time is the window [t, t+1).
struct CostQuery {
    int64_t t_start_ms = 0;
    int64_t t_end_ms = INT64_MAX;
    std::set<InteractionId> interactions;     // empty = all
    std::set<std::string> components;         // by name; empty = all
    std::optional<TaskCategory> category;     // nullopt = both
    std::set<MetricId> metrics;               // empty = all

    void validate() const;
    bool matches(const CostSample& s) const;
};

// Layered re-aggregation of the same total: interaction -> component -> task -> metric.
struct CostBreakdown {
    double total = 0.0;
    std::map<InteractionId, double> per_interaction;
    std::map<std::tuple<InteractionId, ComponentId>, double> per_component;
    std::map<std::tuple<InteractionId, ComponentId, TaskKind>, double> per_task;
    std::map<std::tuple<InteractionId, ComponentId, TaskKind, MetricId>, double> per_metric;
};

// Compensated accumulator (Neumaier). Long experiment sums mix magnitudes.
class CompensatedSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Append-only store of cost samples, safe for concurrent appenders and readers.
// Readers see a consistent snapshot; insertion order is preserved.
class SampleStore {
public:
    SampleStore() = default;
    SampleStore(SampleStore&& other) noexcept; // for factory returns; not thread-safe
    SampleStore& operator=(SampleStore&&) = delete;
    SampleStore(const SampleStore&) = delete;
    SampleStore& operator=(const SampleStore&) = delete;

    void append(const CostSample& s);
    size_t size() const;
    void close();
    bool closed() const;

    // All samples in insertion order (snapshot copy).
    std::vector<CostSample> snapshot() const;

    double total_cost(const CostQuery& q) const;
    CostBreakdown cost_breakdown(const CostQuery& q) const;

    // Zero-filled buckets partitioning [t_start, t_end); bucket sums re-add to
    // total_cost for the same query.
    std::vector<std::pair<int64_t, double>> time_series(const CostQuery& q,
                                                        int64_t bucket_ms) const;

    void save(const std::string& path) const;
    static SampleStore load(const std::string& path);

private:
    mutable std::shared_mutex mu_;
    std::vector<CostSample> samples_;
    std::multimap<int64_t, size_t> by_time_;
    bool closed_ = false;
};

std::string sample_to_line(const CostSample& s);
CostSample sample_from_line(const std::string& line);

} // namespace seccost
