#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "seccost/ids.hpp"

namespace seccost {

enum class MetricUnit { Milliseconds, Percent, Megabytes, Kilobytes, CostUnit };
enum class SamplerKind { WallClock, CpuProbe, RamProbe, WireBytes };

std::string to_string(MetricUnit u);

struct MetricDef {
    MetricId id;
    std::string name;
    MetricUnit unit;
    SamplerKind sampler;
};

// M1 duration (ms), M2 CPU usage (%), M3 RAM usage (MB), M4 packet size (KB).
std::vector<MetricDef> builtin_catalogue();

// Snapshot of process resource counters at one instant.
struct ResourceProbe {
    double cpu_time_ms = 0.0; // cumulative process CPU time
    double rss_mb = 0.0;      // resident set size
    int64_t taken_at_ns = 0;  // monotonic
};

// Where probes come from. The system source reads real OS stats; the fake is
// fully scripted so metric arithmetic can be tested without sampling noise.
class ResourceSource {
public:
    virtual ~ResourceSource() = default;
    virtual ResourceProbe take_probe() = 0;
    virtual unsigned core_count() const = 0;
};

// Linux implementation: CLOCK_PROCESS_CPUTIME_ID + /proc/self/status VmRSS.
// Throws on platforms where either is unavailable; never reports silent zeros.
class SystemResourceSource : public ResourceSource {
public:
    explicit SystemResourceSource(std::string proc_status_path = "/proc/self/status");
    ResourceProbe take_probe() override;
    unsigned core_count() const override;

private:
    std::string proc_status_path_;
    std::mutex mu_;
    int64_t last_taken_at_ns_ = 0;
};

class FakeResourceSource : public ResourceSource {
public:
    // Auto pattern: each probe advances time by time_step_ns and CPU by
    // cpu_step_ms from the given start values; rss stays fixed.
    FakeResourceSource(double cpu_ms = 0.0, double rss_mb = 0.0, int64_t start_ns = 1,
                       int64_t time_step_ns = 1'000'000, double cpu_step_ms = 0.0,
                       unsigned cores = 4);

    // Exact probes consumed before the auto pattern resumes.
    void push(const ResourceProbe& p);

    ResourceProbe take_probe() override;
    unsigned core_count() const override { return cores_; }

private:
    std::mutex mu_;
    std::deque<ResourceProbe> scripted_;
    double cpu_ms_;
    double rss_mb_;
    int64_t next_ns_;
    int64_t time_step_ns_;
    double cpu_step_ms_;
    unsigned cores_;
};

// Applies the metric formulas to a probe pair:
//   M1 = wall-clock delta in ms
//   M2 = 100 * cpu delta / M1, clamped to [0, 100 * core_count]
//   M3 = rss delta floored at zero
//   M4 = wire_bytes / 1024
std::map<MetricId, double> measure_task(const ResourceProbe& before, const ResourceProbe& after,
                                        uint64_t wire_bytes, unsigned core_count);

// Min-max scheme mapping raw metric values onto one dimensionless scale.
struct NormalizationSpec {
    std::map<MetricId, std::pair<double, double>> bounds; // metric -> (min, max)
    std::map<MetricId, double> weights;                   // default 1.0 each

    void validate() const;
    void save(const std::string& path) const;
    static NormalizationSpec load(const std::string& path);
};

// Per-metric (min, max) over the pooled population of per-run metric vectors.
NormalizationSpec fit_minmax(const std::vector<std::map<MetricId, double>>& population);

// Sum of weight_l * (v_l - min_l) / (max_l - min_l); degenerate metrics
// (min == max) contribute zero.
double to_cost_unit(const std::map<MetricId, double>& values, const NormalizationSpec& spec);

} // namespace seccost
